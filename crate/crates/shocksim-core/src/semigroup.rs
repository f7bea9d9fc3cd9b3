//! Contractive-semigroup interface, polynomial decay certificates, and the
//! differential-inequality oracle shared by all concrete semigroups.
//!
//! A decay certificate `(kappa, rho, c_embed)` asserts the two-sided
//! forgetting bound
//!
//! ```text
//! ||T(t)w1 - T(t)w2||_W <= (kappa*t + ||w1 - w2||_W^(-1/rho))^(-rho)
//! ```
//!
//! in the strong `W` norm, with `c_embed` the operator norm of the
//! embedding of `W` into the ambient space `V`. The right-hand side is the
//! [`decay_envelope`]; it extends continuously by zero when the initial
//! distance vanishes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{SpaceSpec, StateVector};

/// Numerical slack allowed on contraction/identity checks for closed-form
/// semigroups.
pub const TOL_CONTRACT_CLOSED_FORM: f64 = 1e-12;
/// Slack for semigroups realized by iterative PDE steppers, where
/// floating-point accumulation in linear solves dominates.
pub const TOL_CONTRACT_STEPPED: f64 = 1e-9;

/// Constants of a polynomial forgetting bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    /// Envelope rate constant, `> 0`.
    pub kappa: f64,
    /// Decay exponent, `> 0`.
    pub rho: f64,
    /// Operator norm of the embedding `W -> V`, `> 0`.
    pub c_embed: f64,
}

impl DecayCertificate {
    pub fn new(kappa: f64, rho: f64, c_embed: f64) -> Self {
        assert!(kappa > 0.0 && rho > 0.0 && c_embed > 0.0);
        DecayCertificate {
            kappa,
            rho,
            c_embed,
        }
    }

    /// `c_embed * kappa^(-rho) * t^(-rho)`: the initial-condition-free bound
    /// on `||X(t)||_V` in terms of the elapsed time `t`.
    pub fn ambient_tail(&self, t: f64) -> f64 {
        self.c_embed * self.kappa.powf(-self.rho) * t.powf(-self.rho)
    }
}

/// Evaluates `(kappa*t + d0^(-1/rho))^(-rho)` with the continuous extension
/// by zero at `d0 = 0`.
///
/// For tiny `d0` the intermediate `d0^(-1/rho)` overflows, so the
/// algebraically equivalent form `d0 * (1 + kappa*t*d0^(1/rho))^(-rho)` is
/// used instead; it preserves the zero limit exactly.
pub fn decay_envelope(cert: &DecayCertificate, t: f64, d0: f64) -> f64 {
    debug_assert!(t >= 0.0 && d0 >= 0.0);
    if d0 == 0.0 {
        return 0.0;
    }
    let inv = d0.powf(-1.0 / cert.rho);
    if inv.is_finite() {
        (cert.kappa * t + inv).powf(-cert.rho)
    } else {
        d0 * (1.0 + cert.kappa * t * d0.powf(1.0 / cert.rho)).powf(-cert.rho)
    }
}

/// A time-continuous contractive semigroup together with its metadata.
///
/// `evolve(0, s)` must return `s` exactly, and evaluations must be safe to
/// run concurrently from independent replicas.
pub trait Semigroup: Send + Sync {
    /// The space the semigroup acts on (dimension plus V/W norm tags).
    fn space(&self) -> &SpaceSpec;

    /// Evolves `s` forward by time `t >= 0`.
    fn evolve(&self, t: f64, s: &StateVector) -> Result<StateVector>;

    /// Whether `T(t)0 = 0` for all `t`.
    fn fixes_zero(&self) -> bool;

    /// The decay certificate, when one is known.
    fn certificate(&self) -> Option<DecayCertificate>;

    /// True when `evolve` is a closed form with O(1) cost; integrators then
    /// evaluate from segment anchors instead of stepping sequentially.
    fn is_closed_form(&self) -> bool {
        true
    }

    /// Contraction/identity slack appropriate for this implementation.
    fn numeric_slack(&self) -> f64 {
        if self.is_closed_form() {
            TOL_CONTRACT_CLOSED_FORM
        } else {
            TOL_CONTRACT_STEPPED
        }
    }

    fn zero_state(&self) -> StateVector {
        StateVector::zeros(self.space().dim, self.space().v_norm)
    }
}

/// Outcome of sampling a decay bound: worst signed margins (`lhs - rhs`; a
/// pass is `max <= tol`) in both the strong and the ambient norm, plus the
/// offending sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayCheckReport {
    /// Worst `||T(t)s1 - T(t)s2||_W - envelope_W` over the samples.
    pub worst_margin_w: f64,
    /// Worst `||T(t)s1 - T(t)s2||_V - c_embed * envelope_W`.
    pub worst_margin_v: f64,
    pub worst_index: usize,
    pub samples: usize,
}

impl DecayCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.worst_margin_w <= tol
    }
}

/// [`check_decay_bound`] against the handle's own certificate.
pub fn check_certificate(
    sg: &dyn Semigroup,
    samples: &[(f64, StateVector, StateVector)],
) -> Result<DecayCheckReport> {
    let cert = sg
        .certificate()
        .ok_or_else(|| Error::Config("semigroup carries no decay certificate".into()))?;
    check_decay_bound(sg, &cert, samples)
}

/// Samples the certificate inequality on explicit `(t, s1, s2)` triples.
/// The left side and the envelope input are measured in the `W` norm; the
/// ambient-norm margin is reported alongside via `c_embed`.
pub fn check_decay_bound(
    sg: &dyn Semigroup,
    cert: &DecayCertificate,
    samples: &[(f64, StateVector, StateVector)],
) -> Result<DecayCheckReport> {
    if samples.is_empty() {
        return Err(Error::Input("no samples provided".into()));
    }
    let space = sg.space();
    let mut report = DecayCheckReport {
        worst_margin_w: f64::NEG_INFINITY,
        worst_margin_v: f64::NEG_INFINITY,
        worst_index: 0,
        samples: samples.len(),
    };
    for (i, (t, s1, s2)) in samples.iter().enumerate() {
        let d0 = space.norm_w(&s1.sub(s2));
        let diff = sg.evolve(*t, s1)?.sub(&sg.evolve(*t, s2)?);
        let rhs = decay_envelope(cert, *t, d0);
        let margin_w = space.norm_w(&diff) - rhs;
        let margin_v = space.norm_v(&diff) - cert.c_embed * rhs;
        if margin_w > report.worst_margin_w {
            report.worst_margin_w = margin_w;
            report.worst_index = i;
        }
        report.worst_margin_v = report.worst_margin_v.max(margin_v);
    }
    Ok(report)
}

/// Verdict of [`polynomial_bound_oracle`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub pass: bool,
    /// Worst signed margin `f(t) - envelope(t)` (negative when the bound
    /// holds strictly).
    pub worst_margin: f64,
    pub worst_t: f64,
}

/// Checks that sampled values of a nonnegative function satisfy the
/// polynomial bound `f(t) <= (kappa*t + f(0)^(-1/rho))^(-rho)` implied by
/// the differential inequality `f' <= -kappa*rho*f^(1 + 1/rho)`.
///
/// `f_samples` must be sorted by `t`, start at `t = 0`, and be nonnegative.
pub fn polynomial_bound_oracle(
    f_samples: &[(f64, f64)],
    kappa: f64,
    rho_tilde: f64,
) -> Result<BoundCheck> {
    if f_samples.is_empty() || f_samples[0].0 != 0.0 {
        return Err(Error::Input("samples must start at t = 0".into()));
    }
    if f_samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Input("samples must be strictly sorted by t".into()));
    }
    if f_samples.iter().any(|&(t, f)| t < 0.0 || f < 0.0) {
        return Err(Error::Input("samples must be nonnegative".into()));
    }
    let cert = DecayCertificate::new(kappa, rho_tilde, 1.0);
    let f0 = f_samples[0].1;
    let mut check = BoundCheck {
        pass: true,
        worst_margin: f64::NEG_INFINITY,
        worst_t: 0.0,
    };
    for &(t, f) in f_samples {
        let margin = f - decay_envelope(&cert, t, f0);
        if margin > check.worst_margin {
            check.worst_margin = margin;
            check.worst_t = t;
        }
    }
    check.pass = check.worst_margin <= 1e-12;
    Ok(check)
}

/// Log-spaced time grid on `(0, t_max]` with `0` prepended; the default
/// sampling grid for decay property checks (polynomial tails need log
/// coverage).
pub fn log_time_grid(t_max: f64, points: usize) -> Vec<f64> {
    assert!(t_max > 0.0 && points >= 2);
    let lo = (t_max * 1e-6).ln();
    let hi = t_max.ln();
    let mut grid = Vec::with_capacity(points + 1);
    grid.push(0.0);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        // exp(ln t_max) can round above t_max; pin the endpoint.
        grid.push(if i + 1 == points {
            t_max
        } else {
            (lo + f * (hi - lo)).exp()
        });
    }
    grid
}
