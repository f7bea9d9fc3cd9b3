//! Time averages, the ergodic strong-law and central-limit diagnostics, and
//! empirical transition-structure tests.
//!
//! Everything here reduces over independent replicas with a fixed reduction
//! order, so results are deterministic for a fixed seed regardless of the
//! number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{ShockLaw, ShockStream};
use crate::process::ProcessPath;
use crate::semigroup::Semigroup;
use crate::space::{NormKind, SpaceSpec, StateVector};
use crate::stats::{batch_means, ks_distance, ks_two_sample, ks_two_sample_critical, normal_cdf,
    Moments};

// Replica-id blocks keep the noise used by different estimator arms
// disjoint by construction.
const BLOCK_MAIN: u64 = 0;
const BLOCK_PREPASS: u64 = 1 << 20;
const BLOCK_ENSEMBLE: u64 = 2 << 20;
const BLOCK_RESTART: u64 = 3 << 20;
const BLOCK_STABILIZATION: u64 = 4 << 20;
const BLOCK_E_PROPERTY: u64 = 5 << 20;
const BLOCK_MOMENTS: u64 = 6 << 20;
const BLOCK_WIDTH: u64 = 1 << 20;

/// Lipschitz observables of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionalKind {
    /// `psi(v) = ||v||_V`.
    VNorm,
    /// `psi(v) = v_index` (the identity in the scalar case).
    Coordinate { index: usize },
    /// `psi(v) = min(||v||_V, clip)`: bounded Lipschitz.
    ClippedVNorm { clip: f64 },
}

/// A functional `psi` plus a constant offset (the offset changes neither
/// the Lipschitz constant nor centered statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    #[serde(flatten)]
    pub kind: FunctionalKind,
    #[serde(default)]
    pub offset: f64,
}

impl Functional {
    pub fn v_norm() -> Self {
        Functional {
            kind: FunctionalKind::VNorm,
            offset: 0.0,
        }
    }

    pub fn coordinate(index: usize) -> Self {
        Functional {
            kind: FunctionalKind::Coordinate { index },
            offset: 0.0,
        }
    }

    pub fn clipped_v_norm(clip: f64) -> Self {
        Functional {
            kind: FunctionalKind::ClippedVNorm { clip },
            offset: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn eval(&self, s: &StateVector) -> f64 {
        let base = match self.kind {
            FunctionalKind::VNorm => s.norm(),
            FunctionalKind::Coordinate { index } => s.coords()[index],
            FunctionalKind::ClippedVNorm { clip } => s.norm().min(clip),
        };
        base + self.offset
    }

    /// Lipschitz constant with respect to the V norm of `space`.
    pub fn lipschitz(&self, space: &SpaceSpec) -> f64 {
        match self.kind {
            FunctionalKind::VNorm | FunctionalKind::ClippedVNorm { .. } => 1.0,
            FunctionalKind::Coordinate { .. } => match space.v_norm {
                NormKind::Scalar => 1.0,
                // |a_i - b_i| <= h^(-1/q) ||a - b||_q.
                NormKind::Lq { q, h } => h.powf(-1.0 / q),
            },
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, FunctionalKind::ClippedVNorm { .. })
    }
}

/// A simulatable configuration: semigroup plus noise parameters. Paths for
/// distinct replicas use disjoint noise streams derived from the one seed.
#[derive(Clone, Copy)]
pub struct ProcessSpec<'a> {
    pub semigroup: &'a dyn Semigroup,
    pub theta: f64,
    pub seed: u64,
    pub law: &'a ShockLaw,
}

impl<'a> ProcessSpec<'a> {
    pub fn stream(&self, replica: u64) -> Result<ShockStream> {
        ShockStream::new(
            self.seed,
            replica,
            self.theta,
            self.law.clone(),
            *self.semigroup.space(),
        )
    }

    pub fn path(&self, replica: u64, initial: StateVector) -> Result<ProcessPath<'a>> {
        ProcessPath::new(self.semigroup, self.stream(replica)?, initial)
    }

    pub fn zero_state(&self) -> StateVector {
        self.semigroup.zero_state()
    }

    /// Default quadrature step: `min(1e-2/theta, dt_hint)`.
    pub fn default_quad_dt(&self, dt_hint: f64) -> f64 {
        (1e-2 / self.theta).min(dt_hint)
    }
}

fn replica_in_block(block: u64, r: usize) -> u64 {
    let r = r as u64;
    assert!(r < BLOCK_WIDTH, "replica count exceeds the block width");
    block + r
}

/// `integral_{t0}^{t1} psi(X(tau)) dtau` by composite midpoint quadrature
/// with subinterval splitting at every jump time (the integrand is smooth
/// between jumps). Cells never exceed `quad_dt`; segments shorter than
/// `quad_dt` are refined automatically to a single cell.
pub fn integrate_functional(
    path: &mut ProcessPath,
    psi: &Functional,
    t0: f64,
    t1: f64,
    quad_dt: f64,
) -> Result<f64> {
    if !(t0 >= 0.0 && t1 >= t0) {
        return Err(Error::Input("need 0 <= t0 <= t1".into()));
    }
    if !quad_dt.is_finite() || quad_dt <= 0.0 {
        return Err(Error::Input("quad_dt must be positive".into()));
    }
    if t1 == t0 {
        return Ok(0.0);
    }
    let sg = path.semigroup();
    let anchored = sg.is_closed_form();
    let m0 = path.jump_count(t0);
    let m1 = path.jump_count(t1);
    let mut total = 0.0;
    for m in m0..=m1 {
        let alpha = path.arrival(m);
        let seg_start = if m == m0 { t0 } else { alpha };
        let seg_end = if m == m1 { t1 } else { path.arrival(m + 1) };
        let len = seg_end - seg_start;
        if len <= 0.0 {
            continue;
        }
        let anchor = path.skeleton_state(m)?;
        let cells = (len / quad_dt).ceil() as usize;
        if anchored {
            for j in 0..cells {
                let e0 = seg_start + len * j as f64 / cells as f64;
                let e1 = if j + 1 == cells {
                    seg_end
                } else {
                    seg_start + len * (j + 1) as f64 / cells as f64
                };
                let mid = 0.5 * (e0 + e1);
                let state = sg.evolve(mid - alpha, &anchor)?;
                total += psi.eval(&state) * (e1 - e0);
            }
        } else {
            // Stepped semigroups advance sequentially through the segment;
            // skeleton states re-anchor the flow at every jump.
            let offset0 = seg_start - alpha;
            let mut current = if offset0 > 0.0 {
                sg.evolve(offset0, &anchor)?
            } else {
                anchor
            };
            let mut prev_edge = seg_start;
            for j in 0..cells {
                let e1 = if j + 1 == cells {
                    seg_end
                } else {
                    seg_start + len * (j + 1) as f64 / cells as f64
                };
                let cell = e1 - prev_edge;
                let mid_state = sg.evolve(0.5 * cell, &current)?;
                total += psi.eval(&mid_state) * cell;
                current = sg.evolve(0.5 * cell, &mid_state)?;
                prev_edge = e1;
            }
        }
    }
    Ok(total)
}

/// `(1/T) integral_0^T psi(X(tau)) dtau`.
pub fn time_average(
    path: &mut ProcessPath,
    psi: &Functional,
    horizon: f64,
    quad_dt: f64,
) -> Result<f64> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Input("horizon must be positive".into()));
    }
    Ok(integrate_functional(path, psi, 0.0, horizon, quad_dt)? / horizon)
}

/// Per-batch time averages over `[t0, t1]` split into `batches` equal
/// windows.
pub fn batch_averages(
    path: &mut ProcessPath,
    psi: &Functional,
    t0: f64,
    t1: f64,
    batches: usize,
    quad_dt: f64,
) -> Result<Vec<f64>> {
    if batches < 2 {
        return Err(Error::Input("need at least two batches".into()));
    }
    let mut out = Vec::with_capacity(batches);
    for b in 0..batches {
        let s = t0 + (t1 - t0) * b as f64 / batches as f64;
        let e = t0 + (t1 - t0) * (b + 1) as f64 / batches as f64;
        out.push(integrate_functional(path, psi, s, e, quad_dt)? / (e - s));
    }
    Ok(out)
}

/// Parameters of the two-armed stationary-mean estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SllnParams {
    /// Discarded initial stretch (must be at least `10/theta`).
    pub burn_in: f64,
    /// Averaging horizon after burn-in.
    pub horizon: f64,
    pub batches: usize,
    /// Replicas of the independent ensemble arm.
    pub ensemble_replicas: usize,
    /// Evaluation time of the ensemble arm.
    pub ensemble_time: f64,
    pub quad_dt: f64,
}

impl SllnParams {
    pub fn for_rate(theta: f64) -> Self {
        SllnParams {
            burn_in: 50.0 / theta,
            horizon: 1e4 / theta,
            batches: 32,
            ensemble_replicas: 4000,
            ensemble_time: 400.0 / theta,
            quad_dt: 1e-2 / theta,
        }
    }
}

/// Two independent estimates of the stationary mean of `psi` and their
/// cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryMeanReport {
    /// Long-run time average after burn-in (the primary estimate).
    pub time_average: f64,
    /// 95% batch-means half-width of `time_average`.
    pub time_ci: f64,
    pub batches: usize,
    /// Ensemble average of `psi(X(T_big))` over replicas started from 0.
    pub ensemble_mean: f64,
    pub ensemble_ci: f64,
    pub ensemble_replicas: usize,
    /// Initial-condition bias bound of the ensemble arm,
    /// `L_psi * c_embed * kappa^(-rho) * T_big^(-rho)`.
    pub forgetting_bias: f64,
    /// `|a - b| - (joint CI + bias)`; nonpositive when the arms agree.
    pub agreement_margin: f64,
    /// Raw ensemble samples (one per replica), for CSV emission.
    #[serde(skip)]
    pub ensemble_values: Vec<f64>,
}

impl StationaryMeanReport {
    pub fn agrees(&self) -> bool {
        self.agreement_margin <= 0.0
    }

    pub fn ensure_agreement(&self) -> Result<()> {
        if self.agrees() {
            Ok(())
        } else {
            Err(Error::Diagnostic(format!(
                "stationary-mean arms disagree: time average {:.6} +/- {:.2e} vs ensemble {:.6} +/- {:.2e} (bias allowance {:.2e})",
                self.time_average,
                self.time_ci,
                self.ensemble_mean,
                self.ensemble_ci,
                self.forgetting_bias
            )))
        }
    }
}

/// Estimates the stationary mean of `psi` two independent ways: (a) a
/// long-run time average after burn-in with a batch-means interval, and
/// (b) an ensemble average at a fixed late time over replicas started from
/// zero. The agreement margin accounts for both intervals plus the
/// polynomial forgetting bias of arm (b).
pub fn stationary_mean(
    spec: &ProcessSpec,
    psi: &Functional,
    initial: StateVector,
    params: &SllnParams,
) -> Result<StationaryMeanReport> {
    if params.burn_in < 10.0 / spec.theta {
        return Err(Error::Input("burn-in must be at least 10 mean gaps".into()));
    }
    let cert = spec
        .semigroup
        .certificate()
        .ok_or_else(|| Error::Config("stationary mean needs a decay certificate".into()))?;

    let mut path = spec.path(replica_in_block(BLOCK_MAIN, 0), initial)?;
    let bm = batch_means(&batch_averages(
        &mut path,
        psi,
        params.burn_in,
        params.burn_in + params.horizon,
        params.batches,
        params.quad_dt,
    )?);

    let values: Vec<f64> = (0..params.ensemble_replicas)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut p = spec.path(replica_in_block(BLOCK_ENSEMBLE, r), spec.zero_state())?;
            Ok(psi.eval(&p.state_at(params.ensemble_time)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let ens = Moments::from_samples(&values);
    let ens_ci = 1.96 * ens.std_error();

    let lipschitz = psi.lipschitz(spec.semigroup.space());
    let bias = lipschitz * cert.ambient_tail(params.ensemble_time);
    let diff = (bm.mean - ens.mean()).abs();
    let joint = (bm.half_width.powi(2) + ens_ci.powi(2)).sqrt() + bias;
    Ok(StationaryMeanReport {
        time_average: bm.mean,
        time_ci: bm.half_width,
        batches: bm.batches,
        ensemble_mean: ens.mean(),
        ensemble_ci: ens_ci,
        ensemble_replicas: params.ensemble_replicas,
        forgetting_bias: bias,
        agreement_margin: diff - joint,
        ensemble_values: values,
    })
}

/// Parameters of the replica central-limit experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CltParams {
    pub horizon: f64,
    pub replicas: usize,
    pub quad_dt: f64,
    /// Horizon, replica count and burn-in of the high-precision reference
    /// pre-pass for the stationary mean.
    pub prepass_horizon: f64,
    pub prepass_replicas: usize,
    pub prepass_burn_in: f64,
    /// Skips the pre-pass and centers with this value instead.
    pub reference_mean: Option<f64>,
}

impl CltParams {
    pub fn for_rate(theta: f64) -> Self {
        CltParams {
            horizon: 500.0 / theta,
            replicas: 2000,
            quad_dt: 1e-2 / theta,
            prepass_horizon: 5000.0 / theta,
            prepass_replicas: 256,
            prepass_burn_in: 50.0 / theta,
            reference_mean: None,
        }
    }
}

/// Replica fluctuation statistics of the centered time integral.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicReport {
    /// Mean over replicas of the plain time average.
    pub time_average: f64,
    /// Stationary-mean estimate used for centering.
    pub reference_mean: f64,
    /// 95% half-width of `reference_mean` (0 when overridden).
    pub reference_half_width: f64,
    /// One statistic `S_r = (integral - T * reference_mean)/sqrt(T)` per
    /// replica.
    pub clt_samples: Vec<f64>,
    /// Sample variance of the replica statistics: the variance estimate of
    /// the Gaussian limit.
    pub sigma2_hat: f64,
    /// KS distance of the studentized statistics to the standard normal
    /// (absent when the variance degenerates).
    pub ks_normal: Option<f64>,
    /// Asymptotic Kolmogorov p-value proxy of `ks_normal` (plug-in
    /// variance makes it conservative).
    pub ks_p_value: Option<f64>,
    pub degenerate_variance: bool,
    /// Set when the certificate exponent does not exceed 1/2, in which case
    /// the Gaussian limit is not guaranteed (counterexample territory).
    pub rho_warning: bool,
}

/// Standard error of a sample variance estimated from `n` near-Gaussian
/// samples: `sigma2 * sqrt(2/(n-1))`.
pub fn sigma2_std_error(sigma2: f64, n: usize) -> f64 {
    sigma2 * (2.0 / (n.max(2) - 1) as f64).sqrt()
}

/// Runs the replica CLT experiment: centers each replica's time integral
/// with a high-precision stationary-mean pre-pass, forms the scale-sqrt(T)
/// statistics, estimates their variance, and tests studentized normality.
///
/// Meaningful normality checks need hundreds of replicas.
pub fn clt_experiment(
    spec: &ProcessSpec,
    psi: &Functional,
    initial: StateVector,
    params: &CltParams,
) -> Result<ErgodicReport> {
    if params.replicas < 2 {
        return Err(Error::Input("need at least two replicas".into()));
    }
    if !params.horizon.is_finite() || params.horizon <= 0.0 {
        return Err(Error::Input("horizon must be positive".into()));
    }
    let rho_warning = spec
        .semigroup
        .certificate()
        .map(|c| c.rho <= 0.5)
        .unwrap_or(true);

    if params.reference_mean.is_none() && params.prepass_replicas == 0 {
        return Err(Error::Input(
            "either a reference mean or a nonempty pre-pass is required".into(),
        ));
    }
    let (reference_mean, reference_half_width) = match params.reference_mean {
        Some(m) => (m, 0.0),
        None => {
            let avgs: Vec<f64> = (0..params.prepass_replicas)
                .into_par_iter()
                .map(|r| -> Result<f64> {
                    let mut p =
                        spec.path(replica_in_block(BLOCK_PREPASS, r), initial.clone())?;
                    Ok(integrate_functional(
                        &mut p,
                        psi,
                        params.prepass_burn_in,
                        params.prepass_burn_in + params.prepass_horizon,
                        params.quad_dt,
                    )? / params.prepass_horizon)
                })
                .collect::<Result<Vec<_>>>()?;
            let m = Moments::from_samples(&avgs);
            (m.mean(), 1.96 * m.std_error())
        }
    };

    let horizon = params.horizon;
    let integrals: Vec<f64> = (0..params.replicas)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut p = spec.path(replica_in_block(BLOCK_MAIN, r), initial.clone())?;
            integrate_functional(&mut p, psi, 0.0, horizon, params.quad_dt)
        })
        .collect::<Result<Vec<_>>>()?;

    let clt_samples: Vec<f64> = integrals
        .iter()
        .map(|i| (i - horizon * reference_mean) / horizon.sqrt())
        .collect();
    let time_average =
        integrals.iter().sum::<f64>() / (params.replicas as f64 * horizon);
    let m = Moments::from_samples(&clt_samples);
    let sigma2_hat = m.variance();
    let scale = 1.0 + reference_mean.abs();
    let degenerate = sigma2_hat <= 1e-14 * scale * scale;
    let ks_normal = if degenerate {
        None
    } else {
        let sd = sigma2_hat.sqrt();
        let studentized: Vec<f64> = clt_samples.iter().map(|s| s / sd).collect();
        Some(ks_distance(&studentized, normal_cdf))
    };
    Ok(ErgodicReport {
        time_average,
        reference_mean,
        reference_half_width,
        ks_p_value: ks_normal.map(|d| crate::stats::ks_p_value(d, clt_samples.len())),
        clt_samples,
        sigma2_hat,
        ks_normal,
        degenerate_variance: degenerate,
        rho_warning,
    })
}

/// Two-sample transition-structure test of the evolution's restart
/// consistency.
#[derive(Debug, Clone, Serialize)]
pub struct CkReport {
    pub per_functional_ks: Vec<f64>,
    pub max_ks: f64,
    /// Two-sample KS critical value at the 1% level.
    pub threshold: f64,
}

impl CkReport {
    pub fn passes(&self) -> bool {
        self.max_ks < self.threshold
    }
}

/// Compares the law of `psi(X_v(t+h))` from (a) direct simulation and
/// (b) simulating to `t`, then restarting a fresh path from the reached
/// state with independent noise for duration `h`. Arms share the `[0, t]`
/// noise, so `h = 0` reproduces identical samples by construction.
pub fn chapman_kolmogorov_test(
    spec: &ProcessSpec,
    initial: StateVector,
    t: f64,
    h: f64,
    psi_list: &[Functional],
    samples: usize,
) -> Result<CkReport> {
    if t < 0.0 || h < 0.0 {
        return Err(Error::Input("times must be nonnegative".into()));
    }
    if psi_list.is_empty() {
        return Err(Error::Input("need at least one functional".into()));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut direct = spec.path(replica_in_block(BLOCK_MAIN, r), initial.clone())?;
            let reached = direct.state_at(t)?;
            let end_direct = direct.state_at(t + h)?;
            let mut restarted = spec.path(replica_in_block(BLOCK_RESTART, r), reached)?;
            let end_restarted = restarted.state_at(h)?;
            Ok((
                psi_list.iter().map(|psi| psi.eval(&end_direct)).collect(),
                psi_list.iter().map(|psi| psi.eval(&end_restarted)).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per = Vec::with_capacity(psi_list.len());
    for k in 0..psi_list.len() {
        let a: Vec<f64> = rows.iter().map(|(d, _)| d[k]).collect();
        let b: Vec<f64> = rows.iter().map(|(_, s)| s[k]).collect();
        per.push(ks_two_sample(&a, &b));
    }
    let max_ks = per.iter().cloned().fold(0.0f64, f64::max);
    Ok(CkReport {
        per_functional_ks: per,
        max_ks,
        threshold: ks_two_sample_critical(samples, samples, 0.01),
    })
}

/// Pathwise equicontinuity margins under common random numbers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EPropertyReport {
    /// Worst `|psi(X_v(t)) - psi(X_vhat(t))| - L_psi ||v - vhat||_V`.
    pub worst_margin: f64,
    /// Worst margin against the time-decaying bound
    /// `L_psi * c_embed * kappa^(-rho) * t^(-rho)` (over `t > 0`), when a
    /// certificate exists.
    pub worst_decay_margin: Option<f64>,
    pub checked: usize,
}

/// Verifies the uniform-in-time pathwise bound behind equicontinuity of the
/// transition semigroup: with shared noise,
/// `|psi(X_v(t)) - psi(X_vhat(t))| <= L_psi ||v - vhat||_V` at every sample.
pub fn e_property_test(
    spec: &ProcessSpec,
    psi: &Functional,
    v: StateVector,
    vhat_list: &[StateVector],
    t_grid: &[f64],
    samples: usize,
) -> Result<EPropertyReport> {
    if !psi.is_bounded() {
        return Err(Error::Input(
            "the e-property test needs a bounded Lipschitz functional".into(),
        ));
    }
    let space = *spec.semigroup.space();
    let lipschitz = psi.lipschitz(&space);
    let cert = spec.semigroup.certificate();
    let reports: Vec<(f64, f64, usize)> = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64, usize)> {
            let mut worst = f64::NEG_INFINITY;
            let mut worst_decay = f64::NEG_INFINITY;
            let mut checked = 0usize;
            for vhat in vhat_list {
                let d0 = space.norm_v(&v.sub(vhat));
                let mut pa = spec.path(replica_in_block(BLOCK_E_PROPERTY, r), v.clone())?;
                let mut pb = spec.path(replica_in_block(BLOCK_E_PROPERTY, r), vhat.clone())?;
                for &t in t_grid {
                    let lhs = (psi.eval(&pa.state_at(t)?) - psi.eval(&pb.state_at(t)?)).abs();
                    worst = worst.max(lhs - lipschitz * d0);
                    if let Some(c) = &cert {
                        if t > 0.0 {
                            worst_decay = worst_decay.max(lhs - lipschitz * c.ambient_tail(t));
                        }
                    }
                    checked += 1;
                }
            }
            Ok((worst, worst_decay, checked))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = EPropertyReport {
        worst_margin: f64::NEG_INFINITY,
        worst_decay_margin: cert.map(|_| f64::NEG_INFINITY),
        checked: 0,
    };
    for (w, wd, c) in reports {
        report.worst_margin = report.worst_margin.max(w);
        if let Some(m) = report.worst_decay_margin.as_mut() {
            *m = m.max(wd);
        }
        report.checked += c;
    }
    Ok(report)
}

/// Compound-Poisson moment identities for the shock-norm sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentCheckReport {
    pub expected_mean: f64,
    pub expected_variance: f64,
    pub mc_mean: f64,
    pub mc_variance: f64,
    /// Relative errors (absolute when the exact value vanishes).
    pub mean_rel_error: f64,
    pub variance_rel_error: f64,
    /// True when the law's norm moments came from the direct-sampler oracle
    /// rather than a closed form.
    pub moments_estimated: bool,
}

/// Checks `E[sum_{k<=N(t)} ||eta_k||] = theta*t*E||eta||` and
/// `Var[sum] = theta*t*E||eta||^2` against Monte Carlo across replicas.
pub fn compound_moment_check(
    spec: &ProcessSpec,
    t: f64,
    samples: usize,
) -> Result<MomentCheckReport> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Input("t must be positive".into()));
    }
    let space = spec.semigroup.space();
    let (exact_mean, exact_second) = spec.law.exact_norm_moments(space);
    let moments_estimated = exact_mean.is_none() || exact_second.is_none();
    let (m1, m2) = if moments_estimated {
        let (e1, e2) = spec
            .law
            .estimate_norm_moments(space, spec.seed ^ 0x9e37_79b9_7f4a_7c15, 200_000);
        (exact_mean.unwrap_or(e1), exact_second.unwrap_or(e2))
    } else {
        (exact_mean.unwrap(), exact_second.unwrap())
    };

    let sums: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut stream = spec.stream(replica_in_block(BLOCK_MOMENTS, r))?;
            Ok(stream.shock_norm_sum(t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mc = Moments::from_samples(&sums);

    let expected_mean = spec.theta * t * m1;
    let expected_variance = spec.theta * t * m2;
    let rel = |got: f64, want: f64| {
        if want == 0.0 {
            got.abs()
        } else {
            (got - want).abs() / want
        }
    };
    Ok(MomentCheckReport {
        expected_mean,
        expected_variance,
        mc_mean: mc.mean(),
        mc_variance: mc.variance(),
        mean_rel_error: rel(mc.mean(), expected_mean),
        variance_rel_error: rel(mc.variance(), expected_variance),
        moments_estimated,
    })
}

/// Doubling-horizon stabilization diagnostic of the time average.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilizationReport {
    pub average_t: f64,
    pub ci_t: f64,
    pub average_2t: f64,
    pub ci_2t: f64,
    /// `|avg_2T - avg_T| - (ci_T + ci_2T)`; nonpositive when stable.
    pub margin: f64,
}

impl StabilizationReport {
    pub fn stable(&self) -> bool {
        self.margin <= 0.0
    }
}

/// Compares the time average over `[burn_in, burn_in+T]` with the average
/// over `[burn_in, burn_in+2T]` on one trajectory; both come with
/// batch-means intervals from the same batch partition.
pub fn stabilization_check(
    spec: &ProcessSpec,
    psi: &Functional,
    initial: StateVector,
    burn_in: f64,
    horizon: f64,
    batches: usize,
    quad_dt: f64,
) -> Result<StabilizationReport> {
    let mut path = spec.path(replica_in_block(BLOCK_STABILIZATION, 0), initial)?;
    let all = batch_averages(
        &mut path,
        psi,
        burn_in,
        burn_in + 2.0 * horizon,
        2 * batches,
        quad_dt,
    )?;
    let first = batch_means(&all[..batches]);
    let both = batch_means(&all);
    Ok(StabilizationReport {
        average_t: first.mean,
        ci_t: first.half_width,
        average_2t: both.mean,
        ci_2t: both.half_width,
        margin: (both.mean - first.mean).abs() - (first.half_width + both.half_width),
    })
}

/// Initial-condition forgetting of time averages under shared noise.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ForgettingReport {
    pub average_x: f64,
    pub average_y: f64,
    pub difference: f64,
    /// The explicit pathwise bound
    /// `(L/T) * (||x-y|| * min(T,1) + c_embed*kappa^(-rho) * int_1^T tau^(-rho) dtau)`.
    pub bound: f64,
    /// `difference - bound` (nonpositive up to quadrature error).
    pub margin: f64,
}

/// Compares time averages started from `x` and `y` under identical noise
/// with the explicit polynomial forgetting bound.
pub fn forgetting_check(
    spec: &ProcessSpec,
    psi: &Functional,
    x: StateVector,
    y: StateVector,
    horizon: f64,
    quad_dt: f64,
) -> Result<ForgettingReport> {
    let cert = spec
        .semigroup
        .certificate()
        .ok_or_else(|| Error::Config("forgetting bound needs a decay certificate".into()))?;
    let space = *spec.semigroup.space();
    let lipschitz = psi.lipschitz(&space);
    let d0 = space.norm_v(&x.sub(&y));
    let mut px = spec.path(replica_in_block(BLOCK_MAIN, 0), x)?;
    let mut py = spec.path(replica_in_block(BLOCK_MAIN, 0), y)?;
    let ax = time_average(&mut px, psi, horizon, quad_dt)?;
    let ay = time_average(&mut py, psi, horizon, quad_dt)?;

    // On [0, min(T,1)] the difference is bounded by the initial gap; past 1
    // the polynomial tail takes over.
    let head = d0 * horizon.min(1.0);
    let tail = if horizon > 1.0 {
        let rho = cert.rho;
        let integral = if (rho - 1.0).abs() < 1e-12 {
            horizon.ln()
        } else {
            (horizon.powf(1.0 - rho) - 1.0) / (1.0 - rho)
        };
        cert.c_embed * cert.kappa.powf(-rho) * integral
    } else {
        0.0
    };
    let bound = lipschitz * (head + tail) / horizon;
    let difference = (ax - ay).abs();
    Ok(ForgettingReport {
        average_x: ax,
        average_y: ay,
        difference,
        bound,
        margin: difference - bound,
    })
}
