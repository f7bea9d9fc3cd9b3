//! Closed-form scalar semigroup `T(t)v = sgn(v)(t + |v|^(-1/rho))^(-rho)`.
//!
//! `T(.)v` solves `y' = -rho * y * |y|^(1/rho)`, `y(0) = v`, and satisfies
//! the polynomial forgetting bound with the exact certificate
//! `kappa = 2^(-1/rho)`, `c_embed = 1` (the strong and ambient spaces
//! coincide). The companion [`counterexample_statistic`] quantifies why
//! Gaussian fluctuation results need `rho > 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::semigroup::{DecayCertificate, Semigroup};
use crate::space::{SpaceSpec, StateVector};

/// Parameters of the scalar semigroup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSemigroupParams {
    /// Decay exponent, `> 0`.
    pub rho: f64,
}

/// Evaluates `sgn(v)(t + |v|^(-1/rho))^(-rho)`; returns `v` exactly at
/// `t = 0` and `0` at `v = 0`.
pub fn ode_evolve(params: OdeSemigroupParams, t: f64, v: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let rho = params.rho;
    if t == 0.0 || v == 0.0 {
        return v;
    }
    let a = v.abs();
    let inv = a.powf(-1.0 / rho);
    if inv.is_finite() && a >= 1e-100 {
        v.signum() * (t + inv).powf(-rho)
    } else {
        // |v|^(-1/rho) overflows for tiny |v|; the equivalent factored form
        // v * (1 + t*|v|^(1/rho))^(-rho) stays finite and keeps T(t)0 = 0.
        v * (1.0 + t * a.powf(1.0 / rho)).powf(-rho)
    }
}

/// The exact decay certificate: `kappa = 2^(-1/rho)`, embedding norm 1.
pub fn ode_certificate(params: OdeSemigroupParams) -> DecayCertificate {
    DecayCertificate::new(2f64.powf(-1.0 / params.rho), params.rho, 1.0)
}

/// `t^(-1/2) * integral_0^t (tau + 1)^(-rho) dtau` in closed form:
/// `((t+1)^(1-rho) - 1) / ((1-rho) * sqrt(t))`, with the logarithmic branch
/// `ln(t+1)/sqrt(t)` at `rho = 1`.
///
/// This is the scale-`sqrt(t)` fluctuation statistic of the shock-free path
/// started at 1; its limit as `t -> infinity` is `0` if and only if
/// `rho > 1/2`, which is why the Gaussian limit needs `rho > 1/2`.
pub fn counterexample_statistic(rho: f64, t: f64) -> f64 {
    assert!(rho > 0.0, "rho must be positive");
    assert!(t > 0.0, "t must be positive");
    let a = 1.0 - rho;
    if a == 0.0 {
        t.ln_1p() / t.sqrt()
    } else {
        // ((t+1)^a - 1)/a via expm1 to stay accurate near rho = 1.
        (a * t.ln_1p()).exp_m1() / (a * t.sqrt())
    }
}

/// The scalar semigroup as a registrable handle (`V = W = R`).
#[derive(Debug, Clone)]
pub struct OdeSemigroup {
    params: OdeSemigroupParams,
    space: SpaceSpec,
}

impl OdeSemigroup {
    pub fn new(rho: f64) -> Self {
        assert!(rho > 0.0, "rho must be positive");
        OdeSemigroup {
            params: OdeSemigroupParams { rho },
            space: SpaceSpec::scalar(),
        }
    }

    pub fn params(&self) -> OdeSemigroupParams {
        self.params
    }
}

impl Semigroup for OdeSemigroup {
    fn space(&self) -> &SpaceSpec {
        &self.space
    }

    fn evolve(&self, t: f64, s: &StateVector) -> Result<StateVector> {
        Ok(StateVector::scalar(ode_evolve(
            self.params,
            t,
            s.coords()[0],
        )))
    }

    fn fixes_zero(&self) -> bool {
        true
    }

    fn certificate(&self) -> Option<DecayCertificate> {
        Some(ode_certificate(self.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::decay_envelope;
    use proptest::prelude::*;

    fn p(rho: f64) -> OdeSemigroupParams {
        OdeSemigroupParams { rho }
    }

    #[test]
    fn evolve_direct_substitution() {
        assert!((ode_evolve(p(1.0), 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((ode_evolve(p(1.0), 3.0, -1.0) - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn evolve_fixes_zero_and_identity() {
        for rho in [0.4, 0.5, 1.0, 2.0] {
            assert_eq!(ode_evolve(p(rho), 17.3, 0.0), 0.0);
            for v in [-2.0, -1e-200, 0.3, 1e300] {
                assert_eq!(ode_evolve(p(rho), 0.0, v), v, "T(0) must be identity");
            }
        }
    }

    #[test]
    fn evolve_tiny_values_stay_finite() {
        let w = ode_evolve(p(0.5), 1.0, 1e-250);
        assert!(w.is_finite() && (0.0..=1e-250).contains(&w));
    }

    #[test]
    fn certificate_values() {
        assert!((ode_certificate(p(1.0)).kappa - 0.5).abs() < 1e-15);
        assert!((ode_certificate(p(0.5)).kappa - 0.25).abs() < 1e-15);
        assert!((ode_certificate(p(2.0)).kappa - 2f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(ode_certificate(p(1.0)).c_embed, 1.0);
    }

    /// Composite Simpson quadrature of `(tau+1)^(-rho)` on `[0, t]` after the
    /// substitution `u = ln(1+tau)`, which makes the integrand a plain
    /// exponential; serves as the independent oracle for the closed form.
    fn statistic_by_quadrature(rho: f64, t: f64) -> f64 {
        let b = (1.0 + t).ln();
        let n = 1 << 14; // even
        let h = b / n as f64;
        let f = |u: f64| ((1.0 - rho) * u).exp();
        let mut s = f(0.0) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        (s * h / 3.0) / t.sqrt()
    }

    #[test]
    fn counterexample_statistic_matches_quadrature_oracle() {
        for rho in [0.4, 0.5, 0.6, 1.0, 1.5] {
            for t in [1e2, 1e3, 1e4] {
                let closed = counterexample_statistic(rho, t);
                let quad = statistic_by_quadrature(rho, t);
                assert!(
                    (closed - quad).abs() <= 1e-9 * quad.max(1.0),
                    "rho={rho} t={t}: closed {closed} vs quadrature {quad}"
                );
            }
        }
    }

    #[test]
    fn counterexample_statistic_frozen_values() {
        // Frozen from 30-digit evaluation of the antiderivative.
        let cases = [
            (0.5, 1e4, 1.980099997500125),
            (0.4, 1e4, 4.170061902802246),
            (0.6, 1e4, 0.9703077359065406),
            (1.0, 1e4, 0.09210440366976516),
        ];
        for (rho, t, want) in cases {
            let got = counterexample_statistic(rho, t);
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "rho={rho}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn counterexample_limit_direction() {
        // Statistic grows without bound for rho < 1/2 and vanishes for
        // rho > 1/2.
        assert!(counterexample_statistic(0.4, 1e8) > counterexample_statistic(0.4, 1e4));
        assert!(counterexample_statistic(0.6, 1e8) < counterexample_statistic(0.6, 1e4));
    }

    proptest! {
        #[test]
        fn semigroup_law(
            rho in 0.2f64..3.0,
            t in 0.0f64..50.0,
            h in 0.0f64..50.0,
            v in -10.0f64..10.0,
        ) {
            let params = p(rho);
            let a = ode_evolve(params, t, ode_evolve(params, h, v));
            let b = ode_evolve(params, t + h, v);
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn odd_symmetry_exact(rho in 0.2f64..3.0, t in 0.0f64..100.0, v in -10.0f64..10.0) {
            let params = p(rho);
            prop_assert_eq!(ode_evolve(params, t, -v), -ode_evolve(params, t, v));
        }

        #[test]
        fn decay_inequality_and_contraction(
            rho in 0.2f64..3.0,
            t in 0.0f64..1000.0,
            u in -20.0f64..20.0,
            v in -20.0f64..20.0,
        ) {
            let params = p(rho);
            let cert = ode_certificate(params);
            let lhs = (ode_evolve(params, t, u) - ode_evolve(params, t, v)).abs();
            let rhs = decay_envelope(&cert, t, (u - v).abs());
            prop_assert!(lhs <= rhs + 1e-12, "decay: lhs {} rhs {}", lhs, rhs);
            // The envelope never exceeds the initial distance, so the decay
            // inequality subsumes contraction; check both anyway.
            prop_assert!(lhs <= (u - v).abs() + 1e-12);
        }
    }
}
