//! Discretized weighted p-Laplacian Neumann evolution on a 1-D interval,
//! restricted to mean-zero states.
//!
//! Space: cell-centered finite volumes with harmonic-mean face weights, so
//! the flux form telescopes and the cell mean is conserved exactly.
//! Time: backward Euler (the resolvent of the monotone operator), which is
//! unconditionally contractive in the discrete `L^2` norm; the nonlinear
//! solve is a damped Newton iteration with a regularized Jacobian, and a
//! failed step is retried at half the step size.
//!
//! The decay certificate uses the discrete Poincare constant (from the
//! spectral gap of the discrete Neumann Laplacian), so the envelope bound
//! is a statement about this discretization, not just its continuum limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::{DecayCertificate, Semigroup, TOL_CONTRACT_STEPPED};
use crate::space::{lq_norm, NormKind, SpaceSpec, StateVector};

/// Tolerance on the cell mean for membership in the mean-zero subspace.
pub const MEAN_TOL: f64 = 1e-10;

/// Jacobian regularization: `|D|` is shifted by this inside the derivative
/// of the flux only (the residual keeps the exact flux), so Newton stays
/// well-posed where the gradient degenerates without biasing the solution.
const EPS_REG: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 60;

/// 1-D interval grid for the weighted p-Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLapGrid {
    n: usize,
    length: f64,
    p: f64,
    cell_weights: Vec<f64>,
    #[serde(skip)]
    face_weights: Vec<f64>,
}

impl PLapGrid {
    /// `n >= 4` cells over `[0, length]`, exponent `p > 2`, per-cell weights
    /// `gamma_i > 0`. Face weights are harmonic means of the adjacent cells.
    pub fn new(n: usize, length: f64, p: f64, cell_weights: Vec<f64>) -> Result<Self> {
        if n < 4 {
            return Err(Error::Config("grid needs at least 4 cells".into()));
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::Config("domain length must be positive".into()));
        }
        if !p.is_finite() || p <= 2.0 {
            return Err(Error::Config("exponent p must lie in (2, inf)".into()));
        }
        if cell_weights.len() != n {
            return Err(Error::Config(format!(
                "expected {n} cell weights, got {}",
                cell_weights.len()
            )));
        }
        if cell_weights.iter().any(|&g| !g.is_finite() || g <= 0.0) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        let face_weights = (0..n - 1)
            .map(|i| {
                let (a, b) = (cell_weights[i], cell_weights[i + 1]);
                2.0 * a * b / (a + b)
            })
            .collect();
        Ok(PLapGrid {
            n,
            length,
            p,
            cell_weights,
            face_weights,
        })
    }

    pub fn uniform(n: usize, length: f64, p: f64, gamma: f64) -> Result<Self> {
        PLapGrid::new(n, length, p, vec![gamma; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Cell volume `h = length / n`.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// Rebuilds derived data after deserialization.
    pub fn revalidate(self) -> Result<Self> {
        PLapGrid::new(self.n, self.length, self.p, self.cell_weights)
    }

    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        lq_norm(values, 2.0, self.h())
    }
}

/// Mean-zero grid state (cell averages).
#[derive(Debug, Clone, PartialEq)]
pub struct PLapState {
    values: Vec<f64>,
}

impl PLapState {
    /// Validates membership in the mean-zero subspace.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean.abs() > MEAN_TOL {
            return Err(Error::Input(format!(
                "state mean {mean:.3e} exceeds the mean-zero tolerance {MEAN_TOL:.0e}"
            )));
        }
        Ok(PLapState { values })
    }

    /// Projects arbitrary values onto the mean-zero subspace.
    pub fn centered(mut values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v -= mean);
        PLapState { values }
    }

    pub fn zeros(n: usize) -> Self {
        PLapState {
            values: vec![0.0; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `sgn(d) * |d|^(p-2) * d` evaluated as `|d|^(p-2) * d`.
#[inline]
fn flux_fn(d: f64, p: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        d.abs().powf(p - 2.0) * d
    }
}

/// Interior face fluxes `F_{i+1/2} = gamma_{i+1/2} |D|^(p-2) D` with
/// `D = (u_{i+1} - u_i)/h`; boundary faces carry zero flux.
fn face_fluxes(grid: &PLapGrid, u: &[f64], out: &mut Vec<f64>) {
    let h = grid.h();
    out.clear();
    out.extend(
        (0..grid.n - 1).map(|f| grid.face_weights[f] * flux_fn((u[f + 1] - u[f]) / h, grid.p)),
    );
}

fn apply_raw(grid: &PLapGrid, u: &[f64]) -> Vec<f64> {
    let h = grid.h();
    let mut flux = Vec::new();
    face_fluxes(grid, u, &mut flux);
    (0..grid.n)
        .map(|i| {
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            let right = if i < grid.n - 1 { flux[i] } else { 0.0 };
            -(right - left) / h
        })
        .collect()
}

/// The discrete operator `A_h u` in central flux form. The flux sum
/// telescopes, so the result has zero mean (discrete divergence theorem).
pub fn apply_operator(grid: &PLapGrid, u: &PLapState) -> Result<PLapState> {
    if u.values.len() != grid.n {
        return Err(Error::Input("state/grid dimension mismatch".into()));
    }
    if u.mean().abs() > MEAN_TOL {
        return Err(Error::Input("operator input must be mean-zero".into()));
    }
    Ok(PLapState {
        values: apply_raw(grid, &u.values),
    })
}

/// Solves the symmetric tridiagonal system in place (Thomas algorithm).
/// `diag` and `rhs` are overwritten; `off[i]` couples rows `i` and `i+1`.
fn solve_tridiag(diag: &mut [f64], off: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
    }
}

fn residual(grid: &PLapGrid, w: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    apply_raw(grid, w)
        .iter()
        .zip(w.iter().zip(u))
        .map(|(aw, (wi, ui))| wi + dt * aw - ui)
        .collect()
}

/// One backward-Euler step: returns `w` with `w + dt * A_h(w) = u`, solved
/// by damped Newton to a residual below `1e-13 * max(1, ||u||)`.
pub fn implicit_step(grid: &PLapGrid, u: &PLapState, dt: f64) -> Result<PLapState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Input("dt must be positive".into()));
    }
    let values = newton_solve(grid, &u.values, dt)?;
    Ok(PLapState { values })
}

fn newton_solve(grid: &PLapGrid, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = grid.n;
    let h = grid.h();
    let p = grid.p;
    let tol = 1e-13 * lq_norm(u, 2.0, h).max(1.0);
    let mut w = u.to_vec();
    let mut r = residual(grid, &w, u, dt);
    let mut rnorm = lq_norm(&r, 2.0, h);
    for _ in 0..NEWTON_MAX_ITER {
        if rnorm <= tol {
            return Ok(w);
        }
        // Face conductivities of the linearized flux, regularized so the
        // Jacobian stays positive definite at degenerate gradients.
        let scale = dt / (h * h);
        let coef: Vec<f64> = (0..n - 1)
            .map(|f| {
                let d = (w[f + 1] - w[f]) / h;
                scale * grid.face_weights[f] * (p - 1.0) * (d.abs() + EPS_REG).powf(p - 2.0)
            })
            .collect();
        let mut diag: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i > 0 { coef[i - 1] } else { 0.0 };
                let right = if i < n - 1 { coef[i] } else { 0.0 };
                1.0 + left + right
            })
            .collect();
        let off: Vec<f64> = coef.iter().map(|c| -c).collect();
        let mut delta = r.clone();
        solve_tridiag(&mut diag, &off, &mut delta);

        // Backtracking line search on the residual norm.
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(wi, d)| wi - lambda * d).collect();
            let r_trial = residual(grid, &trial, u, dt);
            let rn_trial = lq_norm(&r_trial, 2.0, h);
            if rn_trial <= tol || rn_trial < rnorm * (1.0 - 0.25 * lambda) {
                w = trial;
                r = r_trial;
                rnorm = rn_trial;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-9 {
                return Err(Error::Numerical {
                    message: "Newton line search stalled".into(),
                    residual: rnorm,
                });
            }
        }
    }
    if rnorm <= tol {
        Ok(w)
    } else {
        Err(Error::Numerical {
            message: "Newton iteration did not converge".into(),
            residual: rnorm,
        })
    }
}

/// Backward-Euler substep with step halving on Newton failure.
fn robust_step(grid: &PLapGrid, u: &[f64], dt: f64, dt_min: f64) -> Result<Vec<f64>> {
    match newton_solve(grid, u, dt) {
        Ok(w) => Ok(w),
        Err(err) => {
            if dt * 0.5 < dt_min {
                return Err(err);
            }
            let half = robust_step(grid, u, dt * 0.5, dt_min)?;
            robust_step(grid, &half, dt * 0.5, dt_min)
        }
    }
}

/// Evolves `u` to exactly time `t` by composing implicit steps of size at
/// most `dt_max`.
pub fn plap_evolve(grid: &PLapGrid, t: f64, u: &PLapState, dt_max: f64) -> Result<PLapState> {
    if t < 0.0 {
        return Err(Error::Input("time must be nonnegative".into()));
    }
    if !dt_max.is_finite() || dt_max <= 0.0 {
        return Err(Error::Input("dt_max must be positive".into()));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let steps = (t / dt_max).ceil() as usize;
    let dt = t / steps as f64;
    let dt_min = dt_max * 2f64.powi(-16);
    let mut values = u.values.clone();
    for _ in 0..steps {
        values = robust_step(grid, &values, dt, dt_min)?;
    }
    Ok(PLapState { values })
}

/// Smallest nonzero eigenvalue of the (unweighted) discrete Neumann
/// Laplacian on `n` cells of size `h`: `(2/h^2)(1 - cos(pi/n))`.
pub fn neumann_spectral_gap(n: usize, h: f64) -> f64 {
    2.0 / (h * h) * (1.0 - (std::f64::consts::PI / n as f64).cos())
}

/// Discrete Poincare constant `C = lambda_1^(-1/2)` of the grid.
pub fn discrete_poincare_constant(n: usize, h: f64) -> f64 {
    neumann_spectral_gap(n, h).powf(-0.5)
}

/// Decay certificate of the discrete evolution restricted to mean-zero
/// states:
///
/// ```text
/// kappa = (p-2) * 2^(2-p) * (sum_i h * gamma_i^(2/(2-p)))^((2-p)/2) * C^(-p)
/// rho   = 1/(p-2)
/// ```
///
/// with `C` the discrete Poincare constant, and `c_embed` the norm of the
/// identity from discrete `L^2` into discrete `L^q` (`q` in `[1, 2]`),
/// which equals `length^(1/q - 1/2)`.
pub fn plap_certificate(grid: &PLapGrid, q: f64) -> Result<DecayCertificate> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::Config("ambient exponent q must lie in [1, 2]".into()));
    }
    let p = grid.p;
    let h = grid.h();
    let weight_integral: f64 = grid
        .cell_weights
        .iter()
        .map(|g| h * g.powf(2.0 / (2.0 - p)))
        .sum();
    let c_poincare = discrete_poincare_constant(grid.n, h);
    let kappa = (p - 2.0)
        * 2f64.powf(2.0 - p)
        * weight_integral.powf((2.0 - p) / 2.0)
        * c_poincare.powf(-p);
    let rho = 1.0 / (p - 2.0);
    let c_embed = grid.length.powf(1.0 / q - 0.5);
    Ok(DecayCertificate::new(kappa, rho, c_embed))
}

/// Worst margin of the vector monotonicity inequality
/// `(|x|^(p-2)x - |y|^(p-2)y) . (x - y) >= 2^(2-p) |x - y|^p`
/// over the given pairs (nonnegative up to roundoff when it holds).
pub fn vector_monotonicity_check(pairs: &[(Vec<f64>, Vec<f64>)], p: f64) -> f64 {
    assert!(p > 2.0);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut worst = f64::INFINITY;
    for (x, y) in pairs {
        assert_eq!(x.len(), y.len());
        let (nx, ny) = (norm(x), norm(y));
        let (cx, cy) = (nx.powf(p - 2.0), ny.powf(p - 2.0));
        let mut lhs = 0.0;
        let mut diff2 = 0.0;
        for (a, b) in x.iter().zip(y) {
            lhs += (cx * a - cy * b) * (a - b);
            diff2 += (a - b) * (a - b);
        }
        let rhs = 2f64.powf(2.0 - p) * diff2.sqrt().powf(p);
        worst = worst.min(lhs - rhs);
    }
    worst
}

/// Discrete right-hand side of the energy-derivative identity for
/// `f(t) = ||T(t)u - T(t)v||^2`:
/// `-2 * sum_faces h * gamma_f (phi(D_u) - phi(D_v)) (D_u - D_v)`.
pub fn energy_derivative_rhs(grid: &PLapGrid, u: &[f64], v: &[f64]) -> f64 {
    let h = grid.h();
    let mut s = 0.0;
    for f in 0..grid.n - 1 {
        let du = (u[f + 1] - u[f]) / h;
        let dv = (v[f + 1] - v[f]) / h;
        s += grid.face_weights[f] * (flux_fn(du, grid.p) - flux_fn(dv, grid.p)) * (du - dv);
    }
    -2.0 * h * s
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyDerivativeReport {
    /// Largest relative mismatch between the finite-difference derivative of
    /// the squared distance and the discrete dissipation functional.
    pub max_rel_error: f64,
    /// Largest observed value of the dissipation functional (must be <= 0).
    pub max_rhs: f64,
}

/// Compares the finite-difference derivative of `f(t) = ||T(t)u - T(t)v||^2`
/// along the numerical flows with the discrete dissipation functional, at
/// each requested time (all must exceed `fd_delta`).
pub fn energy_derivative_check(
    grid: &PLapGrid,
    u: &PLapState,
    v: &PLapState,
    t_grid: &[f64],
    dt_max: f64,
    fd_delta: f64,
) -> Result<EnergyDerivativeReport> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    if ts.first().is_some_and(|&t| t <= fd_delta) {
        return Err(Error::Input(
            "every check time must exceed the finite-difference offset".into(),
        ));
    }
    let f_of = |a: &[f64], b: &[f64]| -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let n = grid.l2_norm(&d);
        n * n
    };
    let mut report = EnergyDerivativeReport {
        max_rel_error: 0.0,
        max_rhs: f64::NEG_INFINITY,
    };
    let mut cur_u = u.clone();
    let mut cur_v = v.clone();
    let mut now = 0.0;
    for &t in &ts {
        cur_u = plap_evolve(grid, t - fd_delta - now, &cur_u, dt_max)?;
        cur_v = plap_evolve(grid, t - fd_delta - now, &cur_v, dt_max)?;
        let f_minus = f_of(cur_u.values(), cur_v.values());
        let mid_u = plap_evolve(grid, fd_delta, &cur_u, dt_max)?;
        let mid_v = plap_evolve(grid, fd_delta, &cur_v, dt_max)?;
        let f_plus_u = plap_evolve(grid, fd_delta, &mid_u, dt_max)?;
        let f_plus_v = plap_evolve(grid, fd_delta, &mid_v, dt_max)?;
        let f_plus = f_of(f_plus_u.values(), f_plus_v.values());
        let fd = (f_plus - f_minus) / (2.0 * fd_delta);
        let rhs = energy_derivative_rhs(grid, mid_u.values(), mid_v.values());
        let denom = rhs.abs().max(fd.abs()).max(1e-300);
        report.max_rel_error = report.max_rel_error.max((fd - rhs).abs() / denom);
        report.max_rhs = report.max_rhs.max(rhs);
        cur_u = f_plus_u;
        cur_v = f_plus_v;
        now = t + fd_delta;
    }
    Ok(report)
}

/// Per-step conservation and expansion extrema along a coupled pair of
/// backward-Euler trajectories.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StructureScan {
    /// Largest `|mean|` seen after any step (mass conservation).
    pub max_abs_mean: f64,
    /// Largest one-step growth of the max norm (nonpositive up to solver
    /// slack under the discrete maximum principle).
    pub max_linf_growth: f64,
    /// Largest one-step growth of the pair's `L^2` distance (nonpositive up
    /// to solver slack by resolvent contractivity).
    pub max_l2_expansion: f64,
    pub steps: usize,
}

/// Steps `u` and `v` to time `t` with uniform steps `<= dt_max`, recording
/// the worst per-step mass, max-principle, and contraction violations.
pub fn structure_scan(
    grid: &PLapGrid,
    u: &PLapState,
    v: &PLapState,
    t: f64,
    dt_max: f64,
) -> Result<StructureScan> {
    let steps = (t / dt_max).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut cur_u = u.clone();
    let mut cur_v = v.clone();
    let mut scan = StructureScan {
        max_abs_mean: cur_u.mean().abs().max(cur_v.mean().abs()),
        max_linf_growth: f64::NEG_INFINITY,
        max_l2_expansion: f64::NEG_INFINITY,
        steps,
    };
    let dist = |a: &PLapState, b: &PLapState| {
        let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
        grid.l2_norm(&d)
    };
    for _ in 0..steps {
        let (linf_u, linf_v, d_before) = (cur_u.linf(), cur_v.linf(), dist(&cur_u, &cur_v));
        cur_u = implicit_step(grid, &cur_u, dt)?;
        cur_v = implicit_step(grid, &cur_v, dt)?;
        scan.max_abs_mean = scan
            .max_abs_mean
            .max(cur_u.mean().abs())
            .max(cur_v.mean().abs());
        scan.max_linf_growth = scan
            .max_linf_growth
            .max(cur_u.linf() - linf_u)
            .max(cur_v.linf() - linf_v);
        scan.max_l2_expansion = scan.max_l2_expansion.max(dist(&cur_u, &cur_v) - d_before);
    }
    Ok(scan)
}

/// Walks a coupled pair forward once and checks the certificate envelope
/// `||T(t)u - T(t)v||_{L^2} <= (kappa*t + d0^(2-p))^(1/(2-p))` at every
/// requested time. Returns the worst signed margin.
pub fn decay_envelope_scan(
    grid: &PLapGrid,
    u0: &PLapState,
    v0: &PLapState,
    t_checks: &[f64],
    dt_max: f64,
) -> Result<crate::semigroup::BoundCheck> {
    let cert = plap_certificate(grid, 2.0)?;
    let mut ts = t_checks.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    let dist = |a: &PLapState, b: &PLapState| {
        let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
        grid.l2_norm(&d)
    };
    let d0 = dist(u0, v0);
    let mut u = u0.clone();
    let mut v = v0.clone();
    let mut now = 0.0;
    let mut check = crate::semigroup::BoundCheck {
        pass: true,
        worst_margin: f64::NEG_INFINITY,
        worst_t: 0.0,
    };
    for &t in &ts {
        if t < now {
            return Err(Error::Input("check times must be nonnegative".into()));
        }
        u = plap_evolve(grid, t - now, &u, dt_max)?;
        v = plap_evolve(grid, t - now, &v, dt_max)?;
        now = t;
        let margin = dist(&u, &v) - crate::semigroup::decay_envelope(&cert, t, d0);
        if margin > check.worst_margin {
            check.worst_margin = margin;
            check.worst_t = t;
        }
    }
    check.pass = check.worst_margin <= 1e-6;
    Ok(check)
}

/// The discrete evolution packaged as a semigroup handle on the mean-zero
/// grid space, with ambient norm `L^q` (`q` in `[1, 2]`, default 2) and
/// strong norm `L^2`.
#[derive(Debug, Clone)]
pub struct PLapSemigroup {
    grid: PLapGrid,
    dt_max: f64,
    q: f64,
    space: SpaceSpec,
}

impl PLapSemigroup {
    pub fn new(grid: PLapGrid, dt_max: f64, q: f64) -> Result<Self> {
        if !dt_max.is_finite() || dt_max <= 0.0 {
            return Err(Error::Config("dt_max must be positive".into()));
        }
        if !(1.0..=2.0).contains(&q) {
            return Err(Error::Config("ambient exponent q must lie in [1, 2]".into()));
        }
        let h = grid.h();
        let space = SpaceSpec {
            dim: grid.n(),
            v_norm: NormKind::Lq { q, h },
            w_norm: NormKind::Lq { q: 2.0, h },
        };
        Ok(PLapSemigroup {
            grid,
            dt_max,
            q,
            space,
        })
    }

    pub fn grid(&self) -> &PLapGrid {
        &self.grid
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn state_from(&self, s: &StateVector) -> Result<PLapState> {
        PLapState::new(s.coords().to_vec())
    }

    pub fn state_into(&self, s: PLapState) -> StateVector {
        StateVector::new(s.values, self.space.v_norm)
    }
}

impl Semigroup for PLapSemigroup {
    fn space(&self) -> &SpaceSpec {
        &self.space
    }

    fn evolve(&self, t: f64, s: &StateVector) -> Result<StateVector> {
        let state = self.state_from(s)?;
        let evolved = plap_evolve(&self.grid, t, &state, self.dt_max)?;
        Ok(self.state_into(evolved))
    }

    fn fixes_zero(&self) -> bool {
        true
    }

    fn certificate(&self) -> Option<DecayCertificate> {
        plap_certificate(&self.grid, self.q).ok()
    }

    fn is_closed_form(&self) -> bool {
        false
    }

    fn numeric_slack(&self) -> f64 {
        TOL_CONTRACT_STEPPED
    }
}
