//! The shocked evolution: jump recursion, continuous-time evaluation, and
//! pathwise bound verification.
//!
//! The post-jump skeleton obeys `X_m = T(beta_m) X_{m-1} + eta_m` with
//! `X_0 = x`, and the path is `X(t) = T(t - alpha_N(t)) X_{N(t)}`. At a
//! jump time the path takes the post-jump value (right-continuous
//! convention), so `state_at(alpha_m)` returns `skeleton[m]` exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poisson::ShockStream;
use crate::semigroup::Semigroup;
use crate::space::StateVector;

/// One realization of the shocked process: semigroup, noise stream, initial
/// state, and the lazily extended post-jump skeleton.
pub struct ProcessPath<'a> {
    semigroup: &'a dyn Semigroup,
    stream: ShockStream,
    skeleton: Vec<StateVector>,
}

impl<'a> ProcessPath<'a> {
    pub fn new(
        semigroup: &'a dyn Semigroup,
        stream: ShockStream,
        initial: StateVector,
    ) -> Result<Self> {
        if initial.dim() != semigroup.space().dim {
            return Err(Error::Config(format!(
                "initial state dim {} does not match the semigroup space dim {}",
                initial.dim(),
                semigroup.space().dim
            )));
        }
        if stream.space().dim != semigroup.space().dim {
            return Err(Error::Config(
                "shock stream and semigroup act on different spaces".into(),
            ));
        }
        Ok(ProcessPath {
            semigroup,
            stream,
            skeleton: vec![initial],
        })
    }

    pub fn semigroup(&self) -> &'a dyn Semigroup {
        self.semigroup
    }

    pub fn stream(&self) -> &ShockStream {
        &self.stream
    }

    pub fn stream_mut(&mut self) -> &mut ShockStream {
        &mut self.stream
    }

    pub fn initial(&self) -> &StateVector {
        &self.skeleton[0]
    }

    fn ensure_skeleton(&mut self, m: usize) -> Result<()> {
        while self.skeleton.len() <= m {
            let k = self.skeleton.len();
            let gap = self.stream.gap(k);
            let flowed = self.semigroup.evolve(gap, &self.skeleton[k - 1])?;
            self.skeleton.push(flowed.add(&self.stream.sample_shock(k)));
        }
        Ok(())
    }

    /// Post-jump state `X_m`.
    pub fn skeleton_state(&mut self, m: usize) -> Result<StateVector> {
        self.ensure_skeleton(m)?;
        Ok(self.skeleton[m].clone())
    }

    /// Number of jumps up to time `t`.
    pub fn jump_count(&mut self, t: f64) -> usize {
        self.stream.count_at(t)
    }

    pub fn arrival(&mut self, m: usize) -> f64 {
        self.stream.arrival(m)
    }

    /// `X(t) = T(t - alpha_N(t)) X_{N(t)}`; exactly the post-jump state when
    /// `t` is a jump time.
    pub fn state_at(&mut self, t: f64) -> Result<StateVector> {
        if t < 0.0 {
            return Err(Error::Input("time must be nonnegative".into()));
        }
        let m = self.stream.count_at(t);
        self.ensure_skeleton(m)?;
        let residual = t - self.stream.arrival(m);
        if residual == 0.0 {
            Ok(self.skeleton[m].clone())
        } else {
            self.semigroup.evolve(residual, &self.skeleton[m])
        }
    }
}

fn require_shared_gaps(a: &ProcessPath, b: &ProcessPath) -> Result<()> {
    if !a.stream.shares_gaps_with(b.stream()) {
        return Err(Error::Config(
            "coupled paths must share one noise stream (same seed, replica, rate)".into(),
        ));
    }
    if a.semigroup.space() != b.semigroup.space() {
        return Err(Error::Config("coupled paths live on different spaces".into()));
    }
    Ok(())
}

/// `||X_a(t) - X_b(t)||_V` for two paths driven by the same gap stream
/// (possibly different initials and shock laws).
pub fn coupled_distance(a: &mut ProcessPath, b: &mut ProcessPath, t: f64) -> Result<f64> {
    require_shared_gaps(a, b)?;
    let space = *a.semigroup.space();
    let diff = a.state_at(t)?.sub(&b.state_at(t)?);
    Ok(space.norm_v(&diff))
}

/// Right side of the pathwise continuity bound:
/// `||x_a - x_b||_V + sum_{k <= N(t)} ||eta_k - eta_hat_k||_V`.
pub fn coupling_rhs(a: &mut ProcessPath, b: &mut ProcessPath, t: f64) -> Result<f64> {
    require_shared_gaps(a, b)?;
    let space = *a.semigroup.space();
    let mut rhs = space.norm_v(&a.initial().sub(b.initial()));
    let n = a.stream.count_at(t);
    for k in 1..=n {
        let d = a.stream.sample_shock(k).sub(&b.stream().sample_shock(k));
        rhs += space.norm_v(&d);
    }
    Ok(rhs)
}

/// Worst signed margin of a sampled pathwise bound (`lhs - rhs`; all
/// margins `<= slack` is a pass).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathBoundReport {
    pub worst_margin: f64,
    pub worst_t: f64,
    pub checked: usize,
}

impl PathBoundReport {
    fn empty() -> Self {
        PathBoundReport {
            worst_margin: f64::NEG_INFINITY,
            worst_t: f64::NAN,
            checked: 0,
        }
    }

    fn record(&mut self, margin: f64, t: f64) {
        if margin > self.worst_margin {
            self.worst_margin = margin;
            self.worst_t = t;
        }
        self.checked += 1;
    }

    pub fn merge(mut self, other: PathBoundReport) -> PathBoundReport {
        if other.worst_margin > self.worst_margin {
            self.worst_margin = other.worst_margin;
            self.worst_t = other.worst_t;
        }
        self.checked += other.checked;
        self
    }
}

/// Checks `||X(t)||_V <= c_embed * kappa^(-rho) * (t - alpha_N(t))^(-rho)`
/// on the grid, skipping points with zero residual life (the envelope is
/// infinite there).
pub fn verify_norm_bound(path: &mut ProcessPath, t_grid: &[f64]) -> Result<PathBoundReport> {
    let cert = path
        .semigroup
        .certificate()
        .ok_or_else(|| Error::Config("norm bound needs a decay certificate".into()))?;
    if !path.semigroup.fixes_zero() {
        return Err(Error::Config("norm bound needs a zero-fixing semigroup".into()));
    }
    let space = *path.semigroup.space();
    let mut report = PathBoundReport::empty();
    for &t in t_grid {
        let residual = path.stream_mut().residual_life(t);
        if residual <= 0.0 {
            continue;
        }
        let lhs = space.norm_v(&path.state_at(t)?);
        report.record(lhs - cert.ambient_tail(residual), t);
    }
    Ok(report)
}

/// Checks the two-path forgetting bound
/// `||X_a(t) - X_b(t)||_V <= c_embed * kappa^(-rho) * t^(-rho)` for `t > 0`
/// on paths with identical noise (gaps and shocks).
pub fn verify_coupling_bound(
    a: &mut ProcessPath,
    b: &mut ProcessPath,
    t_grid: &[f64],
) -> Result<PathBoundReport> {
    require_shared_gaps(a, b)?;
    if !a.stream.shares_noise_with(b.stream()) {
        return Err(Error::Config("coupling bound needs identical shocks".into()));
    }
    let cert = a
        .semigroup
        .certificate()
        .ok_or_else(|| Error::Config("coupling bound needs a decay certificate".into()))?;
    let mut report = PathBoundReport::empty();
    for &t in t_grid {
        if t <= 0.0 {
            continue;
        }
        let lhs = coupled_distance(a, b, t)?;
        report.record(lhs - cert.ambient_tail(t), t);
    }
    Ok(report)
}

/// Default verification grid: log-spaced global times over `(0, t_max]`
/// joined with residual-life offsets `{1e-3, 1e-2, 1e-1, 1} / theta` after
/// every jump, so sampling straddles the jump-controlled envelope.
pub fn verification_grid(
    stream: &mut ShockStream,
    t_max: f64,
    log_points: usize,
) -> Vec<f64> {
    let mut grid = crate::semigroup::log_time_grid(t_max, log_points);
    let mean_gap = 1.0 / stream.theta();
    let jumps = stream.count_at(t_max);
    for m in 1..=jumps {
        let alpha = stream.arrival(m);
        for offset in [1e-3, 1e-2, 1e-1, 1.0] {
            let t = alpha + offset * mean_gap;
            if t <= t_max {
                grid.push(t);
            }
        }
    }
    grid.sort_by(|x, y| x.total_cmp(y));
    grid.dedup();
    grid
}
