//! JSON experiment configuration: parsing, validation, and resolution of
//! defaults. The resolved form (every default filled in) is echoed into
//! the summary so reruns are auditable.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shocksim_core::ergodic::{Functional, FunctionalKind};
use shocksim_core::ode::OdeSemigroup;
use shocksim_core::plaplacian::{PLapGrid, PLapSemigroup};
use shocksim_core::poisson::{bump_profile, ShockLaw};
use shocksim_core::semigroup::Semigroup;
use shocksim_core::{Error, Result, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PathDump,
    Bounds,
    Slln,
    Clt,
    CkTest,
    EProperty,
    Moments,
    Counterexample,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::PathDump,
        ExperimentKind::Bounds,
        ExperimentKind::Slln,
        ExperimentKind::Clt,
        ExperimentKind::CkTest,
        ExperimentKind::EProperty,
        ExperimentKind::Moments,
        ExperimentKind::Counterexample,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PathDump => "path-dump",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Slln => "slln",
            ExperimentKind::Clt => "clt",
            ExperimentKind::CkTest => "ck-test",
            ExperimentKind::EProperty => "e-property",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Counterexample => "counterexample",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { value: f64 },
    /// Equal-width segments of constant weight across the domain.
    Piecewise { values: Vec<f64> },
    PerCell { values: Vec<f64> },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { value: 1.0 }
    }
}

impl WeightSpec {
    pub fn cell_weights(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            WeightSpec::Constant { value } => Ok(vec![*value; n]),
            WeightSpec::Piecewise { values } => {
                if values.is_empty() {
                    return Err(Error::Config("piecewise weights need >= 1 segment".into()));
                }
                Ok((0..n)
                    .map(|i| {
                        let frac = (i as f64 + 0.5) / n as f64;
                        let seg = ((frac * values.len() as f64) as usize).min(values.len() - 1);
                        values[seg]
                    })
                    .collect())
            }
            WeightSpec::PerCell { values } => {
                if values.len() != n {
                    return Err(Error::Config(format!(
                        "per-cell weights need exactly {n} values, got {}",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

fn default_dt_max() -> f64 {
    1e-3
}

fn default_q() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SemigroupSpec {
    Ode {
        rho: f64,
    },
    Plaplacian {
        n: usize,
        length: f64,
        p: f64,
        #[serde(default = "default_dt_max")]
        dt_max: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default)]
        weights: WeightSpec,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    /// Scalar spaces only.
    Scalar { value: f64 },
    /// Multiple of the unit mean-zero bump profile.
    Bump { amplitude: f64 },
}

/// Optional experiment knobs; anything omitted resolves to a documented
/// default (see the resolved config echoed in `summary.json`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub quad_dt: Option<f64>,
    pub log_points: Option<usize>,
    // slln
    pub burn_in: Option<f64>,
    pub batches: Option<usize>,
    pub ensemble_time: Option<f64>,
    pub forgetting_initial: Option<f64>,
    pub ensemble_check: Option<bool>,
    pub forgetting_check: Option<bool>,
    pub stabilization_check: Option<bool>,
    // clt
    pub prepass_horizon: Option<f64>,
    pub prepass_replicas: Option<usize>,
    pub prepass_burn_in: Option<f64>,
    pub stability_doubling: Option<bool>,
    // ck-test
    pub t: Option<f64>,
    pub h: Option<f64>,
    // e-property
    pub t_grid: Option<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
    // moments
    pub moment_t: Option<f64>,
    pub residual_t: Option<f64>,
    pub residual_samples: Option<usize>,
    // bounds, p-Laplacian extras
    pub decay_pairs: Option<usize>,
    pub decay_horizon: Option<f64>,
    pub structure_horizon: Option<f64>,
    pub monotonicity_samples: Option<usize>,
    // counterexample
    pub rhos: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub theta: f64,
    pub semigroup: SemigroupSpec,
    #[serde(default = "default_shocks")]
    pub shocks: ShockLaw,
    #[serde(default)]
    pub psi: Option<Functional>,
    #[serde(default)]
    pub initial: InitialSpec,
    pub horizon: f64,
    #[serde(default)]
    pub replicas: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub params: Params,
}

fn default_shocks() -> ShockLaw {
    ShockLaw::Zero
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> std::result::Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() || self.theta <= 0.0 {
            return Err(Error::Config("theta must be positive".into()));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if let SemigroupSpec::Ode { rho } = self.semigroup {
            if !rho.is_finite() || rho <= 0.0 {
                return Err(Error::Config("rho must be positive".into()));
            }
        }
        if self.experiment == ExperimentKind::Counterexample
            && !matches!(self.shocks, ShockLaw::Zero)
        {
            return Err(Error::Config(
                "the counterexample experiment requires zero shocks".into(),
            ));
        }
        if let Some(psi) = &self.psi {
            if self.experiment == ExperimentKind::EProperty && !psi.is_bounded() {
                return Err(Error::Config(
                    "the e-property experiment needs a bounded functional (clipped-v-norm)".into(),
                ));
            }
        }
        Ok(())
    }

    /// Default replica count per experiment kind.
    pub fn resolved_replicas(&self) -> usize {
        self.replicas.unwrap_or(match self.experiment {
            ExperimentKind::PathDump => 1,
            ExperimentKind::Bounds => 100,
            ExperimentKind::Slln => 4000,
            ExperimentKind::Clt => 2000,
            ExperimentKind::CkTest => 10_000,
            ExperimentKind::EProperty => 100,
            ExperimentKind::Moments => 100_000,
            ExperimentKind::Counterexample => 1,
        })
    }

    pub fn resolved_psi(&self) -> Functional {
        self.psi.clone().unwrap_or(match self.experiment {
            ExperimentKind::EProperty => Functional::clipped_v_norm(10.0),
            _ => Functional::v_norm(),
        })
    }

    pub fn build_semigroup(&self) -> Result<BuiltSemigroup> {
        match &self.semigroup {
            SemigroupSpec::Ode { rho } => Ok(BuiltSemigroup::Ode(OdeSemigroup::new(*rho))),
            SemigroupSpec::Plaplacian {
                n,
                length,
                p,
                dt_max,
                q,
                weights,
            } => {
                let grid = PLapGrid::new(*n, *length, *p, weights.cell_weights(*n)?)?;
                Ok(BuiltSemigroup::PLap(PLapSemigroup::new(grid, *dt_max, *q)?))
            }
        }
    }
}

/// A constructed semigroup, owned by the runner.
pub enum BuiltSemigroup {
    Ode(OdeSemigroup),
    PLap(PLapSemigroup),
}

impl BuiltSemigroup {
    pub fn as_dyn(&self) -> &dyn Semigroup {
        match self {
            BuiltSemigroup::Ode(sg) => sg,
            BuiltSemigroup::PLap(sg) => sg,
        }
    }

    /// Step-size hint for quadrature defaults (the stepper resolution for
    /// the PDE, unconstrained for closed forms).
    pub fn dt_hint(&self) -> f64 {
        match self {
            BuiltSemigroup::Ode(_) => f64::INFINITY,
            BuiltSemigroup::PLap(sg) => sg.dt_max(),
        }
    }

    pub fn plap(&self) -> Option<&PLapSemigroup> {
        match self {
            BuiltSemigroup::PLap(sg) => Some(sg),
            BuiltSemigroup::Ode(_) => None,
        }
    }

    pub fn initial_state(&self, spec: &InitialSpec) -> Result<StateVector> {
        let space = self.as_dyn().space();
        match spec {
            InitialSpec::Zero => Ok(self.as_dyn().zero_state()),
            InitialSpec::Scalar { value } => {
                if space.dim != 1 {
                    return Err(Error::Config(
                        "scalar initial requires a one-dimensional space".into(),
                    ));
                }
                Ok(StateVector::scalar(*value))
            }
            InitialSpec::Bump { amplitude } => Ok(bump_profile(space).scale(*amplitude)),
        }
    }

    /// A state offset of unit size used to build coupled partners.
    pub fn unit_offset(&self) -> StateVector {
        bump_profile(self.as_dyn().space())
    }
}

/// Fully resolved configuration echoed into every summary.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub theta: f64,
    pub semigroup: SemigroupSpec,
    pub shocks: ShockLaw,
    pub psi: Functional,
    pub initial: InitialSpec,
    pub horizon: f64,
    pub replicas: usize,
    pub out_dir: String,
    pub params: Params,
}

/// Functional kinds listed by `shocksim list`.
pub const FUNCTIONAL_KINDS: [&str; 3] = ["v-norm", "coordinate", "clipped-v-norm"];

/// Validates that a deserialized functional is well-formed for the space.
pub fn validate_psi(psi: &Functional, dim: usize) -> Result<()> {
    if let FunctionalKind::Coordinate { index } = psi.kind {
        if index >= dim {
            return Err(Error::Config(format!(
                "coordinate index {index} out of range for dim {dim}"
            )));
        }
    }
    Ok(())
}
