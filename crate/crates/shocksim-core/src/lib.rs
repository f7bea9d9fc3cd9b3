//! Simulation and verification of stochastic processes obtained by
//! interlacing a nonlinear contractive semigroup with Poisson-timed
//! additive shocks.
//!
//! The process is built from a jump skeleton `X_m = T(beta_m) X_{m-1} +
//! eta_m` (exponential gaps `beta_m`, i.i.d. shocks `eta_m`) and evaluated
//! between jumps by the deterministic flow, `X(t) = T(t - alpha_N(t))
//! X_{N(t)}`. Two concrete semigroups ship with the library, a closed-form
//! scalar flow and a discretized weighted p-Laplacian with Neumann
//! boundary, together with the machinery to verify their polynomial
//! forgetting bounds pathwise and to test ergodic averages, fluctuation
//! statistics, and transition structure at desk scale.

pub mod error;
pub mod ergodic;
pub mod ode;
pub mod plaplacian;
pub mod poisson;
pub mod process;
pub mod semigroup;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
pub use semigroup::{DecayCertificate, Semigroup};
pub use space::{NormKind, SpaceSpec, StateVector};
