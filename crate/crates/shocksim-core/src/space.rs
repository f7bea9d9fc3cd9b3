//! State vectors and the norms they are measured in.
//!
//! A state is a finite coordinate vector together with a tag naming its
//! canonical norm: plain absolute value for scalar problems, or a discrete
//! `L^q` norm `(Σ h·|u_i|^q)^{1/q}` for grid-valued problems (`h` is the
//! cell volume). Evolution problems that control two norms at once (an
//! ambient `V` norm and a stronger `W` norm) carry both tags in a
//! [`SpaceSpec`], so every bound check can name which norm each side of an
//! inequality uses.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Which norm a coordinate vector is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// Absolute value of a single coordinate.
    Scalar,
    /// Discrete `L^q` norm with exponent `q` and cell volume `h`.
    Lq { q: f64, h: f64 },
}

impl NormKind {
    pub fn eval(&self, coords: &[f64]) -> f64 {
        match *self {
            NormKind::Scalar => {
                debug_assert_eq!(coords.len(), 1);
                coords[0].abs()
            }
            NormKind::Lq { q, h } => lq_norm(coords, q, h),
        }
    }
}

/// `(Σ h·|u_i|^q)^{1/q}`, with a fast path for `q = 2`.
pub fn lq_norm(coords: &[f64], q: f64, h: f64) -> f64 {
    if q == 2.0 {
        let ss: f64 = coords.iter().map(|u| u * u).sum();
        (h * ss).sqrt()
    } else {
        let s: f64 = coords.iter().map(|u| u.abs().powf(q)).sum();
        (h * s).powf(1.0 / q)
    }
}

/// The pair of norms an evolution controls: the ambient `V` norm (where
/// paths and functionals live) and the stronger `W` norm (where the decay
/// estimate holds). For scalar problems the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub dim: usize,
    pub v_norm: NormKind,
    pub w_norm: NormKind,
}

impl SpaceSpec {
    pub fn scalar() -> Self {
        SpaceSpec {
            dim: 1,
            v_norm: NormKind::Scalar,
            w_norm: NormKind::Scalar,
        }
    }

    pub fn norm_v(&self, s: &StateVector) -> f64 {
        self.v_norm.eval(&s.coords)
    }

    pub fn norm_w(&self, s: &StateVector) -> f64 {
        self.w_norm.eval(&s.coords)
    }
}

/// A point of the state space: finite coordinates plus the canonical norm
/// tag of the space it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coords: SmallVec<[f64; 4]>,
    norm_tag: NormKind,
}

impl StateVector {
    pub fn new(coords: impl Into<SmallVec<[f64; 4]>>, norm_tag: NormKind) -> Self {
        let coords = coords.into();
        assert!(!coords.is_empty(), "state vector must be non-empty");
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        StateVector { coords, norm_tag }
    }

    pub fn scalar(v: f64) -> Self {
        StateVector::new([v].as_slice(), NormKind::Scalar)
    }

    pub fn zeros(dim: usize, norm_tag: NormKind) -> Self {
        StateVector::new(vec![0.0; dim], norm_tag)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_tag(&self) -> NormKind {
        self.norm_tag
    }

    /// Canonical (V-)norm of the state.
    pub fn norm(&self) -> f64 {
        self.norm_tag.eval(&self.coords)
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let coords: SmallVec<[f64; 4]> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        StateVector::new(coords, self.norm_tag)
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let coords: SmallVec<[f64; 4]> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        StateVector::new(coords, self.norm_tag)
    }

    pub fn scale(&self, c: f64) -> StateVector {
        let coords: SmallVec<[f64; 4]> = self.coords.iter().map(|a| a * c).collect();
        StateVector::new(coords, self.norm_tag)
    }

    pub fn mean(&self) -> f64 {
        self.coords.iter().sum::<f64>() / self.dim() as f64
    }
}
