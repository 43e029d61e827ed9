//! Finite-dimensional states and the norms they are measured in.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the state space. Every coordinate is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::contract("state dimension must be positive"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(State(coords))
    }

    pub fn scalar(value: f64) -> Result<Self> {
        State::new(vec![value])
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        State::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Wraps coordinates produced by a flow or scheme, reporting blow-up
    /// instead of a bare non-finite error.
    pub(crate) fn from_evaluation(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::BlowupDetected { step: None });
        }
        Ok(State(coords))
    }
}

impl AsRef<[f64]> for State {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Sup,
    Euclidean,
    L1,
    WeightedL2,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [
        NormKind::Sup,
        NormKind::Euclidean,
        NormKind::L1,
        NormKind::WeightedL2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Sup => "sup",
            NormKind::Euclidean => "euclidean",
            NormKind::L1 => "l1",
            NormKind::WeightedL2 => "weighted-l2",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NormKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::contract(format!(
                    "unknown norm {s:?} (expected one of sup, euclidean, l1, weighted-l2)"
                ))
            })
    }
}

/// Norm selection for a fixed dimension. `weight` is only read by weighted-l2,
/// where it plays the role of the grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub weight: f64,
    pub dim: usize,
}

impl NormSpec {
    pub fn new(kind: NormKind, dim: usize) -> Result<Self> {
        NormSpec::weighted(kind, 1.0, dim)
    }

    pub fn weighted(kind: NormKind, weight: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::contract("norm dimension must be positive"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::contract("norm weight must be positive and finite"));
        }
        Ok(NormSpec { kind, weight, dim })
    }

    pub fn norm(&self, u: &State) -> Result<f64> {
        self.check_dim(u.dim())?;
        Ok(self.norm_of(u.coords()))
    }

    pub fn distance(&self, u: &State, v: &State) -> Result<f64> {
        self.check_dim(u.dim())?;
        self.check_dim(v.dim())?;
        Ok(self.dist_of(u.coords(), v.coords()))
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    /// Unchecked norm on raw coordinates; callers guarantee the length.
    pub(crate) fn norm_of(&self, u: &[f64]) -> f64 {
        self.reduce(u.iter().copied())
    }

    pub(crate) fn dist_of(&self, u: &[f64], v: &[f64]) -> f64 {
        self.reduce(u.iter().zip(v).map(|(a, b)| a - b))
    }

    fn reduce(&self, it: impl Iterator<Item = f64>) -> f64 {
        match self.kind {
            NormKind::Sup => it.fold(0.0, |m, x| m.max(x.abs())),
            NormKind::L1 => it.map(f64::abs).sum(),
            NormKind::Euclidean => it.map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::WeightedL2 => (self.weight * it.map(|x| x * x).sum::<f64>()).sqrt(),
        }
    }
}

/// Convenience wrapper matching the free-function form `norm(spec, u)`.
pub fn norm(spec: &NormSpec, u: &State) -> Result<f64> {
    spec.norm(u)
}
