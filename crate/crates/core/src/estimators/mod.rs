//! Empirical estimates of the constants quantified in the stability,
//! consistency and convergence definitions.
//!
//! Suprema over compacts are maxima over a [`CompactCloud`]; "for all
//! `dt > 0`" is a geometric [`Ladder`]. Verdicts are trend rules over the
//! ladder with thresholds from [`Tolerances`].

mod consistency;
mod convergence;
pub mod fit;
mod iterate;
mod modulus;
mod power_norm;
mod stability;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use consistency::{
    consistency_defect, consistency_report, ConsistencyReport, DefectRung, DefectWitness,
};
pub use convergence::{
    convergence_error, convergence_report, ConvergenceReport, ErrorRung, ErrorWitness,
};
pub use iterate::{iterate, trajectory_cloud, TrajectoryCloud};
pub use modulus::{continuity_modulus, ContinuityModulus};
pub use power_norm::linear_power_norm;
pub use stability::{
    estimate_distant_stability, estimate_local_stability, estimate_stability, stability_verdict,
    PairSweep, StabilityEstimate, StabilityKind, Witness,
};

/// Geometric ladder `start * 2^-k`, `k = 0..=depth`, or an explicit list of
/// positive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ladder(Vec<f64>);

impl Ladder {
    pub fn geometric(start: f64, depth: usize) -> Result<Self> {
        if !(start.is_finite() && start > 0.0) {
            return Err(Error::contract("ladder start must be positive"));
        }
        Ok(Ladder(
            (0..=depth).map(|k| start * 0.5f64.powi(k as i32)).collect(),
        ))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("ladder must have at least one rung"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::contract("ladder values must be positive"));
        }
        Ok(Ladder(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform instants `T j / m`, `j = 0..=m`.
pub fn time_grid(horizon: f64, intervals: usize) -> Vec<f64> {
    if intervals == 0 || horizon <= 0.0 {
        return vec![0.0];
    }
    (0..=intervals)
        .map(|j| horizon * j as f64 / intervals as f64)
        .collect()
}

/// Largest `n` with `n dt <= horizon`, forgiving representation error.
pub(crate) fn max_steps(horizon: f64, dt: f64) -> usize {
    ((horizon / dt) * (1.0 + 1e-12) + 1e-12).floor().max(0.0) as usize
}

/// Thresholds behind every verdict. Defaults are the documented ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Final consistency defect must fall below this.
    pub consistency: f64,
    /// Final convergence error must fall below this.
    pub convergence: f64,
    /// Quantities below this are treated as exact (roundoff only).
    pub roundoff: f64,
    /// Per-step growth factor above `1 + growth` counts as growth.
    pub growth: f64,
    /// A stability constant at or above this, together with growth, is unstable.
    pub stability_cap: f64,
    /// A convergence error at or above this is divergence.
    pub divergence_cap: f64,
    /// Tail orders below this count as stalled.
    pub min_order: f64,
    /// Estimates backed by fewer admissible pairs or samples are inconclusive.
    pub min_pairs: usize,
    pub gap_tau: f64,
    pub q_min: f64,
    /// RMS residual (log space) a power-law fit must reach to count.
    pub fit_residual: f64,
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            consistency: 0.05,
            convergence: 0.05,
            roundoff: 1e-9,
            growth: 0.05,
            stability_cap: 1e3,
            divergence_cap: 1e3,
            min_order: 0.2,
            min_pairs: 10,
            gap_tau: 0.1,
            q_min: 0.2,
            fit_residual: 0.1,
            slack: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}
