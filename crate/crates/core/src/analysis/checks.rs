use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::estimators::{
    ConsistencyReport, ConsistencyVerdict, ContinuityModulus, ConvergenceReport,
    ConvergenceVerdict, Ladder, PairSweep, StabilityEstimate, StabilityVerdict, Tolerances,
};
use crate::model::{Method, RegularFamily};

use super::gap::GapVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicationStatus {
    /// Hypotheses met and conclusion observed.
    Holds,
    /// The conclusion cannot fail because the tested premise is false.
    Vacuous,
    HypothesisNotMet,
    /// Hypotheses met and conclusion contradicted: an implementation defect.
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub name: String,
    pub source: String,
    pub status: ImplicationStatus,
    pub evidence: String,
}

/// Outcome of comparing `L` with `max(L'(r), L''(r))` on one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub r: f64,
    pub full: Option<f64>,
    pub local: Option<f64>,
    pub distant: Option<f64>,
    pub holds: bool,
    /// No admissible pair at all: the identity holds with nothing to compare.
    pub vacuous: bool,
}

fn constant_or_empty(r: Result<StabilityEstimate>) -> Result<Option<f64>> {
    match r {
        Ok(e) => Ok(Some(e.constant)),
        Err(Error::EmptySample { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Checks `L = max(L'(r), L''(r))` exactly on a sweep.
pub fn partition_from_sweep(sweep: &PairSweep, r: f64) -> Result<PartitionCheck> {
    let full = constant_or_empty(sweep.full())?;
    let local = constant_or_empty(sweep.local(r))?;
    let distant = constant_or_empty(sweep.distant(r))?;
    let combined = match (local, distant) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(PartitionCheck {
        r,
        full,
        local,
        distant,
        holds: full == combined,
        vacuous: full.is_none() && combined.is_none(),
    })
}

/// Stability over all pairs equals the larger of the local and distant
/// constants at the common threshold `r`.
pub fn check_partition_identity(
    method: &Method,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    r: f64,
    dt_ladder: &Ladder,
    workers: usize,
) -> Result<PartitionCheck> {
    let sweep = PairSweep::run(method, guard, horizon, cloud, dt_ladder, workers)?;
    partition_from_sweep(&sweep, r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRung {
    pub dt: f64,
    pub error: f64,
    pub defect: f64,
    pub mismatch: f64,
    pub modulus_term: f64,
    pub bound: f64,
    /// `bound - error`; negative when the bound fails.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub status: ImplicationStatus,
    pub slack: f64,
    pub local_constant: f64,
    pub horizon: f64,
    pub rungs: Vec<BoundRung>,
}

/// Compares the convergence error at each rung with
/// `slack * L' * T * defect(dt) + omega(|t - n dt|)` (plus the roundoff
/// floor). The check is only asserted when the method is consistent and
/// locally stable; otherwise the rungs are reported with status
/// `HypothesisNotMet`.
#[allow(clippy::too_many_arguments)]
pub fn check_error_bound(
    consistency: &ConsistencyReport,
    local: &StabilityEstimate,
    local_verdict: StabilityVerdict,
    convergence: &ConvergenceReport,
    modulus: Option<&ContinuityModulus>,
    horizon: f64,
    slack: f64,
    tol: &Tolerances,
) -> Result<BoundCheckReport> {
    if !(slack.is_finite() && slack >= 1.0) {
        return Err(Error::contract(format!(
            "slack must be at least 1, got {slack}"
        )));
    }
    if consistency.rungs.len() != convergence.rungs.len() {
        return Err(Error::contract(
            "consistency and convergence ladders differ",
        ));
    }
    let mut rungs = Vec::with_capacity(convergence.rungs.len());
    for (c, e) in consistency.rungs.iter().zip(&convergence.rungs) {
        if c.dt != e.dt {
            return Err(Error::contract(
                "consistency and convergence ladders differ",
            ));
        }
        let mismatch = e.max_mismatch;
        let modulus_term = if mismatch > 0.0 {
            modulus.and_then(|m| m.at(mismatch)).ok_or_else(|| {
                Error::contract(format!("continuity modulus missing at delta = {mismatch}"))
            })?
        } else {
            0.0
        };
        let bound = slack * local.constant * horizon * c.defect + modulus_term + tol.roundoff;
        let error = if e.blowups > 0 { f64::MAX } else { e.error };
        rungs.push(BoundRung {
            dt: e.dt,
            error,
            defect: c.defect,
            mismatch,
            modulus_term,
            bound,
            margin: bound - error,
            holds: error <= bound,
        });
    }
    let hypotheses = consistency.verdict == ConsistencyVerdict::Consistent
        && local_verdict == StabilityVerdict::Stable;
    let status = if !hypotheses {
        ImplicationStatus::HypothesisNotMet
    } else if rungs.iter().all(|r| r.holds) {
        ImplicationStatus::Holds
    } else {
        ImplicationStatus::Violated
    };
    Ok(BoundCheckReport {
        status,
        slack,
        local_constant: local.constant,
        horizon,
        rungs,
    })
}

/// Contrapositive of "convergent implies distantly stable": a distantly
/// unstable method must not be reported convergent.
pub fn check_distant_contrapositive(
    distant: StabilityVerdict,
    convergence: ConvergenceVerdict,
) -> Implication {
    let (status, evidence) = match (distant, convergence) {
        (StabilityVerdict::Unstable, ConvergenceVerdict::Convergent) => (
            ImplicationStatus::Violated,
            "distantly unstable yet reported convergent".to_string(),
        ),
        (StabilityVerdict::Unstable, ConvergenceVerdict::Divergent) => (
            ImplicationStatus::Holds,
            "distantly unstable and divergent".to_string(),
        ),
        (StabilityVerdict::Unstable, ConvergenceVerdict::Inconclusive) => (
            ImplicationStatus::Inconclusive,
            "distantly unstable; convergence undecided".to_string(),
        ),
        (StabilityVerdict::Stable, _) => (
            ImplicationStatus::Vacuous,
            "distantly stable; nothing to refute".to_string(),
        ),
        (StabilityVerdict::Inconclusive, _) => (
            ImplicationStatus::Inconclusive,
            "distant stability undecided".to_string(),
        ),
    };
    Implication {
        name: "not distant => not convergence".into(),
        source: "convergence implies distant stability (contrapositive)".into(),
        status,
        evidence,
    }
}

/// "Convergent implies distantly stable" evaluated directly.
pub(crate) fn convergence_implies_distant(
    distant: StabilityVerdict,
    converges: Option<bool>,
) -> Implication {
    use ImplicationStatus::*;
    let (status, evidence) = match (distant, converges) {
        (StabilityVerdict::Stable, Some(true)) => (Holds, "convergent and distantly stable"),
        (StabilityVerdict::Stable, _) => {
            (Vacuous, "distantly stable; the conclusion already holds")
        }
        (StabilityVerdict::Unstable, Some(true)) => (Violated, "convergent but distantly unstable"),
        (StabilityVerdict::Unstable, Some(false)) => {
            (Holds, "distantly unstable and not convergent")
        }
        (StabilityVerdict::Unstable, None) => {
            (Inconclusive, "distantly unstable; convergence undecided")
        }
        (StabilityVerdict::Inconclusive, _) => (Inconclusive, "distant stability undecided"),
    };
    Implication {
        name: "convergence => distant".into(),
        source: "convergence implies distant stability".into(),
        status,
        evidence: evidence.into(),
    }
}

/// "Distant stability plus a bounded gap curve implies local stability".
pub(crate) fn distant_and_gap_imply_local(
    distant: StabilityVerdict,
    gap: GapVerdict,
    local: StabilityVerdict,
) -> Implication {
    use ImplicationStatus::*;
    let (status, evidence) = match (distant, gap) {
        (StabilityVerdict::Unstable, _) => (HypothesisNotMet, "distantly unstable".to_string()),
        (_, GapVerdict::Unbounded) => (
            HypothesisNotMet,
            "gap curve unbounded as rho -> 0".to_string(),
        ),
        (StabilityVerdict::Inconclusive, _) | (_, GapVerdict::Inconclusive) => (
            Inconclusive,
            "distant stability or gap verdict undecided".to_string(),
        ),
        (StabilityVerdict::Stable, GapVerdict::Bounded) => match local {
            StabilityVerdict::Stable => (
                Holds,
                "distantly stable, gap bounded, locally stable".to_string(),
            ),
            StabilityVerdict::Unstable => (
                Violated,
                "distantly stable, gap bounded, yet locally unstable".to_string(),
            ),
            StabilityVerdict::Inconclusive => {
                (Inconclusive, "local stability undecided".to_string())
            }
        },
    };
    Implication {
        name: "distant + bounded gap => local".into(),
        source: "gap condition closes distant to local stability".into(),
        status,
        evidence,
    }
}

/// "For a consistent method with a bounded gap curve, stable if and only if
/// convergent".
pub(crate) fn stable_iff_convergent(
    consistency: ConsistencyVerdict,
    gap: GapVerdict,
    stability: StabilityVerdict,
    converges: Option<bool>,
) -> Implication {
    use ImplicationStatus::*;
    let (status, evidence) = match (consistency, gap) {
        (ConsistencyVerdict::Inconsistent, _) => {
            (HypothesisNotMet, "method not consistent".to_string())
        }
        (_, GapVerdict::Unbounded) => (
            HypothesisNotMet,
            "gap curve unbounded as rho -> 0".to_string(),
        ),
        (ConsistencyVerdict::Inconclusive, _) | (_, GapVerdict::Inconclusive) => (
            Inconclusive,
            "consistency or gap verdict undecided".to_string(),
        ),
        (ConsistencyVerdict::Consistent, GapVerdict::Bounded) => match (stability, converges) {
            (StabilityVerdict::Stable, Some(true)) => (Holds, "stable and convergent".to_string()),
            (StabilityVerdict::Unstable, Some(false)) => {
                (Holds, "unstable and not convergent".to_string())
            }
            (StabilityVerdict::Stable, Some(false)) => {
                (Violated, "stable but not convergent".to_string())
            }
            (StabilityVerdict::Unstable, Some(true)) => {
                (Violated, "convergent but unstable".to_string())
            }
            _ => (
                Inconclusive,
                "stability or convergence undecided".to_string(),
            ),
        },
    };
    Implication {
        name: "stable <=> convergent".into(),
        source: "equivalence of stability and convergence under consistency and the gap condition"
            .into(),
        status,
        evidence,
    }
}

/// `Some(true)` convergent, `Some(false)` divergent or stalled above the
/// tolerance, `None` undecided.
pub(crate) fn converges(report: &ConvergenceReport, tol: &Tolerances) -> Option<bool> {
    match report.verdict {
        ConvergenceVerdict::Convergent => Some(true),
        ConvergenceVerdict::Divergent => Some(false),
        ConvergenceVerdict::Inconclusive => report
            .plateau
            .filter(|p| *p > tol.convergence)
            .map(|_| false),
    }
}
