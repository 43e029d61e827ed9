//! Gap curve, identity and implication checks, and the full equivalence
//! pipeline tying consistency, stability and convergence together.

mod checks;
mod gap;

use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::estimators::{
    consistency_report, continuity_modulus, convergence_report, stability_verdict,
    ConsistencyReport, ConsistencyVerdict, ContinuityModulus, ConvergenceReport,
    ConvergenceVerdict, Ladder, PairSweep, StabilityEstimate, StabilityVerdict, Tolerances,
};
use crate::model::{Method, RegularFamily};

pub use checks::{
    check_distant_contrapositive, check_error_bound, check_partition_identity,
    partition_from_sweep, BoundCheckReport, BoundRung, Implication, ImplicationStatus,
    PartitionCheck,
};
pub use gap::{
    gap_curve, gap_curve_from_sweep, GapContext, GapCurve, GapRung, GapVerdict, RatioTest,
    MIN_GAP_RUNGS,
};

/// Everything the pipeline needs besides the method, family and cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub horizon: f64,
    pub dt_ladder: Ladder,
    pub rho_local: f64,
    /// Threshold for the distant constant; the partition check uses `rho_local`.
    pub rho_distant: f64,
    pub rho_ladder: Ladder,
    /// Convergence window as a multiple of `dt`.
    pub theta_factor: f64,
    pub time_points: usize,
    pub tolerances: Tolerances,
    /// Thread bound for the pair sweep. Never serialized: results do not
    /// depend on it.
    #[serde(skip, default = "one_worker")]
    pub workers: usize,
}

fn one_worker() -> usize {
    1
}

impl AnalysisSettings {
    /// Defaults derived from the cloud: `rho' = rho` = median pairwise
    /// distance, `rho_0` = half the diameter with 7 halvings, `theta = dt/2`
    /// and 10 time intervals.
    pub fn for_cloud(
        guard: &RegularFamily,
        cloud: &CompactCloud,
        horizon: f64,
        dt_ladder: Ladder,
    ) -> Result<Self> {
        let norm = guard.problem().norm();
        let median = cloud.median_distance(norm);
        let diameter = cloud.diameter(norm);
        let rho_local = if median > 0.0 { median } else { 1.0 };
        let rho0 = if diameter > 0.0 { diameter / 2.0 } else { 1.0 };
        Ok(AnalysisSettings {
            horizon,
            dt_ladder,
            rho_local,
            rho_distant: rho_local,
            rho_ladder: Ladder::geometric(rho0, 7)?,
            theta_factor: 0.5,
            time_points: 10,
            tolerances: Tolerances::default(),
            workers: 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub verdict: StabilityVerdict,
    /// Verdict of the estimate alone, before any inference from the gap curve.
    pub estimate_verdict: StabilityVerdict,
    pub estimate: Option<StabilityEstimate>,
    pub note: Option<String>,
}

impl StabilitySummary {
    fn from_result(r: Result<StabilityEstimate>, tol: &Tolerances) -> Result<Self> {
        match r {
            Ok(e) => {
                let v = stability_verdict(&e, tol);
                let note = (v == StabilityVerdict::Inconclusive)
                    .then(|| format!("only {} admissible pairs", e.pairs_evaluated));
                Ok(StabilitySummary {
                    verdict: v,
                    estimate_verdict: v,
                    estimate: Some(e),
                    note,
                })
            }
            Err(Error::EmptySample { what }) => Ok(StabilitySummary {
                verdict: StabilityVerdict::Inconclusive,
                estimate_verdict: StabilityVerdict::Inconclusive,
                estimate: None,
                note: Some(format!("no admissible samples for {what}")),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        self.estimate.as_ref().map(|e| e.constant)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub consistency_verdict: ConsistencyVerdict,
    pub consistency: Option<ConsistencyReport>,
    pub local_stability: StabilitySummary,
    pub distant_stability: StabilitySummary,
    pub stability: StabilitySummary,
    pub gap: GapCurve,
    pub convergence_verdict: ConvergenceVerdict,
    pub convergence: Option<ConvergenceReport>,
    pub modulus: Option<ContinuityModulus>,
    pub partition: PartitionCheck,
    pub bound: Option<BoundCheckReport>,
    pub implications: Vec<Implication>,
    pub warnings: Vec<String>,
}

impl EquivalenceVerdict {
    /// True when an implication is violated or the partition identity fails;
    /// either signals an implementation defect.
    pub fn has_violation(&self) -> bool {
        !self.partition.holds
            || self
                .implications
                .iter()
                .any(|i| i.status == ImplicationStatus::Violated)
    }
}

fn empty_ok<T>(r: Result<T>, warnings: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptySample { what }) => {
            warnings.push(format!("no admissible samples for {what}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs consistency, the three stability estimates, the gap curve,
/// convergence and every check on one configuration.
///
/// Local stability is reported unstable, whatever its estimate, when the
/// method is distantly stable but the gap curve is unbounded: `L''(rho)`
/// never exceeds the full constant, so an unbounded curve forces `L'` to be
/// unbounded as well.
pub fn equivalence_report(
    method: &Method,
    guard: &RegularFamily,
    cloud: &CompactCloud,
    settings: &AnalysisSettings,
) -> Result<EquivalenceVerdict> {
    let s = settings;
    let tol = &s.tolerances;
    let mut warnings = Vec::new();
    if !(s.theta_factor.is_finite() && s.theta_factor >= 0.0) {
        return Err(Error::contract("theta must be nonnegative"));
    }

    let sweep = PairSweep::run(method, guard, s.horizon, cloud, &s.dt_ladder, s.workers)?;
    let mut local = StabilitySummary::from_result(sweep.local(s.rho_local), tol)?;
    let distant = StabilitySummary::from_result(sweep.distant(s.rho_distant), tol)?;
    let mut full = StabilitySummary::from_result(sweep.full(), tol)?;
    let gap = gap_curve_from_sweep(&sweep, guard, s.horizon, cloud, &s.rho_ladder, tol)?;
    let partition = partition_from_sweep(&sweep, s.rho_local)?;
    if partition.vacuous {
        warnings.push("partition identity is vacuous: no admissible pairs".into());
    }

    if distant.verdict == StabilityVerdict::Stable && gap.verdict == GapVerdict::Unbounded {
        let note = "unstable: distantly stable with an unbounded gap curve".to_string();
        local.verdict = StabilityVerdict::Unstable;
        local.note = Some(note.clone());
        full.verdict = StabilityVerdict::Unstable;
        full.note = Some(note);
    }

    let consistency = empty_ok(
        consistency_report(
            guard,
            method,
            s.horizon,
            cloud,
            &s.dt_ladder,
            s.time_points,
            tol,
        ),
        &mut warnings,
    )?;
    let convergence = empty_ok(
        convergence_report(
            guard,
            method,
            s.horizon,
            cloud,
            &s.dt_ladder,
            s.theta_factor,
            s.time_points,
            tol,
        ),
        &mut warnings,
    )?;
    let consistency_verdict = consistency
        .as_ref()
        .map_or(ConsistencyVerdict::Inconclusive, |c| c.verdict);
    let convergence_verdict = convergence
        .as_ref()
        .map_or(ConvergenceVerdict::Inconclusive, |c| c.verdict);
    if let Some(p) = convergence.as_ref().and_then(|c| c.plateau) {
        warnings.push(format!(
            "convergence error stalls at {p:.6e} under refinement"
        ));
    }

    let modulus = match &convergence {
        Some(c) => {
            let mut deltas: Vec<f64> = c.rungs.iter().map(|r| r.max_mismatch).collect();
            deltas.sort_by(f64::total_cmp);
            deltas.dedup();
            Some(continuity_modulus(
                guard,
                s.horizon,
                cloud,
                &deltas,
                s.time_points,
            )?)
        }
        None => None,
    };

    let bound = match (&consistency, &local.estimate, &convergence) {
        (Some(c), Some(l), Some(e)) => Some(check_error_bound(
            c,
            l,
            local.verdict,
            e,
            modulus.as_ref(),
            s.horizon,
            tol.slack,
            tol,
        )?),
        _ => None,
    };

    let converges = convergence.as_ref().and_then(|c| checks::converges(c, tol));
    let local_to_convergence = Implication {
        name: "local => convergence".into(),
        source: "error bound from consistency and local stability".into(),
        status: bound
            .as_ref()
            .map_or(ImplicationStatus::Inconclusive, |b| b.status),
        evidence: match &bound {
            Some(b) => format!(
                "{} of {} rungs within slack {} * L' * T * defect",
                b.rungs.iter().filter(|r| r.holds).count(),
                b.rungs.len(),
                b.slack
            ),
            None => "prerequisite estimates unavailable".into(),
        },
    };
    let implications = vec![
        local_to_convergence,
        checks::convergence_implies_distant(distant.verdict, converges),
        checks::distant_and_gap_imply_local(distant.verdict, gap.verdict, local.verdict),
        checks::stable_iff_convergent(consistency_verdict, gap.verdict, full.verdict, converges),
    ];
    warnings.extend(gap.warnings.iter().cloned());

    Ok(EquivalenceVerdict {
        consistency_verdict,
        consistency,
        local_stability: local,
        distant_stability: distant,
        stability: full,
        gap,
        convergence_verdict,
        convergence,
        modulus,
        partition,
        bound,
        implications,
        warnings,
    })
}
