use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::estimators::fit::{fit_power_law, PowerLawFit};
use crate::estimators::{Ladder, PairSweep, Tolerances};
use crate::model::{Method, RegularFamily};

/// Fewest valid rungs the verdict will look at.
pub const MIN_GAP_RUNGS: usize = 4;
/// Number of trailing halvings inspected by the ratio test.
const RATIO_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapVerdict {
    /// `L''(rho)` levels off as `rho` shrinks.
    Bounded,
    /// `L''(rho)` follows a power law `rho^-q` with `q >= q_min`.
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRung {
    pub rho: f64,
    /// `None` when no admissible pair is at least `rho` apart.
    pub estimate: Option<f64>,
    pub pairs_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTest {
    /// `L''(rho_{k+1}) / L''(rho_k)` over the trailing valid rungs.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapContext {
    pub regular_family: String,
    pub horizon: f64,
    pub cloud_fingerprint: String,
    pub cloud_size: usize,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub rungs: Vec<GapRung>,
    pub fit: Option<PowerLawFit>,
    pub ratio_test: Option<RatioTest>,
    pub verdict: GapVerdict,
    pub context: GapContext,
    pub warnings: Vec<String>,
}

impl GapCurve {
    /// `(rho, L'')` for the rungs that have an estimate.
    pub fn valid(&self) -> Vec<(f64, f64)> {
        self.rungs
            .iter()
            .filter_map(|r| r.estimate.map(|e| (r.rho, e)))
            .collect()
    }
}

/// `rho -> L''(rho)` over a descending `rho` ladder, with the ratio test and
/// power-law fit that decide whether the curve stays bounded as `rho -> 0`.
#[allow(clippy::too_many_arguments)]
pub fn gap_curve(
    method: &Method,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    rho_ladder: &Ladder,
    dt_ladder: &Ladder,
    workers: usize,
    tol: &Tolerances,
) -> Result<GapCurve> {
    let sweep = PairSweep::run(method, guard, horizon, cloud, dt_ladder, workers)?;
    gap_curve_from_sweep(&sweep, guard, horizon, cloud, rho_ladder, tol)
}

/// Same as [`gap_curve`] on an existing sweep of the same cloud and ladder.
pub fn gap_curve_from_sweep(
    sweep: &PairSweep,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    rho_ladder: &Ladder,
    tol: &Tolerances,
) -> Result<GapCurve> {
    let rhos = rho_ladder.values();
    if rhos.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::contract("rho ladder must be strictly descending"));
    }
    let norm = guard.problem().norm();
    let min_sep = cloud.min_separation(norm);
    let mut warnings = Vec::new();
    let mut rungs = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        match sweep.distant(rho) {
            Ok(est) => rungs.push(GapRung {
                rho,
                estimate: Some(est.constant),
                pairs_evaluated: est.pairs_evaluated,
            }),
            Err(Error::EmptySample { .. }) => {
                warnings.push(format!(
                    "rho = {rho}: no admissible pair at this distance; rung void"
                ));
                rungs.push(GapRung {
                    rho,
                    estimate: None,
                    pairs_evaluated: 0,
                });
            }
            Err(e) => return Err(e),
        }
        if rho < min_sep {
            warnings.push(format!(
                "rho = {rho} is below the cloud's minimum separation {min_sep}; the curve cannot resolve it"
            ));
        }
    }

    let context = GapContext {
        regular_family: guard.description().to_string(),
        horizon,
        cloud_fingerprint: cloud.fingerprint(),
        cloud_size: cloud.len(),
        min_separation: min_sep,
    };
    let mut curve = GapCurve {
        rungs,
        fit: None,
        ratio_test: None,
        verdict: GapVerdict::Inconclusive,
        context,
        warnings,
    };
    let valid = curve.valid();
    if valid.len() < MIN_GAP_RUNGS {
        curve.warnings.push(format!(
            "only {} valid rungs (need {MIN_GAP_RUNGS}); verdict inconclusive",
            valid.len()
        ));
        return Ok(curve);
    }
    let (rho_v, l_v): (Vec<f64>, Vec<f64>) = valid.iter().copied().unzip();
    let tail = &l_v[l_v.len() - (RATIO_WINDOW + 1)..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    curve.ratio_test = Some(RatioTest {
        ratios,
        max_ratio,
        threshold: 1.0 + tol.gap_tau,
    });
    curve.fit = fit_power_law(&rho_v, &l_v);
    curve.verdict = gap_verdict(max_ratio, curve.fit.as_ref(), tol);
    Ok(curve)
}

fn gap_verdict(max_ratio: f64, fit: Option<&PowerLawFit>, tol: &Tolerances) -> GapVerdict {
    if max_ratio <= 1.0 + tol.gap_tau {
        return GapVerdict::Bounded;
    }
    match fit {
        Some(f)
            if f.exponent >= tol.q_min
                && f.amplitude > 0.0
                && f.rms_log_residual <= tol.fit_residual =>
        {
            GapVerdict::Unbounded
        }
        _ => GapVerdict::Inconclusive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{build_method, build_problem, ProblemParams};

    #[test]
    fn linear_euler_is_bounded() {
        let p = build_problem("linear", &ProblemParams::default()).unwrap();
        let m = build_method(&p, "linear-euler", &ProblemParams::default()).unwrap();
        let g = RegularFamily::whole_domain(&p);
        let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
        let curve = gap_curve(
            &m,
            &g,
            1.0,
            &k,
            &Ladder::geometric(1.0, 7).unwrap(),
            &Ladder::geometric(0.1, 3).unwrap(),
            1,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(curve.verdict, GapVerdict::Bounded);
        assert!(curve.ratio_test.unwrap().max_ratio <= 1.0 + 1e-12);
        assert!(curve
            .warnings
            .iter()
            .any(|w| w.contains("minimum separation")));
    }

    #[test]
    fn three_rungs_are_inconclusive() {
        let p = build_problem("linear", &ProblemParams::default()).unwrap();
        let m = build_method(&p, "linear-euler", &ProblemParams::default()).unwrap();
        let g = RegularFamily::whole_domain(&p);
        let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
        let curve = gap_curve(
            &m,
            &g,
            1.0,
            &k,
            &Ladder::geometric(0.5, 2).unwrap(),
            &Ladder::geometric(0.1, 1).unwrap(),
            1,
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(curve.rungs.len(), 3);
        assert_eq!(curve.verdict, GapVerdict::Inconclusive);
    }

    #[test]
    fn verdict_rule() {
        let tol = Tolerances::default();
        let fit = PowerLawFit {
            plateau: 1.0,
            amplitude: 1.0,
            exponent: 0.5,
            rms_log_residual: 0.01,
        };
        assert_eq!(gap_verdict(1.05, Some(&fit), &tol), GapVerdict::Bounded);
        assert_eq!(gap_verdict(1.4, Some(&fit), &tol), GapVerdict::Unbounded);
        let flat = PowerLawFit {
            exponent: 0.1,
            ..fit
        };
        assert_eq!(
            gap_verdict(1.4, Some(&flat), &tol),
            GapVerdict::Inconclusive
        );
        let rough = PowerLawFit {
            rms_log_residual: 0.5,
            ..fit
        };
        assert_eq!(
            gap_verdict(1.4, Some(&rough), &tol),
            GapVerdict::Inconclusive
        );
        assert_eq!(gap_verdict(1.4, None, &tol), GapVerdict::Inconclusive);
    }
}
