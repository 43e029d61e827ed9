use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::model::{Method, RegularFamily};
use crate::space::State;

use super::fit::log_log_slope;
use super::{time_grid, ConsistencyVerdict, Ladder, Tolerances};

/// Sample `(t, u)` at which the defect is largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectWitness {
    pub t: f64,
    pub u: State,
    pub u_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRung {
    pub dt: f64,
    pub defect: f64,
    pub witness: DefectWitness,
    pub admissible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub rungs: Vec<DefectRung>,
    /// Slope of `ln defect` against `ln dt` over the whole ladder.
    pub fit_order: Option<f64>,
    /// Same slope over the last three rungs.
    pub tail_order: Option<f64>,
    pub verdict: ConsistencyVerdict,
}

/// `max |C_dt E(t)u - E(dt)E(t)u| / dt` over `t` on a uniform grid of
/// `time_points + 1` instants in `[0, horizon]` and `u` in the cloud with
/// `u` in `X'_{t+dt}`.
pub fn consistency_defect(
    guard: &RegularFamily,
    method: &Method,
    horizon: f64,
    cloud: &CompactCloud,
    dt: f64,
    time_points: usize,
) -> Result<(f64, DefectWitness, usize)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::contract(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let p = guard.problem();
    let norm = p.norm();
    let mut best: Option<(f64, DefectWitness)> = None;
    let mut admissible = 0;
    for t in time_grid(horizon, time_points) {
        for (ix, u) in cloud.points().iter().enumerate() {
            if !guard.contains(t + dt, u) {
                continue;
            }
            let Ok(w) = p.exact(t, u) else { continue };
            let (Ok(c), Ok(e)) = (method.step(dt, &w), p.exact(dt, &w)) else {
                continue;
            };
            admissible += 1;
            let d = norm.distance(&c, &e)? / dt;
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((
                    d,
                    DefectWitness {
                        t,
                        u: u.clone(),
                        u_index: ix,
                    },
                ));
            }
        }
    }
    let (d, w) = best.ok_or_else(|| Error::EmptySample {
        what: format!("consistency defect at dt = {dt}"),
    })?;
    Ok((d, w, admissible))
}

/// Defects along the ladder and the trend verdict: consistent when every
/// defect is at roundoff level, or when defects decrease strictly and the
/// last is within tolerance; inconsistent when the last defect exceeds the
/// tolerance and the tail order has stalled below `min_order`.
pub fn consistency_report(
    guard: &RegularFamily,
    method: &Method,
    horizon: f64,
    cloud: &CompactCloud,
    ladder: &Ladder,
    time_points: usize,
    tol: &Tolerances,
) -> Result<ConsistencyReport> {
    let mut rungs = Vec::with_capacity(ladder.len());
    for &dt in ladder.values() {
        let (defect, witness, admissible) =
            consistency_defect(guard, method, horizon, cloud, dt, time_points)?;
        rungs.push(DefectRung {
            dt,
            defect,
            witness,
            admissible,
        });
    }
    let dts: Vec<f64> = rungs.iter().map(|r| r.dt).collect();
    let ds: Vec<f64> = rungs.iter().map(|r| r.defect).collect();
    let fit_order = log_log_slope(&dts, &ds);
    let tail = rungs.len().saturating_sub(3);
    let tail_order = log_log_slope(&dts[tail..], &ds[tail..]);
    let verdict = consistency_verdict(&ds, tail_order, tol);
    Ok(ConsistencyReport {
        rungs,
        fit_order,
        tail_order,
        verdict,
    })
}

fn consistency_verdict(
    defects: &[f64],
    tail_order: Option<f64>,
    tol: &Tolerances,
) -> ConsistencyVerdict {
    if defects.iter().all(|&d| d <= tol.roundoff) {
        return ConsistencyVerdict::Consistent;
    }
    let last = *defects.last().unwrap_or(&f64::INFINITY);
    if defects.len() >= 2 {
        let decreasing = defects.windows(2).all(|w| w[1] < w[0]);
        if decreasing && last <= tol.consistency {
            return ConsistencyVerdict::Consistent;
        }
        if last > tol.consistency && tail_order.is_none_or(|q| q < tol.min_order) {
            return ConsistencyVerdict::Inconsistent;
        }
    }
    ConsistencyVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CapSpec;
    use crate::problems::{build_method, build_problem, ProblemParams};

    #[test]
    fn exact_step_has_no_defect() {
        for name in ["riccati", "linear", "sqrt-drift", "heat", "advection"] {
            let params = ProblemParams::default();
            let p = build_problem(name, &params).unwrap();
            let m = build_method(&p, "exact-step", &params).unwrap();
            let g = RegularFamily::whole_domain(&p);
            let k = crate::problems::list_catalog(&params)
                .unwrap()
                .get(name)
                .unwrap()
                .default_cloud(7)
                .unwrap();
            let (d, _, _) = consistency_defect(&g, &m, 0.5, &k, 0.01, 4).unwrap();
            assert!(d <= 1e-9, "{name}: {d}");
        }
    }

    #[test]
    fn euler_riccati_is_first_order() {
        let params = ProblemParams::default();
        let p = build_problem("riccati", &params).unwrap();
        let m = build_method(&p, "explicit-euler-riccati", &params).unwrap();
        let g = RegularFamily::norm_cap(&p, CapSpec::constant(2.0).unwrap());
        let k = CompactCloud::interval(-1.0, 0.5, 40).unwrap();
        let ladder = Ladder::geometric(0.1, 6).unwrap();
        let rep = consistency_report(&g, &m, 1.0, &k, &ladder, 10, &Tolerances::default()).unwrap();
        for w in rep.rungs.windows(2) {
            let r = w[1].defect / w[0].defect;
            assert!((0.4..=0.6).contains(&r), "{r}");
        }
        assert_eq!(rep.verdict, ConsistencyVerdict::Consistent);
        assert!((rep.fit_order.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn verdict_rules() {
        let tol = Tolerances::default();
        assert_eq!(
            consistency_verdict(&[0.0, 0.0], None, &tol),
            ConsistencyVerdict::Consistent
        );
        assert_eq!(
            consistency_verdict(&[0.5, 0.3, 0.3], Some(0.0), &tol),
            ConsistencyVerdict::Inconsistent
        );
        assert_eq!(
            consistency_verdict(&[0.04, 0.05, 0.01], Some(1.0), &tol),
            ConsistencyVerdict::Inconclusive
        );
    }

    #[test]
    fn empty_when_nothing_admissible() {
        let params = ProblemParams::default();
        let p = build_problem("riccati", &params).unwrap();
        let m = build_method(&p, "explicit-euler-riccati", &params).unwrap();
        let g = RegularFamily::norm_cap(&p, CapSpec::constant(0.1).unwrap());
        let k = CompactCloud::explicit(vec![vec![0.5]]).unwrap();
        assert!(matches!(
            consistency_defect(&g, &m, 1.0, &k, 0.1, 4),
            Err(Error::EmptySample { .. })
        ));
    }
}
