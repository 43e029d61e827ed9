use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::model::{Method, RegularFamily};
use crate::space::State;

use super::fit::linear_fit;
use super::iterate::{guarded_trajectory, GuardedTrajectory};
use super::{max_steps, Ladder, StabilityVerdict, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityKind {
    /// Pairs with `0 < |v - u| <= rho'`.
    Local,
    /// Pairs with `|v - u| >= rho`.
    Distant,
    Full,
}

/// Pair and iterate realizing a stability constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub u: State,
    pub v: State,
    pub u_index: usize,
    pub v_index: usize,
    pub n: usize,
    pub dt: f64,
    /// Index of `dt` in the step ladder.
    pub rung: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub kind: StabilityKind,
    pub constant: f64,
    pub threshold: Option<f64>,
    pub witness: Witness,
    /// Distinct-point pairs passing the gate with at least one admissible iterate.
    pub pairs_evaluated: usize,
    /// Pairs passing the gate but excluded by the regular family at every step count.
    pub skipped_pairs: usize,
    /// Pairs of coincident points, never divided by.
    pub duplicate_pairs: usize,
    /// Ratios evaluated across all admissible pairs, rungs and step counts.
    pub evaluations: u64,
    /// Trajectories that produced a non-finite value inside the horizon.
    pub blowups: usize,
    pub horizon: f64,
    /// `exp` of the least-squares slope of `ln ratio` against `n` over the
    /// later half of the witness trajectory.
    pub growth_factor: Option<f64>,
}

/// Running maximum for one unordered pair `(i, j)`, `i < j`, across the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub d0: f64,
    /// Best ratio seen, `None` until an admissible iterate exists.
    pub best: Option<f64>,
    /// Earliest `(rung, n)` attaining `best`.
    pub rung: usize,
    pub n: usize,
    pub evaluations: u64,
}

/// All pairwise ratios `|C^n v - C^n u| / |v - u|` over a cloud and step
/// ladder, computed once and then filtered by distance for the local,
/// distant and full constants.
#[derive(Debug, Clone)]
pub struct PairSweep {
    method: Method,
    guard: RegularFamily,
    horizon: f64,
    cloud: CompactCloud,
    ladder: Ladder,
    records: Vec<PairRecord>,
    duplicates: usize,
    blowups: usize,
}

impl PairSweep {
    /// Runs the sweep. `workers` bounds the thread count when the
    /// `parallel` feature is enabled and is ignored otherwise; the result
    /// does not depend on it.
    pub fn run(
        method: &Method,
        guard: &RegularFamily,
        horizon: f64,
        cloud: &CompactCloud,
        ladder: &Ladder,
        workers: usize,
    ) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::contract(format!(
                "horizon must be nonnegative, got {horizon}"
            )));
        }
        if ladder.is_empty() {
            return Err(Error::contract("step ladder is empty"));
        }
        if cloud.dim() != method.dim() {
            return Err(Error::DimensionMismatch {
                expected: method.dim(),
                found: cloud.dim(),
            });
        }
        let norm = *guard.problem().norm();
        let pts = cloud.points();
        let mut records = Vec::new();
        let mut duplicates = 0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d0 = norm.dist_of(pts[i].coords(), pts[j].coords());
                if d0 == 0.0 {
                    duplicates += 1;
                    continue;
                }
                records.push(PairRecord {
                    i,
                    j,
                    d0,
                    best: None,
                    rung: 0,
                    n: 0,
                    evaluations: 0,
                });
            }
        }

        let pool = thread_pool(workers)?;
        let mut blowups = 0;
        for (rung, &dt) in ladder.values().iter().enumerate() {
            let n_max = max_steps(horizon, dt);
            let trajectories = pool.map(pts, |u| {
                guarded_trajectory(method, guard, dt, n_max, u.coords())
            });
            blowups += trajectories.iter().filter(|t| t.blowup.is_some()).count();
            pool.for_each(&mut records, |rec| {
                update_pair(rec, &trajectories[rec.i], &trajectories[rec.j], &norm, rung)
            });
        }

        Ok(PairSweep {
            method: method.clone(),
            guard: guard.clone(),
            horizon,
            cloud: cloud.clone(),
            ladder: ladder.clone(),
            records,
            duplicates,
            blowups,
        })
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn local(&self, rho_local: f64) -> Result<StabilityEstimate> {
        if !(rho_local.is_finite() && rho_local > 0.0) {
            return Err(Error::contract("rho' must be positive"));
        }
        self.reduce(StabilityKind::Local, Some(rho_local), |d| d <= rho_local)
    }

    pub fn distant(&self, rho: f64) -> Result<StabilityEstimate> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::contract("rho must be positive"));
        }
        self.reduce(StabilityKind::Distant, Some(rho), |d| d >= rho)
    }

    pub fn full(&self) -> Result<StabilityEstimate> {
        self.reduce(StabilityKind::Full, None, |_| true)
    }

    fn reduce(
        &self,
        kind: StabilityKind,
        threshold: Option<f64>,
        gate: impl Fn(f64) -> bool,
    ) -> Result<StabilityEstimate> {
        let mut best: Option<&PairRecord> = None;
        let mut pairs_evaluated = 0;
        let mut skipped_pairs = 0;
        let mut evaluations = 0;
        for rec in self.records.iter().filter(|r| gate(r.d0)) {
            let Some(ratio) = rec.best else {
                skipped_pairs += 1;
                continue;
            };
            pairs_evaluated += 1;
            evaluations += rec.evaluations;
            let better = match best {
                None => true,
                Some(b) => {
                    let br = b.best.unwrap_or(f64::NEG_INFINITY);
                    ratio > br
                        || (ratio == br
                            && (rec.rung, rec.n, rec.i, rec.j) < (b.rung, b.n, b.i, b.j))
                }
            };
            if better {
                best = Some(rec);
            }
        }
        let Some(rec) = best else {
            let what = match kind {
                StabilityKind::Local => {
                    format!("local stability (rho' = {})", threshold.unwrap_or_default())
                }
                StabilityKind::Distant => format!(
                    "distant stability (rho = {})",
                    threshold.unwrap_or_default()
                ),
                StabilityKind::Full => "stability".to_string(),
            };
            return Err(Error::EmptySample { what });
        };
        let pts = self.cloud.points();
        let dt = self.ladder.values()[rec.rung];
        Ok(StabilityEstimate {
            kind,
            constant: rec.best.unwrap_or_default(),
            threshold,
            witness: Witness {
                u: pts[rec.i].clone(),
                v: pts[rec.j].clone(),
                u_index: rec.i,
                v_index: rec.j,
                n: rec.n,
                dt,
                rung: rec.rung,
            },
            pairs_evaluated,
            skipped_pairs,
            duplicate_pairs: self.duplicates,
            evaluations,
            blowups: self.blowups,
            horizon: self.horizon,
            growth_factor: self.growth_factor(rec.i, rec.j, dt),
        })
    }

    fn growth_factor(&self, i: usize, j: usize, dt: f64) -> Option<f64> {
        let n_max = max_steps(self.horizon, dt);
        let pts = self.cloud.points();
        let a = guarded_trajectory(&self.method, &self.guard, dt, n_max, pts[i].coords());
        let b = guarded_trajectory(&self.method, &self.guard, dt, n_max, pts[j].coords());
        let last = a.valid?.min(b.valid?);
        if last < 2 {
            return None;
        }
        let norm = self.guard.problem().norm();
        let d0 = norm.dist_of(pts[i].coords(), pts[j].coords());
        let (xs, ys): (Vec<f64>, Vec<f64>) = (last / 2..=last)
            .filter_map(|n| {
                let r = norm.dist_of(&a.states[n], &b.states[n]) / d0;
                (r > 0.0 && r.is_finite()).then(|| (n as f64, r.ln()))
            })
            .unzip();
        linear_fit(&xs, &ys).map(|(slope, _)| slope.exp())
    }
}

fn update_pair(
    rec: &mut PairRecord,
    a: &GuardedTrajectory,
    b: &GuardedTrajectory,
    norm: &crate::space::NormSpec,
    rung: usize,
) {
    let (Some(va), Some(vb)) = (a.valid, b.valid) else {
        return;
    };
    for n in 0..=va.min(vb) {
        let r = norm.dist_of(&a.states[n], &b.states[n]) / rec.d0;
        rec.evaluations += 1;
        if rec.best.is_none_or(|b| r > b) {
            rec.best = Some(r);
            rec.rung = rung;
            rec.n = n;
        }
    }
}

#[cfg(feature = "parallel")]
struct Pool(rayon::ThreadPool);

#[cfg(feature = "parallel")]
fn thread_pool(workers: usize) -> Result<Pool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map(Pool)
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))
}

#[cfg(feature = "parallel")]
impl Pool {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        use rayon::prelude::*;
        self.0.install(|| items.par_iter().map(f).collect())
    }

    fn for_each<T: Send>(&self, items: &mut [T], f: impl Fn(&mut T) + Sync + Send) {
        use rayon::prelude::*;
        self.0.install(|| items.par_iter_mut().for_each(f))
    }
}

#[cfg(not(feature = "parallel"))]
struct Pool;

#[cfg(not(feature = "parallel"))]
fn thread_pool(_workers: usize) -> Result<Pool> {
    Ok(Pool)
}

#[cfg(not(feature = "parallel"))]
impl Pool {
    fn map<T, R>(&self, items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
        items.iter().map(f).collect()
    }

    fn for_each<T>(&self, items: &mut [T], f: impl Fn(&mut T)) {
        items.iter_mut().for_each(f)
    }
}

/// `L` over all distinct pairs.
pub fn estimate_stability(
    method: &Method,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    ladder: &Ladder,
    workers: usize,
) -> Result<StabilityEstimate> {
    PairSweep::run(method, guard, horizon, cloud, ladder, workers)?.full()
}

/// `L'` over pairs with `0 < |v - u| <= rho_local`.
pub fn estimate_local_stability(
    method: &Method,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    rho_local: f64,
    ladder: &Ladder,
    workers: usize,
) -> Result<StabilityEstimate> {
    PairSweep::run(method, guard, horizon, cloud, ladder, workers)?.local(rho_local)
}

/// `L''` over pairs with `|v - u| >= rho`.
pub fn estimate_distant_stability(
    method: &Method,
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    rho: f64,
    ladder: &Ladder,
    workers: usize,
) -> Result<StabilityEstimate> {
    PairSweep::run(method, guard, horizon, cloud, ladder, workers)?.distant(rho)
}

/// Inconclusive below `min_pairs` admissible pairs; unstable when the
/// constant reaches `stability_cap` and the witness keeps growing by at
/// least `1 + growth` per step; stable otherwise.
pub fn stability_verdict(estimate: &StabilityEstimate, tol: &Tolerances) -> StabilityVerdict {
    if estimate.pairs_evaluated < tol.min_pairs {
        return StabilityVerdict::Inconclusive;
    }
    let growing = estimate
        .growth_factor
        .is_some_and(|g| g >= 1.0 + tol.growth);
    if estimate.constant >= tol.stability_cap && growing {
        StabilityVerdict::Unstable
    } else {
        StabilityVerdict::Stable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{build_method, build_problem, ProblemParams};

    fn linear(lambda: f64) -> (RegularFamily, Method) {
        let params = ProblemParams {
            lambda,
            ..ProblemParams::default()
        };
        let p = build_problem("linear", &params).unwrap();
        let m = build_method(&p, "linear-euler", &params).unwrap();
        (RegularFamily::whole_domain(&p), m)
    }

    #[test]
    fn linear_euler_constant_is_exact_power() {
        let (g, m) = linear(1.0);
        let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
        let ladder = Ladder::from_values(vec![0.1]).unwrap();
        let est = estimate_stability(&m, &g, 1.0, &k, &ladder, 1).unwrap();
        assert!((est.constant - 1.1f64.powi(10)).abs() < 1e-12);
        assert_eq!(est.witness.n, 10);
        assert_eq!(est.pairs_evaluated, 210);
    }

    #[test]
    fn contracting_map_peaks_at_zero_steps() {
        let (g, m) = linear(-1.0);
        let k = CompactCloud::interval(-1.0, 1.0, 5).unwrap();
        let ladder = Ladder::geometric(0.1, 3).unwrap();
        let est = estimate_stability(&m, &g, 1.0, &k, &ladder, 1).unwrap();
        assert_eq!(est.constant, 1.0);
        assert_eq!((est.witness.rung, est.witness.n), (0, 0));
    }

    #[test]
    fn single_point_is_empty() {
        let (g, m) = linear(1.0);
        let k = CompactCloud::explicit(vec![vec![0.3]]).unwrap();
        let ladder = Ladder::geometric(0.1, 2).unwrap();
        let err = estimate_distant_stability(&m, &g, 1.0, &k, 0.1, &ladder, 1).unwrap_err();
        assert!(matches!(err, Error::EmptySample { .. }));
    }

    #[test]
    fn duplicates_are_skipped() {
        let (g, m) = linear(1.0);
        let k = CompactCloud::explicit(vec![vec![0.3], vec![0.3], vec![0.5]]).unwrap();
        let ladder = Ladder::from_values(vec![0.1]).unwrap();
        let est = estimate_stability(&m, &g, 1.0, &k, &ladder, 1).unwrap();
        assert_eq!(est.duplicate_pairs, 1);
        assert_eq!(est.pairs_evaluated, 2);
    }

    #[test]
    fn partition_and_gates() {
        let p = build_problem("sqrt-drift", &ProblemParams::default()).unwrap();
        let m = build_method(&p, "sqrt-drift", &ProblemParams::default()).unwrap();
        let g = RegularFamily::whole_domain(&p);
        let k = CompactCloud::interval(0.0, 1.0, 33).unwrap();
        let ladder = Ladder::geometric(0.1, 2).unwrap();
        let sweep = PairSweep::run(&m, &g, 1.0, &k, &ladder, 1).unwrap();
        let r = 0.2;
        let full = sweep.full().unwrap();
        let local = sweep.local(r).unwrap();
        let distant = sweep.distant(r).unwrap();
        assert_eq!(full.constant, local.constant.max(distant.constant));
        assert!(
            k.points()[local.witness.v_index].coords()[0]
                - k.points()[local.witness.u_index].coords()[0]
                <= r
        );
        assert!(
            k.points()[distant.witness.v_index].coords()[0]
                - k.points()[distant.witness.u_index].coords()[0]
                >= r
        );
        assert!(local.constant > distant.constant);
    }

    #[test]
    fn verdict_rules() {
        let (g, m) = linear(1.0);
        let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
        let ladder = Ladder::from_values(vec![0.1]).unwrap();
        let mut est = estimate_stability(&m, &g, 1.0, &k, &ladder, 1).unwrap();
        let tol = Tolerances::default();
        assert!((est.growth_factor.unwrap() - 1.1).abs() < 1e-12);
        assert_eq!(stability_verdict(&est, &tol), StabilityVerdict::Stable);
        est.constant = 1e4;
        assert_eq!(stability_verdict(&est, &tol), StabilityVerdict::Unstable);
        est.pairs_evaluated = 3;
        assert_eq!(
            stability_verdict(&est, &tol),
            StabilityVerdict::Inconclusive
        );
    }
}
