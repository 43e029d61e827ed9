use std::collections::HashSet;

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::model::{Method, RegularFamily};
use crate::space::State;

use super::max_steps;

/// `C_dt^n u`, checking after step `p` that the iterate lies in
/// `X'_{(n-p) dt}` of the guard.
pub fn iterate(
    method: &Method,
    dt: f64,
    n: usize,
    u: &State,
    guard: &RegularFamily,
    horizon: f64,
) -> Result<State> {
    if u.dim() != method.dim() {
        return Err(Error::DimensionMismatch {
            expected: method.dim(),
            found: u.dim(),
        });
    }
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::contract(format!(
            "step size must be finite and nonnegative, got {dt}"
        )));
    }
    if n > 0 && dt > 0.0 && n > max_steps(horizon, dt) {
        return Err(Error::contract(format!(
            "n dt = {} exceeds the horizon T = {horizon}",
            n as f64 * dt
        )));
    }
    let t0 = n as f64 * dt;
    if !guard.contains(t0, u) {
        return Err(Error::DomainExit {
            t: t0,
            step: Some(0),
            context: format!("initial state is outside X'_t ({})", guard.description()),
        });
    }
    let mut w = u.coords().to_vec();
    for p in 1..=n {
        w = method.step_raw(dt, &w).map_err(|e| e.with_step(p))?;
        let t = (n - p) as f64 * dt;
        if !guard.contains_raw(t, &w) {
            return Err(Error::DomainExit {
                t,
                step: Some(p),
                context: format!("iterate left X'_t ({})", guard.description()),
            });
        }
    }
    State::new(w)
}

/// Iterates `C_dt^p u` for `p = 0..=n_max` with the validity bound used by
/// the estimators: the iterate at `n` counts only if `u` lies in
/// `X'_{n dt}` and every earlier iterate `w_p` lies in `X'_{(n-p) dt}`.
#[derive(Debug, Clone)]
pub(crate) struct GuardedTrajectory {
    /// `states[p] = C^p u`; at least `valid + 1` entries when `valid` is `Some`.
    pub states: Vec<Vec<f64>>,
    /// Largest valid step count, `None` when even `u` itself is outside `X'_0`.
    pub valid: Option<usize>,
    /// Step at which the method produced a non-finite value within the valid range.
    pub blowup: Option<usize>,
}

impl GuardedTrajectory {
    pub fn valid_at(&self, n: usize) -> bool {
        self.valid.is_some_and(|v| n <= v)
    }
}

/// Largest `k <= k_max` with `w` in `X'_{k dt}`, by bisection on nesting.
fn deepest_slice(guard: &RegularFamily, dt: f64, k_max: usize, w: &[f64]) -> Option<usize> {
    if !guard.contains_raw(0.0, w) {
        return None;
    }
    if guard.contains_raw(k_max as f64 * dt, w) {
        return Some(k_max);
    }
    let (mut lo, mut hi) = (0usize, k_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if guard.contains_raw(mid as f64 * dt, w) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

pub(crate) fn guarded_trajectory(
    method: &Method,
    guard: &RegularFamily,
    dt: f64,
    n_max: usize,
    u: &[f64],
) -> GuardedTrajectory {
    let mut states = vec![u.to_vec()];
    let Some(mut lim) = deepest_slice(guard, dt, n_max, u) else {
        return GuardedTrajectory {
            states,
            valid: None,
            blowup: None,
        };
    };
    let mut blowup = None;
    let mut p = 1;
    while p <= lim {
        let next = match method.step_raw(dt, &states[p - 1]) {
            Ok(w) => w,
            Err(Error::BlowupDetected { .. }) => {
                blowup = Some(p);
                lim = p - 1;
                break;
            }
            Err(_) => {
                lim = p - 1;
                break;
            }
        };
        match deepest_slice(guard, dt, n_max - p, &next) {
            Some(k) => lim = lim.min(p + k),
            None => lim = lim.min(p - 1),
        }
        if p <= lim {
            states.push(next);
        }
        p += 1;
    }
    states.truncate(lim + 1);
    GuardedTrajectory {
        states,
        valid: Some(lim),
        blowup,
    }
}

/// Sampled trajectory points `E(t)u`, the computable stand-in for the
/// compact swept out by `K` under the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryCloud {
    pub points: Vec<State>,
    /// `(t, u)` pairs left out because `u` is not in `X'_t` or the
    /// evaluation failed.
    pub skipped: usize,
}

impl TrajectoryCloud {
    pub fn into_cloud(self) -> Result<CompactCloud> {
        if self.points.is_empty() {
            return Err(Error::EmptySample {
                what: "trajectory cloud".into(),
            });
        }
        CompactCloud::from_states(self.points)
    }
}

/// `{E(t)u : t in times, u in K with u in X'_t}`, bitwise duplicates removed,
/// in order of first appearance (time-major).
pub fn trajectory_cloud(
    guard: &RegularFamily,
    cloud: &CompactCloud,
    times: &[f64],
) -> Result<TrajectoryCloud> {
    let p = guard.problem();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut points = Vec::new();
    let mut skipped = 0;
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::contract(format!(
                "trajectory times must be nonnegative, got {t}"
            )));
        }
        for u in cloud.points() {
            if !guard.contains(t, u) {
                skipped += 1;
                continue;
            }
            match p.exact(t, u) {
                Ok(w) => {
                    let key: Vec<u64> = w.coords().iter().map(|c| c.to_bits()).collect();
                    if seen.insert(key) {
                        points.push(w);
                    }
                }
                Err(_) => skipped += 1,
            }
        }
    }
    Ok(TrajectoryCloud { points, skipped })
}
