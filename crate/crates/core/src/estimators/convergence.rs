use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::model::{Method, RegularFamily};
use crate::space::State;

use super::fit::log_log_slope;
use super::iterate::guarded_trajectory;
use super::{max_steps, time_grid, ConvergenceVerdict, Ladder, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorWitness {
    pub t: f64,
    pub n: usize,
    pub u: State,
    pub u_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRung {
    pub dt: f64,
    pub theta: f64,
    /// Largest finite error; meaningless when `blowups > 0`.
    pub error: f64,
    pub witness: ErrorWitness,
    pub admissible: usize,
    /// Largest `|t - n dt|` among the admissible comparisons.
    pub max_mismatch: f64,
    /// Requested iterates that overflowed before reaching their step count.
    pub blowups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rungs: Vec<ErrorRung>,
    pub fit_order: Option<f64>,
    pub tail_order: Option<f64>,
    /// Final error when refinement has stalled above roundoff.
    pub plateau: Option<f64>,
    pub verdict: ConvergenceVerdict,
}

/// Step counts `n <= n_max` with `|t - n dt| <= theta`.
fn matching_steps(t: f64, dt: f64, theta: f64, n_max: usize) -> impl Iterator<Item = usize> {
    let slack = 1e-12 * t.abs().max(1.0);
    let lo = ((t - theta) / dt - 1e-9).ceil().max(0.0) as usize;
    let hi = (((t + theta) / dt + 1e-9).floor().max(0.0) as usize).min(n_max);
    (lo..=hi).filter(move |&n| (t - n as f64 * dt).abs() <= theta + slack)
}

/// `max |E(t)u - C_dt^n u|` over `t` on the time grid, `u` in the cloud and
/// `n dt <= horizon` within `theta` of `t`, with `u` in `X'_t` and the
/// iterate admissible.
pub fn convergence_error(
    guard: &RegularFamily,
    method: &Method,
    horizon: f64,
    cloud: &CompactCloud,
    dt: f64,
    theta: f64,
    time_points: usize,
) -> Result<ErrorRung> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::contract(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::contract(format!(
            "theta must be nonnegative, got {theta}"
        )));
    }
    let p = guard.problem();
    let norm = p.norm();
    let n_max = max_steps(horizon, dt);
    let times = time_grid(horizon, time_points);
    let mut best: Option<(f64, ErrorWitness)> = None;
    let mut admissible = 0;
    let mut max_mismatch = 0.0f64;
    let mut blowups = 0;
    for (ix, u) in cloud.points().iter().enumerate() {
        let traj = guarded_trajectory(method, guard, dt, n_max, u.coords());
        for &t in &times {
            if !guard.contains(t, u) {
                continue;
            }
            let Ok(exact) = p.exact(t, u) else { continue };
            for n in matching_steps(t, dt, theta, n_max) {
                if traj.blowup.is_some_and(|b| b <= n) {
                    blowups += 1;
                    continue;
                }
                if !traj.valid_at(n) {
                    continue;
                }
                let e = norm.dist_of(exact.coords(), &traj.states[n]);
                if !e.is_finite() {
                    blowups += 1;
                    continue;
                }
                admissible += 1;
                max_mismatch = max_mismatch.max((t - n as f64 * dt).abs());
                if best.as_ref().is_none_or(|(b, _)| e > *b) {
                    best = Some((
                        e,
                        ErrorWitness {
                            t,
                            n,
                            u: u.clone(),
                            u_index: ix,
                        },
                    ));
                }
            }
        }
    }
    match best {
        Some((error, witness)) => Ok(ErrorRung {
            dt,
            theta,
            error,
            witness,
            admissible,
            max_mismatch,
            blowups,
        }),
        None if blowups > 0 => Ok(ErrorRung {
            dt,
            theta,
            error: f64::MAX,
            witness: ErrorWitness {
                t: horizon,
                n: n_max,
                u: cloud.points()[0].clone(),
                u_index: 0,
            },
            admissible,
            max_mismatch,
            blowups,
        }),
        None => Err(Error::EmptySample {
            what: format!("convergence error at dt = {dt}"),
        }),
    }
}

/// Errors along the ladder with `theta = theta_factor * dt` per rung.
///
/// Divergent when a rung overflows, reaches `divergence_cap`, or the error
/// grows under refinement; convergent when errors are at roundoff level or
/// nonincreasing down to the tolerance; inconclusive otherwise.
#[allow(clippy::too_many_arguments)]
pub fn convergence_report(
    guard: &RegularFamily,
    method: &Method,
    horizon: f64,
    cloud: &CompactCloud,
    ladder: &Ladder,
    theta_factor: f64,
    time_points: usize,
    tol: &Tolerances,
) -> Result<ConvergenceReport> {
    let mut rungs = Vec::with_capacity(ladder.len());
    for &dt in ladder.values() {
        rungs.push(convergence_error(
            guard,
            method,
            horizon,
            cloud,
            dt,
            theta_factor * dt,
            time_points,
        )?);
    }
    let dts: Vec<f64> = rungs.iter().map(|r| r.dt).collect();
    let es: Vec<f64> = rungs.iter().map(|r| r.error).collect();
    let fit_order = log_log_slope(&dts, &es);
    let tail = rungs.len().saturating_sub(3);
    let tail_order = log_log_slope(&dts[tail..], &es[tail..]);
    let last = *es.last().unwrap_or(&0.0);
    let plateau = tail_order
        .filter(|q| q.abs() < tol.min_order && last > tol.roundoff)
        .map(|_| last);

    let diverged = rungs
        .iter()
        .any(|r| r.blowups > 0 || r.error >= tol.divergence_cap);
    let growing = tail_order.is_some_and(|q| q < -tol.min_order) && last > tol.convergence;
    let verdict = if diverged || growing {
        ConvergenceVerdict::Divergent
    } else if es.iter().all(|&e| e <= tol.roundoff)
        || es
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + tol.roundoff)
            && last <= tol.convergence
    {
        ConvergenceVerdict::Convergent
    } else {
        ConvergenceVerdict::Inconclusive
    };
    Ok(ConvergenceReport {
        rungs,
        fit_order,
        tail_order,
        plateau,
        verdict,
    })
}
