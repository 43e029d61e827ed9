use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::model::RegularFamily;

use super::time_grid;

/// Samples `(delta, omega(delta))` of the uniform time-continuity modulus of
/// the flow over a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityModulus {
    pub samples: Vec<(f64, f64)>,
}

impl ContinuityModulus {
    /// `omega` at the smallest sampled `delta' >= delta`; `None` past the
    /// last sample.
    pub fn at(&self, delta: f64) -> Option<f64> {
        if delta <= 0.0 {
            return Some(0.0);
        }
        self.samples
            .iter()
            .find(|(d, _)| *d >= delta)
            .map(|(_, w)| *w)
    }
}

const SUBDIVISIONS: usize = 4;

/// `omega(delta) = max |E(t)u - E(s)u|` over `u` in the cloud and
/// `t, s` in `[0, horizon]` with `|t - s| <= delta` and `u` in `X'_max(t,s)`.
/// Candidate pairs are grid instants within `delta` of each other together
/// with offsets `s = t + delta j / 4`. A running maximum keeps the samples
/// nondecreasing.
pub fn continuity_modulus(
    guard: &RegularFamily,
    horizon: f64,
    cloud: &CompactCloud,
    deltas: &[f64],
    time_points: usize,
) -> Result<ContinuityModulus> {
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::contract("modulus offsets must be nonnegative"));
    }
    if deltas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::contract("modulus offsets must be ascending"));
    }
    let p = guard.problem();
    let norm = p.norm();
    let times = time_grid(horizon, time_points);
    let fits = |s: f64| s <= horizon * (1.0 + 1e-12);

    let mut samples = Vec::with_capacity(deltas.len());
    let mut running = 0.0f64;
    for &delta in deltas {
        let mut omega = 0.0f64;
        if delta > 0.0 {
            for u in cloud.points() {
                for (a, &t) in times.iter().enumerate() {
                    let mut partners: Vec<f64> = times[a + 1..]
                        .iter()
                        .copied()
                        .filter(|s| s - t <= delta * (1.0 + 1e-12))
                        .collect();
                    partners.extend(
                        (1..=SUBDIVISIONS)
                            .map(|j| t + delta * j as f64 / SUBDIVISIONS as f64)
                            .filter(|&s| fits(s)),
                    );
                    for s in partners {
                        if !guard.contains(s, u) {
                            continue;
                        }
                        let (Ok(a), Ok(b)) = (p.exact(t, u), p.exact(s, u)) else {
                            continue;
                        };
                        omega = omega.max(norm.distance(&a, &b)?);
                    }
                }
            }
        }
        running = running.max(omega);
        samples.push((delta, running));
    }
    Ok(ContinuityModulus { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{build_problem, ProblemParams};

    #[test]
    fn riccati_single_point() {
        let p = build_problem("riccati", &ProblemParams::default()).unwrap();
        let g = RegularFamily::whole_domain(&p);
        let k = CompactCloud::explicit(vec![vec![0.5]]).unwrap();
        let m = continuity_modulus(&g, 0.5, &k, &[0.0, 0.05, 0.1], 10).unwrap();
        assert_eq!(m.samples[0], (0.0, 0.0));
        let expect = 0.5 / (1.0 - 0.25) - 0.5 / (1.0 - 0.2);
        assert!((m.samples[2].1 - expect).abs() < 1e-12, "{:?}", m.samples);
        assert!(m.samples.windows(2).all(|w| w[1].1 >= w[0].1));
        assert_eq!(m.at(0.07), Some(m.samples[2].1));
        assert_eq!(m.at(0.2), None);
    }

    #[test]
    fn rejects_descending_offsets() {
        let p = build_problem("linear", &ProblemParams::default()).unwrap();
        let g = RegularFamily::whole_domain(&p);
        let k = CompactCloud::explicit(vec![vec![0.5]]).unwrap();
        assert!(continuity_modulus(&g, 1.0, &k, &[0.2, 0.1], 4).is_err());
    }
}
