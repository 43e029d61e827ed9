//! Finite point clouds standing in for compact subsets of the state space.
//! Every supremum over a compact becomes a maximum over a cloud.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::space::{NormSpec, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CloudGenerator {
    /// Tensor grid with `per_axis` points per coordinate, endpoints included.
    GridInBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        per_axis: usize,
    },
    /// `count` points uniform in the euclidean ball.
    Ball {
        center: Vec<f64>,
        radius: f64,
        count: usize,
    },
    ExplicitList {
        points: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactCloud {
    points: Vec<State>,
    generator: CloudGenerator,
    seed: u64,
}

impl CompactCloud {
    pub fn generate(generator: CloudGenerator, seed: u64) -> Result<Self> {
        let points = match &generator {
            CloudGenerator::GridInBox {
                lower,
                upper,
                per_axis,
            } => grid_points(lower, upper, *per_axis)?,
            CloudGenerator::Ball {
                center,
                radius,
                count,
            } => ball_points(center, *radius, *count, seed)?,
            CloudGenerator::ExplicitList { points } => {
                if points.is_empty() {
                    return Err(Error::contract(
                        "explicit cloud must list at least one point",
                    ));
                }
                let dim = points[0].len();
                points
                    .iter()
                    .map(|p| {
                        if p.len() != dim {
                            return Err(Error::DimensionMismatch {
                                expected: dim,
                                found: p.len(),
                            });
                        }
                        State::new(p.clone())
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(CompactCloud {
            points,
            generator,
            seed,
        })
    }

    /// Uniform 1-D grid on `[lower, upper]` with `count` points.
    pub fn interval(lower: f64, upper: f64, count: usize) -> Result<Self> {
        CompactCloud::generate(
            CloudGenerator::GridInBox {
                lower: vec![lower],
                upper: vec![upper],
                per_axis: count,
            },
            0,
        )
    }

    pub fn explicit(points: Vec<Vec<f64>>) -> Result<Self> {
        CompactCloud::generate(CloudGenerator::ExplicitList { points }, 0)
    }

    pub fn from_states(points: Vec<State>) -> Result<Self> {
        CompactCloud::explicit(points.into_iter().map(State::into_coords).collect())
    }

    pub fn points(&self) -> &[State] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn generator(&self) -> &CloudGenerator {
        &self.generator
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Short content hash of the point coordinates (bit patterns, in order).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.points {
            for c in p.coords() {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Sorted distances between all unordered pairs of distinct indices.
    pub fn pair_distances(&self, norm: &NormSpec) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.len() * self.len().saturating_sub(1) / 2);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d.push(norm.dist_of(self.points[i].coords(), self.points[j].coords()));
            }
        }
        d.sort_by(f64::total_cmp);
        d
    }

    pub fn diameter(&self, norm: &NormSpec) -> f64 {
        self.pair_distances(norm).last().copied().unwrap_or(0.0)
    }

    pub fn median_distance(&self, norm: &NormSpec) -> f64 {
        let d: Vec<f64> = self
            .pair_distances(norm)
            .into_iter()
            .filter(|&x| x > 0.0)
            .collect();
        if d.is_empty() {
            0.0
        } else {
            d[(d.len() - 1) / 2]
        }
    }

    /// Smallest nonzero separation, or 0 for clouds without distinct pairs.
    pub fn min_separation(&self, norm: &NormSpec) -> f64 {
        self.pair_distances(norm)
            .into_iter()
            .find(|&x| x > 0.0)
            .unwrap_or(0.0)
    }
}

fn grid_points(lower: &[f64], upper: &[f64], per_axis: usize) -> Result<Vec<State>> {
    if lower.is_empty() {
        return Err(Error::contract("grid dimension must be positive"));
    }
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            expected: lower.len(),
            found: upper.len(),
        });
    }
    if per_axis == 0 {
        return Err(Error::contract("grid needs at least one point per axis"));
    }
    if lower
        .iter()
        .zip(upper)
        .any(|(a, b)| a.partial_cmp(b).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::contract("grid bounds must satisfy lower <= upper"));
    }
    let dim = lower.len();
    let total = per_axis
        .checked_pow(dim as u32)
        .filter(|&n| n <= 1 << 22)
        .ok_or_else(|| Error::contract("grid has too many points"))?;
    let axis = |k: usize, i: usize| {
        if per_axis == 1 {
            0.5 * (lower[k] + upper[k])
        } else {
            lower[k] + (upper[k] - lower[k]) * i as f64 / (per_axis - 1) as f64
        }
    };
    (0..total)
        .map(|mut flat| {
            let coords = (0..dim)
                .map(|k| {
                    let i = flat % per_axis;
                    flat /= per_axis;
                    axis(k, i)
                })
                .collect();
            State::new(coords)
        })
        .collect()
}

fn ball_points(center: &[f64], radius: f64, count: usize, seed: u64) -> Result<Vec<State>> {
    if center.is_empty() {
        return Err(Error::contract("ball dimension must be positive"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::contract("ball radius must be positive"));
    }
    if count == 0 {
        return Err(Error::contract("ball needs at least one point"));
    }
    let dim = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir: Vec<f64> = (0..dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let len = dir
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
            State::new(
                center
                    .iter()
                    .zip(&dir)
                    .map(|(c, d)| c + r * d / len)
                    .collect(),
            )
        })
        .collect()
}
