//! Exact semigroups of the built-in problems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::Flow;

/// `u' = u^2`, solved by `u / (1 - u t)` on `X_t = (-inf, 1/t)`.
///
/// Membership keeps a safety margin of `1e-6 (1 + |1/t|)` below the blow-up
/// boundary so that floating-point evaluation never straddles it.
#[derive(Debug, Clone, Copy, Default)]
pub struct RiccatiFlow;

impl RiccatiFlow {
    pub const MARGIN: f64 = 1e-6;

    pub fn boundary(t: f64) -> f64 {
        if t == 0.0 {
            f64::INFINITY
        } else {
            let inv = 1.0 / t;
            inv - Self::MARGIN * (1.0 + inv.abs())
        }
    }
}

impl Flow for RiccatiFlow {
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64> {
        vec![u[0] / (1.0 - u[0] * t)]
    }

    fn in_domain(&self, t: f64, u: &[f64]) -> bool {
        u[0] < Self::boundary(t)
    }
}

/// `u' = lambda u` componentwise.
#[derive(Debug, Clone, Copy)]
pub struct LinearFlow {
    pub lambda: f64,
}

impl Flow for LinearFlow {
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let g = (self.lambda * t).exp();
        u.iter().map(|x| g * x).collect()
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Heat equation on `[0, 1]` with homogeneous Dirichlet ends, sampled on
/// `n` interior points. Each discrete sine mode `k` decays with the continuum
/// rate `exp(-pi^2 k^2 t)`.
#[derive(Debug, Clone)]
pub struct HeatFlow {
    n: usize,
    /// `sines[k][i] = sin((k+1) pi x_i)`.
    sines: Vec<Vec<f64>>,
}

impl HeatFlow {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract(
                "heat grid needs at least one interior point",
            ));
        }
        let dx = 1.0 / (n + 1) as f64;
        let sines = (1..=n)
            .map(|k| {
                (1..=n)
                    .map(|i| (k as f64 * PI * i as f64 * dx).sin())
                    .collect()
            })
            .collect();
        Ok(HeatFlow { n, sines })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// Sine coefficients `c_k` with `u_i = sum_k c_k sin(k pi x_i)`.
    pub fn sine_coefficients(&self, u: &[f64]) -> Vec<f64> {
        let scale = 2.0 * self.dx();
        self.sines
            .iter()
            .map(|row| scale * row.iter().zip(u).map(|(s, x)| s * x).sum::<f64>())
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, c) in self.sines.iter().zip(coeffs) {
            for (o, s) in out.iter_mut().zip(row) {
                *o += c * s;
            }
        }
        out
    }
}

impl Flow for HeatFlow {
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut c = self.sine_coefficients(u);
        for (k, ck) in c.iter_mut().enumerate() {
            let wave = (k + 1) as f64 * PI;
            *ck *= (-wave * wave * t).exp();
        }
        self.synthesize(&c)
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Periodic advection `u_t + a u_x = 0` on `n` points of `[0, 1)`. The exact
/// map shifts the trigonometric interpolant by `a t`. `n` must be odd so the
/// interpolant has no Nyquist mode.
#[derive(Debug, Clone)]
pub struct AdvectionFlow {
    n: usize,
    velocity: f64,
}

impl AdvectionFlow {
    pub fn new(n: usize, velocity: f64) -> Result<Self> {
        if n == 0 || n.is_multiple_of(2) {
            return Err(Error::contract("advection grid size must be odd"));
        }
        if !velocity.is_finite() {
            return Err(Error::contract("advection velocity must be finite"));
        }
        Ok(AdvectionFlow { n, velocity })
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }
}

impl Flow for AdvectionFlow {
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        let half = (n - 1) / 2;
        // DFT coefficients for k = 0..=half.
        let coeffs: Vec<(f64, f64)> = (0..=half)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, x) in u.iter().enumerate() {
                    let phase = 2.0 * PI * ((k * j) % n) as f64 / nf;
                    re += x * phase.cos();
                    im -= x * phase.sin();
                }
                (re / nf, im / nf)
            })
            .collect();
        let shift = self.velocity * t;
        (0..n)
            .map(|j| {
                let x = j as f64 / nf - shift;
                let mut v = coeffs[0].0;
                for (k, &(re, im)) in coeffs.iter().enumerate().skip(1) {
                    let phase = 2.0 * PI * k as f64 * x;
                    v += 2.0 * (re * phase.cos() - im * phase.sin());
                }
                v
            })
            .collect()
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Exact flow of `u' = sqrt(|u|)`. Solutions starting at zero take the
/// growing branch `t^2 / 4`; negative states rise to zero in time
/// `2 sqrt(|u|)` and then follow that branch.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqrtDriftFlow;

impl SqrtDriftFlow {
    pub fn value(t: f64, u: f64) -> f64 {
        if u >= 0.0 {
            let r = u.sqrt() + 0.5 * t;
            r * r
        } else {
            let root = (-u).sqrt();
            let arrival = 2.0 * root;
            if t <= arrival {
                let r = root - 0.5 * t;
                -(r * r)
            } else {
                let r = 0.5 * (t - arrival);
                r * r
            }
        }
    }
}

impl Flow for SqrtDriftFlow {
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64> {
        vec![Self::value(t, u[0])]
    }
}
