//! One-step schemes of the built-in methods.

use crate::error::Result;
use crate::model::{Problem, Scheme};
use crate::space::State;

/// `u + dt u^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExplicitEulerRiccati;

impl Scheme for ExplicitEulerRiccati {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![u[0] + dt * u[0] * u[0]])
    }
}

/// `(1 + lambda dt) u` componentwise.
#[derive(Debug, Clone, Copy)]
pub struct LinearEuler {
    pub lambda: f64,
}

impl Scheme for LinearEuler {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        let g = 1.0 + self.lambda * dt;
        Ok(u.iter().map(|x| g * x).collect())
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Forward-time centred-space heat step with zero Dirichlet ends. The mesh
/// ratio is `dt / dx^2`.
#[derive(Debug, Clone, Copy)]
pub struct FtcsHeat {
    pub dx: f64,
}

impl FtcsHeat {
    pub fn mesh_ratio(&self, dt: f64) -> f64 {
        dt / (self.dx * self.dx)
    }
}

impl Scheme for FtcsHeat {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mu = self.mesh_ratio(dt);
        let n = u.len();
        Ok((0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { u[i - 1] };
                let right = if i + 1 == n { 0.0 } else { u[i + 1] };
                u[i] + mu * (right - 2.0 * u[i] + left)
            })
            .collect())
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// Lax-Friedrichs step for `u_t + a u_x = 0` with periodic ends.
///
/// The averaging term does not vanish as `dt -> 0`, so the scheme is not
/// continuous at `dt = 0`; `Method::step` still returns `u` there.
#[derive(Debug, Clone, Copy)]
pub struct LaxFriedrichs {
    pub velocity: f64,
    pub dx: f64,
}

impl Scheme for LaxFriedrichs {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        let n = u.len();
        let c = self.velocity * dt / (2.0 * self.dx);
        Ok((0..n)
            .map(|i| {
                let left = u[(i + n - 1) % n];
                let right = u[(i + 1) % n];
                0.5 * (right + left) - c * (right - left)
            })
            .collect())
    }

    fn is_linear(&self) -> bool {
        true
    }
}

/// `u + dt sqrt(|u|)`: Hölder-1/2 drift, not Lipschitz at zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqrtDrift;

impl Scheme for SqrtDrift {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![u[0] + dt * u[0].abs().sqrt()])
    }
}

/// `C_dt = E(dt)` of the wrapped problem.
#[derive(Debug, Clone)]
pub struct ExactStep {
    pub problem: Problem,
}

impl Scheme for ExactStep {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        let u = State::new(u.to_vec())?;
        Ok(self.problem.exact(dt, &u)?.into_coords())
    }

    fn is_linear(&self) -> bool {
        self.problem.is_linear()
    }
}
