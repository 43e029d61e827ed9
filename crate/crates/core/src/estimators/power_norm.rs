use crate::error::{Error, Result};
use crate::model::Method;
use crate::space::{NormKind, NormSpec};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 100_000;

/// Operator norm of `C_dt^n` for a linear method.
///
/// The matrix of `C_dt^n` is assembled from its images of the `dim`
/// canonical basis vectors (`probes` must cover them). The sup and l1 norms
/// are then exact (max row / column sums); the euclidean and weighted-l2
/// norms use power iteration on `A^T A` to relative tolerance `1e-10`.
pub fn linear_power_norm(
    method: &Method,
    norm: &NormSpec,
    dt: f64,
    n: usize,
    probes: usize,
) -> Result<f64> {
    if !method.is_linear() {
        return Err(Error::contract(format!(
            "method {:?} is not declared linear",
            method.name()
        )));
    }
    let dim = method.dim();
    norm.check_dim(dim)?;
    if probes < dim {
        return Err(Error::contract(format!(
            "probe count {probes} is below the dimension {dim}"
        )));
    }
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::contract(format!(
            "step size must be nonnegative, got {dt}"
        )));
    }

    // columns[j] = C^n e_j
    let mut columns = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut w = vec![0.0; dim];
        w[j] = 1.0;
        for p in 1..=n {
            w = method.step_raw(dt, &w).map_err(|e| e.with_step(p))?;
        }
        columns.push(w);
    }
    let entry = |i: usize, j: usize| columns[j][i];

    Ok(match norm.kind {
        NormKind::L1 => columns
            .iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Sup => (0..dim)
            .map(|i| (0..dim).map(|j| entry(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Euclidean | NormKind::WeightedL2 => spectral_norm(&columns),
    })
}

/// Largest singular value of the matrix with the given columns.
fn spectral_norm(columns: &[Vec<f64>]) -> f64 {
    let dim = columns.len();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; dim];
        for (j, c) in columns.iter().enumerate() {
            for i in 0..dim {
                y[i] += c[i] * x[j];
            }
        }
        y
    };
    let apply_t = |y: &[f64]| -> Vec<f64> {
        columns
            .iter()
            .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    };
    let l2 = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut x: Vec<f64> = (0..dim).map(|j| 1.0 + j as f64 / dim as f64).collect();
    let nx = l2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = apply(&x);
        let next_sigma = l2(&y);
        let z = apply_t(&y);
        let nz = l2(&z);
        if nz == 0.0 {
            return next_sigma;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (next_sigma - sigma).abs() <= POWER_TOL * next_sigma {
            return l2(&apply(&x)).max(next_sigma);
        }
        sigma = next_sigma;
    }
    sigma
}
