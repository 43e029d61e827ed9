//! Least-squares fits used by the verdict rules.

use serde::{Deserialize, Serialize};

/// Ordinary least squares `y = intercept + slope x`. `None` for fewer than
/// two points or a degenerate abscissa.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x`, skipping nonpositive entries.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// Model `L(rho) = plateau + amplitude * rho^-exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub plateau: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual of `ln L` against the model.
    pub rms_log_residual: f64,
}

const EXPONENT_MAX: f64 = 4.0;
const SCAN_STEP: f64 = 0.01;

/// Fits the power-law model in log space. For a fixed exponent the plateau
/// and amplitude solve a weighted linear problem (weights `1/L^2`), so only
/// the exponent is searched: a coarse scan over `[0, 4]` followed by
/// golden-section refinement.
pub fn fit_power_law(rho: &[f64], values: &[f64]) -> Option<PowerLawFit> {
    let n = rho.len().min(values.len());
    if n < 3
        || rho[..n]
            .iter()
            .chain(&values[..n])
            .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return None;
    }
    let rho = &rho[..n];
    let values = &values[..n];

    let steps = (EXPONENT_MAX / SCAN_STEP).round() as usize;
    let (mut best_q, mut best_r) = (0.0, f64::INFINITY);
    for k in 0..=steps {
        let q = k as f64 * SCAN_STEP;
        let r = profile(rho, values, q).1;
        if r < best_r {
            best_r = r;
            best_q = q;
        }
    }
    if !best_r.is_finite() {
        return None;
    }

    let (mut lo, mut hi) = (
        (best_q - SCAN_STEP).max(0.0),
        (best_q + SCAN_STEP).min(EXPONENT_MAX),
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let mut ra = profile(rho, values, a).1;
    let mut rb = profile(rho, values, b).1;
    for _ in 0..200 {
        if ra <= rb {
            hi = b;
            b = a;
            rb = ra;
            a = hi - phi * (hi - lo);
            ra = profile(rho, values, a).1;
        } else {
            lo = a;
            a = b;
            ra = rb;
            b = lo + phi * (hi - lo);
            rb = profile(rho, values, b).1;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let (q, r) = if ra <= rb { (a, ra) } else { (b, rb) };
    let (q, r) = if r <= best_r {
        (q, r)
    } else {
        (best_q, best_r)
    };
    let ((plateau, amplitude), _) = profile(rho, values, q);
    Some(PowerLawFit {
        plateau,
        amplitude,
        exponent: q,
        rms_log_residual: (r / n as f64).sqrt(),
    })
}

/// Best `(plateau, amplitude)` for exponent `q` and the resulting sum of
/// squared log residuals (infinite when the model goes nonpositive).
fn profile(rho: &[f64], values: &[f64], q: f64) -> ((f64, f64), f64) {
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swxx = 0.0;
    let mut swy = 0.0;
    let mut swxy = 0.0;
    for (r, l) in rho.iter().zip(values) {
        let x = r.powf(-q);
        let w = 1.0 / (l * l);
        sw += w;
        swx += w * x;
        swxx += w * x * x;
        swy += w * l;
        swxy += w * x * l;
    }
    // Nonnegative least squares in two unknowns: the unconstrained optimum
    // if feasible, else the better of the two single-parameter fits.
    let det = sw * swxx - swx * swx;
    let free = (det > 1e-12 * sw * swxx)
        .then(|| {
            (
                (swxx * swy - swx * swxy) / det,
                (sw * swxy - swx * swy) / det,
            )
        })
        .filter(|&(a, b)| a >= 0.0 && b >= 0.0);
    let (a, b) = free.unwrap_or_else(|| {
        let plateau_only = (swy / sw, 0.0);
        let amplitude_only = (
            0.0,
            if swxx > 0.0 {
                (swxy / swxx).max(0.0)
            } else {
                0.0
            },
        );
        let sse = |(a, b): (f64, f64)| -> f64 {
            rho.iter()
                .zip(values)
                .map(|(r, l)| {
                    let d = (a + b * r.powf(-q) - l) / l;
                    d * d
                })
                .sum()
        };
        if sse(amplitude_only) < sse(plateau_only) {
            amplitude_only
        } else {
            plateau_only
        }
    });
    let mut ss = 0.0;
    for (r, l) in rho.iter().zip(values) {
        let m = a + b * r.powf(-q);
        if m <= 0.0 {
            return ((a, b), f64::INFINITY);
        }
        let d = l.ln() - m.ln();
        ss += d * d;
    }
    ((a, b), ss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-14 && (c - 2.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn log_log_slope_of_a_power() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_synthetic_inverse_square_root() {
        let rho: Vec<f64> = (0..8).map(|k| 0.5 * 0.5f64.powi(k)).collect();
        let vals: Vec<f64> = rho.iter().map(|r| 1.0 + r.powf(-0.5)).collect();
        let fit = fit_power_law(&rho, &vals).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.plateau - 1.0).abs() < 1e-5);
        assert!((fit.amplitude - 1.0).abs() < 1e-5);
        assert!(fit.rms_log_residual < 1e-8);
    }

    #[test]
    fn constant_curve_fits_with_no_amplitude() {
        let rho: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
        let vals = vec![2.5; 8];
        let fit = fit_power_law(&rho, &vals).unwrap();
        assert!(fit.amplitude.abs() < 1e-9 || fit.exponent.abs() < 1e-9);
        assert!(fit.rms_log_residual < 1e-12);
    }

    #[test]
    fn rejects_short_or_nonpositive_input() {
        assert!(fit_power_law(&[1.0, 0.5], &[1.0, 2.0]).is_none());
        assert!(fit_power_law(&[1.0, 0.5, 0.25], &[1.0, 0.0, 2.0]).is_none());
    }
}
