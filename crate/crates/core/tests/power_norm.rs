use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabgap::estimators::linear_power_norm;
use stabgap::problems::{build_method, build_problem, ProblemParams};
use stabgap::{NormKind, NormSpec};

#[test]
fn scalar_euler_power_norm_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let lambda = rng.random_range(-3.0..3.0);
        let dt = rng.random_range(0.001..0.5);
        let n = rng.random_range(0..40);
        let params = ProblemParams {
            lambda,
            ..ProblemParams::default()
        };
        let p = build_problem("linear", &params).unwrap();
        let m = build_method(&p, "linear-euler", &params).unwrap();
        let want = (1.0 + lambda * dt).abs().powi(n as i32);
        for kind in NormKind::ALL {
            let norm = NormSpec::new(kind, 1).unwrap();
            let got = linear_power_norm(&m, &norm, dt, n, 1).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1.0),
                "lambda {lambda}, dt {dt}, n {n}, {kind:?}: {got} vs {want}"
            );
        }
    }
}

fn ftcs(mu: f64) -> (stabgap::Method, NormSpec, f64, usize) {
    let params = ProblemParams::default();
    let p = build_problem("heat", &params).unwrap();
    let m = build_method(&p, "ftcs-heat", &params).unwrap();
    let n = p.dim();
    let dx = 1.0 / (n + 1) as f64;
    (
        m,
        NormSpec::new(NormKind::Euclidean, n).unwrap(),
        mu * dx * dx,
        n,
    )
}

/// Spectral radius of the symmetric FTCS matrix, from an eigendecomposition.
fn ftcs_spectral_radius(mu: f64, n: usize) -> f64 {
    let a = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - 2.0 * mu
        } else if i.abs_diff(j) == 1 {
            mu
        } else {
            0.0
        }
    });
    a.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0, |m: f64, e| m.max(e.abs()))
}

#[test]
fn ftcs_at_the_mesh_limit_is_nonexpansive() {
    let (m, norm, dt, dim) = ftcs(0.5);
    let got = linear_power_norm(&m, &norm, dt, 100, dim).unwrap();
    assert!(got <= 1.0 + 1e-10, "{got}");
    let oracle = ftcs_spectral_radius(0.5, dim).powi(100);
    assert!((got - oracle).abs() <= 1e-8 * oracle, "{got} vs {oracle}");
}

#[test]
fn ftcs_above_the_mesh_limit_grows_geometrically() {
    let (m, norm, dt, dim) = ftcs(0.6);
    let got = linear_power_norm(&m, &norm, dt, 50, dim).unwrap();
    assert!(got >= 1.39f64.powi(50) / 2.0, "{got}");
    let oracle = ftcs_spectral_radius(0.6, dim).powi(50);
    assert!((got - oracle).abs() <= 1e-8 * oracle, "{got} vs {oracle}");
}

#[test]
fn sup_norm_of_ftcs_is_the_row_sum() {
    let (m, _, dt, dim) = ftcs(0.4);
    let norm = NormSpec::new(NormKind::Sup, dim).unwrap();
    // Nonnegative stencil with row sums at most one.
    let got = linear_power_norm(&m, &norm, dt, 1, dim).unwrap();
    assert!((got - 1.0).abs() <= 1e-14, "{got}");
}
