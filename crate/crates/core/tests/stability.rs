use stabgap::estimators::{
    estimate_distant_stability, estimate_local_stability, estimate_stability, iterate,
    stability_verdict, PairSweep, StabilityVerdict, Tolerances,
};
use stabgap::problems::{build_method, build_problem, list_catalog, ProblemParams};
use stabgap::{CompactCloud, Ladder, Method, RegularFamily, State};

fn catalog_setup(
    problem: &str,
    method: &str,
    params: &ProblemParams,
) -> (Method, RegularFamily, CompactCloud, f64, Ladder) {
    let cat = list_catalog(params).unwrap();
    let entry = cat.get(problem).unwrap();
    let p = entry.problem(params).unwrap();
    let m = build_method(&p, method, params).unwrap();
    let g = entry.default_regular_family(&p);
    let k = entry.default_cloud(42).unwrap();
    let ladder = Ladder::geometric(entry.dt0, 4).unwrap();
    (m, g, k, entry.horizon, ladder)
}

fn all_configs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("riccati", "explicit-euler-riccati"),
        ("riccati", "exact-step"),
        ("linear", "linear-euler"),
        ("linear", "exact-step"),
        ("heat", "ftcs-heat"),
        ("heat", "exact-step"),
        ("advection", "lax-friedrichs-advection"),
        ("advection", "exact-step"),
        ("sqrt-drift", "sqrt-drift"),
        ("sqrt-drift", "exact-step"),
    ]
}

#[test]
fn partition_identity_holds_for_every_builtin() {
    let params = ProblemParams::default();
    for (problem, method) in all_configs() {
        let (m, g, k, t, ladder) = catalog_setup(problem, method, &params);
        let sweep = PairSweep::run(&m, &g, t, &k, &ladder, 1).unwrap();
        let norm = g.problem().norm();
        for r in [
            k.median_distance(norm),
            k.diameter(norm) / 4.0,
            k.min_separation(norm),
        ] {
            let full = sweep.full().unwrap().constant;
            let local = sweep
                .local(r)
                .map(|e| e.constant)
                .unwrap_or(f64::NEG_INFINITY);
            let distant = sweep
                .distant(r)
                .map(|e| e.constant)
                .unwrap_or(f64::NEG_INFINITY);
            assert_eq!(full, local.max(distant), "{problem}/{method} at r = {r}");
        }
    }
}

#[test]
fn threshold_constants_are_monotone() {
    let params = ProblemParams::default();
    for (problem, method) in [
        ("sqrt-drift", "sqrt-drift"),
        ("riccati", "explicit-euler-riccati"),
        ("heat", "ftcs-heat"),
    ] {
        let (m, g, k, t, ladder) = catalog_setup(problem, method, &params);
        let sweep = PairSweep::run(&m, &g, t, &k, &ladder, 1).unwrap();
        let diam = k.diameter(g.problem().norm());
        let mut prev = 0.0;
        for j in 1..=12 {
            let rho = diam * 0.7f64.powi(j);
            let Ok(e) = sweep.distant(rho) else { continue };
            assert!(
                e.constant >= prev,
                "{problem}: distant constant fell as rho shrank"
            );
            prev = e.constant;
        }
        let mut prev_local = 0.0;
        for j in (1..=12).rev() {
            let rho = diam * 0.7f64.powi(j);
            let Ok(e) = sweep.local(rho) else { continue };
            assert!(
                e.constant >= prev_local,
                "{problem}: local constant fell as rho' grew"
            );
            prev_local = e.constant;
        }
    }
}

#[test]
fn distant_constant_shrinks_as_rho_grows() {
    let params = ProblemParams::default();
    let (m, g, k, t, ladder) = catalog_setup("sqrt-drift", "sqrt-drift", &params);
    let sweep = PairSweep::run(&m, &g, t, &k, &ladder, 1).unwrap();
    let rhos = [0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    let vals: Vec<f64> = rhos
        .iter()
        .map(|&r| sweep.distant(r).unwrap().constant)
        .collect();
    for w in vals.windows(2) {
        assert!(w[1] <= w[0], "{vals:?}");
    }
}

#[test]
fn witness_reproduces_the_constant() {
    let params = ProblemParams::default();
    for (problem, method) in all_configs() {
        let (m, g, k, t, ladder) = catalog_setup(problem, method, &params);
        let est = estimate_stability(&m, &g, t, &k, &ladder, 1).unwrap();
        let w = &est.witness;
        let norm = g.problem().norm();
        let cu = iterate(&m, w.dt, w.n, &w.u, &g, t).unwrap();
        let cv = iterate(&m, w.dt, w.n, &w.v, &g, t).unwrap();
        let ratio = norm.distance(&cu, &cv).unwrap() / norm.distance(&w.u, &w.v).unwrap();
        assert!(
            (ratio - est.constant).abs() <= 1e-12 * est.constant.max(1.0),
            "{problem}/{method}: {ratio} vs {}",
            est.constant
        );
        assert_eq!(ladder.values()[w.rung], w.dt);
        assert_eq!(&k.points()[w.u_index], &w.u);
        assert_eq!(&k.points()[w.v_index], &w.v);
    }
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let params = ProblemParams::default();
    for (problem, method) in [
        ("heat", "ftcs-heat"),
        ("sqrt-drift", "sqrt-drift"),
        ("riccati", "explicit-euler-riccati"),
    ] {
        let (m, g, k, t, ladder) = catalog_setup(problem, method, &params);
        let one = PairSweep::run(&m, &g, t, &k, &ladder, 1).unwrap();
        let four = PairSweep::run(&m, &g, t, &k, &ladder, 4).unwrap();
        assert_eq!(one.records(), four.records());
        assert_eq!(one.full().unwrap(), four.full().unwrap());
    }
}

#[test]
fn constant_is_invariant_under_reordering_the_cloud() {
    let params = ProblemParams::default();
    let (m, g, k, t, ladder) = catalog_setup("riccati", "explicit-euler-riccati", &params);
    let mut pts = k.points().to_vec();
    pts.reverse();
    pts.rotate_left(7);
    let shuffled = CompactCloud::from_states(pts).unwrap();
    let a = estimate_stability(&m, &g, t, &k, &ladder, 1).unwrap();
    let b = estimate_stability(&m, &g, t, &shuffled, &ladder, 1).unwrap();
    assert_eq!(a.constant, b.constant);
    assert_eq!(a.pairs_evaluated, b.pairs_evaluated);
}

#[test]
fn linear_euler_constants_match_the_amplification_power() {
    let params = ProblemParams::default();
    let p = build_problem("linear", &params).unwrap();
    let m = build_method(&p, "linear-euler", &params).unwrap();
    let g = RegularFamily::whole_domain(&p);
    let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
    let ladder = Ladder::from_values(vec![0.1]).unwrap();
    let want = 1.1f64.powi(10);
    let full = estimate_stability(&m, &g, 1.0, &k, &ladder, 1).unwrap();
    let local = estimate_local_stability(&m, &g, 1.0, &k, 0.1, &ladder, 1).unwrap();
    let distant = estimate_distant_stability(&m, &g, 1.0, &k, 1.5, &ladder, 1).unwrap();
    for e in [&full, &local, &distant] {
        assert!((e.constant - want).abs() <= 1e-12, "{}", e.constant);
    }
    // Linear maps have the same ratio for every pair, so the curve is flat.
    assert_eq!(
        stability_verdict(&full, &Tolerances::default()),
        StabilityVerdict::Stable
    );
}

#[test]
fn exact_step_of_a_contraction_never_exceeds_one() {
    let params = ProblemParams {
        lambda: -1.0,
        ..ProblemParams::default()
    };
    let p = build_problem("linear", &params).unwrap();
    let m = build_method(&p, "exact-step", &params).unwrap();
    let g = RegularFamily::whole_domain(&p);
    let k = CompactCloud::interval(-1.0, 1.0, 21).unwrap();
    let est = estimate_stability(&m, &g, 1.0, &k, &Ladder::geometric(0.1, 4).unwrap(), 1).unwrap();
    assert!(est.constant <= 1.0 + 1e-12);
    assert_eq!(est.witness.n, 0);
}

#[test]
fn sqrt_drift_local_constant_exceeds_one_step_ratio() {
    let params = ProblemParams::default();
    let p = build_problem("sqrt-drift", &params).unwrap();
    let m = build_method(&p, "sqrt-drift", &params).unwrap();
    let g = RegularFamily::whole_domain(&p);
    let dt = 0.1;
    let ladder = Ladder::from_values(vec![dt]).unwrap();
    let mut prev = 0.0;
    for h in [1e-2, 1e-4, 1e-6] {
        let k = CompactCloud::explicit(vec![vec![0.0], vec![h]]).unwrap();
        let est = estimate_local_stability(&m, &g, 1.0, &k, h, &ladder, 1).unwrap();
        assert!(
            est.constant >= 1.0 + dt / h.sqrt() - 1e-9,
            "h = {h}: {}",
            est.constant
        );
        assert!(est.constant > prev);
        prev = est.constant;
    }
}

#[test]
fn ftcs_above_the_mesh_limit_is_flagged_unstable() {
    let params = ProblemParams {
        mu: 0.6,
        ..ProblemParams::default()
    };
    let p = build_problem("heat", &params).unwrap();
    let m = build_method(&p, "ftcs-heat", &params).unwrap();
    let g = RegularFamily::whole_domain(&p);
    let n = p.dim();
    let dx = 1.0 / (n + 1) as f64;
    let dt = 0.6 * dx * dx;
    let horizon = 0.1;
    let k = list_catalog(&params)
        .unwrap()
        .get("heat")
        .unwrap()
        .default_cloud(42)
        .unwrap();
    let ladder = Ladder::geometric(dt, 3).unwrap();
    let est = estimate_stability(&m, &g, horizon, &k, &ladder, 1).unwrap();
    assert!(est.constant >= 1e3, "{}", est.constant);

    // No pair can beat the operator norm of the worst power.
    let g_max = (1..=n)
        .map(|k| {
            (1.0 - 4.0 * 0.6 * (k as f64 * std::f64::consts::PI * dx / 2.0).sin().powi(2)).abs()
        })
        .fold(0.0, f64::max);
    let n_max = (horizon / dt + 1e-9).floor() as i32;
    assert!(est.constant <= g_max.powi(n_max) * (1.0 + 1e-9));
    let growth = est.growth_factor.unwrap();
    assert!((growth - g_max).abs() <= 0.1 * g_max, "{growth} vs {g_max}");
    assert_eq!(
        stability_verdict(&est, &Tolerances::default()),
        StabilityVerdict::Unstable
    );
}

#[test]
fn too_few_pairs_is_inconclusive() {
    let params = ProblemParams::default();
    let p = build_problem("linear", &params).unwrap();
    let m = build_method(&p, "linear-euler", &params).unwrap();
    let g = RegularFamily::whole_domain(&p);
    let k = CompactCloud::interval(0.0, 1.0, 4).unwrap();
    let est = estimate_stability(&m, &g, 1.0, &k, &Ladder::geometric(0.1, 2).unwrap(), 1).unwrap();
    assert_eq!(est.pairs_evaluated, 6);
    assert_eq!(
        stability_verdict(&est, &Tolerances::default()),
        StabilityVerdict::Inconclusive
    );
}

#[test]
fn iterate_from_outside_the_domain_is_a_step_zero_exit() {
    let params = ProblemParams::default();
    let p = build_problem("riccati", &params).unwrap();
    let m = build_method(&p, "explicit-euler-riccati", &params).unwrap();
    let g = RegularFamily::norm_cap(&p, stabgap::CapSpec::constant(2.0).unwrap());
    let err = iterate(&m, 0.1, 10, &State::scalar(1.5).unwrap(), &g, 1.0).unwrap_err();
    assert!(
        matches!(err, stabgap::Error::DomainExit { step: Some(0), .. }),
        "{err}"
    );
}
