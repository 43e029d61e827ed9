use stabgap::analysis::GapVerdict;
use stabgap::estimators::StabilityVerdict;
use stabgap_web::{cfl_plot, gap_plot, trajectory_plot};

#[test]
fn gap_plot_separates_lipschitz_from_sqrt_drift() {
    let linear = gap_plot("linear", "linear-euler", 2, 6, 42).unwrap();
    assert_eq!(linear.verdict, GapVerdict::Bounded);
    assert_eq!(linear.rho.len(), 7);
    let sqrt = gap_plot("sqrt-drift", "exact-step", 2, 7, 42).unwrap();
    assert_eq!(sqrt.verdict, GapVerdict::Unbounded);
    assert!((sqrt.exponent.unwrap() - 0.5).abs() < 0.15);
    assert!(serde_json::to_string(&sqrt)
        .unwrap()
        .contains("\"verdict\":\"unbounded\""));
}

#[test]
fn cfl_explorer_flags_the_heat_limit() {
    let below = cfl_plot("ftcs-heat", 0.4, 32, 100).unwrap();
    assert!(below.max_amplification <= 1.0);
    assert_eq!(below.verdict, StabilityVerdict::Stable);
    let above = cfl_plot("ftcs-heat", 0.6, 32, 200).unwrap();
    assert!((above.max_amplification - 1.3946).abs() < 1e-3);
    assert_eq!(above.verdict, StabilityVerdict::Unstable);
    assert_eq!(above.steps.len(), above.power_norm.len());
    assert!(above.power_norm.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn cfl_explorer_for_lax_friedrichs() {
    let ok = cfl_plot("lax-friedrichs-advection", 0.8, 33, 100).unwrap();
    assert!((ok.max_amplification - 1.0).abs() < 1e-12);
    assert!(ok.power_norm.iter().all(|&v| v <= 1.0 + 1e-9));
    let bad = cfl_plot("lax-friedrichs-advection", 1.5, 33, 100).unwrap();
    assert!(bad.max_amplification > 1.4);
    assert!(bad.power_norm.last().unwrap() > &1e3);
    assert!(cfl_plot("sqrt-drift", 1.0, 32, 10).is_err());
}

#[test]
fn trajectories_track_the_exact_flow() {
    let plot = trajectory_plot("riccati", "explicit-euler-riccati", 0.25, 1.0, &[0.5]).unwrap();
    let tr = &plot.series[0];
    assert_eq!(tr.numeric.len(), 5);
    assert!((tr.numeric[4] - 0.883_090_239_775_825_1).abs() < 1e-12);
    assert!((tr.exact[4].unwrap() - 1.0).abs() < 1e-12);
    let blow = trajectory_plot("riccati", "exact-step", 0.1, 1.0, &[2.0]).unwrap();
    assert_eq!(blow.series[0].stopped, Some(5));
    assert!(trajectory_plot("heat", "ftcs-heat", 0.1, 1.0, &[0.0]).is_err());
}
