//! Browser demo: gap curves, a CFL explorer for the linear PDE schemes and
//! scalar trajectories against their exact flows.
//!
//! Each exported function returns a JSON string that `www/index.html`
//! parses and draws on a canvas.

use serde::Serialize;
use stabgap::analysis::{gap_curve, GapVerdict};
use stabgap::estimators::{
    estimate_stability, linear_power_norm, stability_verdict, Ladder, StabilityVerdict, Tolerances,
};
use stabgap::problems::{build_method, list_catalog, ProblemParams};
use stabgap::{Error, State};
use wasm_bindgen::prelude::*;

/// Most sample points drawn on the power-norm curve.
const MAX_CURVE_POINTS: usize = 60;

#[derive(Debug, Clone, Serialize)]
pub struct GapPlot {
    pub problem: String,
    pub method: String,
    pub rho: Vec<f64>,
    pub estimate: Vec<Option<f64>>,
    pub verdict: GapVerdict,
    pub exponent: Option<f64>,
    pub plateau: Option<f64>,
    pub amplitude: Option<f64>,
    pub max_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

/// Gap curve of a catalog problem on its default cloud, family and horizon.
pub fn gap_plot(
    problem: &str,
    method: &str,
    dt_depth: usize,
    rho_depth: usize,
    seed: u64,
) -> Result<GapPlot, Error> {
    let params = ProblemParams::default();
    let catalog = list_catalog(&params)?;
    let entry = catalog
        .get(problem)
        .ok_or_else(|| Error::contract(format!("unknown problem {problem:?}")))?;
    let p = entry.problem(&params)?;
    let m = build_method(&p, method, &params)?;
    let guard = entry.default_regular_family(&p);
    let cloud = entry.default_cloud(seed)?;
    let diameter = cloud.diameter(p.norm());
    let rho0 = if diameter > 0.0 { diameter / 2.0 } else { 1.0 };
    let curve = gap_curve(
        &m,
        &guard,
        entry.horizon,
        &cloud,
        &Ladder::geometric(rho0, rho_depth)?,
        &Ladder::geometric(entry.dt0, dt_depth)?,
        1,
        &Tolerances::default(),
    )?;
    Ok(GapPlot {
        problem: problem.to_string(),
        method: method.to_string(),
        rho: curve.rungs.iter().map(|r| r.rho).collect(),
        estimate: curve.rungs.iter().map(|r| r.estimate).collect(),
        verdict: curve.verdict,
        exponent: curve.fit.map(|f| f.exponent),
        plateau: curve.fit.map(|f| f.plateau),
        amplitude: curve.fit.map(|f| f.amplitude),
        max_ratio: curve.ratio_test.as_ref().map(|r| r.max_ratio),
        warnings: curve.warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CflPlot {
    pub scheme: String,
    /// `dt / dx^2` for the heat scheme, `|a| dt / dx` for advection.
    pub ratio: f64,
    pub dt: f64,
    /// Modulus of the amplification factor per Fourier mode.
    pub amplification: Vec<f64>,
    pub max_amplification: f64,
    pub steps: Vec<usize>,
    pub power_norm: Vec<f64>,
    pub verdict: StabilityVerdict,
    pub constant: f64,
}

fn amplification(scheme: &str, ratio: f64, n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match scheme {
        "ftcs-heat" => (1..=n)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * (n + 1) as f64)).sin();
                (1.0 - 4.0 * ratio * s * s).abs()
            })
            .collect(),
        _ => (0..n)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / n as f64;
                (theta.cos().powi(2) + ratio * ratio * theta.sin().powi(2)).sqrt()
            })
            .collect(),
    }
}

/// Amplification factors, the operator norm of `C^n` for `n` up to `steps`
/// and the sampled stability verdict, for `ftcs-heat` at mesh ratio `ratio`
/// or `lax-friedrichs-advection` at Courant number `ratio`.
pub fn cfl_plot(scheme: &str, ratio: f64, grid: usize, steps: usize) -> Result<CflPlot, Error> {
    let problem = match scheme {
        "ftcs-heat" => "heat",
        "lax-friedrichs-advection" => "advection",
        other => return Err(Error::contract(format!("no CFL explorer for {other:?}"))),
    };
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::contract("ratio must be positive"));
    }
    let params = ProblemParams {
        grid: Some(grid),
        mu: ratio,
        cfl: ratio,
        ..ProblemParams::default()
    };
    let catalog = list_catalog(&params)?;
    let entry = catalog.get(problem).expect("catalog lists every built-in");
    let p = entry.problem(&params)?;
    let m = build_method(&p, scheme, &params)?;
    let dt = entry.dt0;

    let stride = steps.div_ceil(MAX_CURVE_POINTS).max(1);
    let sample: Vec<usize> = (0..=steps).step_by(stride).collect();
    let power_norm = sample
        .iter()
        .map(|&n| linear_power_norm(&m, p.norm(), dt, n, p.dim()))
        .collect::<Result<Vec<_>, _>>()?;

    let guard = entry.default_regular_family(&p);
    let cloud = entry.default_cloud(42)?;
    let horizon = dt * steps as f64;
    let est = estimate_stability(
        &m,
        &guard,
        horizon,
        &cloud,
        &Ladder::from_values(vec![dt])?,
        1,
    )?;
    let amp = amplification(scheme, ratio, p.dim());
    Ok(CflPlot {
        scheme: scheme.to_string(),
        ratio,
        dt,
        max_amplification: amp.iter().copied().fold(0.0, f64::max),
        amplification: amp,
        steps: sample,
        power_norm,
        verdict: stability_verdict(&est, &Tolerances::default()),
        constant: est.constant,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub u0: f64,
    pub t: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `None` past the blow-up time of the exact solution.
    pub exact: Vec<Option<f64>>,
    /// Step at which the numerical iterate overflowed or left the domain.
    pub stopped: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPlot {
    pub problem: String,
    pub method: String,
    pub dt: f64,
    pub series: Vec<Trajectory>,
    pub max_error: f64,
}

/// Iterates a scalar method from each initial value up to `horizon` next to
/// the exact flow.
pub fn trajectory_plot(
    problem: &str,
    method: &str,
    dt: f64,
    horizon: f64,
    u0: &[f64],
) -> Result<TrajectoryPlot, Error> {
    let params = ProblemParams::default();
    let catalog = list_catalog(&params)?;
    let entry = catalog
        .get(problem)
        .ok_or_else(|| Error::contract(format!("unknown problem {problem:?}")))?;
    if entry.dim != 1 {
        return Err(Error::contract(format!(
            "{problem} is not a scalar problem"
        )));
    }
    if !(dt.is_finite() && dt > 0.0 && horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::contract(
            "dt must be positive and the horizon nonnegative",
        ));
    }
    let p = entry.problem(&params)?;
    let m = build_method(&p, method, &params)?;
    let n_max = (horizon / dt + 1e-9).floor() as usize;
    let mut max_error = 0.0f64;
    let mut series = Vec::with_capacity(u0.len());
    for &x in u0 {
        let start = State::scalar(x)?;
        let mut u = start.clone();
        let mut tr = Trajectory {
            u0: x,
            t: vec![0.0],
            numeric: vec![x],
            exact: vec![Some(x)],
            stopped: None,
        };
        for n in 1..=n_max {
            let t = n as f64 * dt;
            match m.step(dt, &u) {
                Ok(next) => u = next,
                Err(Error::BlowupDetected { .. } | Error::DomainExit { .. }) => {
                    tr.stopped = Some(n);
                    break;
                }
                Err(e) => return Err(e),
            }
            let exact = p.exact(t, &start).ok().map(|s| s.coords()[0]);
            if let Some(e) = exact {
                max_error = max_error.max((e - u.coords()[0]).abs());
            }
            tr.t.push(t);
            tr.numeric.push(u.coords()[0]);
            tr.exact.push(exact);
        }
        series.push(tr);
    }
    Ok(TrajectoryPlot {
        problem: problem.to_string(),
        method: method.to_string(),
        dt,
        series,
        max_error,
    })
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = gapCurve)]
pub fn gap_curve_js(
    problem: &str,
    method: &str,
    dt_depth: usize,
    rho_depth: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(gap_plot(
        problem,
        method,
        dt_depth,
        rho_depth,
        u64::from(seed),
    ))
}

#[wasm_bindgen(js_name = cflExplorer)]
pub fn cfl_explorer_js(
    scheme: &str,
    ratio: f64,
    grid: usize,
    steps: usize,
) -> Result<String, JsValue> {
    to_js(cfl_plot(scheme, ratio, grid, steps))
}

#[wasm_bindgen(js_name = trajectories)]
pub fn trajectories_js(
    problem: &str,
    method: &str,
    dt: f64,
    horizon: f64,
    u0: Vec<f64>,
) -> Result<String, JsValue> {
    to_js(trajectory_plot(problem, method, dt, horizon, &u0))
}

/// Catalog rows as JSON, for populating the selectors.
#[wasm_bindgen(js_name = catalog)]
pub fn catalog_js() -> Result<String, JsValue> {
    to_js(list_catalog(&ProblemParams::default()))
}
