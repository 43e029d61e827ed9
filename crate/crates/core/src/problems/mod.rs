//! Built-in semigroups and methods, and the catalog that pairs them.

pub mod flows;
pub mod schemes;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cloud::{CloudGenerator, CompactCloud};
use crate::error::{Error, Result};
use crate::model::{CapSpec, Method, Problem, RegularFamily};
use crate::space::{NormKind, NormSpec, State};

pub use flows::{AdvectionFlow, HeatFlow, LinearFlow, RiccatiFlow, SqrtDriftFlow};
pub use schemes::{
    ExactStep, ExplicitEulerRiccati, FtcsHeat, LaxFriedrichs, LinearEuler, SqrtDrift,
};

pub const DEFAULT_PDE_GRID: usize = 32;

/// Tunable parameters of the built-in problems and methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Rate of the linear problem and of `linear-euler`.
    pub lambda: f64,
    /// Interior points (heat) or periodic points (advection). `None` picks
    /// the problem default.
    pub grid: Option<usize>,
    /// Mesh ratio `dt0 / dx^2` used to derive the heat step ladder.
    pub mu: f64,
    pub velocity: f64,
    /// Courant number `|a| dt0 / dx` used to derive the advection step ladder.
    pub cfl: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        ProblemParams {
            lambda: 1.0,
            grid: None,
            mu: 0.4,
            velocity: 1.0,
            cfl: 0.8,
        }
    }
}

/// One catalog row: a problem with its compatible methods and defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub dim: usize,
    pub norm: NormSpec,
    pub methods: Vec<String>,
    pub cloud: CloudGenerator,
    pub horizon: f64,
    pub dt0: f64,
    pub cap: Option<CapSpec>,
    pub linear: bool,
}

impl CatalogEntry {
    pub fn problem(&self, params: &ProblemParams) -> Result<Problem> {
        build_problem(&self.name, params)
    }

    pub fn default_cloud(&self, seed: u64) -> Result<CompactCloud> {
        CompactCloud::generate(self.cloud.clone(), seed)
    }

    pub fn default_regular_family(&self, problem: &Problem) -> RegularFamily {
        match self.cap {
            Some(cap) => RegularFamily::norm_cap(problem, cap),
            None => RegularFamily::whole_domain(problem),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl ProblemCatalog {
    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

pub const PROBLEM_NAMES: [&str; 5] = ["riccati", "linear", "heat", "advection", "sqrt-drift"];

fn heat_grid(params: &ProblemParams) -> usize {
    params.grid.unwrap_or(DEFAULT_PDE_GRID)
}

fn advection_grid(params: &ProblemParams) -> usize {
    params.grid.unwrap_or(DEFAULT_PDE_GRID + 1)
}

fn check_params(params: &ProblemParams) -> Result<()> {
    if !params.lambda.is_finite() {
        return Err(Error::contract("lambda must be finite"));
    }
    if !(params.mu.is_finite() && params.mu > 0.0) {
        return Err(Error::contract("mu must be positive"));
    }
    if !(params.cfl.is_finite() && params.cfl > 0.0) {
        return Err(Error::contract("cfl must be positive"));
    }
    if !(params.velocity.is_finite() && params.velocity != 0.0) {
        return Err(Error::contract("velocity must be finite and nonzero"));
    }
    if params.grid == Some(0) {
        return Err(Error::contract("grid must be positive"));
    }
    Ok(())
}

/// Catalog of every built-in problem under the given parameters, in a fixed order.
pub fn list_catalog(params: &ProblemParams) -> Result<ProblemCatalog> {
    check_params(params)?;
    let scalar = NormSpec::new(NormKind::Sup, 1)?;
    let grid_interval = |lo: f64, hi: f64, n: usize| CloudGenerator::GridInBox {
        lower: vec![lo],
        upper: vec![hi],
        per_axis: n,
    };
    let nh = heat_grid(params);
    let dxh = 1.0 / (nh + 1) as f64;
    let na = advection_grid(params);
    let dxa = 1.0 / na as f64;
    let entries = vec![
        CatalogEntry {
            name: "riccati".into(),
            description: "u' = u^2 with finite-time blow-up; E(t)u = u/(1 - ut)".into(),
            dim: 1,
            norm: scalar,
            methods: vec!["explicit-euler-riccati".into(), "exact-step".into()],
            cloud: grid_interval(-1.0, 0.5, 40),
            horizon: 1.0,
            dt0: 0.1,
            cap: Some(CapSpec::constant(2.0)?),
            linear: false,
        },
        CatalogEntry {
            name: "linear".into(),
            description: format!("u' = lambda u with lambda = {}", params.lambda),
            dim: 1,
            norm: scalar,
            methods: vec!["linear-euler".into(), "exact-step".into()],
            cloud: grid_interval(-1.0, 1.0, 21),
            horizon: 1.0,
            dt0: 0.1,
            cap: None,
            linear: true,
        },
        CatalogEntry {
            name: "heat".into(),
            description: format!("heat equation on [0,1], Dirichlet ends, {nh} interior points"),
            dim: nh,
            norm: NormSpec::weighted(NormKind::WeightedL2, dxh, nh)?,
            methods: vec!["ftcs-heat".into(), "exact-step".into()],
            cloud: CloudGenerator::Ball {
                center: vec![0.0; nh],
                radius: 1.0,
                count: 24,
            },
            horizon: 0.05,
            dt0: params.mu * dxh * dxh,
            cap: None,
            linear: true,
        },
        CatalogEntry {
            name: "advection".into(),
            description: format!(
                "periodic advection with velocity {} on {na} points",
                params.velocity
            ),
            dim: na,
            norm: NormSpec::weighted(NormKind::WeightedL2, dxa, na)?,
            methods: vec!["lax-friedrichs-advection".into(), "exact-step".into()],
            cloud: CloudGenerator::Ball {
                center: vec![0.0; na],
                radius: 1.0,
                count: 24,
            },
            horizon: 0.5,
            dt0: params.cfl * dxa / params.velocity.abs(),
            cap: None,
            linear: true,
        },
        CatalogEntry {
            name: "sqrt-drift".into(),
            description: "u' = sqrt(|u|), growing branch selected at u = 0".into(),
            dim: 1,
            norm: scalar,
            methods: vec!["sqrt-drift".into(), "exact-step".into()],
            cloud: grid_interval(0.0, 1.0, 257),
            horizon: 1.0,
            dt0: 0.1,
            cap: None,
            linear: false,
        },
    ];
    Ok(ProblemCatalog { entries })
}

pub fn build_problem(name: &str, params: &ProblemParams) -> Result<Problem> {
    check_params(params)?;
    match name {
        "riccati" => Problem::new(
            name,
            NormSpec::new(NormKind::Sup, 1)?,
            Arc::new(RiccatiFlow),
        ),
        "linear" => Problem::new(
            name,
            NormSpec::new(NormKind::Sup, 1)?,
            Arc::new(LinearFlow {
                lambda: params.lambda,
            }),
        ),
        "heat" => {
            let flow = HeatFlow::new(heat_grid(params))?;
            let norm = NormSpec::weighted(NormKind::WeightedL2, flow.dx(), heat_grid(params))?;
            Problem::new(name, norm, Arc::new(flow))
        }
        "advection" => {
            let n = advection_grid(params);
            let flow = AdvectionFlow::new(n, params.velocity)?;
            let norm = NormSpec::weighted(NormKind::WeightedL2, flow.dx(), n)?;
            Problem::new(name, norm, Arc::new(flow))
        }
        "sqrt-drift" => Problem::new(
            name,
            NormSpec::new(NormKind::Sup, 1)?,
            Arc::new(SqrtDriftFlow),
        ),
        other => Err(Error::contract(format!(
            "unknown problem {other:?}; catalog: {}",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

/// Builds `method` for `problem`, rejecting pairs the catalog does not list.
pub fn build_method(problem: &Problem, method: &str, params: &ProblemParams) -> Result<Method> {
    check_params(params)?;
    let dim = problem.dim();
    let allowed = match problem.name() {
        "riccati" => "explicit-euler-riccati",
        "linear" => "linear-euler",
        "heat" => "ftcs-heat",
        "advection" => "lax-friedrichs-advection",
        "sqrt-drift" => "sqrt-drift",
        other => {
            return Err(Error::contract(format!(
                "problem {other:?} is not a built-in"
            )))
        }
    };
    if method != allowed && method != "exact-step" {
        return Err(Error::contract(format!(
            "method {method:?} is not compatible with problem {:?} (expected {allowed} or exact-step)",
            problem.name()
        )));
    }
    match method {
        "exact-step" => Method::new(
            "exact-step",
            dim,
            Arc::new(ExactStep {
                problem: problem.clone(),
            }),
        ),
        "explicit-euler-riccati" => Method::new(method, dim, Arc::new(ExplicitEulerRiccati)),
        "linear-euler" => Method::new(
            method,
            dim,
            Arc::new(LinearEuler {
                lambda: params.lambda,
            }),
        ),
        "ftcs-heat" => Method::new(
            method,
            dim,
            Arc::new(FtcsHeat {
                dx: 1.0 / (dim + 1) as f64,
            }),
        ),
        "lax-friedrichs-advection" => Method::new(
            method,
            dim,
            Arc::new(LaxFriedrichs {
                velocity: params.velocity,
                dx: 1.0 / dim as f64,
            }),
        ),
        "sqrt-drift" => Method::new(method, dim, Arc::new(SqrtDrift)),
        _ => unreachable!("compatibility checked above"),
    }
}

/// `u / (1 - u t)`, rejecting states beyond the blow-up time.
pub fn riccati_exact(t: f64, u: &State) -> Result<State> {
    let p = build_problem("riccati", &ProblemParams::default())?;
    p.exact(t, u).map_err(|e| match e {
        Error::DomainExit { t, step, .. } => Error::DomainExit {
            t,
            step,
            context: format!("u = {} is not below 1/t", u.coords()[0]),
        },
        other => other,
    })
}

/// Heat semigroup on the grid implied by the state's length.
pub fn heat_exact(t: f64, u: &State) -> Result<State> {
    let p = build_problem(
        "heat",
        &ProblemParams {
            grid: Some(u.dim()),
            ..ProblemParams::default()
        },
    )?;
    p.exact(t, u)
}
