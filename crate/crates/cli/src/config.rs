//! Experiment configuration: a TOML file with one section per concern.
//!
//! ```toml
//! problem = "riccati"
//! method = "explicit-euler-riccati"
//!
//! [sampling]
//! cloud = "grid"
//! lower = -1.0
//! upper = 0.5
//! count = 40
//! seed = 42
//!
//! [ladders]
//! T = 1.0
//! dt0 = 0.1
//! ```
//!
//! Every omitted key falls back to the catalog entry of the problem or to
//! the documented default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stabgap::estimators::Tolerances;
use stabgap::problems::{list_catalog, ProblemParams, PROBLEM_NAMES};
use stabgap::{CapSpec, CloudGenerator, NormKind};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DT_DEPTH: usize = 6;
pub const DEFAULT_RHO_DEPTH: usize = 7;
pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_TIME_POINTS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Missing {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    CsvBundle,
}

/// A scalar is accepted wherever a one-dimensional vector is expected.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Coords {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Coords {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Coords::Scalar(x) => vec![x],
            Coords::Vector(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<String>,
    method: Option<String>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    sampling: RawSampling,
    #[serde(default)]
    regular: RawRegular,
    #[serde(default)]
    ladders: RawLadders,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    lambda: Option<f64>,
    grid: Option<usize>,
    mu: Option<f64>,
    velocity: Option<f64>,
    cfl: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    norm: Option<NormKind>,
    norm_weight: Option<f64>,
    cloud: Option<String>,
    lower: Option<Coords>,
    upper: Option<Coords>,
    count: Option<usize>,
    center: Option<Coords>,
    radius: Option<f64>,
    points: Option<Vec<Coords>>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegular {
    family: Option<String>,
    cap: Option<f64>,
    cap_slope: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadders {
    #[serde(rename = "T")]
    horizon: Option<f64>,
    dt0: Option<f64>,
    dt_depth: Option<usize>,
    rho_local: Option<f64>,
    rho: Option<f64>,
    rho0: Option<f64>,
    rho_depth: Option<usize>,
    theta: Option<f64>,
    time_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    consistency: Option<f64>,
    convergence: Option<f64>,
    roundoff: Option<f64>,
    growth: Option<f64>,
    stability_cap: Option<f64>,
    divergence_cap: Option<f64>,
    min_order: Option<f64>,
    min_pairs: Option<usize>,
    gap_tau: Option<f64>,
    q_min: Option<f64>,
    fit_residual: Option<f64>,
    slack: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyConfig {
    WholeDomain,
    NormCap { cap: CapSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOverride {
    pub kind: NormKind,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt0: f64,
    pub dt_depth: usize,
    /// `None` selects the median pairwise distance of the cloud.
    pub rho_local: Option<f64>,
    pub rho: Option<f64>,
    /// `None` selects half the cloud diameter.
    pub rho0: Option<f64>,
    pub rho_depth: usize,
    pub theta: f64,
    pub time_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub method: String,
    pub params: ProblemParams,
    pub norm: Option<NormOverride>,
    pub cloud: CloudGenerator,
    pub seed: u64,
    pub family: FamilyConfig,
    pub ladders: LadderConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Missing {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<string>"),
        message: e.message().to_string(),
    })?;
    resolve(raw)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(
            key,
            format!("must be nonnegative and finite, got {v}"),
        ))
    }
}

fn check_dim(key: &str, v: &[f64], dim: usize) -> Result<(), ConfigError> {
    if v.len() != dim {
        return Err(invalid(
            key,
            format!(
                "has {} coordinates but the problem has dimension {dim}",
                v.len()
            ),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(key, "coordinates must be finite"));
    }
    Ok(())
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let problem = raw.problem.ok_or_else(|| invalid("problem", "missing"))?;
    if !PROBLEM_NAMES.contains(&problem.as_str()) {
        return Err(invalid(
            "problem",
            format!(
                "unknown problem {problem:?}; catalog: {}",
                PROBLEM_NAMES.join(", ")
            ),
        ));
    }

    let d = ProblemParams::default();
    let p = raw.params;
    let params = ProblemParams {
        lambda: p.lambda.unwrap_or(d.lambda),
        grid: p.grid,
        mu: p.mu.unwrap_or(d.mu),
        velocity: p.velocity.unwrap_or(d.velocity),
        cfl: p.cfl.unwrap_or(d.cfl),
    };
    if !params.lambda.is_finite() {
        return Err(invalid("params.lambda", "must be finite"));
    }
    positive("params.mu", params.mu)?;
    positive("params.cfl", params.cfl)?;
    if !(params.velocity.is_finite() && params.velocity != 0.0) {
        return Err(invalid("params.velocity", "must be finite and nonzero"));
    }
    if params.grid == Some(0) {
        return Err(invalid("params.grid", "must be positive"));
    }
    let catalog = list_catalog(&params).map_err(|e| invalid("params", e.to_string()))?;
    let entry = catalog.get(&problem).ok_or_else(|| {
        invalid(
            "problem",
            format!("catalog: {}", catalog.names().join(", ")),
        )
    })?;

    let method = raw.method.ok_or_else(|| invalid("method", "missing"))?;
    if !entry.methods.contains(&method) {
        return Err(invalid(
            "method",
            format!(
                "{method:?} is not available for {problem}; choose one of {}",
                entry.methods.join(", ")
            ),
        ));
    }

    let s = raw.sampling;
    let dim = entry.dim;
    let norm = match (s.norm, s.norm_weight) {
        (Some(kind), weight) => {
            if let Some(w) = weight {
                positive("sampling.norm_weight", w)?;
            }
            Some(NormOverride { kind, weight })
        }
        (None, Some(_)) => {
            return Err(invalid(
                "sampling.norm_weight",
                "given without sampling.norm",
            ))
        }
        (None, None) => None,
    };
    let cloud = match s.cloud.as_deref() {
        None | Some("catalog") => {
            if s.lower.is_some()
                || s.upper.is_some()
                || s.center.is_some()
                || s.radius.is_some()
                || s.points.is_some()
            {
                return Err(invalid(
                    "sampling.cloud",
                    "cloud parameters given without a cloud kind",
                ));
            }
            match (entry.cloud.clone(), s.count) {
                (CloudGenerator::GridInBox { lower, upper, .. }, Some(n)) => {
                    CloudGenerator::GridInBox {
                        lower,
                        upper,
                        per_axis: n,
                    }
                }
                (CloudGenerator::Ball { center, radius, .. }, Some(n)) => CloudGenerator::Ball {
                    center,
                    radius,
                    count: n,
                },
                (g, _) => g,
            }
        }
        Some("grid") => {
            let lower = s
                .lower
                .ok_or_else(|| invalid("sampling.lower", "required for a grid cloud"))?
                .into_vec();
            let upper = s
                .upper
                .ok_or_else(|| invalid("sampling.upper", "required for a grid cloud"))?
                .into_vec();
            check_dim("sampling.lower", &lower, dim)?;
            check_dim("sampling.upper", &upper, dim)?;
            if lower.iter().zip(&upper).any(|(a, b)| a > b) {
                return Err(invalid(
                    "sampling.upper",
                    "must not be below sampling.lower",
                ));
            }
            CloudGenerator::GridInBox {
                lower,
                upper,
                per_axis: s
                    .count
                    .ok_or_else(|| invalid("sampling.count", "required for a grid cloud"))?,
            }
        }
        Some("ball") => {
            let center = s.center.map_or_else(|| vec![0.0; dim], Coords::into_vec);
            check_dim("sampling.center", &center, dim)?;
            CloudGenerator::Ball {
                center,
                radius: positive("sampling.radius", s.radius.unwrap_or(1.0))?,
                count: s
                    .count
                    .ok_or_else(|| invalid("sampling.count", "required for a ball cloud"))?,
            }
        }
        Some("explicit") => {
            let points: Vec<Vec<f64>> = s
                .points
                .ok_or_else(|| invalid("sampling.points", "required for an explicit cloud"))?
                .into_iter()
                .map(Coords::into_vec)
                .collect();
            for p in &points {
                check_dim("sampling.points", p, dim)?;
            }
            CloudGenerator::ExplicitList { points }
        }
        Some(other) => {
            return Err(invalid(
                "sampling.cloud",
                format!("unknown cloud kind {other:?} (expected catalog, grid, ball or explicit)"),
            ))
        }
    };
    if s.count == Some(0) {
        return Err(invalid("sampling.count", "must be positive"));
    }

    let r = raw.regular;
    let family = match r.family.as_deref() {
        None if r.cap.is_none() && r.cap_slope.is_none() => match entry.cap {
            Some(cap) => FamilyConfig::NormCap { cap },
            None => FamilyConfig::WholeDomain,
        },
        Some("catalog") => match entry.cap {
            Some(cap) => FamilyConfig::NormCap { cap },
            None => FamilyConfig::WholeDomain,
        },
        None | Some("norm-cap") => {
            let base = positive(
                "regular.cap",
                r.cap
                    .ok_or_else(|| invalid("regular.cap", "required for a norm cap"))?,
            )?;
            let slope = r.cap_slope.unwrap_or(0.0);
            let cap = CapSpec::affine(base, slope)
                .map_err(|e| invalid("regular.cap_slope", e.to_string()))?;
            FamilyConfig::NormCap { cap }
        }
        Some("whole-domain") => {
            if r.cap.is_some() || r.cap_slope.is_some() {
                return Err(invalid(
                    "regular.cap",
                    "not used by the whole-domain family",
                ));
            }
            FamilyConfig::WholeDomain
        }
        Some(other) => {
            return Err(invalid(
                "regular.family",
                format!("unknown family {other:?} (expected catalog, norm-cap or whole-domain)"),
            ))
        }
    };

    let l = raw.ladders;
    let ladders = LadderConfig {
        horizon: positive("T", l.horizon.unwrap_or(entry.horizon))?,
        dt0: positive("dt0", l.dt0.unwrap_or(entry.dt0))?,
        dt_depth: l.dt_depth.unwrap_or(DEFAULT_DT_DEPTH),
        rho_local: l.rho_local.map(|v| positive("rho_local", v)).transpose()?,
        rho: l.rho.map(|v| positive("rho", v)).transpose()?,
        rho0: l.rho0.map(|v| positive("rho0", v)).transpose()?,
        rho_depth: l.rho_depth.unwrap_or(DEFAULT_RHO_DEPTH),
        theta: nonnegative("theta", l.theta.unwrap_or(DEFAULT_THETA))?,
        time_points: l.time_points.unwrap_or(DEFAULT_TIME_POINTS),
    };
    if ladders.time_points == 0 {
        return Err(invalid("time_points", "must be positive"));
    }

    let t = raw.tolerances;
    let dt = Tolerances::default();
    let tolerances = Tolerances {
        consistency: positive(
            "tolerances.consistency",
            t.consistency.unwrap_or(dt.consistency),
        )?,
        convergence: positive(
            "tolerances.convergence",
            t.convergence.unwrap_or(dt.convergence),
        )?,
        roundoff: nonnegative("tolerances.roundoff", t.roundoff.unwrap_or(dt.roundoff))?,
        growth: nonnegative("tolerances.growth", t.growth.unwrap_or(dt.growth))?,
        stability_cap: positive(
            "tolerances.stability_cap",
            t.stability_cap.unwrap_or(dt.stability_cap),
        )?,
        divergence_cap: positive(
            "tolerances.divergence_cap",
            t.divergence_cap.unwrap_or(dt.divergence_cap),
        )?,
        min_order: nonnegative("tolerances.min_order", t.min_order.unwrap_or(dt.min_order))?,
        min_pairs: t.min_pairs.unwrap_or(dt.min_pairs),
        gap_tau: nonnegative("tolerances.gap_tau", t.gap_tau.unwrap_or(dt.gap_tau))?,
        q_min: nonnegative("tolerances.q_min", t.q_min.unwrap_or(dt.q_min))?,
        fit_residual: positive(
            "tolerances.fit_residual",
            t.fit_residual.unwrap_or(dt.fit_residual),
        )?,
        slack: t.slack.unwrap_or(dt.slack),
    };
    if !(tolerances.slack.is_finite() && tolerances.slack >= 1.0) {
        return Err(invalid(
            "tolerances.slack",
            format!("must be at least 1, got {}", tolerances.slack),
        ));
    }

    Ok(ExperimentConfig {
        problem,
        method,
        params,
        norm,
        cloud,
        seed: s.seed.unwrap_or(DEFAULT_SEED),
        family,
        ladders,
        tolerances,
        output: OutputConfig {
            dir: raw.output.dir,
            format: raw.output.format.unwrap_or_default(),
        },
    })
}
