//! Contracts for exact semigroups, one-step methods and the families of sets
//! they act on.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cloud::CompactCloud;
use crate::error::{Error, Result};
use crate::space::{NormSpec, State};

/// An exact evolution `E(t)` together with its blow-up domains `X_t`.
///
/// `in_domain(t, u)` must be nested: membership at `t + s` implies membership
/// at `t`, and every state belongs to the domain at `t = 0`.
pub trait Flow: Send + Sync + fmt::Debug {
    /// Evaluates `E(t)u`. Only called for `u` inside the domain at `t`.
    fn evolve(&self, t: f64, u: &[f64]) -> Vec<f64>;

    fn in_domain(&self, _t: f64, _u: &[f64]) -> bool {
        true
    }

    fn is_linear(&self) -> bool {
        false
    }
}

/// A one-step map `(dt, u) -> C_dt u`.
pub trait Scheme: Send + Sync + fmt::Debug {
    fn apply(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>>;

    fn is_linear(&self) -> bool {
        false
    }
}

#[derive(Clone)]
pub struct Problem {
    name: String,
    dim: usize,
    norm: NormSpec,
    flow: Arc<dyn Flow>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("norm", &self.norm)
            .finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, norm: NormSpec, flow: Arc<dyn Flow>) -> Result<Self> {
        Ok(Problem {
            name: name.into(),
            dim: norm.dim,
            norm,
            flow,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn is_linear(&self) -> bool {
        self.flow.is_linear()
    }

    /// Same semigroup measured in a different norm.
    pub fn with_norm(&self, norm: NormSpec) -> Result<Self> {
        norm.check_dim(self.dim)?;
        Ok(Problem {
            norm,
            ..self.clone()
        })
    }

    pub fn in_domain(&self, t: f64, u: &State) -> bool {
        u.dim() == self.dim && self.flow.in_domain(t, u.coords())
    }

    pub(crate) fn in_domain_raw(&self, t: f64, u: &[f64]) -> bool {
        self.flow.in_domain(t, u)
    }

    /// `E(t)u`, checked against the domain `X_t`.
    pub fn exact(&self, t: f64, u: &State) -> Result<State> {
        self.norm.check_dim(u.dim())?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::contract(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        if !self.flow.in_domain(t, u.coords()) {
            return Err(Error::DomainExit {
                t,
                step: None,
                context: format!("{}: initial state outside X_t", self.name),
            });
        }
        if t == 0.0 {
            return Ok(u.clone());
        }
        State::from_evaluation(self.flow.evolve(t, u.coords()))
    }
}

#[derive(Clone)]
pub struct Method {
    name: String,
    dim: usize,
    scheme: Arc<dyn Scheme>,
}

impl fmt::Debug for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Method")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl Method {
    pub fn new(name: impl Into<String>, dim: usize, scheme: Arc<dyn Scheme>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::contract("method dimension must be positive"));
        }
        Ok(Method {
            name: name.into(),
            dim,
            scheme,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_linear(&self) -> bool {
        self.scheme.is_linear()
    }

    /// One step `C_dt u`. `C_0` is the identity regardless of the scheme.
    pub fn step(&self, dt: f64, u: &State) -> Result<State> {
        if u.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: u.dim(),
            });
        }
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::contract(format!(
                "step size must be finite and nonnegative, got {dt}"
            )));
        }
        if dt == 0.0 {
            return Ok(u.clone());
        }
        State::from_evaluation(self.scheme.apply(dt, u.coords())?)
    }

    /// Unchecked-dimension step on raw coordinates for hot loops.
    pub(crate) fn step_raw(&self, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
        if dt == 0.0 {
            return Ok(u.to_vec());
        }
        let out = self.scheme.apply(dt, u)?;
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::BlowupDetected { step: None });
        }
        Ok(out)
    }
}

/// Affine cap `M(t) = base + slope * t` on the norm. A nonpositive slope keeps
/// the sublevel sets nested in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapSpec {
    pub base: f64,
    pub slope: f64,
}

impl CapSpec {
    pub fn constant(base: f64) -> Result<Self> {
        CapSpec::affine(base, 0.0)
    }

    pub fn affine(base: f64, slope: f64) -> Result<Self> {
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::contract("cap base must be positive"));
        }
        if !(slope.is_finite() && slope <= 0.0) {
            return Err(Error::contract(
                "cap slope must be nonpositive so the family stays nested",
            ));
        }
        Ok(CapSpec { base, slope })
    }

    pub fn at(&self, t: f64) -> f64 {
        self.base + self.slope * t
    }
}

type Predicate = Arc<dyn Fn(f64, &[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
enum Rule {
    Domain,
    NormCap(CapSpec),
    Predicate(Predicate),
}

/// The slices `X'_t` of a candidate regular set. Membership always implies
/// membership in the owning problem's domain `X_t`.
#[derive(Clone)]
pub struct RegularFamily {
    problem: Problem,
    rule: Rule,
    description: String,
}

impl fmt::Debug for RegularFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegularFamily")
            .field("problem", &self.problem.name)
            .field("description", &self.description)
            .finish()
    }
}

impl RegularFamily {
    /// `X'_t = X_t`.
    pub fn whole_domain(problem: &Problem) -> Self {
        RegularFamily {
            problem: problem.clone(),
            rule: Rule::Domain,
            description: "X'_t = X_t".to_string(),
        }
    }

    /// `X'_t = { u in X_t : norm(u) <= M(t) }`.
    pub fn norm_cap(problem: &Problem, cap: CapSpec) -> Self {
        let description = if cap.slope == 0.0 {
            format!("X'_t = {{u in X_t : norm(u) <= {}}}", cap.base)
        } else {
            format!(
                "X'_t = {{u in X_t : norm(u) <= {} + ({})t}}",
                cap.base, cap.slope
            )
        };
        RegularFamily {
            problem: problem.clone(),
            rule: Rule::NormCap(cap),
            description,
        }
    }

    /// Arbitrary extra condition intersected with the domain. The caller is
    /// responsible for nestedness in `t`.
    pub fn predicate(
        problem: &Problem,
        description: impl Into<String>,
        pred: impl Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        RegularFamily {
            problem: problem.clone(),
            rule: Rule::Predicate(Arc::new(pred)),
            description: description.into(),
        }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn cap(&self) -> Option<CapSpec> {
        match self.rule {
            Rule::NormCap(c) => Some(c),
            _ => None,
        }
    }

    pub fn contains(&self, t: f64, u: &State) -> bool {
        u.dim() == self.problem.dim && self.contains_raw(t, u.coords())
    }

    pub(crate) fn contains_raw(&self, t: f64, u: &[f64]) -> bool {
        if !self.problem.in_domain_raw(t, u) {
            return false;
        }
        match &self.rule {
            Rule::Domain => true,
            Rule::NormCap(cap) => self.problem.norm.norm_of(u) <= cap.at(t),
            Rule::Predicate(p) => p(t, u),
        }
    }
}

/// `norm(E(t+s)u - E(t)E(s)u)`.
pub fn semigroup_law_residual(p: &Problem, t: f64, s: f64, u: &State) -> Result<f64> {
    let tag = |which: &str, e: Error| match e {
        Error::DomainExit { t, step, .. } => Error::DomainExit {
            t,
            step,
            context: format!("{}: evaluation of {which} left its domain", p.name()),
        },
        other => other,
    };
    let whole = p.exact(t + s, u).map_err(|e| tag("E(t+s)u", e))?;
    let half = p.exact(s, u).map_err(|e| tag("E(s)u", e))?;
    let composed = p.exact(t, &half).map_err(|e| tag("E(t)E(s)u", e))?;
    p.norm().distance(&whole, &composed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbedMap {
    Exact,
    Method,
}

/// One failed forward-invariance check. For the exact map `lag` is `t` and
/// `target` is `s`; for the method `lag` is `dt` and `target` is `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityViolation {
    pub map: ProbedMap,
    pub lag: f64,
    pub target: f64,
    pub point: usize,
    pub reason: String,
}

/// Empirical forward-invariance check of `X'` under `E(t)` and `C_dt` on a
/// uniform time grid of `time_points + 1` instants in `[0, horizon]`.
pub fn regularity_probe(
    guard: &RegularFamily,
    method: &Method,
    horizon: f64,
    sample: &CompactCloud,
    dt_ladder: &[f64],
    time_points: usize,
) -> Vec<RegularityViolation> {
    let p = guard.problem();
    let times: Vec<f64> = if horizon <= 0.0 || time_points == 0 {
        vec![0.0]
    } else {
        (0..=time_points)
            .map(|j| horizon * j as f64 / time_points as f64)
            .collect()
    };
    let fits = |x: f64| x <= horizon * (1.0 + 1e-12);
    let mut out = Vec::new();

    for &t in &times {
        for &s in &times {
            if !fits(t + s) {
                continue;
            }
            for (ix, u) in sample.points().iter().enumerate() {
                if !guard.contains(t + s, u) {
                    continue;
                }
                match p.exact(t, u) {
                    Ok(w) if guard.contains(s, &w) => {}
                    Ok(_) => out.push(RegularityViolation {
                        map: ProbedMap::Exact,
                        lag: t,
                        target: s,
                        point: ix,
                        reason: "E(t)u left X'_s".into(),
                    }),
                    Err(e) => out.push(RegularityViolation {
                        map: ProbedMap::Exact,
                        lag: t,
                        target: s,
                        point: ix,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }

    for &dt in dt_ladder {
        for &t in &times {
            if !fits(t + dt) {
                continue;
            }
            for (ix, u) in sample.points().iter().enumerate() {
                if !guard.contains(t + dt, u) {
                    continue;
                }
                match method.step(dt, u) {
                    Ok(w) if guard.contains(t, &w) => {}
                    Ok(_) => out.push(RegularityViolation {
                        map: ProbedMap::Method,
                        lag: dt,
                        target: t,
                        point: ix,
                        reason: "C_dt u left X'_t".into(),
                    }),
                    Err(e) => out.push(RegularityViolation {
                        map: ProbedMap::Method,
                        lag: dt,
                        target: t,
                        point: ix,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    out
}

/// Largest jump of `C` under a perturbation of size `h` in `dt` or in any
/// single coordinate of `u`. Small for continuous schemes.
pub fn step_continuity_jump(
    method: &Method,
    norm: &NormSpec,
    dt: f64,
    u: &State,
    h: f64,
) -> Result<f64> {
    let base = method.step(dt, u)?;
    let mut jump = norm.distance(&method.step(dt + h, u)?, &base)?;
    for i in 0..u.dim() {
        let mut c = u.coords().to_vec();
        c[i] += h;
        let moved = method.step(dt, &State::new(c)?)?;
        jump = jump.max(norm.distance(&moved, &base)?);
    }
    Ok(jump)
}
