//! Empirical stability, consistency and convergence analysis for one-step
//! methods approximating nonlinear semigroups with blow-up domains.
//!
//! Compact sets are finite [`CompactCloud`]s and every "for all dt > 0" is a
//! geometric [`Ladder`] of step sizes, so each estimate is exact over the
//! sample and a lower bound for the continuum quantity.

pub mod analysis;
pub mod cloud;
pub mod error;
pub mod estimators;
pub mod model;
pub mod problems;
pub mod space;

pub use cloud::{CloudGenerator, CompactCloud};
pub use error::{Error, Result};
pub use estimators::Ladder;
pub use model::{CapSpec, Flow, Method, Problem, RegularFamily, Scheme};
pub use space::{NormKind, NormSpec, State};
