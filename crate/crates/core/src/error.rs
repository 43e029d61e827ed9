use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has a non-finite coordinate")]
    NonFinite,

    /// An evaluation left its domain (exact flow) or its regular family (iterate guard).
    #[error("domain exit at t = {t}{}: {context}", step_suffix(*.step))]
    DomainExit {
        t: f64,
        step: Option<usize>,
        context: String,
    },

    #[error("blow-up detected{}: result is not finite", step_suffix(*.step))]
    BlowupDetected { step: Option<usize> },

    #[error("no admissible samples for {what}")]
    EmptySample { what: String },

    #[error("contract violation: {0}")]
    Contract(String),
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(p) => format!(" after step {p}"),
        None => String::new(),
    }
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn with_step(self, p: usize) -> Self {
        match self {
            Error::DomainExit { t, context, .. } => Error::DomainExit {
                t,
                step: Some(p),
                context,
            },
            Error::BlowupDetected { .. } => Error::BlowupDetected { step: Some(p) },
            other => other,
        }
    }
}
