use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("wavelength {lambda_um} um outside the validity window [{min_um}, {max_um}] um")]
    WavelengthOutOfRange {
        lambda_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("evanescent wave: {0}")]
    Evanescent(&'static str),

    #[error("not phase-matchable: {0}")]
    NotPhaseMatchable(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("unsupported combination: {0}")]
    Unsupported(&'static str),

    #[error("numerical derivative did not converge for {what}: observed order {observed_order:.3}, difference {difference:.3e}")]
    Derivative {
        what: String,
        observed_order: f64,
        difference: f64,
    },

    #[error(
        "quadrature not converged: {coarse:.9e} vs {refined:.9e} (relative change {relative:.3e})"
    )]
    Quadrature {
        coarse: f64,
        refined: f64,
        relative: f64,
    },

    #[error("objective evaluation failed: {0}")]
    Objective(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
