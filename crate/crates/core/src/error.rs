use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A function being differentiated or integrated returned a non-finite value.
    #[error("non-finite value at E = {energy} eV")]
    NonFinite { energy: f64 },

    /// The sign-selected flux has no weight at this position.
    #[error("no such flux: {sign} flux at x = {x} Å carries relative mass {relative_mass:e}")]
    NoSuchFlux {
        x: f64,
        sign: &'static str,
        relative_mass: f64,
    },

    #[error("phase unwrapping failed near E = {energy} eV (jump {jump} rad)")]
    PhaseUnwrap { energy: f64, jump: f64 },

    #[error("two-phase branch resolution failed: reconstruction residual {residual:e}")]
    BranchResolution { residual: f64 },

    #[error("did not converge: {0}")]
    Convergence(String),

    /// The two forms of the dwell time disagree beyond tolerance.
    #[error("dwell forms disagree: space-time {space_time} fs vs flux-moment {flux_moment} fs")]
    DwellMismatch { space_time: f64, flux_moment: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
