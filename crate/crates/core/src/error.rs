use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point payload `{found}` is not compatible with space `{space}`")]
    IncompatiblePoint { space: String, found: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("refusing {what}: {cost} kernel evaluations exceed the cap of {cap}")]
    CostCap {
        what: &'static str,
        cost: u128,
        cap: u128,
    },

    #[error("spectrum has a materially negative eigenvalue {min:e} (largest {max:e}); is the space of negative type?")]
    NegativeSpectrum { min: f64, max: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
