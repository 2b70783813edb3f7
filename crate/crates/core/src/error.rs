use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("closed-form-only source: an ideal solenoid cannot be discretized or used in {0}")]
    ClosedFormOnly(&'static str),

    #[error("near-singular evaluation: point lies {distance:.3e} from a wire segment (exclusion radius {exclusion:.3e})")]
    NearSingular { distance: f64, exclusion: f64 },

    #[error("tail bound exceeded: estimated axial tail {estimate:.3e} > bound {bound:.3e}")]
    TailBoundExceeded { estimate: f64, bound: f64 },

    #[error("unsupported gauge function: {0}")]
    UnsupportedGaugeFunction(String),

    #[error("unsupported path: {0}")]
    UnsupportedPath(String),

    #[error("grid is not symmetric under k -> -k")]
    AsymmetricGrid,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
