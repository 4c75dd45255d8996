use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("site {site} is outside a {width}x{height} lattice")]
    SiteOutOfBounds {
        site: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("q = {0} is outside [0, 1]")]
    QOutOfRange(f64),

    #[error("rate ratios undefined: {0}")]
    UndefinedRatios(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice with {sites} sites exceeds the exact-oracle limit of {max} sites")]
    LatticeTooLarge { sites: usize, max: usize },

    #[error("chain is not irreducible; closed classes: {closed_classes:?}")]
    Reducible { closed_classes: Vec<Vec<usize>> },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("timeline does not cover the requested region: {0}")]
    InsufficientCoverage(String),

    #[error("symbol outside timeline region: {0}")]
    SymbolOutsideRegion(String),

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
