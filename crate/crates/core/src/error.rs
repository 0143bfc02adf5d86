use thiserror::Error;

/// Errors raised by kernel construction, law evaluation and the numerical drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight {weight} on edge ({from}, {to})")]
    InvalidWeight { from: usize, to: usize, weight: f64 },

    #[error("edge ({from}, {to}) points outside a finite kernel with {sites} sites")]
    TargetOutOfRange { from: usize, to: usize, sites: usize },

    #[error("row {site} sums to {sum}, above the declared bound {bound}")]
    RowBound { site: usize, sum: f64, bound: f64 },

    #[error("site {site} lies outside the window of {size} sites")]
    SiteOutsideWindow { site: usize, size: usize },

    #[error("window must contain at least one site")]
    EmptyWindow,

    #[error("invalid site vector: {0}")]
    InvalidVector(String),

    #[error("offspring law of type {site} carries mass {mass}, expected 1")]
    LawMass { site: usize, mass: f64 },

    #[error("map is not monotone: step {iteration} moved site {site} by {delta:e} against the iteration direction")]
    NotMonotone {
        iteration: usize,
        site: usize,
        delta: f64,
    },

    #[error("newton step failed: {0}")]
    Newton(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("kernel file: {0}")]
    KernelFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
