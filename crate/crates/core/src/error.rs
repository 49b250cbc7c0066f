use thiserror::Error;

/// Errors produced by constructions, evolution and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("step too large at site {n}: |V/sin(pi k)| = {ratio} >= 1/2")]
    StepTooLarge { n: u64, ratio: f64 },

    #[error("phase setter singular: theta_current = {theta_current}, theta_target = {theta_target}")]
    PhaseSetterSingular { theta_current: f64, theta_target: f64 },

    #[error("phase lock lost at period {m}: theta = {theta}")]
    PhaseLockLost { m: u64, theta: f64 },

    #[error("degenerate period {m}: solved numerator {a_minus} for nominal {a}")]
    DegeneratePeriod { m: u64, a_minus: f64, a: f64 },

    #[error("construction impossible: {0}")]
    ConstructionImpossible(String),

    #[error("segment ({n0}, {n1}) too short: contraction {achieved:e} exceeds target {target:e}")]
    SegmentTooShort {
        n0: u64,
        n1: u64,
        achieved: f64,
        target: f64,
    },

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("numeric failure at site {n}")]
    NumericFailure { n: u64 },

    #[error("insufficient samples: {found} in range, {required} required")]
    InsufficientSamples { found: usize, required: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
