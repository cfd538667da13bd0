//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong when building states, decompositions,
/// observables, or run configurations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },

    #[error("{what} needs {expected} entries, got {got}")]
    BadShape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hermitian: max |m - m†| entry = {0:.3e}")]
    NotHermitian(f64),

    #[error("trace = {0:?}, expected 1")]
    BadTrace(num_complex::Complex<f64>),

    #[error("matrix is not positive semidefinite: min eigenvalue = {0:.3e}")]
    NotPositive(f64),

    #[error("state vector has squared norm {0}, expected 1")]
    NotNormalized(f64),

    #[error("Bloch vector has norm {0}, expected 1")]
    NotUnitBloch(f64),

    #[error("decomposition term {index} has negative weight {weight}")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("decomposition weights sum to {0}, expected 1")]
    BadWeightSum(f64),

    #[error("decomposition has no terms with nonzero weight")]
    EmptyDecomposition,

    #[error("decomposition does not reproduce its state: Frobenius error = {0:.3e}")]
    BadReconstruction(f64),

    #[error("split evaluation requires d = c, got distinct observables")]
    SplitNeedsEqualSettings,

    #[error("split index {index} outside 1..={terms}")]
    BadSplitIndex { index: usize, terms: usize },

    #[error("ordering is not a permutation of 0..{0}")]
    BadOrdering(usize),

    #[error("bad optimizer configuration: {0}")]
    BadConfig(String),

    #[error("bad sweep: {0}")]
    BadSweep(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
