//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by numerical kernels, distribution code, and the fitting engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-finite input to {context}")]
    NonFinite { context: &'static str },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {asym:.3e})")]
    NotSymmetric { asym: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e}, max {max_eig:.3e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPd { min_eig: f64 },

    #[error("linear system is numerically singular (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    #[error("quadrature did not converge: relative gap {gap:.3e} after {nodes} nodes")]
    NonConvergent { gap: f64, nodes: usize },

    #[error("domain error in {context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    #[error("moment undefined for {family}: {which} requires {condition}")]
    MomentUndefined {
        family: &'static str,
        which: &'static str,
        condition: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty observed index set: every retained row needs at least one observed coordinate")]
    EmptyObservedSet,

    #[error("component {index} collapsed: effective size {size:.3} is below the minimum {min:.1}")]
    EmptyComponent { index: usize, size: f64, min: f64 },

    #[error("degenerate initialization: cluster {index} received {rows} rows, need at least {min}")]
    DegenerateInit {
        index: usize,
        rows: usize,
        min: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
