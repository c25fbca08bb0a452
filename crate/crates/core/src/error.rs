use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block sizes must be positive, got {0:?}")]
    InvalidBlocks(Vec<usize>),

    #[error("density of block {block} is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NonPositiveDensity { block: usize, min_eigenvalue: f64 },

    #[error("1-form condition fails on block {block}: Tr(rho^-1) = {trace_inverse}")]
    OneFormViolation { block: usize, trace_inverse: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("operands live on different quantum spaces")]
    SpaceMismatch,

    #[error("map is not a quantum Schur idempotent (residual {residual:.3e})")]
    NotSchurIdempotent { residual: f64 },

    #[error("classical adjacency entry ({row}, {col}) = {value} is not 0 or 1")]
    NonBinaryEntries { row: usize, col: usize, value: f64 },

    #[error("operators for block pair ({from} -> {to}) are not orthonormal (Gram residual {residual:.3e})")]
    BasisNotOrthonormal {
        from: usize,
        to: usize,
        residual: f64,
    },

    #[error("random model QG({n}, {d}) needs n >= 2 and 0 <= d <= n^2 - 1")]
    DimensionOutOfRange { n: usize, d: usize },

    #[error("map is not completely positive (Choi matrix min eigenvalue {min_eigenvalue:.3e}, hermitian residual {hermitian_residual:.3e})")]
    NotCompletelyPositive {
        min_eigenvalue: f64,
        hermitian_residual: f64,
    },

    #[error("quantum graph is not undirected (KMS symmetry residual {residual:.3e})")]
    NotUndirected { residual: f64 },

    #[error("quantum graph is not GNS symmetric (residual {residual:.3e})")]
    NotGnsSymmetric { residual: f64 },

    #[error("quantum graph is not connected")]
    NotConnected,

    #[error("connectivity methods disagree: {first} says {first_verdict}, {second} says {second_verdict}")]
    MethodDisagreement {
        first: String,
        first_verdict: String,
        second: String,
        second_verdict: String,
    },

    #[error("KMS implementation of f is not a unital *-homomorphism ({what} residual {residual:.3e})")]
    NotAHomomorphismOfAlgebras { what: &'static str, residual: f64 },

    #[error("element is not a projection (residual {residual:.3e})")]
    NotAProjection { residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
