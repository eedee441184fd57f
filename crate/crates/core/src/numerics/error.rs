use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("unknown precision level `{0}` (expected double, dd, qd, mp:<bits> or auto)")]
    UnknownPrecision(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("eigenvalues nearly degenerate: min gap 2^{log2_gap:.1} vs spectral radius 2^{log2_radius:.1}")]
    NearDegenerate { log2_gap: f64, log2_radius: f64 },
    #[error("eigenvector matrix too ill-conditioned: log2 cond {log2_cond:.1} exceeds cap {log2_cap:.1}")]
    IllConditioned { log2_cond: f64, log2_cap: f64 },
    #[error("characteristic polynomial not palindromic: relative residual {residual:e} > {tolerance:e}")]
    NotPalindromic { residual: f64, tolerance: f64 },
    #[error("QR iteration did not converge after {iterations} iterations (active block {active})")]
    NoConvergence { iterations: usize, active: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}
