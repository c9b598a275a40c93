use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum L2tError {
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("symbolic determinant size {size} exceeds cap {cap}")]
    SymbolicCap { size: usize, cap: usize },
    #[error("point is off the unit torus (|z| = {modulus})")]
    OffTorus { modulus: f64 },
    #[error("twist parameter must be positive, got {0}")]
    NonPositiveTwist(f64),
    #[error("zero polynomial has no roots")]
    ZeroPolynomial,
    #[error("matrix is not unimodular: |det - 1| = {0}")]
    NotUnimodular(f64),
    #[error("representation is not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("determinant is identically zero")]
    ZeroDeterminant,
    #[error("complex is not weakly acyclic")]
    NotWeaklyAcyclic,
    #[error("matrix is not upper triangular")]
    NotUpperTriangular,
}

pub type Result<T> = std::result::Result<T, L2tError>;
