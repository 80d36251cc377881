use thiserror::Error;

use crate::exterior::Multivector;

/// A violated hypothesis on the input triple (theta, epsilon, Omega).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Hypothesis {
    #[error("theta is not nilpotent")]
    ThetaNotNilpotent,
    #[error("Omega is zero")]
    OmegaZero,
    #[error("Omega is not homogeneous of grade 2")]
    OmegaNotGradeTwo,
    #[error("theta(Omega) is nonzero: {0}")]
    ThetaOmegaNonzero(Multivector),
    #[error("Omega lies in the image of theta")]
    OmegaInImageTheta,
    #[error("epsilon has length {got}, expected {expected}")]
    EpsilonLength { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("grade {grade} out of range 0..={dim}")]
    GradeOutOfRange { grade: usize, dim: usize },
    #[error("hypothesis violated: {0}")]
    Hypothesis(#[from] Hypothesis),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Jacobi identity fails on basis triples {0:?}")]
    Jacobi(Vec<(usize, usize, usize)>),
    #[error("map is not a derivation of the algebra")]
    NotDerivation,
    #[error("map is not nilpotent")]
    NotNilpotent,
    #[error("2-form is not closed")]
    NotClosed,
    #[error("form is not a cocycle")]
    NotCocycle,
    #[error("selector has {got} pairs, decomposition has {expected} blocks")]
    SelectorSize { expected: usize, got: usize },
    #[error("vector does not lie in the required subspace: {0}")]
    NotInSubspace(&'static str),
    #[error("resample budget exhausted after {0} attempts")]
    ResampleBudget(usize),
    #[error("case/context mismatch: {0}")]
    CaseMismatch(String),
    #[error("internal assertion failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
