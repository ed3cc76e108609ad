use thiserror::Error;

use crate::tensor::Shape3;

/// Errors produced by the tensor algebra, the solvers and the denoising pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: {left} vs {right}")]
    Shape {
        op: &'static str,
        left: Shape3,
        right: Shape3,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("imaginary residue {residue:.3e} exceeds tolerance {tolerance:.1e}; spectral tensor is not conjugate-symmetric")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("dictionary is identically zero; step size is undefined")]
    ZeroDictionary,

    #[error("coefficient solver diverged at iteration {iteration} (objective {objective})")]
    Divergence { iteration: usize, objective: f64 },

    #[error("singular system in spectral slice {slice}; add a positive dual floor to regularize")]
    RankDeficient { slice: usize },

    #[error("coefficients are identically zero; the dictionary is unidentifiable")]
    Unidentifiable,

    #[error("numerical consistency failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: Shape3, right: Shape3) -> Self {
        Error::Shape { op, left, right }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
