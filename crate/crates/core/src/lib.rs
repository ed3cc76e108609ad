//! Tensor sparse coding for 3D seismic denoising.
//!
//! Third-order tensors are multiplied with the t-product (circular
//! convolution along the third mode). A dictionary `D` and sparse codes
//! `X` are learned by alternating ISTA-T on the codes with a Lagrange-dual
//! Newton solve on the dictionary.

pub mod dual;
pub mod error;
pub mod ista;
mod linalg;
pub mod pipeline;
pub mod synth;
pub mod tensor;

pub use dual::{learn_dictionary, DictionaryStatistics, DualState};
pub use error::{Error, Result};
pub use ista::{ista_t_solve, LipschitzRule, SolverConfig};
pub use pipeline::{add_noise, denoise, extract_patches, reconstruct, snr_db, PatchGrid, Volume};
pub use tensor::{tprod, Shape3, SpectralTensor, Tensor3};
