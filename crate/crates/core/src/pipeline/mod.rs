//! Volume-level denoising: patch tensorization, alternating dictionary
//! learning and reassembly.

mod denoise;
mod noise;
mod patches;
mod volume;

pub use denoise::{
    auto_beta, denoise, denoise_with, DenoiseOptions, DenoiseReport, Denoised, Dictionary,
    PhaseTimings, BETA_NOISE_FACTOR, DEAD_ATOM_ENERGY,
};
pub use noise::{add_noise, estimate_noise_sigma, snr_db};
pub use patches::{extract_patches, reconstruct, PatchGrid, DEFAULT_PATCH, DEFAULT_STRIDE};
pub use volume::Volume;
