//! Data preparation: image patches, PCA whitening, synthetic Gaussians, file IO.

pub mod io;
mod patches;
mod synth;
mod whiten;

pub use patches::{extract_patches, Image, PatchConfig};
pub use synth::{synth_gaussian, CovarianceSpec};
pub use whiten::{apply_whiten, fit_whiten, invert_whiten, WhitenTransform};
