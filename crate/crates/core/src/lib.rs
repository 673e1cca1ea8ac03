//! Spectral reconstruction from camera RGB with a colorimetric guarantee.
//!
//! Reconstructions are expressed as a fixed fundamental spectrum plus a
//! combination of camera-invisible null-space vectors, so every recovered
//! spectrum reintegrates to exactly the RGB it came from. The crate also
//! provides exposure augmentation for training, small regressors, the
//! colour and spectral error metrics, binary file formats and a synthetic
//! dataset generator.

pub mod augment;
pub mod config;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod plausible;
pub mod regression;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use plausible::{NullSpaceModel, PlausibleDecomposition, Recentering};
pub use spectral::{
    form_rgb, form_rgb_image, scale_cube, scale_image, scale_rgb, scale_spectrum, HyperCube, Rgb,
    RgbImage, SensitivitySet, SpectralGrid, Spectrum,
};
