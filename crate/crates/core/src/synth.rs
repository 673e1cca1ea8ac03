//! Synthetic hyperspectral images.
//!
//! Each pixel is `floor + Σ_j w_j·G_j(λ) + noise`, where the `G_j` are
//! Gaussian bumps of 60 nm standard deviation centred evenly across the grid
//! and the weights `w_j` vary smoothly over the image. The weights are
//! normalized so that overall brightness stays within a narrow band per
//! image while the spectral shape varies freely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{HyperCube, SpectralGrid};

pub const BUMP_WIDTH_NM: f64 = 60.0;

// Number of random plane waves summed per smooth field.
const FIELD_WAVES: usize = 4;
// Highest spatial frequency, in cycles per image side.
const FIELD_MAX_FREQ: f64 = 1.5;
// Lower end of the normalized latent weights; keeps every bump present.
const LATENT_FLOOR: f64 = 0.1;
// Per-image brightness range and per-pixel brightness modulation.
const IMAGE_BRIGHTNESS: (f64, f64) = (0.8, 1.0);
const PIXEL_BRIGHTNESS_SPREAD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_images: usize,
    pub height: usize,
    pub width: usize,
    /// Number of latent spectral components.
    pub latent_dim: usize,
    /// Amplitude of the smooth spectral noise relative to the signal scale.
    pub noise_level: f64,
    /// Minimum radiance of every sample.
    pub floor: f64,
    /// Overall radiance scale of the bump mixture.
    pub amplitude: f64,
    pub grid: SpectralGrid,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_images: 20,
            height: 16,
            width: 16,
            latent_dim: 4,
            noise_level: 0.01,
            floor: 1e-4,
            amplitude: 1.0,
            grid: SpectralGrid::visible(),
            seed: 2024,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be at least 1".into()));
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(Error::Config("floor must be positive".into()));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::Config("noise_level must be nonnegative".into()));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::Config("amplitude must be positive".into()));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// The latent spectral shapes `G_j` sampled on `grid`.
pub fn latent_bumps(grid: &SpectralGrid, m: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = (grid.start_nm(), grid.end_nm());
    (0..m)
        .map(|j| {
            let centre = lo + (j as f64 + 0.5) * (hi - lo) / m as f64;
            grid.wavelengths()
                .map(|w| (-0.5 * ((w - centre) / BUMP_WIDTH_NM).powi(2)).exp())
                .collect()
        })
        .collect()
}

/// Low-frequency random field over the image, rescaled to [0, 1].
fn smooth_field(rng: &mut ChaCha8Rng, height: usize, width: usize) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..FIELD_WAVES)
        .map(|_| {
            (
                rng.gen_range(0.0..FIELD_MAX_FREQ),
                rng.gen_range(0.0..FIELD_MAX_FREQ),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let mut field: Vec<f64> = (0..height * width)
        .map(|idx| {
            let y = (idx / width) as f64 / height as f64;
            let x = (idx % width) as f64 / width as f64;
            waves
                .iter()
                .map(|(fx, fy, phase, amp)| amp * (std::f64::consts::TAU * (fx * x + fy * y) + phase).cos())
                .sum()
        })
        .collect();
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in &mut field {
        *v = if span > 1e-12 { (*v - lo) / span } else { 0.5 };
    }
    field
}

/// Deterministic set of synthetic cubes for `cfg.seed`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Vec<HyperCube>> {
    cfg.validate()?;
    let grid = cfg.grid;
    let n = grid.bands();
    let m = cfg.latent_dim;
    let bumps = latent_bumps(&grid, m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pixels = cfg.height * cfg.width;

    let mut cubes = Vec::with_capacity(cfg.num_images);
    for _ in 0..cfg.num_images {
        let fields: Vec<Vec<f64>> = (0..m)
            .map(|_| smooth_field(&mut rng, cfg.height, cfg.width))
            .collect();
        let brightness_field = smooth_field(&mut rng, cfg.height, cfg.width);
        let image_brightness = rng.gen_range(IMAGE_BRIGHTNESS.0..=IMAGE_BRIGHTNESS.1);

        let mut data = Vec::with_capacity(pixels * n);
        for p in 0..pixels {
            let latent: Vec<f64> = fields
                .iter()
                .map(|f| LATENT_FLOOR + (1.0 - LATENT_FLOOR) * f[p])
                .collect();
            let total: f64 = latent.iter().sum();
            let brightness = cfg.amplitude
                * image_brightness
                * (1.0 + PIXEL_BRIGHTNESS_SPREAD * (2.0 * brightness_field[p] - 1.0));
            let noise: [f64; 3] = if cfg.noise_level > 0.0 {
                [(); 3].map(|_| rng.gen_range(-1.0..=1.0))
            } else {
                [0.0; 3]
            };
            for i in 0..n {
                let t = i as f64 / (n - 1) as f64;
                let signal: f64 = latent
                    .iter()
                    .zip(&bumps)
                    .map(|(w, g)| w / total * g[i])
                    .sum::<f64>()
                    * brightness;
                let wiggle: f64 = noise
                    .iter()
                    .enumerate()
                    .map(|(q, c)| c * (std::f64::consts::PI * (q + 1) as f64 * t).sin() / (q + 1) as f64)
                    .sum::<f64>()
                    * cfg.noise_level
                    * cfg.amplitude;
                data.push((cfg.floor + signal + wiggle).max(cfg.floor));
            }
        }
        cubes.push(HyperCube::new(cfg.height, cfg.width, grid, data)?);
    }
    Ok(cubes)
}
