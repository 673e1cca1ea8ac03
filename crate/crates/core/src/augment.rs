//! Exposure augmentation: random intensity scales drawn uniformly on a log
//! scale, `log_β ξ ~ U(−1, 1)`, so that ξ ∈ [1/β, β] and ξ, 1/ξ are equally
//! likely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{Rgb, Spectrum};

/// Identifier of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "chacha8";

pub const DEFAULT_BETA: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct ExposureSampler {
    beta: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ExposureSampler {
    pub fn new(beta: f64, seed: u64) -> Result<Self> {
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::Argument(format!("augmentation base {beta} must exceed 1")));
        }
        Ok(Self {
            beta,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_xi(&mut self) -> f64 {
        let u: f64 = self.rng.gen_range(-1.0..=1.0);
        self.beta.powf(u).clamp(1.0 / self.beta, self.beta)
    }

    /// Scales a consistent (RGB, spectrum) pair by one fresh draw.
    pub fn augment_pair(&mut self, rho: Rgb, r: &Spectrum) -> (Rgb, Spectrum, f64) {
        let xi = self.sample_xi();
        let (rho, r) = scale_pair(rho, r, xi);
        (rho, r, xi)
    }
}

pub(crate) fn scale_pair(rho: Rgb, r: &Spectrum, xi: f64) -> (Rgb, Spectrum) {
    let scaled = Spectrum::new(*r.grid(), r.values().iter().map(|v| v * xi).collect())
        .expect("scaling a finite spectrum by a finite factor");
    (Rgb(rho.0.map(|v| v * xi)), scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plausible::NullSpaceModel;
    use crate::spectral::{form_rgb, SensitivitySet};

    #[test]
    fn samples_stay_in_bounds() {
        let mut s = ExposureSampler::new(10.0, 7).unwrap();
        for _ in 0..10_000 {
            let xi = s.sample_xi();
            assert!((0.1..=10.0).contains(&xi), "{xi}");
        }
    }

    #[test]
    fn reseeding_reproduces_sequence() {
        let mut a = ExposureSampler::new(10.0, 42).unwrap();
        let mut b = ExposureSampler::new(10.0, 42).unwrap();
        let mut c = ExposureSampler::new(10.0, 43).unwrap();
        let xa: Vec<f64> = (0..100).map(|_| a.sample_xi()).collect();
        let xb: Vec<f64> = (0..100).map(|_| b.sample_xi()).collect();
        let xc: Vec<f64> = (0..100).map(|_| c.sample_xi()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn invalid_beta() {
        for beta in [1.0, 0.5, -2.0, f64::NAN, f64::INFINITY] {
            assert!(ExposureSampler::new(beta, 0).is_err());
        }
    }

    #[test]
    fn unit_scale_is_identity() {
        let s = SensitivitySet::cie1964();
        let r = Spectrum::new(*s.grid(), (0..31).map(|i| 0.1 + i as f64 * 0.01).collect()).unwrap();
        let rho = form_rgb(&r, &s).unwrap();
        let (rho2, r2) = scale_pair(rho, &r, 1.0);
        assert_eq!(rho2, rho);
        assert_eq!(r2, r);
    }

    #[test]
    fn augmented_pairs_stay_consistent() {
        let s = SensitivitySet::cie1964();
        let model = NullSpaceModel::build(&s).unwrap();
        let mut sampler = ExposureSampler::new(10.0, 3).unwrap();
        for k in 0..50 {
            let r = Spectrum::new(
                *s.grid(),
                (0..31).map(|i| 0.2 + ((i * 7 + k) % 11) as f64 * 0.05).collect(),
            )
            .unwrap();
            let rho = form_rgb(&r, &s).unwrap();
            let base = model.extract_alpha(&r).unwrap();
            let (rho_x, r_x, xi) = sampler.augment_pair(rho, &r);
            let reformed = form_rgb(&r_x, &s).unwrap();
            for c in 0..3 {
                assert!((reformed[c] - rho_x[c]).abs() <= 1e-12 * rho_x[c].abs().max(1.0));
            }
            let scaled = model.extract_alpha(&r_x).unwrap();
            for (a, b) in scaled.alpha.iter().zip(&base.alpha) {
                assert!((a - xi * b).abs() <= 1e-12 * (xi * b).abs().max(1.0));
            }
        }
    }
}
