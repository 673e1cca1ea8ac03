//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every function works on the bundled CIE 1964 10° observer. Spectra cross
//! the boundary as flat `Float64Array`s sampled on [`wavelengths`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use specrec::augment::ExposureSampler;
use specrec::metrics::{delta_e, xyz_to_lab, WhitePoint};
use specrec::{form_rgb, NullSpaceModel, Rgb, SensitivitySet, Spectrum};

fn to_js(e: specrec::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn model() -> (SensitivitySet, NullSpaceModel) {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).expect("bundled sensitivities have full rank");
    (s, nm)
}

fn rgb(values: &[f64]) -> specrec::Result<Rgb> {
    Rgb::from_slice(values)
}

#[wasm_bindgen]
pub fn wavelengths() -> Vec<f64> {
    SensitivitySet::cie1964().grid().wavelengths().collect()
}

/// The fundamental spectrum of `xyz` followed by `count` random members of
/// its plausible set, each `bands` long. Null-space coordinates are drawn
/// uniformly from `[-spread, spread]`.
pub fn plausible_members(xyz: &[f64], count: usize, spread: f64, seed: u64) -> specrec::Result<Vec<f64>> {
    let (_, nm) = model();
    let rho = rgb(xyz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = nm.fundamental_spectrum(rho).into_values();
    for _ in 0..count {
        let alpha: Vec<f64> = (0..nm.null_dim())
            .map(|_| if spread > 0.0 { rng.gen_range(-spread..=spread) } else { 0.0 })
            .collect();
        out.extend(nm.reconstruct(rho, &alpha)?.into_values());
    }
    Ok(out)
}

/// Tristimulus values of a spectrum.
pub fn integrate(values: &[f64]) -> specrec::Result<Vec<f64>> {
    let s = SensitivitySet::cie1964();
    let r = Spectrum::new(*s.grid(), values.to_vec())?;
    Ok(form_rgb(&r, &s)?.0.to_vec())
}

/// Counts of `log_β ξ` over `bins` equal bins of [-1, 1].
pub fn exposure_histogram(beta: f64, draws: usize, bins: usize, seed: u64) -> specrec::Result<Vec<f64>> {
    if bins == 0 {
        return Err(specrec::Error::Argument("at least one bin is needed".into()));
    }
    let mut sampler = ExposureSampler::new(beta, seed)?;
    let mut counts = vec![0.0; bins];
    for _ in 0..draws {
        let u = sampler.sample_xi().ln() / beta.ln();
        let bin = (((u + 1.0) / 2.0) * bins as f64).floor() as usize;
        counts[bin.min(bins - 1)] += 1.0;
    }
    Ok(counts)
}

/// `[L1, a1, b1, L2, a2, b2, ΔE]` for two XYZ colours under white point `wp`.
pub fn lab_difference(xyz1: &[f64], xyz2: &[f64], wp: &[f64]) -> specrec::Result<Vec<f64>> {
    let white = WhitePoint::new(rgb(wp)?.0)?;
    let a = xyz_to_lab(rgb(xyz1)?, &white);
    let b = xyz_to_lab(rgb(xyz2)?, &white);
    Ok(vec![a.l, a.a, a.b, b.l, b.a, b.b, delta_e(a, b)])
}

#[wasm_bindgen(js_name = plausibleMembers)]
pub fn plausible_members_js(xyz: &[f64], count: usize, spread: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    plausible_members(xyz, count, spread, seed.into()).map_err(to_js)
}

#[wasm_bindgen(js_name = integrate)]
pub fn integrate_js(values: &[f64]) -> Result<Vec<f64>, JsError> {
    integrate(values).map_err(to_js)
}

#[wasm_bindgen(js_name = exposureHistogram)]
pub fn exposure_histogram_js(beta: f64, draws: usize, bins: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    exposure_histogram(beta, draws, bins, seed.into()).map_err(to_js)
}

#[wasm_bindgen(js_name = labDifference)]
pub fn lab_difference_js(xyz1: &[f64], xyz2: &[f64], wp: &[f64]) -> Result<Vec<f64>, JsError> {
    lab_difference(xyz1, xyz2, wp).map_err(to_js)
}
