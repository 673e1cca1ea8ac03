//! Spectral and colorimetric error metrics.
//!
//! Spectra are compared with the mean relative absolute error (MRAE); colours
//! with the CIE 1976 ΔE in CIELAB after normalizing by a white point. Both
//! are invariant to a common intensity scale of the compared pair.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::{form_rgb_image, HyperCube, Rgb, RgbImage, SensitivitySet, Spectrum};

/// Lower bound on the MRAE denominator.
pub const MRAE_EPSILON: f64 = 1e-6;

/// Maximum deviation of a pixel's chromaticity from (1/3, 1/3, 1/3) for it to
/// count as achromatic.
pub const NEUTRAL_THRESHOLD: f64 = 0.05;

pub const DEFAULT_WORST_K: usize = 1000;

const LAB_DELTA: f64 = 6.0 / 29.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoint {
    xyz: [f64; 3],
}

impl WhitePoint {
    pub fn new(xyz: [f64; 3]) -> Result<Self> {
        if xyz.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(Self { xyz })
        } else {
            Err(Error::Argument(format!("white point {xyz:?} must be positive")))
        }
    }

    pub fn xyz(&self) -> [f64; 3] {
        self.xyz
    }

    pub fn scaled(&self, xi: f64) -> Result<Self> {
        Self::new(self.xyz.map(|v| v * xi))
    }
}

/// How the white point of an image is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WhitePointSource {
    /// Brightest achromatic pixel of the ground-truth image.
    Auto,
    Fixed(WhitePoint),
}

impl FromStr for WhitePointSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(WhitePointSource::Auto);
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("white point '{s}' is not 'auto' or x,y,z")))?;
        match parts.as_slice() {
            [x, y, z] => Ok(WhitePointSource::Fixed(WhitePoint::new([*x, *y, *z])?)),
            _ => Err(Error::Config(format!("white point '{s}' needs three values"))),
        }
    }
}

/// Result of the automatic white-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePointChoice {
    pub white_point: WhitePoint,
    /// No pixel was close enough to neutral; the per-channel maximum was used.
    pub fallback: bool,
}

fn mrae_with_clamps(gt: &[f64], rec: &[f64]) -> Result<(f64, usize)> {
    if gt.len() != rec.len() {
        return Err(Error::Dimension(format!(
            "MRAE of spectra with {} and {} samples",
            gt.len(),
            rec.len()
        )));
    }
    if gt.is_empty() {
        return Err(Error::Argument("MRAE of empty spectra".into()));
    }
    let mut clamped = 0;
    let sum: f64 = gt
        .iter()
        .zip(rec)
        .map(|(g, r)| {
            let den = if *g < MRAE_EPSILON {
                clamped += 1;
                MRAE_EPSILON
            } else {
                *g
            };
            (g - r).abs() / den
        })
        .sum();
    Ok((sum / gt.len() as f64, clamped))
}

/// `(1/n) Σ |gt − rec| / max(gt, ε)`.
pub fn mrae(gt: &Spectrum, rec: &Spectrum) -> Result<f64> {
    mrae_with_clamps(gt.values(), rec.values()).map(|(v, _)| v)
}

fn lab_companding(t: f64) -> f64 {
    if t > LAB_DELTA.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * LAB_DELTA * LAB_DELTA) + 4.0 / 29.0
    }
}

/// CIEXYZ → CIELAB relative to `wp`.
pub fn xyz_to_lab(xyz: Rgb, wp: &WhitePoint) -> LabColor {
    let [fx, fy, fz] = [0, 1, 2].map(|k| lab_companding(xyz[k] / wp.xyz[k]));
    LabColor {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// CIE 1976 colour difference.
pub fn delta_e(lab1: LabColor, lab2: LabColor) -> f64 {
    ((lab1.l - lab2.l).powi(2) + (lab1.a - lab2.a).powi(2) + (lab1.b - lab2.b).powi(2)).sqrt()
}

/// Picks the brightest pixel whose chromaticity lies within
/// [`NEUTRAL_THRESHOLD`] of neutral grey.
pub fn auto_white_point(img: &RgbImage) -> Result<WhitePointChoice> {
    let mut best: Option<(f64, Rgb)> = None;
    let mut channel_max = [0.0_f64; 3];
    for px in img.pixels() {
        for k in 0..3 {
            channel_max[k] = channel_max[k].max(px[k]);
        }
        let sum = px.sum();
        if sum <= 0.0 || sum.is_nan() || px.0.iter().any(|v| *v < 0.0) {
            continue;
        }
        let deviation = px.0.iter().map(|v| (v / sum - 1.0 / 3.0).abs()).fold(0.0, f64::max);
        if deviation < NEUTRAL_THRESHOLD && best.is_none_or(|(s, _)| sum > s) {
            best = Some((sum, px));
        }
    }
    if let Some((_, px)) = best {
        return Ok(WhitePointChoice {
            white_point: WhitePoint::new(px.0)?,
            fallback: false,
        });
    }
    if channel_max.iter().all(|v| *v <= 0.0) {
        return Err(Error::Argument("cannot pick a white point from an all-zero image".into()));
    }
    Ok(WhitePointChoice {
        white_point: WhitePoint::new(channel_max)?,
        fallback: true,
    })
}

/// Mean of the `k` largest errors (all of them when fewer than `k`).
pub fn worst_case(errors: &[f64], k: usize) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Argument("worst case of no errors".into()));
    }
    if k == 0 {
        return Err(Error::Argument("worst-case count must be at least 1".into()));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k_eff = k.min(sorted.len());
    Ok(sorted[..k_eff].iter().sum::<f64>() / k_eff as f64)
}

/// Cross-model joint metric for one weight γ.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEta {
    pub eta: Vec<f64>,
    /// ΔE column had zero mean and entered unnormalized.
    pub de_unnormalized: bool,
    pub mrae_unnormalized: bool,
}

impl JointEta {
    /// Index of the model with the lowest η (first one on ties).
    pub fn best(&self) -> usize {
        self.eta
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if *v < bv { (i, *v) } else { (bi, bv) })
            .0
    }
}

/// `η = γ·ΔE' + (1 − γ)·MRAE'`, each metric divided by its mean over models.
pub fn joint_eta(de: &[f64], mrae: &[f64], gamma: f64) -> Result<JointEta> {
    if de.len() != mrae.len() {
        return Err(Error::Dimension(format!(
            "{} ΔE values and {} MRAE values",
            de.len(),
            mrae.len()
        )));
    }
    if de.len() < 2 {
        return Err(Error::Argument("joint metric needs at least two models".into()));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Argument(format!("gamma {gamma} outside [0, 1]")));
    }
    if de.iter().chain(mrae).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Argument("metric values must be finite and nonnegative".into()));
    }
    let normalize = |col: &[f64]| -> (Vec<f64>, bool) {
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        if mean > 0.0 {
            (col.iter().map(|v| v / mean).collect(), false)
        } else {
            (col.to_vec(), true)
        }
    };
    let (de_n, de_raw) = normalize(de);
    let (mrae_n, mrae_raw) = normalize(mrae);
    Ok(JointEta {
        eta: de_n
            .iter()
            .zip(&mrae_n)
            .map(|(d, m)| gamma * d + (1.0 - gamma) * m)
            .collect(),
        de_unnormalized: de_raw,
        mrae_unnormalized: mrae_raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorStats {
    pub mean_mrae: f64,
    pub wc_mrae: f64,
    pub mean_de: f64,
    pub wc_de: f64,
}

impl ErrorStats {
    fn mean_of(items: &[ErrorStats]) -> ErrorStats {
        let n = items.len().max(1) as f64;
        items.iter().fold(ErrorStats::default(), |acc, s| ErrorStats {
            mean_mrae: acc.mean_mrae + s.mean_mrae / n,
            wc_mrae: acc.wc_mrae + s.wc_mrae / n,
            mean_de: acc.mean_de + s.mean_de / n,
            wc_de: acc.wc_de + s.wc_de / n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureStats {
    pub xi: f64,
    pub stats: ErrorStats,
}

/// Mean and worst-case errors, averaged over images and then over exposures.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mean_mrae: f64,
    pub wc_mrae: f64,
    pub mean_de: f64,
    pub wc_de: f64,
    pub worst_k: usize,
    pub per_exposure: Vec<ExposureStats>,
    /// Ground-truth samples whose MRAE denominator was clamped.
    pub mrae_clamped: usize,
    /// Some image fell back to a per-channel-maximum white point.
    pub white_point_fallback: bool,
}

/// Column header matching [`MetricsReport::to_rows`].
pub const ROW_HEADER: &str = "model,xi,mean_mrae,wc_mrae,mean_de,wc_de,worst_k";

impl MetricsReport {
    pub fn stats(&self) -> ErrorStats {
        ErrorStats {
            mean_mrae: self.mean_mrae,
            wc_mrae: self.wc_mrae,
            mean_de: self.mean_de,
            wc_de: self.wc_de,
        }
    }

    pub fn exposure(&self, xi: f64) -> Option<&ErrorStats> {
        self.per_exposure.iter().find(|e| e.xi == xi).map(|e| &e.stats)
    }

    /// Combines per-image reports, grouped by exposure. Each inner report
    /// must cover a single exposure.
    pub fn aggregate(worst_k: usize, groups: &[(f64, Vec<MetricsReport>)]) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(|(_, g)| g.is_empty()) {
            return Err(Error::Argument("cannot aggregate an empty set of reports".into()));
        }
        let mut per_exposure = Vec::with_capacity(groups.len());
        let mut clamped = 0;
        let mut fallback = false;
        for (xi, reports) in groups {
            let stats: Vec<ErrorStats> = reports.iter().map(MetricsReport::stats).collect();
            clamped += reports.iter().map(|r| r.mrae_clamped).sum::<usize>();
            fallback |= reports.iter().any(|r| r.white_point_fallback);
            per_exposure.push(ExposureStats {
                xi: *xi,
                stats: ErrorStats::mean_of(&stats),
            });
        }
        let overall =
            ErrorStats::mean_of(&per_exposure.iter().map(|e| e.stats).collect::<Vec<_>>());
        Ok(Self {
            mean_mrae: overall.mean_mrae,
            wc_mrae: overall.wc_mrae,
            mean_de: overall.mean_de,
            wc_de: overall.wc_de,
            worst_k,
            per_exposure,
            mrae_clamped: clamped,
            white_point_fallback: fallback,
        })
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mean_mrae={:.12e}", self.mean_mrae);
        let _ = writeln!(out, "wc_mrae={:.12e}", self.wc_mrae);
        let _ = writeln!(out, "mean_de={:.12e}", self.mean_de);
        let _ = writeln!(out, "wc_de={:.12e}", self.wc_de);
        let _ = writeln!(out, "worst_k={}", self.worst_k);
        let _ = writeln!(out, "mrae_clamped={}", self.mrae_clamped);
        let _ = writeln!(out, "white_point_fallback={}", self.white_point_fallback);
        for e in &self.per_exposure {
            let s = e.stats;
            let _ = writeln!(out, "xi[{}].mean_mrae={:.12e}", e.xi, s.mean_mrae);
            let _ = writeln!(out, "xi[{}].wc_mrae={:.12e}", e.xi, s.wc_mrae);
            let _ = writeln!(out, "xi[{}].mean_de={:.12e}", e.xi, s.mean_de);
            let _ = writeln!(out, "xi[{}].wc_de={:.12e}", e.xi, s.wc_de);
        }
        out
    }

    /// One comma-separated row per exposure, without header.
    pub fn to_rows(&self, model: &str) -> String {
        let mut out = String::new();
        for e in &self.per_exposure {
            let s = e.stats;
            let _ = writeln!(
                out,
                "{model},{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                e.xi, s.mean_mrae, s.wc_mrae, s.mean_de, s.wc_de, self.worst_k
            );
        }
        out
    }
}

/// Per-pixel error rasters of one image pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelErrors {
    pub mrae: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub mrae_clamped: usize,
    pub white_point: WhitePointChoice,
}

pub fn pixel_errors(
    gt: &HyperCube,
    rec: &HyperCube,
    s: &SensitivitySet,
    wp: WhitePointSource,
) -> Result<PixelErrors> {
    if gt.height() != rec.height() || gt.width() != rec.width() {
        return Err(Error::Dimension(format!(
            "ground truth is {}x{}, reconstruction is {}x{}",
            gt.height(),
            gt.width(),
            rec.height(),
            rec.width()
        )));
    }
    gt.grid().ensure_same(rec.grid())?;
    if gt.pixel_count() == 0 {
        return Err(Error::Argument("cannot evaluate an empty image".into()));
    }
    let gt_rgb = form_rgb_image(gt, s)?;
    let rec_rgb = form_rgb_image(rec, s)?;
    let white_point = match wp {
        WhitePointSource::Auto => auto_white_point(&gt_rgb)?,
        WhitePointSource::Fixed(w) => WhitePointChoice {
            white_point: w,
            fallback: false,
        },
    };
    let mut clamped = 0;
    let mut mrae_px = Vec::with_capacity(gt.pixel_count());
    for (g, r) in gt.pixels().zip(rec.pixels()) {
        let (v, c) = mrae_with_clamps(g, r)?;
        clamped += c;
        mrae_px.push(v);
    }
    let de_px = gt_rgb
        .pixels()
        .zip(rec_rgb.pixels())
        .map(|(a, b)| {
            delta_e(
                xyz_to_lab(a, &white_point.white_point),
                xyz_to_lab(b, &white_point.white_point),
            )
        })
        .collect();
    Ok(PixelErrors {
        mrae: mrae_px,
        delta_e: de_px,
        mrae_clamped: clamped,
        white_point,
    })
}

/// Compares a reconstruction against ground truth: per-pixel MRAE, and ΔE
/// between the reintegrated RGBs of both cubes. The report carries a single
/// exposure entry at ξ = 1.
pub fn evaluate_cubes(
    gt: &HyperCube,
    rec: &HyperCube,
    s: &SensitivitySet,
    wp: WhitePointSource,
    k: usize,
) -> Result<MetricsReport> {
    let px = pixel_errors(gt, rec, s, wp)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let stats = ErrorStats {
        mean_mrae: mean(&px.mrae),
        wc_mrae: worst_case(&px.mrae, k)?,
        mean_de: mean(&px.delta_e),
        wc_de: worst_case(&px.delta_e, k)?,
    };
    Ok(MetricsReport {
        mean_mrae: stats.mean_mrae,
        wc_mrae: stats.wc_mrae,
        mean_de: stats.mean_de,
        wc_de: stats.wc_de,
        worst_k: k,
        per_exposure: vec![ExposureStats { xi: 1.0, stats }],
        mrae_clamped: px.mrae_clamped,
        white_point_fallback: px.white_point.fallback,
    })
}
