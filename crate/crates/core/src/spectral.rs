//! Spectral domain types and the linear image-formation model.
//!
//! A camera response is the inner product of a radiance spectrum with each of
//! three sensitivity functions sampled on the same wavelength grid:
//! `rgb = Sᵀ r`, with `S` the `n × 3` sensitivity matrix.

use std::fmt;
use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a sensitivity set is
/// considered rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Uniformly sampled wavelength axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    start_nm: f64,
    step_nm: f64,
    bands: usize,
}

impl SpectralGrid {
    pub fn new(start_nm: f64, step_nm: f64, bands: usize) -> Result<Self> {
        if !start_nm.is_finite() {
            return Err(Error::Argument(format!("grid start {start_nm} is not finite")));
        }
        if !(step_nm.is_finite() && step_nm > 0.0) {
            return Err(Error::Argument(format!("grid step {step_nm} must be positive")));
        }
        if bands < 4 {
            return Err(Error::Argument(format!(
                "grid needs at least 4 bands for a nonempty null space, got {bands}"
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            bands,
        })
    }

    /// 400–700 nm at 10 nm, 31 bands.
    pub fn visible() -> Self {
        Self {
            start_nm: 400.0,
            step_nm: 10.0,
            bands: 31,
        }
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.bands - 1)
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        self.start_nm + i as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.bands).map(move |i| self.wavelength(i))
    }

    pub(crate) fn ensure_same(&self, other: &SpectralGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Dimension(format!("spectral grid {self} differs from {other}")))
        }
    }
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self::visible()
    }
}

impl fmt::Display for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} nm, {} nm, {} bands)", self.start_nm, self.step_nm, self.bands)
    }
}

/// Radiance samples on a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.bands() {
            return Err(Error::Dimension(format!(
                "spectrum has {} samples, grid has {} bands",
                values.len(),
                grid.bands()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("spectrum sample {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.bands()],
        }
    }

    pub(crate) fn from_vector(grid: SpectralGrid, v: &DVector<f64>) -> Self {
        Self {
            grid,
            values: v.iter().copied().collect(),
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Linear camera response, one value per sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub const ZERO: Rgb = Rgb([0.0; 3]);

    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb([r, g, b])
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        match values {
            [a, b, c] => Ok(Rgb([*a, *b, *c])),
            _ => Err(Error::Dimension(format!(
                "RGB needs exactly 3 values, got {}",
                values.len()
            ))),
        }
    }

    pub fn values(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn to_vector(self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

impl Index<usize> for Rgb {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Three camera sensitivity functions, stored as the columns of an `n × 3`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySet {
    grid: SpectralGrid,
    matrix: DMatrix<f64>,
}

impl SensitivitySet {
    /// Validates nonnegativity and full column rank.
    pub fn new(grid: SpectralGrid, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != grid.bands() || matrix.ncols() != 3 {
            return Err(Error::Dimension(format!(
                "sensitivity matrix is {}x{}, expected {}x3",
                matrix.nrows(),
                matrix.ncols(),
                grid.bands()
            )));
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Argument(format!(
                "sensitivities must be finite and nonnegative, found {v}"
            )));
        }
        let singular = matrix.singular_values();
        let largest = singular.max();
        let smallest = singular.min();
        if !(largest > 0.0 && smallest / largest > RANK_TOLERANCE) {
            return Err(Error::Rank(format!(
                "singular value ratio {:e} is not above {RANK_TOLERANCE:e}",
                if largest > 0.0 { smallest / largest } else { 0.0 }
            )));
        }
        Ok(Self { grid, matrix })
    }

    /// Builds the set from three sampled sensitivity curves.
    pub fn from_columns(grid: SpectralGrid, columns: [&[f64]; 3]) -> Result<Self> {
        let n = grid.bands();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Dimension(format!(
                "every sensitivity column needs {n} samples"
            )));
        }
        let matrix = DMatrix::from_fn(n, 3, |i, k| columns[k][i]);
        Self::new(grid, matrix)
    }

    /// CIE 1964 10° colour matching functions, 400–700 nm at 10 nm.
    pub fn cie1964() -> Self {
        crate::dataio::parse_sensitivities_csv(crate::dataio::CIE1964_CSV)
            .expect("bundled CIE 1964 table is valid")
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn bands(&self) -> usize {
        self.grid.bands()
    }

    /// Stable content hash used to tie trained models to a camera.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.grid.start_nm.to_le_bytes());
        hasher.update(self.grid.step_nm.to_le_bytes());
        hasher.update((self.grid.bands as u64).to_le_bytes());
        for v in self.matrix.iter() {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(head)
    }

    fn respond(&self, values: &[f64]) -> Rgb {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self
                .matrix
                .column(k)
                .iter()
                .zip(values)
                .map(|(s, r)| s * r)
                .sum();
        }
        Rgb(out)
    }
}

/// Hyperspectral raster, band-fastest and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    grid: SpectralGrid,
    data: Vec<f64>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, grid: SpectralGrid, data: Vec<f64>) -> Result<Self> {
        let expected = height * width * grid.bands();
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "cube payload has {} values, expected {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("cube value {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            grid,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, grid: SpectralGrid) -> Self {
        Self {
            height,
            width,
            grid,
            data: vec![0.0; height * width * grid.bands()],
        }
    }

    /// Assembles a cube from per-pixel spectra in row-major order.
    pub fn from_spectra(height: usize, width: usize, spectra: &[Spectrum]) -> Result<Self> {
        let grid = match spectra.first() {
            Some(s) => *s.grid(),
            None => return Err(Error::Argument("no spectra given".into())),
        };
        if spectra.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} spectra for a {height}x{width} cube",
                spectra.len()
            )));
        }
        let mut data = Vec::with_capacity(height * width * grid.bands());
        for s in spectra {
            grid.ensure_same(s.grid())?;
            data.extend_from_slice(s.values());
        }
        Ok(Self {
            height,
            width,
            grid,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        let n = self.grid.bands();
        &self.data[index * n..(index + 1) * n]
    }

    pub fn pixels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.grid.bands())
    }

    pub fn spectrum(&self, index: usize) -> Spectrum {
        Spectrum {
            grid: self.grid,
            values: self.pixel(index).to_vec(),
        }
    }

    pub fn spectra(&self) -> impl Iterator<Item = Spectrum> + '_ {
        self.pixels().map(move |p| Spectrum {
            grid: self.grid,
            values: p.to_vec(),
        })
    }
}

/// Raster of camera responses, channel-fastest and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::Dimension(format!(
                "image payload has {} values, expected {}",
                data.len(),
                height * width * 3
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("image value {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_pixels(height: usize, width: usize, pixels: &[Rgb]) -> Result<Self> {
        let data = pixels.iter().flat_map(|p| p.0).collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> Rgb {
        let p = &self.data[index * 3..index * 3 + 3];
        Rgb([p[0], p[1], p[2]])
    }

    pub fn pixels(&self) -> impl Iterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|p| Rgb([p[0], p[1], p[2]]))
    }
}

/// `ρ = Sᵀ r`.
pub fn form_rgb(r: &Spectrum, s: &SensitivitySet) -> Result<Rgb> {
    s.grid().ensure_same(r.grid())?;
    Ok(s.respond(r.values()))
}

pub fn form_rgb_image(cube: &HyperCube, s: &SensitivitySet) -> Result<RgbImage> {
    s.grid().ensure_same(cube.grid())?;
    let data = cube.pixels().flat_map(|p| s.respond(p).0).collect();
    Ok(RgbImage {
        height: cube.height,
        width: cube.width,
        data,
    })
}

fn check_exposure(xi: f64) -> Result<()> {
    if xi.is_finite() && xi > 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("exposure scale {xi} must be positive and finite")))
    }
}

pub fn scale_spectrum(r: &Spectrum, xi: f64) -> Result<Spectrum> {
    check_exposure(xi)?;
    Ok(Spectrum {
        grid: r.grid,
        values: r.values.iter().map(|v| v * xi).collect(),
    })
}

pub fn scale_rgb(rgb: Rgb, xi: f64) -> Result<Rgb> {
    check_exposure(xi)?;
    Ok(Rgb(rgb.0.map(|v| v * xi)))
}

pub fn scale_cube(cube: &HyperCube, xi: f64) -> Result<HyperCube> {
    check_exposure(xi)?;
    Ok(HyperCube {
        data: cube.data.iter().map(|v| v * xi).collect(),
        ..cube.clone()
    })
}

pub fn scale_image(img: &RgbImage, xi: f64) -> Result<RgbImage> {
    check_exposure(xi)?;
    Ok(RgbImage {
        data: img.data.iter().map(|v| v * xi).collect(),
        ..img.clone()
    })
}
