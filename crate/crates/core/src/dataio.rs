//! Binary and text file formats.
//!
//! All binary formats are little-endian and start with a 4-byte magic and a
//! 16-bit version:
//!
//! | magic  | content                                                        |
//! |--------|----------------------------------------------------------------|
//! | `HSPC` | hyperspectral cube: `u32` height, width, bands; `f64` start, step; payload |
//! | `HSRG` | RGB raster: `u32` height, width; payload                        |
//! | `HSNM` | null-space model: grid, then `S`, `S(SᵀS)⁻¹`, `N`, `P^S`, `P^N` |
//! | `HSMD` | trained regressor: spec, grid, camera fingerprint, parameters   |
//!
//! Payloads are `f64`, row-major with the last axis fastest.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plausible::{NullSpaceModel, Recentering};
use crate::regression::{Activation, Kind, Mlp, Mode, RegressorSpec, TrainedModel};
use crate::spectral::{HyperCube, RgbImage, SensitivitySet, SpectralGrid};

pub const CUBE_MAGIC: &[u8; 4] = b"HSPC";
pub const RGB_MAGIC: &[u8; 4] = b"HSRG";
pub const NULL_MODEL_MAGIC: &[u8; 4] = b"HSNM";
pub const MODEL_MAGIC: &[u8; 4] = b"HSMD";
pub const FORMAT_VERSION: u16 = 1;

pub const SENSITIVITY_HEADER: &str = "wavelength_nm,s1,s2,s3";

pub(crate) const CIE1964_CSV: &str = include_str!("../assets/cie1964_10deg.csv");

/// Upper bound on any single dimension read from a header.
const MAX_DIM: u32 = 1 << 24;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        Self { buf }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: usize) {
        self.buf.extend_from_slice(&(v as u32).to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: impl IntoIterator<Item = f64>) {
        for v in vs {
            self.f64(v);
        }
    }

    fn grid(&mut self, g: &SpectralGrid) {
        self.u32(g.bands());
        self.f64(g.start_nm());
        self.f64(g.step_nm());
    }

    // Row-major, regardless of nalgebra's column-major storage.
    fn matrix(&mut self, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn open(buf: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        let mut r = Self { buf, pos: 0 };
        let found = r.take(4)?;
        if found != magic {
            return Err(Error::parse(
                0,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(found),
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        let at = r.pos as u64;
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::parse(at, format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::parse(
                self.pos as u64,
                format!("truncated: need {n} bytes, {} remain", self.buf.len() - self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn dim(&mut self, what: &str) -> Result<usize> {
        let at = self.offset();
        let v = self.u32()?;
        if v > MAX_DIM {
            return Err(Error::parse(at, format!("{what} {v} is implausibly large")));
        }
        Ok(v as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_any(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        let at = self.offset();
        let v = self.f64_any()?;
        if !v.is_finite() {
            return Err(Error::parse(at, format!("non-finite value {v}")));
        }
        Ok(v)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let need = count
            .checked_mul(8)
            .ok_or_else(|| Error::parse(self.offset(), "payload size overflows"))?;
        if self.buf.len() - self.pos < need {
            return Err(Error::parse(
                self.offset(),
                format!(
                    "truncated payload: need {need} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            ));
        }
        (0..count).map(|_| self.f64()).collect()
    }

    fn grid(&mut self) -> Result<SpectralGrid> {
        let at = self.offset();
        let bands = self.dim("band count")?;
        let start = self.f64()?;
        let step = self.f64()?;
        SpectralGrid::new(start, step, bands).map_err(|e| Error::parse(at, e.to_string()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let values = self.f64s(rows * cols)?;
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::parse(
                self.offset(),
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn encode_cube(cube: &HyperCube) -> Vec<u8> {
    let mut w = Writer::new(CUBE_MAGIC);
    w.u32(cube.height());
    w.u32(cube.width());
    w.u32(cube.grid().bands());
    w.f64(cube.grid().start_nm());
    w.f64(cube.grid().step_nm());
    w.f64s(cube.data().iter().copied());
    w.buf
}

pub fn decode_cube(bytes: &[u8]) -> Result<HyperCube> {
    let mut r = Reader::open(bytes, CUBE_MAGIC)?;
    let height = r.dim("height")?;
    let width = r.dim("width")?;
    let at = r.offset();
    let bands = r.dim("band count")?;
    let start = r.f64()?;
    let step = r.f64()?;
    let grid = SpectralGrid::new(start, step, bands).map_err(|e| Error::parse(at, e.to_string()))?;
    let data = r.f64s(height * width * bands)?;
    r.finish()?;
    HyperCube::new(height, width, grid, data)
}

pub fn write_cube(path: &Path, cube: &HyperCube) -> Result<()> {
    write_file(path, &encode_cube(cube))
}

pub fn read_cube(path: &Path) -> Result<HyperCube> {
    decode_cube(&read_file(path)?)
}

pub fn encode_rgb_image(img: &RgbImage) -> Vec<u8> {
    let mut w = Writer::new(RGB_MAGIC);
    w.u32(img.height());
    w.u32(img.width());
    w.f64s(img.data().iter().copied());
    w.buf
}

pub fn decode_rgb_image(bytes: &[u8]) -> Result<RgbImage> {
    let mut r = Reader::open(bytes, RGB_MAGIC)?;
    let height = r.dim("height")?;
    let width = r.dim("width")?;
    let data = r.f64s(height * width * 3)?;
    r.finish()?;
    RgbImage::new(height, width, data)
}

pub fn write_rgb_image(path: &Path, img: &RgbImage) -> Result<()> {
    write_file(path, &encode_rgb_image(img))
}

pub fn read_rgb_image(path: &Path) -> Result<RgbImage> {
    decode_rgb_image(&read_file(path)?)
}

pub fn encode_null_model(model: &NullSpaceModel) -> Vec<u8> {
    let mut w = Writer::new(NULL_MODEL_MAGIC);
    w.grid(model.sensitivities().grid());
    w.matrix(model.sensitivities().matrix());
    w.matrix(model.pinv_factor());
    w.matrix(model.null_basis());
    w.matrix(model.proj_s());
    w.matrix(model.proj_n());
    w.buf
}

pub fn decode_null_model(bytes: &[u8]) -> Result<NullSpaceModel> {
    let mut r = Reader::open(bytes, NULL_MODEL_MAGIC)?;
    let grid = r.grid()?;
    let n = grid.bands();
    let at = r.offset();
    let s = r.matrix(n, 3)?;
    let sensitivities =
        SensitivitySet::new(grid, s).map_err(|e| Error::parse(at, e.to_string()))?;
    let pinv = r.matrix(n, 3)?;
    let basis = r.matrix(n, n - 3)?;
    let proj_s = r.matrix(n, n)?;
    let proj_n = r.matrix(n, n)?;
    r.finish()?;
    NullSpaceModel::from_parts(sensitivities, pinv, basis, proj_s, proj_n)
}

pub fn write_null_model(path: &Path, model: &NullSpaceModel) -> Result<()> {
    write_file(path, &encode_null_model(model))
}

pub fn read_null_model(path: &Path) -> Result<NullSpaceModel> {
    decode_null_model(&read_file(path)?)
}

fn mode_code(m: Mode) -> u8 {
    match m {
        Mode::Direct => 0,
        Mode::Plausible => 1,
    }
}

fn kind_code(k: Kind) -> u8 {
    match k {
        Kind::Linear => 0,
        Kind::Mlp => 1,
    }
}

fn activation_code(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Identity => 1,
    }
}

pub fn encode_model(model: &TrainedModel) -> Vec<u8> {
    let spec = &model.spec;
    let mut w = Writer::new(MODEL_MAGIC);
    w.u8(mode_code(spec.mode));
    w.u8(kind_code(spec.kind));
    w.u8(activation_code(spec.output_activation));
    match spec.recentering {
        Some(rc) => {
            w.u8(1);
            w.f64(rc.offset());
            w.f64(rc.divisor());
        }
        None => {
            w.u8(0);
            w.f64(0.0);
            w.f64(1.0);
        }
    }
    w.u64(spec.seed);
    w.u32(spec.hidden_layers.len());
    for h in &spec.hidden_layers {
        w.u32(*h);
    }
    w.grid(&model.grid);
    w.u64(model.fingerprint);
    w.f64(model.input_scale);
    w.f64(model.final_loss);
    w.f64(model.target_out_of_range);
    w.u64(model.network.params().len() as u64);
    w.f64s(model.network.params().iter().copied());
    w.buf
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader::open(bytes, MODEL_MAGIC)?;
    let code = |r: &mut Reader, what: &str, max: u8| -> Result<u8> {
        let at = r.offset();
        let v = r.u8()?;
        if v > max {
            return Err(Error::parse(at, format!("unknown {what} code {v}")));
        }
        Ok(v)
    };
    let mode = [Mode::Direct, Mode::Plausible][code(&mut r, "mode", 1)? as usize];
    let kind = [Kind::Linear, Kind::Mlp][code(&mut r, "kind", 1)? as usize];
    let output_activation =
        [Activation::Relu, Activation::Identity][code(&mut r, "activation", 1)? as usize];
    let has_rc = code(&mut r, "recentering flag", 1)? == 1;
    let at = r.offset();
    let offset = r.f64()?;
    let divisor = r.f64()?;
    let recentering = if has_rc {
        Some(Recentering::new(offset, divisor).map_err(|e| Error::parse(at, e.to_string()))?)
    } else {
        None
    };
    let seed = r.u64()?;
    let depth = r.dim("hidden layer count")?;
    let hidden_layers = (0..depth).map(|_| r.dim("hidden width")).collect::<Result<Vec<_>>>()?;
    let grid = r.grid()?;
    let fingerprint = r.u64()?;
    let input_scale = r.f64()?;
    let final_loss = r.f64_any()?;
    let target_out_of_range = r.f64()?;
    let at = r.offset();
    let count = r.u64()?;
    let spec = RegressorSpec {
        mode,
        kind,
        hidden_layers,
        output_activation,
        recentering,
        seed,
    };
    spec.validate().map_err(|e| Error::parse(at, e.to_string()))?;
    let sizes = spec.layer_sizes(grid.bands());
    if count != crate::regression::param_count(&sizes) as u64 {
        return Err(Error::parse(
            at,
            format!("{count} parameters do not match topology {sizes:?}"),
        ));
    }
    let params = r.f64s(count as usize)?;
    r.finish()?;
    Ok(TrainedModel {
        network: Mlp::new(sizes, output_activation, params)?,
        spec,
        grid,
        fingerprint,
        input_scale,
        final_loss,
        target_out_of_range,
    })
}

pub fn write_model(path: &Path, model: &TrainedModel) -> Result<()> {
    write_file(path, &encode_model(model))
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    decode_model(&read_file(path)?)
}

/// Parses `wavelength_nm,s1,s2,s3` rows on a uniform ascending grid.
pub fn parse_sensitivities_csv(text: &str) -> Result<SensitivitySet> {
    let mut offset = 0u64;
    let mut lines = Vec::new();
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            lines.push((offset, trimmed));
        }
        offset += line.len() as u64;
    }
    let Some(&(_, header)) = lines.first() else {
        return Err(Error::parse(0, "empty sensitivity file"));
    };
    let normalized: String = header.chars().filter(|c| !c.is_whitespace()).collect();
    if normalized != SENSITIVITY_HEADER {
        return Err(Error::parse(0, format!("header must be '{SENSITIVITY_HEADER}'")));
    }
    let mut wavelengths = Vec::new();
    let mut columns: [Vec<f64>; 3] = Default::default();
    for &(at, line) in &lines[1..] {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(at, format!("expected 4 fields, got {}", fields.len())));
        }
        let values = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(at, format!("bad number: {e}")))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(at, "non-finite value"));
        }
        if let Some(prev) = wavelengths.last() {
            if values[0] <= *prev {
                return Err(Error::parse(
                    at,
                    format!("wavelength {} does not increase past {prev}", values[0]),
                ));
            }
        }
        if values[1..].iter().any(|v| *v < 0.0) {
            return Err(Error::parse(at, "negative sensitivity"));
        }
        wavelengths.push(values[0]);
        for k in 0..3 {
            columns[k].push(values[k + 1]);
        }
    }
    if wavelengths.len() < 2 {
        return Err(Error::parse(offset, "need at least two wavelength rows"));
    }
    let start = wavelengths[0];
    let step = wavelengths[1] - wavelengths[0];
    for (i, w) in wavelengths.iter().enumerate() {
        let expected = start + i as f64 * step;
        if (w - expected).abs() > 1e-6 * step {
            return Err(Error::parse(
                lines[i + 1].0,
                format!("wavelength {w} breaks the uniform {step} nm grid"),
            ));
        }
    }
    let grid = SpectralGrid::new(start, step, wavelengths.len())?;
    SensitivitySet::from_columns(grid, [&columns[0], &columns[1], &columns[2]])
}

pub fn read_sensitivities(path: &Path) -> Result<SensitivitySet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sensitivities_csv(&text)
}

pub fn format_sensitivities_csv(s: &SensitivitySet) -> String {
    let mut out = String::from(SENSITIVITY_HEADER);
    out.push('\n');
    for (i, w) in s.grid().wavelengths().enumerate() {
        let m = s.matrix();
        out.push_str(&format!("{w},{},{},{}\n", m[(i, 0)], m[(i, 1)], m[(i, 2)]));
    }
    out
}

pub fn write_sensitivities(path: &Path, s: &SensitivitySet) -> Result<()> {
    write_file(path, format_sensitivities_csv(s).as_bytes())
}

/// 8-bit binary PPM, each image normalized by its largest value with a 1/2.2
/// display gamma.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let peak = img.data().iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    for v in img.data() {
        let x = if peak > 0.0 { (v / peak).clamp(0.0, 1.0) } else { 0.0 };
        out.push((x.powf(1.0 / 2.2) * 255.0).round() as u8);
    }
    out
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    write_file(path, &encode_ppm(img))
}
