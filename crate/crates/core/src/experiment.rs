//! Train/evaluate harness comparing direct and plausible regressors, with and
//! without exposure augmentation, across a list of test exposures.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{self, evaluate_cubes, joint_eta, MetricsReport, WhitePointSource};
use crate::plausible::{alpha_range_report, NullSpaceModel, Recentering};
use crate::regression::{
    predict_spectrum, train_with_progress, Activation, Kind, Mode, RegressorSpec, Sample, TrainConfig,
    TrainedModel,
};
use crate::spectral::{
    form_rgb_image, scale_cube, HyperCube, RgbImage, SensitivitySet, Spectrum,
};

pub const DEFAULT_EXPOSURES: [f64; 3] = [1.0, 0.5, 2.0];

/// One row of the model grid: output mode and whether exposure augmentation
/// is used during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridModel {
    pub mode: Mode,
    pub augment: bool,
}

impl GridModel {
    pub const ALL: [GridModel; 4] = [
        GridModel { mode: Mode::Direct, augment: false },
        GridModel { mode: Mode::Direct, augment: true },
        GridModel { mode: Mode::Plausible, augment: false },
        GridModel { mode: Mode::Plausible, augment: true },
    ];

    /// Recentering matched to the coefficient range the model will see.
    pub fn default_recentering(&self) -> Option<Recentering> {
        match (self.mode, self.augment) {
            (Mode::Direct, _) => None,
            (Mode::Plausible, false) => Some(Recentering::UNAUGMENTED),
            (Mode::Plausible, true) => Some(Recentering::AUGMENTED),
        }
    }
}

impl fmt::Display for GridModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mode)?;
        if self.augment {
            f.write_str("+aug")?;
        }
        Ok(())
    }
}

impl FromStr for GridModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (mode, augment) = match s.strip_suffix("+aug") {
            Some(m) => (m, true),
            None => (s, false),
        };
        Ok(GridModel {
            mode: mode.parse()?,
            augment,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub models: Vec<GridModel>,
    pub exposures: Vec<f64>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            models: GridModel::ALL.to_vec(),
            exposures: DEFAULT_EXPOSURES.to_vec(),
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("experiment grid has no models".into()));
        }
        validate_exposures(&self.exposures)
    }
}

pub fn validate_exposures(exposures: &[f64]) -> Result<()> {
    if exposures.is_empty() {
        return Err(Error::Config("exposure list is empty".into()));
    }
    if let Some(x) = exposures.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::Config(format!("exposure {x} must be positive")));
    }
    Ok(())
}

/// Images divided by a seeded shuffle.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<HyperCube>,
    pub validation: Vec<HyperCube>,
    pub test: Vec<HyperCube>,
}

pub fn split_images(
    cubes: Vec<HyperCube>,
    counts: (usize, usize, usize),
    seed: u64,
) -> Result<Split> {
    let (n_train, n_val, n_test) = counts;
    if n_train == 0 || n_test == 0 {
        return Err(Error::Config("training and test splits must be nonempty".into()));
    }
    if n_train + n_val + n_test > cubes.len() {
        return Err(Error::Config(format!(
            "split {n_train}/{n_val}/{n_test} needs more than the {} available images",
            cubes.len()
        )));
    }
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut slots: Vec<Option<HyperCube>> = cubes.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<HyperCube> {
        idx.iter().map(|&i| slots[i].take().expect("each index used once")).collect()
    };
    let train = take(&order[..n_train]);
    let validation = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..n_train + n_val + n_test]);
    Ok(Split {
        train,
        validation,
        test,
    })
}

/// Pairs every pixel spectrum of `cubes` with its simulated RGB.
pub fn samples_from_cubes(cubes: &[HyperCube], s: &SensitivitySet) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    for cube in cubes {
        let rgb = form_rgb_image(cube, s)?;
        samples.extend(cube.spectra().zip(rgb.pixels()).map(|(spectrum, rho)| Sample { rho, spectrum }));
    }
    Ok(samples)
}

/// Applies a trained model to every pixel of an RGB image.
pub fn reconstruct_image(
    model: &TrainedModel,
    img: &RgbImage,
    null_model: Option<&NullSpaceModel>,
) -> Result<HyperCube> {
    let spectra: Vec<Spectrum> = img
        .pixels()
        .map(|rho| predict_spectrum(model, rho, null_model))
        .collect::<Result<_>>()?;
    if spectra.is_empty() {
        return Ok(HyperCube::zeros(img.height(), img.width(), model.grid));
    }
    HyperCube::from_spectra(img.height(), img.width(), &spectra)
}

/// Evaluates `model` on `test` at every exposure. Inputs are the RGBs of the
/// scaled ground truth; a fixed white point is scaled along with the scene.
pub fn evaluate_model(
    model: &TrainedModel,
    null_model: &NullSpaceModel,
    test: &[HyperCube],
    exposures: &[f64],
    white_point: WhitePointSource,
    worst_k: usize,
) -> Result<MetricsReport> {
    validate_exposures(exposures)?;
    if test.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    let s = null_model.sensitivities();
    let mut groups = Vec::with_capacity(exposures.len());
    for &xi in exposures {
        let wp = match white_point {
            WhitePointSource::Auto => WhitePointSource::Auto,
            WhitePointSource::Fixed(w) => WhitePointSource::Fixed(w.scaled(xi)?),
        };
        let mut reports = Vec::with_capacity(test.len());
        for cube in test {
            let gt = scale_cube(cube, xi)?;
            let rgb = form_rgb_image(&gt, s)?;
            let rec = reconstruct_image(model, &rgb, Some(null_model))?;
            let mut report = evaluate_cubes(&gt, &rec, s, wp, worst_k)?;
            report.per_exposure[0].xi = xi;
            reports.push(report);
        }
        groups.push((xi, reports));
    }
    MetricsReport::aggregate(worst_k, &groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: ExperimentGrid,
    pub train: TrainConfig,
    pub kind: Kind,
    pub hidden_layers: Vec<usize>,
    pub output_activation: Activation,
    /// Overrides the per-model default recentering for plausible models.
    pub recentering: Option<Recentering>,
    pub white_point: WhitePointSource,
    pub worst_k: usize,
    /// Weight-initialization seed shared by all grid models.
    pub model_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: ExperimentGrid::default(),
            train: TrainConfig::default(),
            kind: Kind::Mlp,
            hidden_layers: vec![64, 64],
            output_activation: Activation::Relu,
            recentering: None,
            white_point: WhitePointSource::Auto,
            worst_k: metrics::DEFAULT_WORST_K,
            model_seed: 7,
        }
    }
}

impl ExperimentConfig {
    pub fn spec_for(&self, entry: GridModel) -> RegressorSpec {
        let recentering = match entry.mode {
            Mode::Direct => None,
            Mode::Plausible => self.recentering.or(entry.default_recentering()),
        };
        let hidden_layers = match self.kind {
            Kind::Linear => Vec::new(),
            Kind::Mlp => self.hidden_layers.clone(),
        };
        RegressorSpec {
            mode: entry.mode,
            kind: self.kind,
            hidden_layers,
            output_activation: match self.kind {
                Kind::Linear => Activation::Identity,
                Kind::Mlp => self.output_activation,
            },
            recentering,
            seed: self.model_seed,
        }
    }

    pub fn train_config_for(&self, entry: GridModel) -> TrainConfig {
        TrainConfig {
            augment: entry.augment,
            ..self.train.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelResult {
    pub name: String,
    pub entry: GridModel,
    pub model: TrainedModel,
    pub report: MetricsReport,
    /// Mean MRAE on the validation split at unit exposure, when it is nonempty.
    pub validation_mrae: Option<f64>,
}

/// η for every model at one γ.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaRow {
    pub gamma: f64,
    pub eta: Vec<f64>,
    pub best: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub results: Vec<ModelResult>,
    /// Range of ground-truth null coefficients over the training split.
    pub alpha_range: (f64, f64),
    pub eta_mean: Vec<EtaRow>,
    pub eta_worst: Vec<EtaRow>,
}

/// η over γ = 0, 0.1, …, 1.
pub fn eta_sweep(de: &[f64], mrae: &[f64]) -> Result<Vec<EtaRow>> {
    (0..=10)
        .map(|i| {
            let gamma = i as f64 / 10.0;
            let j = joint_eta(de, mrae, gamma)?;
            Ok(EtaRow {
                gamma,
                best: j.best(),
                eta: j.eta,
            })
        })
        .collect()
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    null_model: &NullSpaceModel,
    split: &Split,
) -> Result<ExperimentResult> {
    run_experiment_with_progress(cfg, null_model, split, |_, _, _| {})
}

/// [`run_experiment`] reporting `(model name, epoch, loss)` while training.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    null_model: &NullSpaceModel,
    split: &Split,
    mut progress: impl FnMut(&str, usize, f64),
) -> Result<ExperimentResult> {
    cfg.grid.validate()?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Config("training and test splits must be nonempty".into()));
    }
    let s = null_model.sensitivities();
    let train_samples = samples_from_cubes(&split.train, s)?;
    let alpha_range = alpha_range_report(null_model, train_samples.iter().map(|x| &x.spectrum))?;

    let mut results = Vec::with_capacity(cfg.grid.models.len());
    for &entry in &cfg.grid.models {
        let spec = cfg.spec_for(entry);
        let tc = cfg.train_config_for(entry);
        let name = entry.to_string();
        let model = train_with_progress(&spec, &tc, s, &train_samples, Some(null_model), |e, l| {
            progress(&name, e, l)
        })?;
        let report = evaluate_model(
            &model,
            null_model,
            &split.test,
            &cfg.grid.exposures,
            cfg.white_point,
            cfg.worst_k,
        )?;
        let validation_mrae = if split.validation.is_empty() {
            None
        } else {
            Some(
                evaluate_model(&model, null_model, &split.validation, &[1.0], cfg.white_point, cfg.worst_k)?
                    .mean_mrae,
            )
        };
        results.push(ModelResult {
            name,
            entry,
            model,
            report,
            validation_mrae,
        });
    }

    let (eta_mean, eta_worst) = if results.len() >= 2 {
        let col = |f: fn(&MetricsReport) -> f64| results.iter().map(|r| f(&r.report)).collect::<Vec<_>>();
        (
            eta_sweep(&col(|r| r.mean_de), &col(|r| r.mean_mrae))?,
            eta_sweep(&col(|r| r.wc_de), &col(|r| r.wc_mrae))?,
        )
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(ExperimentResult {
        results,
        alpha_range,
        eta_mean,
        eta_worst,
    })
}

impl ExperimentResult {
    /// Per-model, per-exposure metric rows with a header line.
    pub fn metrics_table(&self) -> String {
        let mut out = String::from(metrics::ROW_HEADER);
        out.push('\n');
        for r in &self.results {
            out.push_str(&r.report.to_rows(&r.name));
        }
        out
    }

    /// η sweep as `gamma,<model>...,best` rows.
    pub fn eta_table(&self, worst: bool) -> String {
        let rows = if worst { &self.eta_worst } else { &self.eta_mean };
        let mut out = String::from("gamma");
        for r in &self.results {
            let _ = write!(out, ",{}", r.name);
        }
        out.push_str(",best\n");
        for row in rows {
            let _ = write!(out, "{:.1}", row.gamma);
            for e in &row.eta {
                let _ = write!(out, ",{e:.6}");
            }
            let _ = writeln!(out, ",{}", self.results[row.best].name);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "alpha_range={:.6},{:.6}",
            self.alpha_range.0, self.alpha_range.1
        );
        for r in &self.results {
            let _ = writeln!(
                out,
                "[{}] final_loss={:.6e} target_out_of_range={:.4}",
                r.name, r.model.final_loss, r.model.target_out_of_range
            );
            for e in &r.report.per_exposure {
                let _ = writeln!(
                    out,
                    "[{}] xi={} mean_mrae={:.5} wc_mrae={:.5} mean_de={:.5} wc_de={:.5}",
                    r.name, e.xi, e.stats.mean_mrae, e.stats.wc_mrae, e.stats.mean_de, e.stats.wc_de
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;

    #[test]
    fn grid_model_names_round_trip() {
        for m in GridModel::ALL {
            assert_eq!(m.to_string().parse::<GridModel>().unwrap(), m);
        }
        assert_eq!("plausible+aug".parse::<GridModel>().unwrap().default_recentering(), Some(Recentering::AUGMENTED));
        assert!("cnn".parse::<GridModel>().is_err());
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let grid = SpectralGrid::visible();
        let cubes: Vec<HyperCube> = (0..10)
            .map(|i| HyperCube::new(1, 1, grid, vec![i as f64; 31]).unwrap())
            .collect();
        let a = split_images(cubes.clone(), (5, 2, 3), 1).unwrap();
        let b = split_images(cubes.clone(), (5, 2, 3), 1).unwrap();
        let ids = |v: &[HyperCube]| v.iter().map(|c| c.data()[0] as usize).collect::<Vec<_>>();
        assert_eq!(ids(&a.train), ids(&b.train));
        let mut all: Vec<usize> = [ids(&a.train), ids(&a.validation), ids(&a.test)].concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(split_images(cubes.clone(), (8, 2, 3), 1).is_err());
        assert!(split_images(cubes, (5, 2, 0), 1).is_err());
    }

    #[test]
    fn exposure_validation() {
        assert!(validate_exposures(&[]).is_err());
        assert!(validate_exposures(&[1.0, 0.0]).is_err());
        assert!(validate_exposures(&[1.0, 0.5, 2.0]).is_ok());
    }
}
