//! RGB → target regressors.
//!
//! Two model kinds are supported: a closed-form affine least-squares fit and a
//! small fully connected ReLU network trained by mini-batch gradient descent.
//! Either one runs in *direct* mode, predicting the spectrum itself, or in
//! *plausible* mode, predicting recentred null-space coefficients that are
//! turned into a spectrum through [`NullSpaceModel::reconstruct`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::ExposureSampler;
use crate::error::{Error, Result};
use crate::plausible::{NullSpaceModel, Recentering};
use crate::spectral::{Rgb, SensitivitySet, SpectralGrid, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Network output is the spectrum.
    Direct,
    /// Network output is recentred null-space coefficients.
    Plausible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Mae,
    Mse,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Mode { Direct => "direct", Plausible => "plausible" });
keyword_enum!(Kind { Linear => "linear", Mlp => "mlp" });
keyword_enum!(Activation { Relu => "relu", Identity => "identity" });
keyword_enum!(Loss { Mae => "mae", Mse => "mse" });

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSpec {
    pub mode: Mode,
    pub kind: Kind,
    /// Hidden layer widths; must be empty for [`Kind::Linear`].
    pub hidden_layers: Vec<usize>,
    pub output_activation: Activation,
    /// Required in plausible mode.
    pub recentering: Option<Recentering>,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl RegressorSpec {
    /// Desk-scale defaults: two hidden layers of 64 units and a ReLU output.
    pub fn mlp(mode: Mode, recentering: Option<Recentering>, seed: u64) -> Self {
        Self {
            mode,
            kind: Kind::Mlp,
            hidden_layers: vec![64, 64],
            output_activation: Activation::Relu,
            recentering,
            seed,
        }
    }

    pub fn linear(mode: Mode, recentering: Option<Recentering>) -> Self {
        Self {
            mode,
            kind: Kind::Linear,
            hidden_layers: Vec::new(),
            output_activation: Activation::Identity,
            recentering,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("hidden layer widths must be at least 1".into()));
        }
        if self.kind == Kind::Linear && !self.hidden_layers.is_empty() {
            return Err(Error::Config("linear regressors have no hidden layers".into()));
        }
        if self.mode == Mode::Plausible && self.recentering.is_none() {
            return Err(Error::Config("plausible mode requires a recentering".into()));
        }
        Ok(())
    }

    /// Output width for a camera with `bands` spectral samples.
    pub fn output_dim(&self, bands: usize) -> usize {
        match self.mode {
            Mode::Direct => bands,
            Mode::Plausible => bands - 3,
        }
    }

    pub fn layer_sizes(&self, bands: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers.len() + 2);
        sizes.push(3);
        sizes.extend_from_slice(&self.hidden_layers);
        sizes.push(self.output_dim(bands));
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    pub augment: bool,
    pub beta: f64,
    pub loss: Loss,
    /// Seed for shuffling and exposure draws.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.05,
            lr_decay: 0.97,
            augment: false,
            beta: crate::augment::DEFAULT_BETA,
            loss: Loss::Mae,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.lr_decay.is_finite() && self.lr_decay > 0.0) {
            return Err(Error::Config("lr_decay must be positive".into()));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::Config("beta must exceed 1".into()));
        }
        Ok(())
    }
}

/// Fully connected network with ReLU hidden units.
///
/// Parameters are stored flat, layer by layer: the `out × in` weight matrix
/// in row-major order followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    output_activation: Activation,
    params: Vec<f64>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, output_activation: Activation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let expected = param_count(&sizes);
        if params.len() != expected {
            return Err(Error::Dimension(format!(
                "{} parameters for topology {sizes:?}, expected {expected}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Argument("network parameters must be finite".into()));
        }
        Ok(Self {
            sizes,
            output_activation,
            params,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(sizes: Vec<usize>, output_activation: Activation, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(&sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self::new(sizes, output_activation, params)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn output_bias_mut(&mut self) -> &mut [f64] {
        let out = self.output_dim();
        let len = self.params.len();
        &mut self.params[len - out..]
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut acts = Vec::new();
        self.forward_into(input, &mut acts);
        acts.pop().unwrap()
    }

    /// Runs the network keeping every layer's activations (input included).
    fn forward_into(&self, input: &[f64], acts: &mut Vec<Vec<f64>>) {
        assert_eq!(input.len(), self.input_dim(), "network input width");
        acts.clear();
        acts.push(input.to_vec());
        let layers = self.sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let x = &acts[l];
            let relu = l + 1 < layers || self.output_activation == Activation::Relu;
            let y: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let z = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
                    if relu {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(y);
        }
    }

    /// Mean loss over a batch and its gradient with respect to every
    /// parameter. The per-sample loss is averaged over output units.
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]], loss: Loss) -> (f64, Vec<f64>) {
        assert_eq!(inputs.len(), targets.len());
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let mut acts = Vec::new();
        let batch = inputs.len().max(1) as f64;
        let out_dim = self.output_dim();
        let layers = self.sizes.len() - 1;

        // Parameter offsets of each layer.
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        for (input, target) in inputs.iter().zip(targets) {
            self.forward_into(input, &mut acts);
            let y = &acts[layers];
            let scale = 1.0 / (batch * out_dim as f64);
            let mut delta: Vec<f64> = y
                .iter()
                .zip(target.iter())
                .map(|(p, t)| {
                    let e = p - t;
                    match loss {
                        Loss::Mae => {
                            total += e.abs() * scale;
                            e.signum() * if e == 0.0 { 0.0 } else { scale }
                        }
                        Loss::Mse => {
                            total += e * e * scale;
                            2.0 * e * scale
                        }
                    }
                })
                .collect();

            for l in (0..layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let relu = l + 1 < layers || self.output_activation == Activation::Relu;
                if relu {
                    for (d, a) in delta.iter_mut().zip(&acts[l + 1]) {
                        if *a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                let base = offsets[l];
                let x = &acts[l];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    grad[base + n_in * n_out + o] += d;
                }
                if l > 0 {
                    let w = &self.params[base..base + n_in * n_out];
                    let mut prev = vec![0.0; n_in];
                    for o in 0..n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for (p, wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *p += d * wv;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (total, grad)
    }

    pub fn loss(&self, inputs: &[&[f64]], targets: &[&[f64]], loss: Loss) -> f64 {
        let batch = inputs.len().max(1) as f64;
        let out_dim = self.output_dim() as f64;
        inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                let y = self.forward(x);
                y.iter()
                    .zip(t.iter())
                    .map(|(p, q)| match loss {
                        Loss::Mae => (p - q).abs(),
                        Loss::Mse => (p - q) * (p - q),
                    })
                    .sum::<f64>()
                    / (batch * out_dim)
            })
            .sum()
    }
}

/// Affine least-squares map `t ≈ W ρ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    /// `m × 3`
    pub weights: DMatrix<f64>,
    pub bias: Vec<f64>,
}

impl AffineFit {
    pub fn predict(&self, rho: Rgb) -> Vec<f64> {
        (0..self.bias.len())
            .map(|o| self.bias[o] + (0..3).map(|k| self.weights[(o, k)] * rho[k]).sum::<f64>())
            .collect()
    }

    /// Flat parameters in [`Mlp`] layout for a `[3, m]` topology.
    pub fn to_params(&self) -> Vec<f64> {
        let m = self.bias.len();
        let mut params = Vec::with_capacity(4 * m);
        for o in 0..m {
            params.extend((0..3).map(|k| self.weights[(o, k)]));
        }
        params.extend_from_slice(&self.bias);
        params
    }
}

/// Minimum-norm least-squares affine fit through an SVD of the design
/// matrix `[ρᵀ 1]`. A rank-deficient design (e.g. one repeated input) yields
/// the minimum-norm solution rather than an error.
pub fn fit_linear(samples: &[(Rgb, Vec<f64>)]) -> Result<AffineFit> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!(
            "affine fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let m = samples[0].1.len();
    if m == 0 || samples.iter().any(|(_, t)| t.len() != m) {
        return Err(Error::Fit("targets must share one nonzero length".into()));
    }
    if samples
        .iter()
        .any(|(x, t)| !x.is_finite() || t.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let rows = samples.len();
    let design = DMatrix::from_fn(rows, 4, |i, j| if j < 3 { samples[i].0[j] } else { 1.0 });
    let targets = DMatrix::from_fn(rows, m, |i, j| samples[i].1[j]);
    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    if !(largest > 0.0 && largest.is_finite()) {
        return Err(Error::Fit("design matrix is degenerate".into()));
    }
    let coef = svd
        .solve(&targets, largest * 1e-12)
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok(AffineFit {
        weights: coef.rows(0, 3).transpose(),
        bias: coef.row(3).iter().copied().collect(),
    })
}

/// A trained regressor bound to the camera it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: RegressorSpec,
    pub grid: SpectralGrid,
    pub fingerprint: u64,
    /// Inputs are multiplied by this before entering the network.
    pub input_scale: f64,
    pub network: Mlp,
    /// Mean loss over the final epoch.
    pub final_loss: f64,
    /// Fraction of plausible-mode targets that fell outside [0, 1].
    pub target_out_of_range: f64,
}

impl TrainedModel {
    /// Untrained model with freshly initialized weights.
    pub fn initialize(spec: RegressorSpec, sensitivities: &SensitivitySet) -> Result<Self> {
        spec.validate()?;
        let network = Mlp::init(
            spec.layer_sizes(sensitivities.bands()),
            spec.output_activation,
            spec.seed,
        )?;
        Ok(Self {
            spec,
            grid: *sensitivities.grid(),
            fingerprint: sensitivities.fingerprint(),
            input_scale: 1.0,
            network,
            final_loss: f64::NAN,
            target_out_of_range: 0.0,
        })
    }

    pub fn forward(&self, rho: Rgb) -> Vec<f64> {
        let x = rho.0.map(|v| v * self.input_scale);
        self.network.forward(&x)
    }

    pub fn output_dim(&self) -> usize {
        self.network.output_dim()
    }

    fn check_camera(&self, null_model: &NullSpaceModel) -> Result<()> {
        let fp = null_model.sensitivities().fingerprint();
        if fp != self.fingerprint {
            return Err(Error::Config(format!(
                "model was trained for sensitivities {:016x}, null model is for {fp:016x}",
                self.fingerprint
            )));
        }
        Ok(())
    }
}

/// Network forward pass on one RGB.
pub fn mlp_forward(model: &TrainedModel, rho: Rgb) -> Vec<f64> {
    model.forward(rho)
}

/// One training example: an RGB and the spectrum that produced it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub rho: Rgb,
    pub spectrum: Spectrum,
}

struct Prepared {
    input: [f64; 3],
    // Unscaled regression target: the spectrum or its null coefficients.
    raw_target: Vec<f64>,
}

fn prepare(
    spec: &RegressorSpec,
    data: &[Sample],
    null_model: Option<&NullSpaceModel>,
) -> Result<Vec<Prepared>> {
    data.iter()
        .map(|s| {
            let raw_target = match spec.mode {
                Mode::Direct => s.spectrum.values().to_vec(),
                Mode::Plausible => {
                    let nm = null_model.expect("checked by caller");
                    nm.extract_alpha(&s.spectrum)?.alpha
                }
            };
            Ok(Prepared {
                input: s.rho.0,
                raw_target,
            })
        })
        .collect()
}

/// Builds the regression target for one presentation scaled by `xi`:
/// the scaled spectrum in direct mode, `recenter(ξ·α)` in plausible mode.
pub fn scaled_target(spec: &RegressorSpec, raw_target: &[f64], xi: f64) -> Vec<f64> {
    match (spec.mode, spec.recentering) {
        (Mode::Plausible, Some(rc)) => raw_target.iter().map(|a| rc.apply(xi * a)).collect(),
        _ => raw_target.iter().map(|v| xi * v).collect(),
    }
}

/// Trains a regressor. `null_model` is required in plausible mode and must
/// belong to `sensitivities`.
pub fn train(
    spec: &RegressorSpec,
    cfg: &TrainConfig,
    sensitivities: &SensitivitySet,
    data: &[Sample],
    null_model: Option<&NullSpaceModel>,
) -> Result<TrainedModel> {
    train_with_progress(spec, cfg, sensitivities, data, null_model, |_, _| {})
}

/// [`train`] reporting `(epoch, mean loss)` after every MLP epoch.
pub fn train_with_progress(
    spec: &RegressorSpec,
    cfg: &TrainConfig,
    sensitivities: &SensitivitySet,
    data: &[Sample],
    null_model: Option<&NullSpaceModel>,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainedModel> {
    spec.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let mut model = TrainedModel::initialize(spec.clone(), sensitivities)?;
    if spec.mode == Mode::Plausible {
        let nm = null_model
            .ok_or_else(|| Error::Config("plausible mode requires a null-space model".into()))?;
        model.check_camera(nm)?;
    }
    let prepared = prepare(spec, data, null_model)?;
    let mean_input =
        prepared.iter().map(|p| p.input.iter().map(|v| v.abs()).sum::<f64>() / 3.0).sum::<f64>()
            / prepared.len() as f64;
    model.input_scale = if mean_input > 0.0 { 1.0 / mean_input } else { 1.0 };

    let mut sampler = if cfg.augment {
        Some(ExposureSampler::new(cfg.beta, cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?)
    } else {
        None
    };
    let input_scale = model.input_scale;
    let mut out_of_range = 0usize;
    let mut target_count = 0usize;
    let mut present = |p: &Prepared, sampler: &mut Option<ExposureSampler>| {
        let xi = sampler.as_mut().map_or(1.0, |s| s.sample_xi());
        let input = p.input.map(|v| v * xi * input_scale);
        let target = scaled_target(spec, &p.raw_target, xi);
        if spec.mode == Mode::Plausible {
            out_of_range += target.iter().filter(|t| !(0.0..=1.0).contains(*t)).count();
            target_count += target.len();
        }
        (input, target)
    };

    match spec.kind {
        Kind::Linear => {
            let rounds = if cfg.augment { cfg.epochs } else { 1 };
            let mut samples = Vec::with_capacity(prepared.len() * rounds);
            for _ in 0..rounds {
                for p in &prepared {
                    let (x, t) = present(p, &mut sampler);
                    samples.push((Rgb(x), t));
                }
            }
            let fit = fit_linear(&samples)?;
            let mut network = Mlp::new(
                model.network.sizes.clone(),
                spec.output_activation,
                fit.to_params(),
            )?;
            std::mem::swap(&mut model.network, &mut network);
            let inputs: Vec<&[f64]> = samples.iter().map(|(x, _)| &x.0[..]).collect();
            let targets: Vec<&[f64]> = samples.iter().map(|(_, t)| t.as_slice()).collect();
            model.final_loss = model.network.loss(&inputs, &targets, cfg.loss);
        }
        Kind::Mlp => {
            // Start the output layer at the mean target so ReLU outputs begin alive.
            let out_dim = model.output_dim();
            let mut mean_target = vec![0.0; out_dim];
            for p in &prepared {
                for (m, t) in mean_target.iter_mut().zip(scaled_target(spec, &p.raw_target, 1.0)) {
                    *m += t / prepared.len() as f64;
                }
            }
            model.network.output_bias_mut().copy_from_slice(&mean_target);

            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut order: Vec<usize> = (0..prepared.len()).collect();
            let mut lr = cfg.learning_rate;
            for epoch in 0..cfg.epochs {
                order.shuffle(&mut rng);
                let mut epoch_loss = 0.0;
                let mut batches = 0usize;
                for chunk in order.chunks(cfg.batch_size) {
                    let batch: Vec<([f64; 3], Vec<f64>)> =
                        chunk.iter().map(|&i| present(&prepared[i], &mut sampler)).collect();
                    let inputs: Vec<&[f64]> = batch.iter().map(|(x, _)| &x[..]).collect();
                    let targets: Vec<&[f64]> = batch.iter().map(|(_, t)| t.as_slice()).collect();
                    let (loss, grad) = model.network.loss_and_gradient(&inputs, &targets, cfg.loss);
                    if !loss.is_finite() {
                        return Err(Error::Training {
                            epoch,
                            message: format!("loss became {loss}"),
                        });
                    }
                    for (p, g) in model.network.params.iter_mut().zip(&grad) {
                        *p -= lr * g;
                    }
                    epoch_loss += loss;
                    batches += 1;
                }
                epoch_loss /= batches as f64;
                if !epoch_loss.is_finite() || model.network.params.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Training {
                        epoch,
                        message: "parameters became non-finite".into(),
                    });
                }
                model.final_loss = epoch_loss;
                progress(epoch, epoch_loss);
                lr *= cfg.lr_decay;
            }
        }
    }
    model.target_out_of_range = if target_count > 0 {
        out_of_range as f64 / target_count as f64
    } else {
        0.0
    };
    Ok(model)
}

/// Spectrum predicted for `rho`. Plausible-mode predictions reintegrate to
/// `rho` whatever the network weights are.
pub fn predict_spectrum(
    model: &TrainedModel,
    rho: Rgb,
    null_model: Option<&NullSpaceModel>,
) -> Result<Spectrum> {
    let out = model.forward(rho);
    match model.spec.mode {
        Mode::Direct => Spectrum::new(model.grid, out),
        Mode::Plausible => {
            let nm = null_model
                .ok_or_else(|| Error::Config("plausible model needs a null-space model".into()))?;
            model.check_camera(nm)?;
            let rc = model
                .spec
                .recentering
                .ok_or_else(|| Error::Config("plausible model without recentering".into()))?;
            nm.reconstruct(rho, &rc.unrecenter(&out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::form_rgb;
    use approx::assert_abs_diff_eq;

    fn small_sizes() -> Vec<usize> {
        vec![3, 5, 4, 2]
    }

    #[test]
    fn param_layout() {
        assert_eq!(param_count(&[3, 5, 4, 2]), 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
        assert!(Mlp::new(vec![3, 2], Activation::Identity, vec![0.0; 7]).is_err());
        assert!(Mlp::new(vec![3, 2], Activation::Identity, vec![f64::NAN; 8]).is_err());
        assert!(Mlp::new(vec![3], Activation::Identity, vec![]).is_err());
    }

    #[test]
    fn zero_hidden_identity_is_affine() {
        let params = vec![1.0, 2.0, 3.0, 0.0, -1.0, 0.5, 10.0, 20.0];
        let net = Mlp::new(vec![3, 2], Activation::Identity, params).unwrap();
        let y = net.forward(&[1.0, 1.0, 2.0]);
        assert_eq!(y, vec![1.0 + 2.0 + 6.0 + 10.0, -1.0 + 1.0 + 20.0]);
    }

    #[test]
    fn zero_weights_relu_output_is_zero() {
        let net = Mlp::new(small_sizes(), Activation::Relu, vec![0.0; param_count(&small_sizes())])
            .unwrap();
        assert_eq!(net.forward(&[0.3, -2.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::init(vec![3, 64, 28], Activation::Relu, 9).unwrap();
        let b = Mlp::init(vec![3, 64, 28], Activation::Relu, 9).unwrap();
        let c = Mlp::init(vec![3, 64, 28], Activation::Relu, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let limit = (6.0f64 / 67.0).sqrt();
        assert!(a.params()[..3 * 64].iter().all(|p| p.abs() <= limit));
        let x = [0.1, 0.2, 0.3];
        assert_eq!(a.forward(&x).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.forward(&x).iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn spec_validation() {
        let mut spec = RegressorSpec::mlp(Mode::Plausible, None, 0);
        assert!(spec.validate().is_err());
        spec.recentering = Some(Recentering::UNAUGMENTED);
        assert!(spec.validate().is_ok());
        spec.hidden_layers = vec![4, 0];
        assert!(spec.validate().is_err());
        let mut lin = RegressorSpec::linear(Mode::Direct, None);
        lin.hidden_layers = vec![3];
        assert!(lin.validate().is_err());
        assert_eq!("plausible".parse::<Mode>().unwrap(), Mode::Plausible);
        assert!("conv".parse::<Kind>().is_err());
        assert_eq!(Loss::Mse.to_string(), "mse");
    }

    #[test]
    fn train_config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
            TrainConfig { learning_rate: 0.0, ..ok.clone() },
            TrainConfig { beta: 1.0, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn exact_affine_data_is_recovered() {
        let samples: Vec<(Rgb, Vec<f64>)> = (0..12)
            .map(|i| {
                let x = Rgb::new(i as f64 * 0.3, (i * i) as f64 * 0.1 - 1.0, (i % 5) as f64);
                let t = vec![2.0 * x[0] - x[1] + 0.5 * x[2] + 3.0, -x[2] + 0.25];
                (x, t)
            })
            .collect();
        let fit = fit_linear(&samples).unwrap();
        for (x, t) in &samples {
            let p = fit.predict(*x);
            for (a, b) in p.iter().zip(t) {
                assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn repeated_input_predicts_mean() {
        let x = Rgb::new(1.0, 2.0, 3.0);
        let samples = vec![
            (x, vec![1.0]),
            (x, vec![3.0]),
            (x, vec![1.0]),
            (x, vec![3.0]),
        ];
        let fit = fit_linear(&samples).unwrap();
        assert_abs_diff_eq!(fit.predict(x)[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn fit_linear_errors() {
        let x = Rgb::new(1.0, 2.0, 3.0);
        assert!(matches!(fit_linear(&vec![(x, vec![1.0]); 3]), Err(Error::Fit(_))));
        let ragged = vec![(x, vec![1.0]), (x, vec![1.0, 2.0]), (x, vec![1.0]), (x, vec![1.0])];
        assert!(matches!(fit_linear(&ragged), Err(Error::Fit(_))));
        let nan = vec![(Rgb::new(f64::NAN, 0.0, 0.0), vec![1.0]); 4];
        assert!(matches!(fit_linear(&nan), Err(Error::Fit(_))));
    }

    fn toy_samples(s: &SensitivitySet, count: usize) -> Vec<Sample> {
        (0..count)
            .map(|k| {
                let values: Vec<f64> = (0..s.bands())
                    .map(|i| 0.3 + 0.2 * ((i as f64 * 0.3 + k as f64).sin()))
                    .collect();
                let spectrum = Spectrum::new(*s.grid(), values).unwrap();
                Sample {
                    rho: form_rgb(&spectrum, s).unwrap(),
                    spectrum,
                }
            })
            .collect()
    }

    #[test]
    fn plausible_training_requires_null_model() {
        let s = SensitivitySet::cie1964();
        let spec = RegressorSpec::mlp(Mode::Plausible, Some(Recentering::UNAUGMENTED), 0);
        let err = train(&spec, &TrainConfig::default(), &s, &toy_samples(&s, 4), None);
        assert!(matches!(err, Err(Error::Config(_))));
        let empty = train(&spec, &TrainConfig::default(), &s, &[], None);
        assert!(matches!(empty, Err(Error::Argument(_))));
    }

    #[test]
    fn divergence_names_the_epoch() {
        let s = SensitivitySet::cie1964();
        let spec = RegressorSpec {
            output_activation: Activation::Identity,
            ..RegressorSpec::mlp(Mode::Direct, None, 0)
        };
        let cfg = TrainConfig {
            learning_rate: 1e200,
            loss: Loss::Mse,
            epochs: 5,
            ..TrainConfig::default()
        };
        match train(&spec, &cfg, &s, &toy_samples(&s, 8), None) {
            Err(Error::Training { epoch, .. }) => assert!(epoch < 5),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn fingerprint_mismatch_is_rejected() {
        let s = SensitivitySet::cie1964();
        let spec = RegressorSpec::mlp(Mode::Plausible, Some(Recentering::UNAUGMENTED), 1);
        let model = TrainedModel::initialize(spec, &s).unwrap();
        let mut m = s.matrix().clone();
        m[(0, 0)] += 0.01;
        let other = SensitivitySet::new(*s.grid(), m).unwrap();
        let other_nm = NullSpaceModel::build(&other).unwrap();
        assert!(matches!(
            predict_spectrum(&model, Rgb::new(1.0, 1.0, 1.0), Some(&other_nm)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            predict_spectrum(&model, Rgb::new(1.0, 1.0, 1.0), None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn constant_half_output_gives_fundamental_spectrum() {
        let s = SensitivitySet::cie1964();
        let nm = NullSpaceModel::build(&s).unwrap();
        let spec = RegressorSpec {
            output_activation: Activation::Identity,
            ..RegressorSpec::mlp(Mode::Plausible, Some(Recentering::AUGMENTED), 1)
        };
        let mut model = TrainedModel::initialize(spec, &s).unwrap();
        // Zero weights everywhere and output bias recenter(0) = 0.5.
        model.network.params_mut().iter_mut().for_each(|p| *p = 0.0);
        model.network.output_bias_mut().iter_mut().for_each(|b| *b = 0.5);
        let rho = Rgb::new(3.0, 2.5, 1.0);
        let got = predict_spectrum(&model, rho, Some(&nm)).unwrap();
        let want = nm.fundamental_spectrum(rho);
        for (a, b) in got.values().iter().zip(want.values()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }
}
