//! Plain-text `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected. Command-line flags are applied on top through [`RunConfig::set`].

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::experiment::{validate_exposures, ExperimentConfig, GridModel};
use crate::metrics::{WhitePointSource, DEFAULT_WORST_K};
use crate::plausible::Recentering;
use crate::regression::{Activation, Kind, Mode, TrainConfig};
use crate::synth::SynthConfig;

/// Every key accepted by [`RunConfig::set`].
pub const KEYS: &[&str] = &[
    "seed",
    "out_dir",
    "sensitivities",
    "white_point",
    "worst_k",
    "beta",
    "exposures",
    "num_images",
    "height",
    "width",
    "latent_dim",
    "noise_level",
    "floor",
    "amplitude",
    "split",
    "mode",
    "kind",
    "hidden_layers",
    "output_activation",
    "recentering",
    "models",
    "epochs",
    "batch_size",
    "learning_rate",
    "lr_decay",
    "loss",
    "augment",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// CSV sensitivities; the bundled CIE 1964 table when absent.
    pub sensitivities: Option<PathBuf>,
    pub white_point: WhitePointSource,
    pub worst_k: usize,
    pub exposures: Vec<f64>,
    pub synth: SynthConfig,
    /// Train / validation / test image counts.
    pub split: (usize, usize, usize),
    /// Mode of the single model built by `train`.
    pub mode: Mode,
    pub kind: Kind,
    pub hidden_layers: Vec<usize>,
    pub output_activation: Activation,
    pub recentering: Option<Recentering>,
    pub models: Vec<GridModel>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let exp = ExperimentConfig::default();
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            sensitivities: None,
            white_point: WhitePointSource::Auto,
            worst_k: DEFAULT_WORST_K,
            exposures: exp.grid.exposures.clone(),
            synth: SynthConfig::default(),
            split: (12, 4, 4),
            mode: Mode::Plausible,
            kind: exp.kind,
            hidden_layers: exp.hidden_layers.clone(),
            output_activation: exp.output_activation,
            recentering: None,
            models: exp.grid.models.clone(),
            train: exp.train,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected on/off, got '{other}'"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one key. The seed also reseeds data generation and training.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => {
                self.seed = parse_num(key, value)?;
                self.synth.seed = self.seed;
                self.train.seed = self.seed;
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "sensitivities" => self.sensitivities = Some(PathBuf::from(value)),
            "white_point" => self.white_point = value.parse()?,
            "worst_k" => {
                self.worst_k = parse_num(key, value)?;
                if self.worst_k == 0 {
                    return Err(Error::Config("worst_k must be at least 1".into()));
                }
            }
            "beta" => self.train.beta = parse_num(key, value)?,
            "exposures" => {
                let list = parse_list(key, value)?;
                validate_exposures(&list)?;
                self.exposures = list;
            }
            "num_images" => self.synth.num_images = parse_num(key, value)?,
            "height" => self.synth.height = parse_num(key, value)?,
            "width" => self.synth.width = parse_num(key, value)?,
            "latent_dim" => self.synth.latent_dim = parse_num(key, value)?,
            "noise_level" => self.synth.noise_level = parse_num(key, value)?,
            "floor" => self.synth.floor = parse_num(key, value)?,
            "amplitude" => self.synth.amplitude = parse_num(key, value)?,
            "split" => match parse_list::<usize>(key, value)?.as_slice() {
                [a, b, c] => self.split = (*a, *b, *c),
                _ => return Err(Error::Config("split needs train,validation,test counts".into())),
            },
            "mode" => self.mode = value.parse()?,
            "kind" => self.kind = value.parse()?,
            "hidden_layers" => self.hidden_layers = parse_list(key, value)?,
            "output_activation" => self.output_activation = value.parse()?,
            "recentering" => match parse_list::<f64>(key, value)?.as_slice() {
                [c, d] => self.recentering = Some(Recentering::new(*c, *d)?),
                _ => return Err(Error::Config("recentering needs offset,divisor".into())),
            },
            "models" => {
                let models = value
                    .split(',')
                    .map(str::parse::<GridModel>)
                    .collect::<Result<Vec<_>>>()?;
                if models.is_empty() {
                    return Err(Error::Config("models list is empty".into()));
                }
                self.models = models;
            }
            "epochs" => self.train.epochs = parse_num(key, value)?,
            "batch_size" => self.train.batch_size = parse_num(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_num(key, value)?,
            "lr_decay" => self.train.lr_decay = parse_num(key, value)?,
            "loss" => self.train.loss = value.parse()?,
            "augment" => self.train.augment = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.train.validate()?;
        validate_exposures(&self.exposures)?;
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("hidden layer widths must be at least 1".into()));
        }
        Ok(())
    }

    /// Harness configuration for `experiment`.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            grid: crate::experiment::ExperimentGrid {
                models: self.models.clone(),
                exposures: self.exposures.clone(),
            },
            train: self.train.clone(),
            kind: self.kind,
            hidden_layers: self.hidden_layers.clone(),
            output_activation: self.output_activation,
            recentering: self.recentering,
            white_point: self.white_point,
            worst_k: self.worst_k,
            model_seed: self.seed,
        }
    }

    /// Single-model specification for `train`.
    pub fn regressor_spec(&self) -> crate::regression::RegressorSpec {
        let entry = GridModel {
            mode: self.mode,
            augment: self.train.augment,
        };
        self.experiment().spec_for(entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let text = "\
# desk run
seed = 5
exposures = 1, 0.25
models = plausible,plausible+aug
hidden_layers = 16,8
recentering = 2,4
augment = on
loss = mse
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.synth.seed, 5);
        assert_eq!(cfg.exposures, vec![1.0, 0.25]);
        assert_eq!(cfg.models.len(), 2);
        assert_eq!(cfg.hidden_layers, vec![16, 8]);
        assert_eq!(cfg.recentering, Some(Recentering::new(2.0, 4.0).unwrap()));
        assert!(cfg.train.augment);
        let spec = cfg.regressor_spec();
        assert_eq!(spec.recentering, Some(Recentering::new(2.0, 4.0).unwrap()));
        assert_eq!(spec.hidden_layers, vec![16, 8]);
    }

    #[test]
    fn default_spec_recentering_follows_augmentation() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.regressor_spec().recentering, Some(Recentering::UNAUGMENTED));
        cfg.set("augment", "on").unwrap();
        assert_eq!(cfg.regressor_spec().recentering, Some(Recentering::AUGMENTED));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(RunConfig::parse("colour=red").is_err());
        assert!(RunConfig::parse("seed").is_err());
        assert!(RunConfig::parse("epochs=many").is_err());
        assert!(RunConfig::parse("exposures=1,-2").is_err());
        assert!(RunConfig::parse("split=1,2").is_err());
        assert!(RunConfig::parse("worst_k=0").is_err());
        assert!(RunConfig::parse("augment=maybe").is_err());
        for key in KEYS {
            let mut cfg = RunConfig::default();
            // every listed key is recognized, even if this value is invalid for it
            if let Err(Error::Config(msg)) = cfg.set(key, "?") {
                assert!(!msg.contains("unknown key"), "{key}");
            }
        }
    }
}
