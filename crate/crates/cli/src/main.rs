use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use specrec::config::RunConfig;
use specrec::dataio;
use specrec::experiment::{
    evaluate_model, reconstruct_image, run_experiment_with_progress, samples_from_cubes,
    split_images,
};
use specrec::metrics::{evaluate_cubes, MetricsReport};
use specrec::regression::train_with_progress;
use specrec::synth::generate_synthetic;
use specrec::{form_rgb_image, Error, HyperCube, NullSpaceModel, SensitivitySet};

#[derive(Parser, Debug)]
#[command(name = "specrec", version, about = "Colorimetrically exact spectral reconstruction from RGB")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for data generation, splits and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key=value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Sensitivity CSV (wavelength_nm,s1,s2,s3); CIE 1964 10° when absent.
    #[arg(long, global = true)]
    sensitivities: Option<PathBuf>,
    /// `auto` or three comma-separated XYZ values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    white_point: Option<String>,
    #[arg(long, global = true)]
    worst_k: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    /// Comma-separated exposure factors.
    #[arg(long, global = true)]
    exposures: Option<String>,
    /// Any configuration key as key=value; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic hyperspectral dataset.
    Synth,
    /// Simulate RGB images from hyperspectral cubes.
    Simulate {
        #[arg(required = true)]
        cubes: Vec<PathBuf>,
        /// Also write a gamma-encoded PPM preview.
        #[arg(long)]
        ppm: bool,
    },
    /// Build the null-space model of the sensitivities.
    Basis,
    /// Train one regressor.
    Train {
        /// Training cubes; the synthetic training split when absent.
        cubes: Vec<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        augment: bool,
        #[arg(long)]
        null_model: Option<PathBuf>,
    },
    /// Reconstruct hyperspectral cubes from RGB images.
    Reconstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        null_model: Option<PathBuf>,
    },
    /// Score reconstructions against ground truth.
    Evaluate {
        /// Ground-truth cube.
        gt: Vec<PathBuf>,
        /// Reconstructed cube, compared with a single ground truth.
        #[arg(long, conflicts_with = "model")]
        rec: Option<PathBuf>,
        /// Model evaluated on every ground truth at every exposure.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        null_model: Option<PathBuf>,
    },
    /// Train and evaluate the model grid and sweep the joint metric.
    Experiment {
        /// Dataset cubes; the synthetic dataset when absent.
        cubes: Vec<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        cfg.apply_text(&text)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    let flags = [
        ("out_dir", common.out_dir.as_ref().map(|p| p.display().to_string())),
        ("sensitivities", common.sensitivities.as_ref().map(|p| p.display().to_string())),
        ("white_point", common.white_point.clone()),
        ("worst_k", common.worst_k.clone()),
        ("beta", common.beta.clone()),
        ("exposures", common.exposures.clone()),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    for item in &common.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{item}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn require_files<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) -> Result<(), Error> {
    for p in paths {
        if !p.is_file() {
            return Err(io_error(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            ));
        }
    }
    Ok(())
}

fn sensitivities(cfg: &RunConfig) -> Result<SensitivitySet, Error> {
    match &cfg.sensitivities {
        Some(path) => dataio::read_sensitivities(path),
        None => Ok(SensitivitySet::cie1964()),
    }
}

fn null_model(cfg: &RunConfig, file: Option<&PathBuf>) -> Result<NullSpaceModel, Error> {
    match file {
        Some(path) => dataio::read_null_model(path),
        None => NullSpaceModel::build(&sensitivities(cfg)?),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, Error> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| io_error(&cfg.out_dir, e))?;
    Ok(&cfg.out_dir)
}

fn out_path(cfg: &RunConfig, input: &Path, suffix: &str, ext: &str) -> Result<PathBuf, Error> {
    let stem = input.file_stem().unwrap_or_default().to_string_lossy();
    Ok(out_dir(cfg)?.join(format!("{stem}{suffix}.{ext}")))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn dataset(cfg: &RunConfig, files: &[PathBuf]) -> Result<Vec<HyperCube>, Error> {
    if files.is_empty() {
        generate_synthetic(&cfg.synth)
    } else {
        files.iter().map(|p| dataio::read_cube(p)).collect()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(&cli.common)?;
    if let Some(path) = &cfg.sensitivities {
        require_files([path])?;
    }
    match cli.command {
        Command::Synth => {
            let cubes = generate_synthetic(&cfg.synth)?;
            let dir = out_dir(&cfg)?;
            for (i, cube) in cubes.iter().enumerate() {
                dataio::write_cube(&dir.join(format!("cube_{i:03}.hspc")), cube)?;
            }
            dataio::write_sensitivities(&dir.join("sensitivities.csv"), &sensitivities(&cfg)?)?;
            println!("wrote {} cubes to {}", cubes.len(), dir.display());
        }
        Command::Simulate { cubes, ppm } => {
            require_files(&cubes)?;
            let s = sensitivities(&cfg)?;
            for path in &cubes {
                let cube = dataio::read_cube(path)?;
                let img = form_rgb_image(&cube, &s)?;
                let dest = out_path(&cfg, path, "", "hsrg")?;
                dataio::write_rgb_image(&dest, &img)?;
                println!("{}", dest.display());
                if ppm {
                    let preview = dest.with_extension("ppm");
                    dataio::write_ppm(&preview, &img)?;
                    println!("{}", preview.display());
                }
            }
        }
        Command::Basis => {
            let nm = NullSpaceModel::build(&sensitivities(&cfg)?)?;
            let r = nm.residuals();
            let dest = out_dir(&cfg)?.join("null_model.hsnm");
            dataio::write_null_model(&dest, &nm)?;
            println!("bands={}", nm.bands());
            println!("null_dim={}", nm.null_dim());
            println!("st_n={:.3e}", r.st_n);
            println!("nt_n_minus_i={:.3e}", r.nt_n);
            println!("ps_plus_pn_minus_i={:.3e}", r.proj_sum);
            println!("projector_symmetry={:.3e}", r.proj_symmetry);
            println!("projector_idempotence={:.3e}", r.proj_idempotence);
            println!("st_pinv_minus_i={:.3e}", r.st_pinv);
            println!("max_residual={:.3e}", r.max());
            println!("{}", dest.display());
        }
        Command::Train {
            cubes,
            mode,
            kind,
            augment,
            null_model: nm_file,
        } => {
            require_files(cubes.iter().chain(&nm_file))?;
            if let Some(m) = mode {
                cfg.set("mode", &m)?;
            }
            if let Some(k) = kind {
                cfg.set("kind", &k)?;
            }
            if augment {
                cfg.set("augment", "on")?;
            }
            let nm = null_model(&cfg, nm_file.as_ref())?;
            let s = nm.sensitivities().clone();
            let training = if cubes.is_empty() {
                split_images(generate_synthetic(&cfg.synth)?, cfg.split, cfg.seed)?.train
            } else {
                dataset(&cfg, &cubes)?
            };
            let samples = samples_from_cubes(&training, &s)?;
            let spec = cfg.regressor_spec();
            let model = train_with_progress(&spec, &cfg.train, &s, &samples, Some(&nm), |e, l| {
                println!("epoch={e} loss={l:.6e}")
            })?;
            let dest = out_dir(&cfg)?.join("model.hsmd");
            dataio::write_model(&dest, &model)?;
            println!("final_loss={:.6e}", model.final_loss);
            println!("target_out_of_range={:.4}", model.target_out_of_range);
            println!("{}", dest.display());
        }
        Command::Reconstruct {
            model,
            images,
            null_model: nm_file,
        } => {
            require_files([&model].into_iter().chain(&images).chain(&nm_file))?;
            let m = dataio::read_model(&model)?;
            let nm = null_model(&cfg, nm_file.as_ref())?;
            for path in &images {
                let img = dataio::read_rgb_image(path)?;
                let cube = reconstruct_image(&m, &img, Some(&nm))?;
                let back = form_rgb_image(&cube, nm.sensitivities())?;
                let residual = img
                    .pixels()
                    .zip(back.pixels())
                    .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
                    .fold(0.0, f64::max);
                let dest = out_path(&cfg, path, "_rec", "hspc")?;
                dataio::write_cube(&dest, &cube)?;
                println!("{} reintegration_residual={residual:.3e}", dest.display());
            }
        }
        Command::Evaluate {
            gt,
            rec,
            model,
            null_model: nm_file,
        } => {
            require_files(gt.iter().chain(&rec).chain(&model).chain(&nm_file))?;
            if gt.is_empty() {
                return Err(Error::Config("no ground-truth cube given".into()));
            }
            let report: MetricsReport = match (rec, model) {
                (Some(rec), None) => {
                    if gt.len() != 1 {
                        return Err(Error::Config("--rec compares exactly one ground-truth cube".into()));
                    }
                    let s = sensitivities(&cfg)?;
                    let g = dataio::read_cube(&gt[0])?;
                    let r = dataio::read_cube(&rec)?;
                    evaluate_cubes(&g, &r, &s, cfg.white_point, cfg.worst_k)?
                }
                (None, Some(model)) => {
                    let m = dataio::read_model(&model)?;
                    let nm = null_model(&cfg, nm_file.as_ref())?;
                    let cubes = dataset(&cfg, &gt)?;
                    evaluate_model(&m, &nm, &cubes, &cfg.exposures, cfg.white_point, cfg.worst_k)?
                }
                _ => return Err(Error::Config("evaluate needs --rec or --model".into())),
            };
            let text = report.to_key_value();
            write_text(&out_dir(&cfg)?.join("metrics.txt"), &text)?;
            print!("{text}");
        }
        Command::Experiment { cubes } => {
            require_files(&cubes)?;
            let nm = NullSpaceModel::build(&sensitivities(&cfg)?)?;
            let split = split_images(dataset(&cfg, &cubes)?, cfg.split, cfg.seed)?;
            let result = run_experiment_with_progress(&cfg.experiment(), &nm, &split, |name, e, l| {
                println!("[{name}] epoch={e} loss={l:.6e}")
            })?;
            let dir = out_dir(&cfg)?;
            write_text(&dir.join("metrics.csv"), &result.metrics_table())?;
            write_text(&dir.join("eta_mean.csv"), &result.eta_table(false))?;
            write_text(&dir.join("eta_worst.csv"), &result.eta_table(true))?;
            write_text(&dir.join("summary.txt"), &result.summary())?;
            print!("{}", result.summary());
            print!("{}", result.eta_table(false));
        }
    }
    Ok(())
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    eprintln!("error kind={kind} exit={code} message={message:?}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return fail("usage", 2, first.trim_start_matches("error: "));
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => fail(e.kind(), if e.is_user_error() { 2 } else { 1 }, &e.to_string()),
        Err(_) => fail("internal", 1, "unexpected failure"),
    }
}
