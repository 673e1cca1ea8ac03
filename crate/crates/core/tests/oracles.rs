use approx::assert_relative_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specrec::experiment::samples_from_cubes;
use specrec::metrics::{evaluate_cubes, joint_eta, WhitePoint, WhitePointSource};
use specrec::regression::{fit_linear, train, Loss, Mode, RegressorSpec, Sample, TrainConfig};
use specrec::synth::{generate_synthetic, SynthConfig};
use specrec::{HyperCube, NullSpaceModel, Recentering, Rgb, SensitivitySet, SpectralGrid, Spectrum};

fn lab_f(t: f64) -> f64 {
    let d: f64 = 6.0 / 29.0;
    if t > d * d * d {
        t.powf(1.0 / 3.0)
    } else {
        t / (3.0 * d * d) + 4.0 / 29.0
    }
}

#[test]
fn evaluate_cubes_matches_scalar_loops() {
    let grid = SpectralGrid::visible();
    let s = SensitivitySet::cie1964();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (h, w, n) = (8, 8, 31);
    let gt: Vec<f64> = (0..h * w * n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let rec: Vec<f64> = gt.iter().map(|v| v * rng.gen_range(0.8..1.2)).collect();
    let gt_cube = HyperCube::new(h, w, grid, gt.clone()).unwrap();
    let rec_cube = HyperCube::new(h, w, grid, rec.clone()).unwrap();
    let wp = [9.0, 10.0, 11.0];
    let k = 10;
    let report = evaluate_cubes(
        &gt_cube,
        &rec_cube,
        &s,
        WhitePointSource::Fixed(WhitePoint::new(wp).unwrap()),
        k,
    )
    .unwrap();

    let m = s.matrix();
    let mut mraes = Vec::new();
    let mut des = Vec::new();
    for p in 0..h * w {
        let mut total = 0.0;
        for i in 0..n {
            let g = gt[p * n + i];
            total += (g - rec[p * n + i]).abs() / g.max(1e-6);
        }
        mraes.push(total / n as f64);
        let mut labs = Vec::new();
        for data in [&gt, &rec] {
            let mut xyz = [0.0; 3];
            for (c, x) in xyz.iter_mut().enumerate() {
                for i in 0..n {
                    *x += m[(i, c)] * data[p * n + i];
                }
            }
            let f: Vec<f64> = (0..3).map(|c| lab_f(xyz[c] / wp[c])).collect();
            labs.push([116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])]);
        }
        des.push(
            ((labs[0][0] - labs[1][0]).powi(2) + (labs[0][1] - labs[1][1]).powi(2) + (labs[0][2] - labs[1][2]).powi(2))
                .sqrt(),
        );
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let top = |v: &[f64]| {
        let mut sorted = v.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        mean(&sorted[..k])
    };
    assert_relative_eq!(report.mean_mrae, mean(&mraes), max_relative = 1e-12);
    assert_relative_eq!(report.wc_mrae, top(&mraes), max_relative = 1e-12);
    assert_relative_eq!(report.mean_de, mean(&des), max_relative = 1e-10);
    assert_relative_eq!(report.wc_de, top(&des), max_relative = 1e-10);
}

#[test]
fn null_projector_matches_svd_complement() {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).unwrap();
    let svd = s.matrix().clone().svd(true, false);
    let u = svd.u.unwrap();
    let range = u.columns(0, 3).into_owned();
    let complement = DMatrix::<f64>::identity(31, 31) - &range * range.transpose();
    assert!((nm.proj_n() - complement).abs().max() < 1e-10);
    let pinv = s.matrix().clone().pseudo_inverse(1e-14).unwrap();
    assert!((nm.pinv_factor() - pinv.transpose()).abs().max() < 1e-10);
}

#[test]
fn linear_fit_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let samples: Vec<(Rgb, Vec<f64>)> = (0..50)
        .map(|_| {
            let x = Rgb([(); 3].map(|_| rng.gen_range(0.0..1.0)));
            let t = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (x, t)
        })
        .collect();
    let fit = fit_linear(&samples).unwrap();
    let a = DMatrix::from_fn(50, 4, |i, j| if j < 3 { samples[i].0[j] } else { 1.0 });
    let b = DMatrix::from_fn(50, 5, |i, j| samples[i].1[j]);
    let ata = a.transpose() * &a;
    let coef = ata.cholesky().unwrap().solve(&(a.transpose() * b));
    for o in 0..5 {
        for k in 0..3 {
            assert_relative_eq!(fit.weights[(o, k)], coef[(k, o)], max_relative = 1e-9, epsilon = 1e-12);
        }
        assert_relative_eq!(fit.bias[o], coef[(3, o)], max_relative = 1e-9, epsilon = 1e-12);
    }
}

#[test]
fn synthetic_data_has_enough_spectral_dimensions() {
    let cfg = SynthConfig {
        num_images: 3,
        height: 12,
        width: 12,
        ..SynthConfig::default()
    };
    let cubes = generate_synthetic(&cfg).unwrap();
    let rows: Vec<&[f64]> = cubes.iter().flat_map(|c| c.pixels()).collect();
    let n = cfg.grid.bands();
    let mean: Vec<f64> = (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64).collect();
    let centred = DMatrix::from_fn(rows.len(), n, |p, i| rows[p][i] - mean[i]);
    let sv = centred.singular_values();
    let significant = sv.iter().filter(|v| **v > 1e-3 * sv.max()).count();
    assert!(significant >= cfg.latent_dim, "{significant} significant directions");
}

fn toy_samples(count: usize) -> Vec<Sample> {
    let s = SensitivitySet::cie1964();
    let cubes = generate_synthetic(&SynthConfig {
        num_images: 1,
        height: count,
        width: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    samples_from_cubes(&cubes, &s).unwrap()
}

#[test]
fn mlp_overfits_a_single_sample() {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).unwrap();
    let data = toy_samples(1);
    let mut spec = RegressorSpec::mlp(Mode::Plausible, Some(Recentering::UNAUGMENTED), 5);
    spec.hidden_layers = vec![16];
    let cfg = TrainConfig {
        epochs: 2000,
        batch_size: 1,
        learning_rate: 0.05,
        lr_decay: 1.0,
        loss: Loss::Mse,
        ..TrainConfig::default()
    };
    let model = train(&spec, &cfg, &s, &data, Some(&nm)).unwrap();
    assert!(model.final_loss < 1e-4, "loss {}", model.final_loss);
}

#[test]
fn training_is_deterministic() {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).unwrap();
    let data = toy_samples(20);
    let spec = RegressorSpec::mlp(Mode::Plausible, Some(Recentering::AUGMENTED), 3);
    let cfg = TrainConfig {
        epochs: 5,
        augment: true,
        ..TrainConfig::default()
    };
    let a = train(&spec, &cfg, &s, &data, Some(&nm)).unwrap();
    let b = train(&spec, &cfg, &s, &data, Some(&nm)).unwrap();
    assert_eq!(a, b);
    let c = train(&spec, &TrainConfig { seed: 99, ..cfg }, &s, &data, Some(&nm)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn joint_metric_switches_winner_once() {
    // one accurate model with colour error, one colour-exact model with larger MRAE
    let de = [1.2, 0.0];
    let mrae = [0.04, 0.06];
    let de_mean = 0.6;
    let mrae_mean = 0.05;
    // η_0(γ) = η_1(γ) where γ·de'_0 + (1−γ)·mrae'_0 = (1−γ)·mrae'_1
    let crossover = (mrae[1] - mrae[0]) / mrae_mean / (de[0] / de_mean + (mrae[1] - mrae[0]) / mrae_mean);
    let mut switches = 0;
    let mut last = joint_eta(&de, &mrae, 0.0).unwrap().best();
    assert_eq!(last, 0);
    for step in 1..=1000 {
        let gamma = step as f64 / 1000.0;
        let best = joint_eta(&de, &mrae, gamma).unwrap().best();
        if best != last {
            switches += 1;
            assert!((gamma - crossover).abs() <= 1e-3, "switch at {gamma}, expected {crossover}");
            last = best;
        }
    }
    assert_eq!(switches, 1);
    assert_eq!(last, 1);
}

#[test]
fn fundamental_spectrum_reintegrates() {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).unwrap();
    let rho = Rgb([0.3, 0.5, 0.2]);
    let r: Spectrum = nm.fundamental_spectrum(rho);
    let back = specrec::form_rgb(&r, &s).unwrap();
    for k in 0..3 {
        assert!((back[k] - rho[k]).abs() < 1e-12);
    }
}
