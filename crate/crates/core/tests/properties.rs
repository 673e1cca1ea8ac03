use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use specrec::augment::ExposureSampler;
use specrec::metrics::{delta_e, mrae, worst_case, xyz_to_lab, WhitePoint};
use specrec::regression::{Activation, Loss, Mlp};
use specrec::{
    form_rgb, scale_spectrum, NullSpaceModel, Recentering, Rgb, SensitivitySet, SpectralGrid, Spectrum,
};

fn cie() -> (SensitivitySet, NullSpaceModel) {
    let s = SensitivitySet::cie1964();
    let nm = NullSpaceModel::build(&s).unwrap();
    (s, nm)
}

fn spectrum_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001f64..2.0, 31)
}

fn spectrum(values: Vec<f64>) -> Spectrum {
    Spectrum::new(SpectralGrid::visible(), values).unwrap()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn image_formation_is_linear_and_matches_loop(
        a in spectrum_values(), b in spectrum_values(), x in -3.0f64..3.0, y in -3.0f64..3.0,
    ) {
        let s = SensitivitySet::cie1964();
        let m = s.matrix();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| x * p + y * q).collect();
        let ra = form_rgb(&spectrum(a.clone()), &s).unwrap();
        let rb = form_rgb(&spectrum(b), &s).unwrap();
        let rc = form_rgb(&spectrum(combo), &s).unwrap();
        for k in 0..3 {
            prop_assert!((rc[k] - (x * ra[k] + y * rb[k])).abs() <= 1e-12 * (1.0 + rc[k].abs()));
            let naive: f64 = (0..31).map(|i| m[(i, k)] * a[i]).sum();
            prop_assert!((ra[k] - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
        }
    }

    #[test]
    fn reconstructions_reintegrate(
        rho in prop::array::uniform3(-5.0f64..5.0),
        alpha in prop::collection::vec(-5.0f64..5.0, 28),
    ) {
        let (s, nm) = cie();
        let r = nm.reconstruct(Rgb(rho), &alpha).unwrap();
        let back = form_rgb(&r, &s).unwrap();
        for k in 0..3 {
            prop_assert!((back[k] - rho[k]).abs() <= 1e-10 * inf_norm(&rho).max(1.0));
        }
    }

    #[test]
    fn decomposition_round_trips(values in spectrum_values()) {
        let (_, nm) = cie();
        let r = spectrum(values);
        let d = nm.extract_alpha(&r).unwrap();
        let back = nm.reconstruct_decomposition(&d).unwrap();
        for (p, q) in back.values().iter().zip(r.values()) {
            prop_assert!((p - q).abs() <= 1e-10 * inf_norm(r.values()));
        }
    }

    #[test]
    fn decomposition_is_exposure_linear(values in spectrum_values(), xi in 0.05f64..20.0) {
        let (_, nm) = cie();
        let r = spectrum(values);
        let d = nm.extract_alpha(&r).unwrap();
        let ds = nm.extract_alpha(&scale_spectrum(&r, xi).unwrap()).unwrap();
        let scale = xi * inf_norm(&d.alpha).max(inf_norm(&d.rho.0));
        for k in 0..3 {
            prop_assert!((ds.rho[k] - xi * d.rho[k]).abs() <= 1e-12 * scale);
        }
        for (p, q) in ds.alpha.iter().zip(&d.alpha) {
            prop_assert!((p - xi * q).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reconstruction_is_independent_of_basis_choice(
        values in spectrum_values(), seed in any::<u64>(),
    ) {
        let (s, nm) = cie();
        let dim = nm.null_dim();
        let mut rng_state = seed;
        let random = DMatrix::from_fn(dim, dim, |_, _| {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let q = random.qr().q();
        let rotated = nm.null_basis() * &q;
        let nm2 = NullSpaceModel::with_basis(&s, rotated).unwrap();
        let r = spectrum(values);
        let d1 = nm.extract_alpha(&r).unwrap();
        let d2 = nm2.extract_alpha(&r).unwrap();
        let r1 = nm.reconstruct_decomposition(&d1).unwrap();
        let r2 = nm2.reconstruct_decomposition(&d2).unwrap();
        for (p, q) in r1.values().iter().zip(r2.values()) {
            prop_assert!((p - q).abs() <= 1e-10 * inf_norm(r.values()));
        }
        prop_assert!((nm.proj_n() - nm2.proj_n()).abs().max() <= 1e-10);
    }

    #[test]
    fn recentering_inverts(
        offset in -50.0f64..50.0, divisor in 0.01f64..100.0,
        alpha in prop::collection::vec(-100.0f64..100.0, 1..40),
    ) {
        let rc = Recentering::new(offset, divisor).unwrap();
        let back = rc.unrecenter(&rc.recenter(&alpha));
        for (p, q) in back.iter().zip(&alpha) {
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + q.abs()) * (1.0 + offset.abs()));
        }
    }

    #[test]
    fn metrics_are_scale_invariant(
        a in spectrum_values(), b in spectrum_values(), xi in 0.01f64..100.0,
        x1 in prop::array::uniform3(0.0f64..2.0), x2 in prop::array::uniform3(0.0f64..2.0),
        wp in prop::array::uniform3(0.2f64..3.0),
    ) {
        let (ga, gb) = (spectrum(a), spectrum(b));
        let m = mrae(&ga, &gb).unwrap();
        let ms = mrae(&scale_spectrum(&ga, xi).unwrap(), &scale_spectrum(&gb, xi).unwrap()).unwrap();
        prop_assert!((m - ms).abs() <= 1e-12 * m.max(1.0));

        let w = WhitePoint::new(wp).unwrap();
        let ws = w.scaled(xi).unwrap();
        let de = delta_e(xyz_to_lab(Rgb(x1), &w), xyz_to_lab(Rgb(x2), &w));
        let des = delta_e(
            xyz_to_lab(Rgb(x1.map(|v| v * xi)), &ws),
            xyz_to_lab(Rgb(x2.map(|v| v * xi)), &ws),
        );
        prop_assert!((de - des).abs() <= 1e-9 * de.max(1.0));
    }

    #[test]
    fn worst_case_is_monotone(
        errors in prop::collection::vec(0.0f64..10.0, 1..60), k in 1usize..80, bump in 0.0f64..5.0, idx in any::<prop::sample::Index>(),
    ) {
        let base = worst_case(&errors, k).unwrap();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let max = errors.iter().copied().fold(0.0, f64::max);
        prop_assert!(base >= mean - 1e-12 && base <= max + 1e-12);
        prop_assert!(worst_case(&errors, k + 1).unwrap() <= base + 1e-12);
        let mut raised = errors.clone();
        raised[idx.index(errors.len())] += bump;
        prop_assert!(worst_case(&raised, k).unwrap() >= base - 1e-12);
    }

    #[test]
    fn backprop_matches_finite_differences(
        sizes in prop::collection::vec(1usize..6, 2..5),
        seed in any::<u64>(),
        identity in any::<bool>(),
        mae in any::<bool>(),
    ) {
        let act = if identity { Activation::Identity } else { Activation::Relu };
        let loss = if mae { Loss::Mae } else { Loss::Mse };
        let mut net = Mlp::init(sizes.clone(), act, seed).unwrap();
        // keep pre-activations away from the ReLU kink at exactly zero
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            *p += 0.05 + 0.1 * ((i as f64 + 0.5) * 2.3).sin().abs();
        }
        let input: Vec<f64> = (0..sizes[0]).map(|i| ((i as f64 + 1.0) * 0.37 + seed as f64 * 1e-19).sin()).collect();
        let target: Vec<f64> = (0..*sizes.last().unwrap()).map(|i| 0.2 + 0.1 * i as f64).collect();
        let (_, grad) = net.loss_and_gradient(&[&input], &[&target], loss);
        let mut probe = net.clone();
        let h = 1e-5;
        let mut diff = 0.0_f64;
        for (i, g) in grad.iter().enumerate() {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + h;
            let up = probe.loss(&[&input], &[&target], loss);
            probe.params_mut()[i] = orig - h;
            let down = probe.loss(&[&input], &[&target], loss);
            probe.params_mut()[i] = orig;
            diff = diff.max((g - (up - down) / (2.0 * h)).abs());
        }
        prop_assert!(diff <= 1e-4 * inf_norm(&grad).max(1e-6), "diff {diff}");
    }
}

#[test]
fn exposure_draws_are_log_uniform() {
    let mut sampler = ExposureSampler::new(10.0, 99).unwrap();
    let n = 100_000;
    let mut logs: Vec<f64> = (0..n).map(|_| sampler.sample_xi().log10()).collect();
    assert!(logs.iter().all(|u| (-1.0..=1.0).contains(u)));
    logs.sort_by(f64::total_cmp);
    let ks = logs
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let cdf = (u + 1.0) / 2.0;
            (cdf - i as f64 / n as f64).abs().max((cdf - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
    let median = 10f64.powf(logs[n / 2]);
    assert!((0.97..=1.03).contains(&median), "median {median}");
    for q in [0.1, 0.25, 0.4] {
        let lo = logs[(q * n as f64) as usize];
        let hi = logs[((1.0 - q) * n as f64) as usize];
        assert!((lo + hi).abs() < 0.02, "quantile {q}: {lo} vs {hi}");
    }
}

#[test]
fn invariant_residuals_are_tiny() {
    let (_, nm) = cie();
    let r = nm.residuals();
    assert!(r.max() < 1e-10, "{r:?}");
    assert_relative_eq!((nm.proj_s() + nm.proj_n()).trace(), 31.0, epsilon = 1e-10);
}
