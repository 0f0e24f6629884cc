use std::f64::consts::PI;

use ionsps::atom::{DetectionMode, LevelScheme};
use ionsps::calibrate::*;
use ionsps::Error;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

const TWO_PI: f64 = 2.0 * PI;

fn truth() -> FitParams {
    FitParams {
        omega_g: TWO_PI * 20e6,
        omega_r: TWO_PI * 15e6,
        delta_g: -TWO_PI * 10e6,
        theta: 0.6,
        chi: 0.5,
        field: 2e-4,
        scale: 1e-3,
        background: 200.0,
    }
}

fn model() -> ScanModel {
    ScanModel::new(LevelScheme::default(), Vector3::z(), DetectionMode::AllModes)
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -30e6 + 60e6 * i as f64 / (n - 1) as f64).collect()
}

/// Scan with multiplicative Gaussian noise of relative size `noise`.
fn noisy_scan(model: &ScanModel, p: &FitParams, n: usize, noise: f64, seed: u64) -> ScanData {
    let x = grid(n);
    let clean = model.rates(&x, p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rate = clean.iter().map(|r| r * (1.0 + noise * normal.sample(&mut rng))).collect();
    let sigma = clean.iter().map(|r| noise.max(1e-3) * r).collect();
    ScanData::new(x, rate, Some(sigma)).unwrap()
}

fn perturbed(p: &FitParams, mask: &Mask, factor: f64) -> FitParams {
    let mut a = p.to_array();
    for (k, i) in mask.free().into_iter().enumerate() {
        a[i] *= if k % 2 == 0 { factor } else { 2.0 - factor };
    }
    FitParams::from_array(a)
}

const SIX: [&str; 6] = ["omega_g", "omega_r", "delta_g", "theta", "chi", "scale"];

#[test]
fn truth_initialized_noiseless_fit_stays_put() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 41, 0.0, 0);
    let mask = Mask::only(&SIX).unwrap();
    let r = fit_dark_resonance(&m, &data, truth(), &Bounds::default(), &mask).unwrap();
    assert!(r.chi_square < 1e-12, "{}", r.chi_square);
    assert!(r.converged && !r.singular);
    for (p, t) in r.params.to_array().iter().zip(truth().to_array()) {
        assert!((p - t).abs() <= 1e-9 * t.abs(), "{p} vs {t}");
    }
}

#[test]
fn noisy_scan_recovers_parameters_within_their_errors() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 61, 0.02, 11);
    let mask = Mask::only(&["omega_r", "delta_g", "scale"]).unwrap();
    let r = fit_dark_resonance(&m, &data, perturbed(&truth(), &mask, 1.15), &Bounds::default(), &mask).unwrap();
    assert!(r.converged);
    let (p, u, t) = (r.params.to_array(), r.uncertainties().to_array(), truth().to_array());
    for i in mask.free() {
        assert!(((p[i] - t[i]) / t[i]).abs() < 0.05, "{}: {} vs {}", PARAM_NAMES[i], p[i], t[i]);
        assert!((p[i] - t[i]).abs() < 3.0 * u[i], "{}: off by {} sigma", PARAM_NAMES[i], (p[i] - t[i]) / u[i]);
    }
    assert!((0.5..1.5).contains(&r.reduced_chi_square), "{}", r.reduced_chi_square);
}

#[test]
fn single_parameter_fit_finds_the_grid_search_minimum() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 31, 0.02, 4);
    let mask = Mask::only(&["omega_r"]).unwrap();
    let chi2 = |omega_r: f64| {
        let p = FitParams { omega_r, ..truth() };
        fit_residuals(&m, &data, &p).unwrap().iter().map(|r| r * r).sum::<f64>()
    };
    let step = TWO_PI * 0.05e6;
    let (best, best_chi2) = (0..=80)
        .map(|k| TWO_PI * 13e6 + step * k as f64)
        .map(|w| (w, chi2(w)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let r = fit_dark_resonance(&m, &data, FitParams { omega_r: TWO_PI * 13.5e6, ..truth() }, &Bounds::default(), &mask).unwrap();
    assert!((r.params.omega_r - best).abs() <= step, "{} vs {best}", r.params.omega_r);
    assert!(r.chi_square <= best_chi2 * (1.0 + 1e-9));
}

#[test]
fn residuals_vanish_at_truth_and_shift_linearly_with_an_offset() {
    let m = model();
    let clean = noisy_scan(&m, &truth(), 21, 0.0, 0);
    assert!(fit_residuals(&m, &clean, &truth()).unwrap().iter().all(|r| r.abs() < 1e-12));
    for offset in [-50.0, 10.0, 300.0] {
        let shifted = ScanData::new(clean.detuning_hz.clone(), clean.rate.iter().map(|r| r + offset).collect(), Some(clean.sigma.clone())).unwrap();
        let res = fit_residuals(&m, &shifted, &truth()).unwrap();
        for (r, s) in res.iter().zip(&clean.sigma) {
            assert!((r - offset / s).abs() < 1e-9 * (offset / s).abs(), "{r} vs {}", offset / s);
        }
    }
}

#[test]
fn poisson_residuals_are_standard_normal() {
    // one-second count rates with Poisson noise and the default √N errors
    let m = model();
    let p = FitParams { scale: 1e-2, ..truth() };
    let x = grid(1000);
    let clean = m.rates(&x, &p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let counts = clean.iter().map(|&r| Poisson::new(r).unwrap().sample(&mut rng)).collect();
    let data = ScanData::new(x, counts, None).unwrap();
    let res = fit_residuals(&m, &data, &p).unwrap();
    let n = res.len() as f64;
    let mean = res.iter().sum::<f64>() / n;
    let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "variance {var}");
}

#[test]
fn chi_square_history_never_increases() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 41, 0.02, 2);
    let mask = Mask::only(&["omega_g", "omega_r", "scale"]).unwrap();
    let r = fit_dark_resonance(&m, &data, perturbed(&truth(), &mask, 1.2), &Bounds::default(), &mask).unwrap();
    assert!(r.history.len() >= 2);
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]), "{:?}", r.history);
    assert_eq!(*r.history.last().unwrap(), r.chi_square);
}

#[test]
fn point_order_does_not_matter() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 41, 0.02, 3);
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let shuffled = ScanData::new(pick(&data.detuning_hz), pick(&data.rate), Some(pick(&data.sigma))).unwrap();
    let mask = Mask::only(&["omega_r", "delta_g", "scale"]).unwrap();
    let guess = perturbed(&truth(), &mask, 1.1);
    let a = fit_dark_resonance(&m, &data, guess, &Bounds::default(), &mask).unwrap();
    let b = fit_dark_resonance(&m, &shuffled, guess, &Bounds::default(), &mask).unwrap();
    for (p, q) in a.params.to_array().iter().zip(b.params.to_array()) {
        assert!((p - q).abs() <= 1e-6 * p.abs().max(1e-12), "{p} vs {q}");
    }
}

#[test]
fn rescaled_counts_only_rescale_the_amplitude() {
    let m = model();
    let p = FitParams { background: 0.0, ..truth() };
    let data = noisy_scan(&m, &p, 41, 0.02, 5);
    let k = 7.5;
    let scaled = ScanData::new(data.detuning_hz.clone(), data.rate.iter().map(|r| k * r).collect(), Some(data.sigma.iter().map(|s| k * s).collect())).unwrap();
    let mask = Mask::only(&["omega_r", "delta_g", "scale"]).unwrap();
    let guess = perturbed(&p, &mask, 1.1);
    let a = fit_dark_resonance(&m, &data, guess, &Bounds::default(), &mask).unwrap();
    let b = fit_dark_resonance(&m, &scaled, FitParams { scale: k * guess.scale, ..guess }, &Bounds::default(), &mask).unwrap();
    assert!((b.params.scale / a.params.scale - k).abs() < 1e-5 * k);
    assert!((b.params.omega_r / a.params.omega_r - 1.0).abs() < 1e-6);
    assert!((b.params.delta_g / a.params.delta_g - 1.0).abs() < 1e-6);
    assert!((b.chi_square - a.chi_square).abs() < 1e-6 * a.chi_square);
}

#[test]
fn invalid_fit_setups_are_rejected() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 9, 0.0, 0);
    let none = Mask::only(&[]).unwrap();
    assert!(matches!(fit_dark_resonance(&m, &data, truth(), &Bounds::default(), &none), Err(Error::InvalidConfig(_))));
    // nine points cannot constrain six parameters
    let six = Mask::only(&SIX).unwrap();
    assert!(matches!(fit_dark_resonance(&m, &data, truth(), &Bounds::default(), &six), Err(Error::InvalidConfig(_))));
    assert!(Mask::only(&["omega_x"]).is_err());
    let outside = FitParams { chi: 1.0, ..truth() };
    assert!(fit_dark_resonance(&m, &data, outside, &Bounds::default(), &Mask::only(&["chi"]).unwrap()).is_err());
}

#[test]
fn rates_repeat_with_period_pi_in_theta() {
    let m = model();
    let x = grid(21);
    let a = m.rates(&x, &truth()).unwrap();
    for theta in [0.6 + PI, 0.6 - PI] {
        let b = m.rates(&x, &FitParams { theta, ..truth() }).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() <= 1e-12 * p), "theta {theta}");
    }
}

#[test]
fn theta_wraps_instead_of_sticking_at_its_bound() {
    let m = model();
    let data = noisy_scan(&m, &truth(), 41, 0.0, 0);
    let mask = Mask::only(&["theta", "chi", "scale"]).unwrap();
    let guess = FitParams { theta: 3.0, chi: 0.6, ..truth() };
    let r = fit_dark_resonance(&m, &data, guess, &Bounds::default(), &mask).unwrap();
    assert!(r.converged);
    assert!(r.chi_square < 1e-8, "{}", r.chi_square);
    assert!((r.params.theta - 0.6).abs() < 1e-6, "{}", r.params.theta);
}
