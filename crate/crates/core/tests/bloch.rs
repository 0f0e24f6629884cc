use std::f64::consts::PI;

use ionsps::atom::*;
use ionsps::bloch::*;
use ionsps::C64;
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TWO_PI: f64 = 2.0 * PI;

/// Random mixed state: G·G† normalized, with G a complex Gaussian-ish matrix.
fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = DMatrix::from_fn(8, 8, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

fn random_lasers(rng: &mut ChaCha8Rng) -> Vec<LaserField> {
    let pol = Polarization::from_angles(rng.random_range(-PI..PI), rng.random_range(-PI / 4.0..PI / 4.0));
    vec![
        LaserField::new(Transition::Cooling, TWO_PI * rng.random_range(1e6..30e6), TWO_PI * rng.random_range(-30e6..10e6), pol),
        LaserField::new(Transition::Repump, TWO_PI * rng.random_range(1e6..30e6), TWO_PI * rng.random_range(-20e6..20e6), pol),
    ]
}

#[test]
fn random_trajectories_keep_density_matrix_invariants() {
    let scheme = LevelScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)).normalize();
        let env = FieldEnvironment::new(rng.random_range(0.0..1e-3), dir).unwrap();
        let l = build_liouvillian(&scheme, &random_lasers(&mut rng), &env, None).unwrap();
        assert!(l.trace_defect() < 1e-12 * l.scale());
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 25e-9).collect();
        let tr = evolve(&random_state(&mut rng), &l, &grid).unwrap();
        for rho in &tr.states {
            assert!((rho.trace().re - 1.0).abs() < 1e-9 && rho.trace().im.abs() < 1e-9);
            assert!(rho.hermiticity_error() < 1e-10);
            assert!(rho.min_eigenvalue() > -1e-10);
        }
    }
}

fn single_photon(scheme: &LevelScheme, omega_r: f64, window: f64) -> WavepacketDensity {
    let env = FieldEnvironment::along_z(5e-4).unwrap();
    let pol = Polarization::from_angles(PI / 4.0, 0.0);
    let cooling = LaserField::new(Transition::Cooling, TWO_PI * 15e6, -TWO_PI * 10e6, pol);
    let repump = LaserField::new(Transition::Repump, omega_r, 0.0, pol);
    let seq = PulseSequence::single_photon(cooling, repump, window);
    photon_wavepacket(scheme, &seq, &env, &DetectionMode::AllModes, window, 1e-9).unwrap()
}

#[test]
fn beats_sit_at_the_d_state_zeeman_splitting() {
    let scheme = LevelScheme::default();
    let splitting = (zeeman_shift(&scheme, LEVELS[5], 5e-4) - zeeman_shift(&scheme, LEVELS[4], 5e-4)) / TWO_PI;
    let wp = single_photon(&scheme, TWO_PI * 12e6, 1e-6);
    match beat_frequency(&wp).unwrap() {
        Beat::Detected { frequency, resolution } => {
            assert!((frequency - splitting).abs() < resolution, "beat {frequency} Hz vs splitting {splitting} Hz")
        }
        Beat::NoBeat => panic!("no beat in the simulated wavepacket"),
    }
}

#[test]
fn stronger_repump_gives_earlier_photons() {
    let scheme = LevelScheme::default();
    let means: Vec<f64> = [4e6, 7e6, 11e6, 16e6]
        .iter()
        .map(|f| single_photon(&scheme, TWO_PI * f, 2e-6).mean_arrival_time().unwrap())
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn photon_is_eventually_emitted() {
    let wp = single_photon(&LevelScheme::default(), TWO_PI * 12e6, 3e-6);
    assert!(wp.contained_probability() >= 0.99, "{}", wp.contained_probability());
    assert!(wp.density().iter().all(|&v| v >= 0.0));
}

#[test]
fn shelved_ion_without_repump_stays_dark() {
    let scheme = LevelScheme::default();
    let env = FieldEnvironment::along_z(5e-4).unwrap();
    let seq = PulseSequence {
        segments: vec![Segment { duration: 1e-6, lasers: vec![] }],
        trigger: 0,
        initial: InitialState::UniformShelved,
    };
    let wp = photon_wavepacket(&scheme, &seq, &env, &DetectionMode::AllModes, 1e-6, 1e-9).unwrap();
    assert!(wp.density().iter().all(|&v| v == 0.0));
}

#[test]
fn lab_frame_rotation_leaves_the_scan_unchanged() {
    // rotating the field with a polarization defined relative to it is a
    // change of coordinates only
    let scheme = LevelScheme::default();
    let pol = Polarization::from_angles(0.4, 0.1);
    let cooling = LaserField::new(Transition::Cooling, TWO_PI * 12e6, -TWO_PI * 12e6, pol);
    let repump = LaserField::new(Transition::Repump, TWO_PI * 8e6, 0.0, pol);
    let grid: Vec<f64> = (0..7).map(|i| TWO_PI * (-20e6 + 5e6 * i as f64)).collect();
    let along_z = FieldEnvironment::along_z(3e-4).unwrap();
    let tilted = FieldEnvironment::new(3e-4, Vector3::new(1.0, 2.0, 0.5).normalize()).unwrap();
    let a = dark_resonance_scan(&scheme, &cooling, &repump, &along_z, &DetectionMode::AllModes, &grid, Default::default()).unwrap();
    let b = dark_resonance_scan(&scheme, &cooling, &repump, &tilted, &DetectionMode::AllModes, &grid, Default::default()).unwrap();
    for (p, q) in a.iter().zip(&b) {
        let (p, q) = (p.rate.as_ref().unwrap(), q.rate.as_ref().unwrap());
        assert!((p - q).abs() < 1e-9 * p, "{p} vs {q}");
    }
}
