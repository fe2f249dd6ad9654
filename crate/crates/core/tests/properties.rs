use std::f64::consts::LN_2;

use ndarray::Array2;
use proptest::prelude::*;

use speckle_core::analysis::{
    autocorrelation, cross_correlation, estimate_gain, gain_forward, speckle_radius,
    temporal_modes_from_moments, thermal_variance, NoiseModel,
};
use speckle_core::io::{config_to_text, parse_config};
use speckle_core::phasematch::{gaussian_hwhm, pair_amplitude, predict_coherence, Detuning};
use speckle_core::synthesis::{build_gain_profile, draw_pulse};
use speckle_core::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn frame_from(seed: u64, rows: usize, cols: usize) -> Array2<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>() * 100.0)
}

proptest! {
    #[test]
    fn gaussian_width_times_waist(w in 1e-5f64..1e-1) {
        let pump = PumpConfig { waist: w, ..PumpConfig::default() };
        let v = gaussian_hwhm(&pump).unwrap() * w;
        prop_assert!(rel(v, (2.0 * LN_2).sqrt()) <= 1e-12);
    }

    #[test]
    fn pair_amplitude_exchange_symmetry(
        q1x in -1e5f64..1e5, q1y in -1e5f64..1e5,
        q2x in -1e5f64..1e5, q2y in -1e5f64..1e5,
        omega in -1e13f64..1e13,
    ) {
        let pump = PumpConfig { gain_peak: Some(1.3), ..PumpConfig::default() };
        let crystal = CrystalConfig::default();
        let a = pair_amplitude([q1x, q1y], [q2x, q2y], omega, &pump, &crystal).unwrap();
        let b = pair_amplitude([q2x, q2y], [q1x, q1y], -omega, &pump, &crystal).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn pair_amplitude_peaks_on_ring(
        phi in 0.0f64..std::f64::consts::TAU,
        q1x in -1e6f64..1e6, q1y in -1e6f64..1e6,
        q2x in -1e6f64..1e6, q2y in -1e6f64..1e6,
    ) {
        let pump = PumpConfig { gain_peak: Some(0.7), ..PumpConfig::default() };
        let crystal = CrystalConfig::default();
        let g = pump.mean_gain_peak(crystal.gain_coefficient);
        let q0 = Detuning::new(&crystal).unwrap().ring_radius;
        let q = [q0 * phi.cos(), q0 * phi.sin()];
        let peak = pair_amplitude(q, [-q[0], -q[1]], 0.0, &pump, &crystal).unwrap();
        prop_assert!(rel(peak.norm(), g) <= 1e-12);
        let any = pair_amplitude([q1x, q1y], [q2x, q2y], 0.0, &pump, &crystal).unwrap();
        prop_assert!(any.norm() <= g * (1.0 + 1e-12));
    }

    #[test]
    fn radius_pixels_invariant_under_optics_scaling(
        f in 0.02f64..1.0, pitch in 2e-6f64..5e-5, k in 0.25f64..8.0,
    ) {
        let pump = PumpConfig::default();
        let crystal = CrystalConfig::default();
        let mut det = DetectorConfig { focal_length: f, pixel_pitch: pitch, ..DetectorConfig::default() };
        let a = predict_coherence(&pump, &crystal, &det).unwrap().coherence_radius_pixels;
        det.focal_length *= k;
        det.pixel_pitch *= k;
        let b = predict_coherence(&pump, &crystal, &det).unwrap().coherence_radius_pixels;
        prop_assert!(rel(a, b) <= 1e-12);
    }

    #[test]
    fn gain_profile_invariants(power in 0.0f64..4.0, waist_mm in 0.3f64..2.0) {
        let mut cfg = ExperimentConfig::default();
        cfg.pump.waist = waist_mm * 1e-3;
        cfg.synthesis.grid_size = 32;
        cfg.synthesis.oversample = Some(1);
        let grid = SimulationGrid::from_config(&cfg).unwrap();
        let p = build_gain_profile(&cfg.pump, &cfg.crystal, power, &grid).unwrap();
        prop_assert!(p.gain.iter().all(|&g| g >= 0.0));
        let max = p.gain.iter().cloned().fold(0.0, f64::max);
        prop_assert!(rel(max, p.peak).min((max - p.peak).abs()) <= 1e-12);
        if p.peak > 0.0 {
            prop_assert!(p.effective_waist <= cfg.pump.waist * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pulse_draw_invariants(seed in any::<u64>(), lo in 1u32..100, span in 0u32..300, fluct in 0.0f64..0.9) {
        let mut cfg = ExperimentConfig::default();
        cfg.pump.power_fluct_frac = fluct;
        cfg.synthesis.modes_min = lo;
        cfg.synthesis.modes_max = lo + span;
        let p = draw_pulse(&cfg.pump, cfg.crystal.gain_coefficient, &cfg.synthesis, seed);
        prop_assert!(p.power >= 0.0 && p.power.is_finite());
        prop_assert!(p.temporal_mode_count >= lo && p.temporal_mode_count <= lo + span);
    }

    #[test]
    fn correlations_are_bounded_and_symmetric(seed in any::<u64>(), rows in 14usize..30, half in 14usize..30) {
        let data = frame_from(seed, rows, 2 * half);
        let d = 3;
        let region = Region::new(d, d, half - 2 * d, rows - 2 * d).unwrap();
        let auto = autocorrelation(data.view(), &region, d).unwrap();
        let cross = cross_correlation(data.view(), &region, d).unwrap();
        let di = d as isize;
        for dy in -di..=di {
            for dx in -di..=di {
                for c in [auto.get(dy, dx), cross.get(dy, dx)] {
                    prop_assert!(c.is_nan() || (-1.0..=1.0).contains(&c));
                }
                prop_assert_eq!(auto.get(dy, dx).to_bits(), auto.get(-dy, -dx).to_bits());
            }
        }
        prop_assert!((auto.get(0, 0) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn gain_round_trip(g in 0.01f64..5.0, m in 1.0f64..1e3, eta in 0.05f64..1.0, eta_coll in 0.01f64..1.0) {
        let n = gain_forward(g, eta, eta_coll, m);
        prop_assert!(rel(estimate_gain(n, eta, eta_coll, m).unwrap(), g) <= 1e-12);
    }

    #[test]
    fn mode_count_round_trip(
        n in 1.0f64..1e4, m in 1.0f64..1e3,
        shot in any::<bool>(), de in 0.0f64..0.1, read in 0.0f64..10.0,
    ) {
        let noise = NoiseModel { shot_noise: shot, delta_eta: de, read_noise: read };
        let v = thermal_variance(n, m, &noise);
        prop_assert!(rel(temporal_modes_from_moments(n, v, &noise).unwrap(), m) <= 1e-9);
    }

    #[test]
    fn radius_equivariant_and_amplitude_free(w in 1.0f64..3.0, k in 0.5f64..2.0, a in 0.05f64..1.0) {
        let gauss = |w: f64, a: f64| {
            CorrelationMap::from_fn(CorrelationKind::Auto, 12, move |dy, dx| {
                if dy == 0 && dx == 0 {
                    1.0
                } else {
                    let r2 = (dy * dy + dx * dx) as f64;
                    a * (-LN_2 * r2 / (w * w)).exp()
                }
            })
        };
        let base = speckle_radius(&gauss(w, a)).unwrap().radius;
        let scaled = speckle_radius(&gauss(k * w, a)).unwrap().radius;
        let louder = speckle_radius(&gauss(w, 1.0)).unwrap().radius;
        prop_assert!(rel(base, w) <= 1e-6);
        prop_assert!(rel(scaled, k * base) <= 1e-6);
        prop_assert!(rel(louder, base) <= 1e-6);
    }

    #[test]
    fn config_text_round_trip(
        waist in 0.1f64..5.0, power in 0.0f64..10.0, fluct in 0.0f64..0.99,
        f in 10.0f64..1000.0, qe in 0.01f64..1.0, read in 0.0f64..20.0,
        mmin in 1u32..50, extra in 0u32..500, gain in proptest::option::of(0.0f64..5.0),
    ) {
        let mut cfg = ExperimentConfig::default();
        cfg.pump.waist = waist * 1e-3;
        cfg.pump.mean_pulse_power = power;
        cfg.pump.power_fluct_frac = fluct;
        cfg.pump.gain_peak = gain;
        cfg.detector.focal_length = f * 1e-3;
        cfg.detector.quantum_efficiency = qe;
        cfg.detector.read_noise = read;
        cfg.synthesis.modes_min = mmin;
        cfg.synthesis.modes_max = mmin + extra;
        let back = parse_config(&config_to_text(&cfg)).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
