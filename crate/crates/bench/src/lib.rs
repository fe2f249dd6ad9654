//! Shared fixtures for the benchmarks.

use ndarray::Array2;
use speckle_core::synthesis::build_gain_profile;
use speckle_core::{ExperimentConfig, GainProfile, Synthesizer};

/// Far-field setup with ~2 pixel speckles on a `grid`² sampling.
pub fn config(grid: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.pump.gain_peak = Some(2.0);
    cfg.detector.focal_length = 0.31;
    cfg.synthesis.grid_size = grid;
    cfg.synthesis.modes_min = 10;
    cfg.synthesis.modes_max = 10;
    cfg
}

pub fn synthesizer_and_profile(cfg: &ExperimentConfig) -> (Synthesizer, GainProfile) {
    let synth = Synthesizer::new(cfg).expect("valid bench config");
    let power = cfg.pump.resolved_mean_power(cfg.crystal.gain_coefficient);
    let profile = build_gain_profile(&cfg.pump, &cfg.crystal, power, synth.grid()).expect("gain profile");
    (synth, profile)
}

/// One composed photon-number frame for the analysis benchmarks.
pub fn intensity(cfg: &ExperimentConfig) -> Array2<f64> {
    let synth = Synthesizer::new(cfg).expect("valid bench config");
    synth.frame(cfg, 1).expect("frame").map
}
