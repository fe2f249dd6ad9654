//! Experiment parameters, all stored in SI units.
//!
//! Defaults reproduce the apparatus of the reference experiment: a 355 nm
//! pump, a 1 cm type-II BBO crystal, an f-f lens of 10 cm and a 20 µm pixel
//! CCD with 80 % quantum efficiency and 4 e⁻ read noise.

use std::f64::consts::PI;

use crate::analysis::Region;
use crate::error::{Error, Result};

/// Pump laser parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpConfig {
    /// Pump wavelength (m).
    pub wavelength: f64,
    /// Gaussian amplitude waist w_p (m); the field falls as exp(−x²/w_p²).
    pub waist: f64,
    /// Mean pulse power entering the gain law (W).
    pub mean_pulse_power: f64,
    /// Pulse duration (s).
    pub pulse_duration: f64,
    /// Relative standard deviation of the slow pulse-to-pulse power drift.
    pub power_fluct_frac: f64,
    /// Longitudinal laser modes n; `None` means a single-valued (n → ∞) pulse.
    pub laser_mode_count: Option<u32>,
    /// When set, the mean power is chosen so the peak gain equals this value.
    pub gain_peak: Option<f64>,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            wavelength: 355e-9,
            waist: 1.0e-3,
            mean_pulse_power: 1.0,
            pulse_duration: 5e-9,
            power_fluct_frac: 0.20,
            laser_mode_count: Some(10),
            gain_peak: None,
        }
    }
}

impl PumpConfig {
    /// Transverse pump area π w_p²/2 used to turn power into amplitude.
    pub fn area(&self) -> f64 {
        PI * self.waist * self.waist / 2.0
    }

    /// Pump amplitude sqrt(P / area) in √W/m.
    pub fn amplitude(&self, power: f64) -> f64 {
        (power.max(0.0) / self.area()).sqrt()
    }

    /// Mean power after resolving a pinned peak gain.
    pub fn resolved_mean_power(&self, gain_coefficient: f64) -> f64 {
        match self.gain_peak {
            Some(g) => (g / gain_coefficient).powi(2) * self.area(),
            None => self.mean_pulse_power,
        }
    }

    /// Peak parametric gain σ·A_pump at the mean power.
    pub fn mean_gain_peak(&self, gain_coefficient: f64) -> f64 {
        gain_coefficient * self.amplitude(self.resolved_mean_power(gain_coefficient))
    }

    pub fn validate(&self) -> Result<()> {
        positive("pump.wavelength_nm", self.wavelength)?;
        positive("pump.waist_mm", self.waist)?;
        non_negative("pump.power_w", self.mean_pulse_power)?;
        positive("pump.pulse_duration_ns", self.pulse_duration)?;
        if !(0.0..1.0).contains(&self.power_fluct_frac) {
            return Err(Error::config("pump.power_fluct", "must lie in [0, 1)"));
        }
        if self.laser_mode_count == Some(0) {
            return Err(Error::config("pump.laser_modes", "must be >= 1"));
        }
        if let Some(g) = self.gain_peak {
            non_negative("pump.gain_peak", g)?;
        }
        Ok(())
    }
}

/// Which phase-matching bandwidth formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegimeSelection {
    /// Noncollinear when θ₀ > 0 and its bandwidth is the narrower one.
    #[default]
    Auto,
    Noncollinear,
    Collinear,
}

/// Nonlinear crystal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfig {
    /// Crystal length l (m).
    pub length: f64,
    /// Degenerate signal/idler wavelength λ (m).
    pub degenerate_wavelength: f64,
    /// Emission angle θ₀ of the matching ring (rad).
    pub emission_angle: f64,
    /// Gain coefficient σ with g = σ·A_pump (m/√W).
    pub gain_coefficient: f64,
    pub regime: RegimeSelection,
    /// Dimensionless prefactor of both sinc bandwidth formulas.
    pub sinc_prefactor: f64,
    /// Coefficient c_Ω of the frequency term of Δk (s/m).
    pub detuning_coeff: f64,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        Self {
            length: 1e-2,
            degenerate_wavelength: 710e-9,
            emission_angle: 0.01,
            // 2.53 (mm²/W)^½
            gain_coefficient: 2.53e-3,
            regime: RegimeSelection::Auto,
            sinc_prefactor: 2.78,
            detuning_coeff: 0.0,
        }
    }
}

impl CrystalConfig {
    pub fn validate(&self) -> Result<()> {
        positive("crystal.length_mm", self.length)?;
        positive("crystal.wavelength_nm", self.degenerate_wavelength)?;
        if !(self.emission_angle >= 0.0 && self.emission_angle < PI / 2.0) {
            return Err(Error::config(
                "crystal.emission_angle_rad",
                "must lie in [0, π/2)",
            ));
        }
        positive("crystal.sigma", self.gain_coefficient)?;
        positive("crystal.sinc_prefactor", self.sinc_prefactor)?;
        finite("crystal.detuning_coeff", self.detuning_coeff)?;
        Ok(())
    }
}

/// CCD camera and far-field lens.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Pixel pitch (m).
    pub pixel_pitch: f64,
    /// Sensor columns.
    pub width: usize,
    /// Sensor rows.
    pub height: usize,
    pub quantum_efficiency: f64,
    /// Standard deviation δη of the relative per-pixel efficiency.
    pub qe_fluct: f64,
    /// Read noise Δ (electrons rms per pixel).
    pub read_noise: f64,
    /// Focal length of the f-f lens (m).
    pub focal_length: f64,
    pub saturation: u16,
    /// Draw Poisson photocounts; disabling it is a debugging bypass.
    pub poisson: bool,
    /// Seed of the frozen fixed-pattern efficiency map.
    pub pattern_seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            pixel_pitch: 20e-6,
            width: 1340,
            height: 400,
            quantum_efficiency: 0.80,
            qe_fluct: 0.03,
            read_noise: 4.0,
            focal_length: 0.10,
            saturation: u16::MAX,
            poisson: true,
            pattern_seed: 0x5e_ed0f_ccd0,
        }
    }
}

impl DetectorConfig {
    /// Noiseless readout: counts = round(I).
    pub fn noiseless(mut self) -> Self {
        self.quantum_efficiency = 1.0;
        self.qe_fluct = 0.0;
        self.read_noise = 0.0;
        self.poisson = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("detector.pixel_um", self.pixel_pitch)?;
        positive("detector.focal_mm", self.focal_length)?;
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::config("detector.qe", "must lie in (0, 1]"));
        }
        non_negative("detector.qe_fluct", self.qe_fluct)?;
        non_negative("detector.read_noise", self.read_noise)?;
        if self.width == 0 {
            return Err(Error::config("detector.width", "must be >= 1"));
        }
        if self.height == 0 {
            return Err(Error::config("detector.height", "must be >= 1"));
        }
        if self.saturation == 0 {
            return Err(Error::config("detector.saturation", "must be >= 1"));
        }
        Ok(())
    }
}

/// Operator ordering of the sampled phase-space amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingOrdering {
    /// Classical twin-beam amplitudes without vacuum noise.
    #[default]
    Normal,
    /// Wigner sampling with ½-photon vacuum noise, subtracted afterwards.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    /// q-samples per axis of each half-plane; must be a power of two.
    pub grid_size: usize,
    /// q-samples per pixel per axis; `None` picks the smallest value that
    /// puts at least four samples across the predicted coherence radius.
    pub oversample: Option<usize>,
    pub modes_min: u32,
    pub modes_max: u32,
    pub ordering: SamplingOrdering,
    /// Apply the |sinc| phase-matching envelope in q-space.
    pub apodization: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            grid_size: 256,
            oversample: None,
            modes_min: 50,
            modes_max: 300,
            ordering: SamplingOrdering::Normal,
            apodization: true,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 8 || !self.grid_size.is_power_of_two() {
            return Err(Error::config(
                "synthesis.grid",
                "must be a power of two >= 8",
            ));
        }
        if self.oversample == Some(0) {
            return Err(Error::config("synthesis.oversample", "must be >= 1"));
        }
        if self.modes_min == 0 {
            return Err(Error::config("synthesis.modes_min", "must be >= 1"));
        }
        if self.modes_max < self.modes_min {
            return Err(Error::config(
                "synthesis.modes_max",
                "must be >= synthesis.modes_min",
            ));
        }
        Ok(())
    }
}

/// What the estimation chain looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnalysisSource {
    /// Detected integer counts.
    #[default]
    Frame,
    /// Photon-number map before detection (no shot, read or pattern noise).
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusConvention {
    #[default]
    Hwhm,
    /// Radius where the fitted Gaussian falls to 1/e.
    OneOverE,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Region in frame pixel coordinates; `None` uses the central 80 % of
    /// the signal half.
    pub region: Option<Region>,
    pub max_disp: usize,
    /// Pixel decimation stride for the spatial statistics.
    pub stride: usize,
    pub radius: RadiusConvention,
    pub source: AnalysisSource,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            region: None,
            max_disp: 8,
            stride: 1,
            radius: RadiusConvention::Hwhm,
            source: AnalysisSource::Frame,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_disp < 4 {
            return Err(Error::config("analysis.max_disp", "must be >= 4"));
        }
        if self.stride == 0 {
            return Err(Error::config("analysis.stride", "must be >= 1"));
        }
        Ok(())
    }
}

/// One simulated setup.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub pump: PumpConfig,
    pub crystal: CrystalConfig,
    pub detector: DetectorConfig,
    pub synthesis: SynthesisConfig,
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.crystal.validate()?;
        self.detector.validate()?;
        self.synthesis.validate()?;
        self.analysis.validate()
    }

    /// Mean peak gain of the configured pump.
    pub fn mean_gain_peak(&self) -> f64 {
        self.pump.mean_gain_peak(self.crystal.gain_coefficient)
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, "must be finite"))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be > 0 (got {v})")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be >= 0 (got {v})")))
    }
}
