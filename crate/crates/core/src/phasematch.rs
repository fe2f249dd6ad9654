//! Closed-form low-gain coherence predictions.
//!
//! The coherence area of the far-field speckle is set by the product of two
//! factors of the pair amplitude: the Fourier-transformed Gaussian pump and the
//! sinc of the longitudinal phase mismatch. The narrower of the two wins.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::config::{CrystalConfig, DetectorConfig, PumpConfig, RegimeSelection};
use crate::error::{Error, Result};

/// Positive root of sinc²(x) = 1/2.
pub const SINC_SQ_HALF_MAX: f64 = 1.391_557_378_251_510_2;

/// sin(x)/x with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Which term of the expanded phase mismatch dominates the sinc bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NoncollinearLinear,
    CollinearQuadratic,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::NoncollinearLinear => "noncollinear_linear",
            Regime::CollinearQuadratic => "collinear_quadratic",
        }
    }
}

/// HWHM of the Gaussian pump factor, δq = sqrt(2 ln 2)/w_p (rad/m).
pub fn gaussian_hwhm(pump: &PumpConfig) -> Result<f64> {
    if !(pump.waist.is_finite() && pump.waist > 0.0) {
        return Err(Error::config("pump.waist_mm", "waist must be > 0"));
    }
    Ok((2.0 * LN_2).sqrt() / pump.waist)
}

/// HWHM Δq of the sinc factor (rad/m).
///
/// Noncollinear: `p / (l tan θ₀)`. Collinear: `p · (2π/(λ l))^½`, evaluated
/// exactly as printed with `p` the configured prefactor (2.78).
pub fn sinc_hwhm(crystal: &CrystalConfig, regime: Regime) -> Result<f64> {
    if !(crystal.length.is_finite() && crystal.length > 0.0) {
        return Err(Error::config("crystal.length_mm", "length must be > 0"));
    }
    let p = crystal.sinc_prefactor;
    match regime {
        Regime::NoncollinearLinear => {
            let t = crystal.emission_angle.tan();
            if !(t > 0.0) {
                return Err(Error::Regime {
                    theta0: crystal.emission_angle,
                });
            }
            Ok(p / (crystal.length * t))
        }
        Regime::CollinearQuadratic => {
            Ok(p * (2.0 * PI / (crystal.degenerate_wavelength * crystal.length)).sqrt())
        }
    }
}

/// Resolve the configured regime. `Auto` takes the noncollinear formula when
/// θ₀ > 0 and its bandwidth is the narrower one (the linear term dominates).
pub fn resolve_regime(crystal: &CrystalConfig) -> Result<Regime> {
    Ok(match crystal.regime {
        RegimeSelection::Noncollinear => Regime::NoncollinearLinear,
        RegimeSelection::Collinear => Regime::CollinearQuadratic,
        RegimeSelection::Auto => {
            if crystal.emission_angle > 0.0
                && sinc_hwhm(crystal, Regime::NoncollinearLinear)?
                    <= sinc_hwhm(crystal, Regime::CollinearQuadratic)?
            {
                Regime::NoncollinearLinear
            } else {
                Regime::CollinearQuadratic
            }
        }
    })
}

/// Far-field position x = (λ f / 2π) q on the focal plane (m).
pub fn far_field_position(q: f64, wavelength: f64, focal_length: f64) -> f64 {
    wavelength * focal_length / (2.0 * PI) * q
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherencePrediction {
    pub delta_q_gauss: f64,
    pub delta_q_sinc: f64,
    pub regime: Regime,
    /// δq/Δq; below one the pump waist alone sets the coherence area.
    pub ratio: f64,
    pub coherence_radius_q: f64,
    pub coherence_radius_pixels: f64,
}

impl CoherencePrediction {
    pub fn coherence_radius_m(&self, crystal: &CrystalConfig, detector: &DetectorConfig) -> f64 {
        far_field_position(
            self.coherence_radius_q,
            crystal.degenerate_wavelength,
            detector.focal_length,
        )
    }
}

/// Low-gain coherence radius in q-space and in detector pixels.
pub fn predict_coherence(
    pump: &PumpConfig,
    crystal: &CrystalConfig,
    detector: &DetectorConfig,
) -> Result<CoherencePrediction> {
    let delta_q_gauss = gaussian_hwhm(pump)?;
    let regime = resolve_regime(crystal)?;
    let delta_q_sinc = sinc_hwhm(crystal, regime)?;
    let coherence_radius_q = delta_q_gauss.min(delta_q_sinc);
    let coherence_radius_pixels = far_field_position(
        coherence_radius_q,
        crystal.degenerate_wavelength,
        detector.focal_length,
    ) / detector.pixel_pitch;
    Ok(CoherencePrediction {
        delta_q_gauss,
        delta_q_sinc,
        regime,
        ratio: delta_q_gauss / delta_q_sinc,
        coherence_radius_q,
        coherence_radius_pixels,
    })
}

/// Expansion of the longitudinal mismatch about the matching ring,
/// Δk = c₁(|q|−q₀) + c₂(|q|−q₀)² + c_Ω Ω, with c₁, c₂ chosen so that sinc²(Δk l/2)
/// has exactly the HWHM of [`sinc_hwhm`] in the active regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detuning {
    /// Matching-ring radius q₀ = 2π tan θ₀ / λ (rad/m).
    pub ring_radius: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub frequency: f64,
    pub crystal_length: f64,
}

impl Detuning {
    pub fn new(crystal: &CrystalConfig) -> Result<Self> {
        let regime = resolve_regime(crystal)?;
        let bandwidth = sinc_hwhm(crystal, regime)?;
        let l = crystal.length;
        let (linear, quadratic) = match regime {
            Regime::NoncollinearLinear => (2.0 * SINC_SQ_HALF_MAX / (l * bandwidth), 0.0),
            Regime::CollinearQuadratic => {
                (0.0, 2.0 * SINC_SQ_HALF_MAX / (l * bandwidth * bandwidth))
            }
        };
        Ok(Self {
            ring_radius: 2.0 * PI * crystal.emission_angle.tan() / crystal.degenerate_wavelength,
            linear,
            quadratic,
            frequency: crystal.detuning_coeff,
            crystal_length: l,
        })
    }

    /// Δk for a transverse wave-vector magnitude on the symmetric combination.
    pub fn radial(&self, q_abs: f64, omega: f64) -> f64 {
        let u = q_abs - self.ring_radius;
        self.linear * u + self.quadratic * u * u + self.frequency * omega
    }

    /// Δk(q₁, q₂, Ω), evaluated on (q₁ − q₂)/2.
    pub fn delta_k(&self, q1: [f64; 2], q2: [f64; 2], omega: f64) -> f64 {
        let sx = 0.5 * (q1[0] - q2[0]);
        let sy = 0.5 * (q1[1] - q2[1]);
        self.radial(sx.hypot(sy), omega)
    }

    /// |sinc(Δk l/2)| at a single transverse position, the amplitude envelope
    /// applied to the sampled far field.
    pub fn envelope(&self, q_abs: f64) -> f64 {
        sinc(self.radial(q_abs, 0.0) * self.crystal_length / 2.0).abs()
    }
}

pub fn delta_k(q1: [f64; 2], q2: [f64; 2], omega: f64, crystal: &CrystalConfig) -> Result<f64> {
    Ok(Detuning::new(crystal)?.delta_k(q1, q2, omega))
}

/// Low-gain pair amplitude g · sinc(Δk l/2) · exp(−|q₁+q₂|² w_p²/4).
pub fn pair_amplitude(
    q1: [f64; 2],
    q2: [f64; 2],
    omega: f64,
    pump: &PumpConfig,
    crystal: &CrystalConfig,
) -> Result<Complex64> {
    let g = pump.mean_gain_peak(crystal.gain_coefficient);
    let dk = delta_k(q1, q2, omega, crystal)?;
    let sx = q1[0] + q2[0];
    let sy = q1[1] + q2[1];
    let w2 = pump.waist * pump.waist;
    let amp = g * sinc(dk * crystal.length / 2.0) * (-(sx * sx + sy * sy) * w2 / 4.0).exp();
    Ok(Complex64::new(amp, 0.0))
}
