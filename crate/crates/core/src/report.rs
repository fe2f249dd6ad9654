//! Closed-form coherence prediction report.

use std::fmt::Write as _;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::phasematch::{gaussian_hwhm, predict_coherence, sinc_hwhm, CoherencePrediction, Regime};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictReport {
    pub prediction: CoherencePrediction,
    /// Noncollinear sinc bandwidth; `None` at θ₀ = 0.
    pub delta_q_noncollinear: Option<f64>,
    pub delta_q_collinear: f64,
    pub radius_m: f64,
    pub gain_peak: f64,
}

pub fn predict(cfg: &ExperimentConfig) -> Result<PredictReport> {
    cfg.validate()?;
    let prediction = predict_coherence(&cfg.pump, &cfg.crystal, &cfg.detector)?;
    debug_assert_eq!(prediction.delta_q_gauss, gaussian_hwhm(&cfg.pump)?);
    Ok(PredictReport {
        radius_m: prediction.coherence_radius_m(&cfg.crystal, &cfg.detector),
        delta_q_noncollinear: sinc_hwhm(&cfg.crystal, Regime::NoncollinearLinear).ok(),
        delta_q_collinear: sinc_hwhm(&cfg.crystal, Regime::CollinearQuadratic)?,
        gain_peak: cfg.mean_gain_peak(),
        prediction,
    })
}

impl PredictReport {
    fn rows(&self) -> Vec<(&'static str, String)> {
        let p = &self.prediction;
        vec![
            ("delta_q_gauss_rad_per_m", p.delta_q_gauss.to_string()),
            (
                "delta_q_sinc_noncollinear_rad_per_m",
                self.delta_q_noncollinear.map_or_else(|| "n/a".into(), |v| v.to_string()),
            ),
            ("delta_q_sinc_collinear_rad_per_m", self.delta_q_collinear.to_string()),
            ("regime", p.regime.name().to_string()),
            ("ratio_gauss_over_sinc", p.ratio.to_string()),
            ("radius_rad_per_m", p.coherence_radius_q.to_string()),
            ("radius_um", (self.radius_m * 1e6).to_string()),
            ("radius_pixels", p.coherence_radius_pixels.to_string()),
            ("gain_peak", self.gain_peak.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k:<38} {v}");
        }
        let note = if self.prediction.ratio < 1.0 {
            "pump waist sets the coherence area (ratio < 1)"
        } else {
            "phase matching sets the coherence area (ratio >= 1)"
        };
        let _ = writeln!(s, "{note}");
        s
    }

    pub fn to_csv(&self) -> String {
        let rows = self.rows();
        let head: Vec<&str> = rows.iter().map(|r| r.0).collect();
        let vals: Vec<String> = rows.into_iter().map(|r| r.1).collect();
        format!("{}\n{}\n", head.join(","), vals.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_prediction() {
        let r = predict(&ExperimentConfig::default()).unwrap();
        assert!((r.prediction.coherence_radius_pixels - 0.665).abs() < 5e-4);
        assert!(r.prediction.ratio < 1.0);
        assert!(r.to_text().contains("ratio < 1"));
        assert_eq!(r.to_csv().lines().count(), 2);
    }

    #[test]
    fn zero_length_crystal_fails() {
        let mut cfg = ExperimentConfig::default();
        cfg.crystal.length = 0.0;
        assert!(predict(&cfg).is_err());
    }

    #[test]
    fn collinear_only_at_zero_angle() {
        let mut cfg = ExperimentConfig::default();
        cfg.crystal.emission_angle = 0.0;
        let r = predict(&cfg).unwrap();
        assert!(r.delta_q_noncollinear.is_none());
        assert!(r.to_text().contains("n/a"));
    }
}
