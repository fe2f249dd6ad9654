//! Parameter sweeps: synthesize, detect and analyze many frames, then
//! tabulate per-frame estimates and per-point aggregates as CSV.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::analysis::{analyze_image, fit_linear, fit_sinh2, EstimateReport, FitResult, NoiseModel};
use crate::config::{AnalysisSource, ExperimentConfig};
use crate::detector::{Detector, Frame};
use crate::error::{Error, Result};
use crate::io::set_key;
use crate::synthesis::{FrameIntensity, Synthesizer};

/// Seed offset between consecutive sweep points.
pub const SEED_STRIDE: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub base: ExperimentConfig,
    /// Configuration key being swept, e.g. `pump.waist_mm`.
    pub sweep_key: String,
    /// Values in the key's own units.
    pub values: Vec<f64>,
    pub frames_per_point: usize,
    pub seed_base: u64,
    /// Append scaling-law fits to the aggregate table.
    pub fits: bool,
    /// Write a generation-time comment line.
    pub timestamp: bool,
}

impl CampaignSpec {
    pub fn new(base: ExperimentConfig, sweep_key: impl Into<String>, values: Vec<f64>, frames_per_point: usize) -> Self {
        Self {
            base,
            sweep_key: sweep_key.into(),
            values,
            frames_per_point,
            seed_base: 0,
            fits: true,
            timestamp: false,
        }
    }

    /// Seed of frame `k` at sweep point `j`.
    pub fn seed(&self, j: usize, k: usize) -> u64 {
        self.seed_base
            .wrapping_add(j as u64 * SEED_STRIDE)
            .wrapping_add(k as u64)
    }

    /// Configuration of sweep point `j`.
    pub fn point_config(&self, j: usize) -> Result<ExperimentConfig> {
        let mut cfg = self.base.clone();
        set_key(&mut cfg, &self.sweep_key, &self.values[j].to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("campaign.sweep", "value list is empty"));
        }
        if self.frames_per_point == 0 {
            return Err(Error::config("campaign.frames", "must be >= 1"));
        }
        let mut probe = self.base.clone();
        set_key(&mut probe, &self.sweep_key, &self.values[0].to_string())?;
        Ok(())
    }
}

/// Everything needed to simulate and analyze one sweep point.
pub struct PointSetup {
    pub config: ExperimentConfig,
    pub synthesizer: Synthesizer,
    pub detector: Detector,
}

impl PointSetup {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let synthesizer = Synthesizer::new(&config)?;
        let detector = Detector::new(config.detector.clone())?;
        Ok(Self {
            config,
            synthesizer,
            detector,
        })
    }

    /// Photon-number map and detected frame for one seed, with metadata.
    pub fn simulate(&self, seed: u64) -> Result<(FrameIntensity, Frame)> {
        let intensity = self.synthesizer.frame(&self.config, seed)?;
        let mut frame = self.detector.detect(&intensity.map, seed)?;
        let m = &mut frame.metadata;
        m.pulse_power = Some(intensity.pulse.power);
        m.gain_peak = Some(intensity.pulse.gain_peak);
        m.mode_count = Some(intensity.pulse.temporal_mode_count);
        m.waist = Some(self.config.pump.waist);
        m.exposure = Some("single-shot".into());
        Ok((intensity, frame))
    }

    /// Run the estimation chain on whichever image the config selects.
    pub fn analyze(&self, intensity: &FrameIntensity, frame: &Frame) -> Result<EstimateReport> {
        analyze_source(&self.config, &intensity.map, frame)
    }
}

/// Estimation chain on the intensity map or the detected counts.
pub fn analyze_source(cfg: &ExperimentConfig, intensity: &Array2<f64>, frame: &Frame) -> Result<EstimateReport> {
    match cfg.analysis.source {
        AnalysisSource::Intensity => analyze_image(intensity.view(), &cfg.analysis, &NoiseModel::ideal(), 1.0),
        AnalysisSource::Frame => analyze_frame(cfg, frame),
    }
}

/// Estimation chain on detected counts.
pub fn analyze_frame(cfg: &ExperimentConfig, frame: &Frame) -> Result<EstimateReport> {
    analyze_image(
        frame.to_f64().view(),
        &cfg.analysis,
        &NoiseModel::from_detector(&cfg.detector),
        cfg.detector.quantum_efficiency,
    )
}

#[derive(Debug, Clone)]
pub struct FrameRow {
    /// Index of the sweep point.
    pub point: usize,
    pub sweep_value: f64,
    pub seed: u64,
    pub gain_peak: Option<f64>,
    pub modes: Option<u32>,
    pub estimate: std::result::Result<EstimateReport, &'static str>,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub sweep_value: f64,
    pub frames: usize,
    pub failed: usize,
    /// (median, median absolute deviation) over successful frames.
    pub mean_n: (f64, f64),
    pub m_hat: (f64, f64),
    pub g_hat: (f64, f64),
    pub radius: (f64, f64),
    /// Mean pump amplitude sqrt(P/(π w²/2)) of the point (√W/m).
    pub a_pump: f64,
    /// Median photons per coherence area, N/η_coll.
    pub n_mode: f64,
    /// Detection efficiency of the analyzed image.
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub rows: Vec<FrameRow>,
    pub aggregates: Vec<AggregateRow>,
    pub fits: Vec<(String, std::result::Result<FitResult, String>)>,
}

/// Median and median absolute deviation; NaN for an empty slice.
pub fn median_mad(values: &[f64]) -> (f64, f64) {
    fn median(v: &mut [f64]) -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
    let mut v = values.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    (med, median(&mut dev))
}

pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult> {
    spec.validate()?;
    let setups: Vec<std::result::Result<PointSetup, Error>> = (0..spec.values.len())
        .map(|j| spec.point_config(j).and_then(PointSetup::new))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|j| (0..spec.frames_per_point).map(move |k| (j, k)))
        .collect();
    let mut rows: Vec<FrameRow> = jobs
        .par_iter()
        .map(|&(j, k)| {
            let seed = spec.seed(j, k);
            let mut row = FrameRow {
                point: j,
                sweep_value: spec.values[j],
                seed,
                gain_peak: None,
                modes: None,
                estimate: Err(""),
            };
            let setup = match &setups[j] {
                Ok(s) => s,
                Err(e) => {
                    row.estimate = Err(e.code());
                    return row;
                }
            };
            row.estimate = match setup.simulate(seed) {
                Ok((intensity, frame)) => {
                    row.gain_peak = Some(intensity.pulse.gain_peak);
                    row.modes = Some(intensity.pulse.temporal_mode_count);
                    setup.analyze(&intensity, &frame).map_err(|e| e.code())
                }
                Err(e) => Err(e.code()),
            };
            if let Err(code) = row.estimate {
                log::debug!("sweep {} seed {seed}: {code}", row.sweep_value);
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value).then(a.seed.cmp(&b.seed)));

    let mut aggregates = Vec::with_capacity(spec.values.len());
    for (j, &value) in spec.values.iter().enumerate() {
        let ok: Vec<&EstimateReport> = rows
            .iter()
            .filter(|r| r.point == j)
            .filter_map(|r| r.estimate.as_ref().ok())
            .collect();
        let col = |f: fn(&EstimateReport) -> f64| median_mad(&ok.iter().map(|e| f(e)).collect::<Vec<_>>());
        let (a_pump, eta) = match &setups[j] {
            Ok(s) => {
                let p = &s.config.pump;
                let eta = match s.config.analysis.source {
                    AnalysisSource::Intensity => 1.0,
                    AnalysisSource::Frame => s.config.detector.quantum_efficiency,
                };
                (p.amplitude(p.resolved_mean_power(s.config.crystal.gain_coefficient)), eta)
            }
            Err(_) => (f64::NAN, f64::NAN),
        };
        aggregates.push(AggregateRow {
            sweep_value: value,
            frames: spec.frames_per_point,
            failed: spec.frames_per_point - ok.len(),
            mean_n: col(|e| e.mean_n),
            m_hat: col(|e| e.m_hat),
            g_hat: col(|e| e.g_hat),
            radius: col(|e| e.radius_pixels),
            a_pump,
            n_mode: col(|e| e.mean_n / e.eta_coll).0,
            eta,
        });
    }
    aggregates.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value));

    let fits = if spec.fits { campaign_fits(&aggregates) } else { Vec::new() };
    Ok(CampaignResult {
        rows,
        aggregates,
        fits,
    })
}

fn campaign_fits(aggs: &[AggregateRow]) -> Vec<(String, std::result::Result<FitResult, String>)> {
    let usable: Vec<&AggregateRow> = aggs
        .iter()
        .filter(|a| a.radius.0.is_finite() && a.g_hat.0.is_finite())
        .collect();
    let mut out = Vec::new();
    let line: Vec<(f64, f64)> = usable.iter().map(|a| (a.g_hat.0, a.radius.0)).collect();
    out.push((
        "radius_vs_gain".to_string(),
        fit_linear(&line).map_err(|e| e.to_string()),
    ));
    let pts: Vec<(f64, f64)> = usable
        .iter()
        .filter(|a| a.a_pump.is_finite() && a.n_mode.is_finite())
        .map(|a| (a.a_pump, a.n_mode))
        .collect();
    let (m_bar, _) = median_mad(&usable.iter().map(|a| a.m_hat.0).collect::<Vec<_>>());
    let eta = usable.first().map_or(f64::NAN, |a| a.eta);
    out.push((
        "photons_vs_pump".to_string(),
        fit_sinh2(&pts, eta * m_bar).map_err(|e| e.to_string()),
    ));
    out
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

impl CampaignResult {
    /// True when no frame produced an estimate.
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| r.estimate.is_err())
    }

    fn header(spec: &CampaignSpec, table: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# speckle-core {} campaign {table}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# sweep_key = {}", spec.sweep_key);
        let _ = writeln!(s, "# frames_per_point = {}", spec.frames_per_point);
        let _ = writeln!(s, "# seed_base = {}", spec.seed_base);
        if spec.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(s, "# generated_unix = {secs}");
        }
        s
    }

    pub fn frames_csv(&self, spec: &CampaignSpec) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "sweep_value",
            "seed",
            "mean_N_per_pixel",
            "M_hat",
            "g_hat",
            "radius_pixels",
            "radius_err",
            "M_err",
            "g_err",
            "eta_coll",
            "gain_peak",
            "M",
            "error",
        ])?;
        for r in &self.rows {
            let opt_f = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
            let mut rec = vec![r.sweep_value.to_string(), r.seed.to_string()];
            match &r.estimate {
                Ok(e) => rec.extend(
                    [
                        e.mean_n,
                        e.m_hat,
                        e.g_hat,
                        e.radius_pixels,
                        e.radius_err,
                        e.m_err,
                        e.g_err,
                        e.eta_coll,
                    ]
                    .map(fmt),
                ),
                Err(_) => rec.extend(std::iter::repeat(String::new()).take(8)),
            }
            rec.push(opt_f(r.gain_peak));
            rec.push(r.modes.map_or_else(String::new, |m| m.to_string()));
            rec.push(r.estimate.as_ref().err().map_or("", |c| c).to_string());
            w.write_record(&rec)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii csv");
        Ok(Self::header(spec, "frames") + &body)
    }

    pub fn aggregate_csv(&self, spec: &CampaignSpec) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "sweep_value",
            "frames",
            "failed",
            "mean_N_median",
            "mean_N_mad",
            "M_hat_median",
            "M_hat_mad",
            "g_hat_median",
            "g_hat_mad",
            "radius_median",
            "radius_mad",
            "a_pump",
            "n_mode",
            "eta",
        ])?;
        for a in &self.aggregates {
            let mut rec = vec![a.sweep_value.to_string(), a.frames.to_string(), a.failed.to_string()];
            rec.extend(
                [
                    a.mean_n.0, a.mean_n.1, a.m_hat.0, a.m_hat.1, a.g_hat.0, a.g_hat.1, a.radius.0,
                    a.radius.1, a.a_pump, a.n_mode, a.eta,
                ]
                .map(fmt),
            );
            w.write_record(&rec)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ascii csv");
        let mut out = Self::header(spec, "aggregate") + &body;
        for (name, fit) in &self.fits {
            match fit {
                Ok(f) => {
                    let params: Vec<String> = f
                        .parameters
                        .iter()
                        .map(|p| format!("{}={} {}_err={}", p.name, p.value, p.name, p.stderr))
                        .collect();
                    let _ = writeln!(
                        out,
                        "# fit {name}: {} points={} residual_norm={}",
                        params.join(" "),
                        f.points,
                        f.residual_norm
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "# fit {name}: failed: {e}");
                }
            }
        }
        Ok(out)
    }

    /// Write `frames.csv` and `aggregate.csv` into `dir`.
    pub fn write(&self, spec: &CampaignSpec, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("frames.csv"), self.frames_csv(spec)?)?;
        std::fs::write(dir.join("aggregate.csv"), self.aggregate_csv(spec)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.synthesis.grid_size = 64;
        cfg.synthesis.oversample = Some(2);
        cfg.synthesis.modes_min = 2;
        cfg.synthesis.modes_max = 4;
        cfg.detector.focal_length = 0.4;
        cfg.pump.gain_peak = Some(2.0);
        cfg.analysis.max_disp = 5;
        cfg
    }

    #[test]
    fn median_and_mad() {
        assert_eq!(median_mad(&[3.0, 1.0, 2.0]), (2.0, 1.0));
        assert_eq!(median_mad(&[1.0, 2.0, 3.0, 10.0]), (2.5, 1.0));
        assert!(median_mad(&[]).0.is_nan());
    }

    #[test]
    fn seeds_follow_layout() {
        let mut s = CampaignSpec::new(quick(), "pump.waist_mm", vec![0.7, 1.0], 3);
        s.seed_base = 10;
        assert_eq!(s.seed(0, 2), 12);
        assert_eq!(s.seed(1, 0), 1_000_010);
    }

    #[test]
    fn single_point_single_row() {
        let spec = CampaignSpec::new(quick(), "pump.power_w", vec![1.0], 1);
        let res = run_campaign(&spec).unwrap();
        let csv = res.frames_csv(&spec).unwrap();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2, "{csv}");
    }

    #[test]
    fn bad_point_is_recorded_not_fatal() {
        let spec = CampaignSpec::new(quick(), "synthesis.grid", vec![64.0, 100.0], 2);
        let res = run_campaign(&spec).unwrap();
        assert_eq!(res.rows.len(), 4);
        assert!(res.rows.iter().filter(|r| r.sweep_value == 100.0).all(|r| r.estimate.is_err()));
    }

    #[test]
    fn empty_sweep_rejected() {
        let spec = CampaignSpec::new(quick(), "pump.power_w", vec![], 1);
        assert!(run_campaign(&spec).is_err());
    }
}
