use std::f64::consts::PI;

use ndarray::ArrayView2;

use super::correlation::{autocorrelation, Region};
use super::radius::speckle_radius_with;
use crate::config::{AnalysisConfig, DetectorConfig};
use crate::detector::collection_efficiency;
use crate::error::{Error, Result};

/// Noise terms entering the thermal-variance relation
/// `var = [N] + N²/M + δη² N² + Δ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Include the Poisson term N.
    pub shot_noise: bool,
    pub delta_eta: f64,
    pub read_noise: f64,
}

impl NoiseModel {
    pub fn from_detector(det: &DetectorConfig) -> Self {
        Self {
            shot_noise: det.poisson,
            delta_eta: det.qe_fluct,
            read_noise: det.read_noise,
        }
    }

    /// Photon-number maps before detection: only the thermal term remains.
    pub fn ideal() -> Self {
        Self {
            shot_noise: false,
            delta_eta: 0.0,
            read_noise: 0.0,
        }
    }

    /// Variance not explained by the thermal term.
    fn floor(&self, mean: f64) -> f64 {
        let shot = if self.shot_noise { mean } else { 0.0 };
        shot + self.delta_eta * self.delta_eta * mean * mean + self.read_noise * self.read_noise
    }
}

/// Forward relation: region variance for mean `mean` and `m` temporal modes.
pub fn thermal_variance(mean: f64, m: f64, noise: &NoiseModel) -> f64 {
    noise.floor(mean) + mean * mean / m
}

/// Invert the thermal-variance relation for M; clamps the estimate at 1.
pub fn temporal_modes_from_moments(mean: f64, variance: f64, noise: &NoiseModel) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(Error::DegenerateMap(format!("region mean {mean} is not positive")));
    }
    let excess = variance - noise.floor(mean);
    if excess == 0.0 {
        return Err(Error::PoissonLimited);
    }
    if excess < 0.0 {
        return Err(Error::SubThermal { excess });
    }
    Ok((mean * mean / excess).max(1.0))
}

/// Mode count with its delta-method uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEstimate {
    pub m_hat: f64,
    pub m_err: f64,
    pub mean: f64,
    pub mean_err: f64,
    pub variance: f64,
    pub pixels: usize,
}

/// M̂ from the single-shot spatial mean and variance over `region`, using
/// every `stride`-th pixel in both directions.
pub fn estimate_temporal_modes(
    data: ArrayView2<'_, f64>,
    region: &Region,
    noise: &NoiseModel,
    stride: usize,
) -> Result<ModeEstimate> {
    let (rows, cols) = data.dim();
    region.check_within(rows, cols)?;
    let stride = stride.max(1);
    let vals: Vec<f64> = (region.y..region.y + region.height)
        .step_by(stride)
        .flat_map(|r| {
            (region.x..region.x + region.width)
                .step_by(stride)
                .map(move |c| data[[r, c]])
        })
        .collect();
    let n = vals.len();
    if n < 2 {
        return Err(Error::Region(format!("{n} pixels after decimation")));
    }
    let nf = n as f64;
    let mean = vals.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in &vals {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    let (c2, c3, c4) = (m2 / nf, m3 / nf, m4 / nf);
    let m_hat = temporal_modes_from_moments(mean, variance, noise)?;

    // delta method on M = N²/E, E = V − floor(N)
    let excess = variance - noise.floor(mean);
    let dfloor = (if noise.shot_noise { 1.0 } else { 0.0 })
        + 2.0 * noise.delta_eta * noise.delta_eta * mean;
    let dm_dn = 2.0 * mean / excess + mean * mean * dfloor / (excess * excess);
    let dm_dv = -mean * mean / (excess * excess);
    let var_n = c2 / nf;
    let var_v = ((c4 - c2 * c2) / nf).max(0.0);
    let cov_nv = c3 / nf;
    let var_m = dm_dn * dm_dn * var_n + dm_dv * dm_dv * var_v + 2.0 * dm_dn * dm_dv * cov_nv;
    Ok(ModeEstimate {
        m_hat,
        m_err: var_m.max(0.0).sqrt(),
        mean,
        mean_err: var_n.sqrt(),
        variance,
        pixels: n,
    })
}

/// Forward gain relation `N = η η_coll M sinh²(g)`.
pub fn gain_forward(g: f64, eta: f64, eta_coll: f64, m: f64) -> f64 {
    eta * eta_coll * m * g.sinh().powi(2)
}

/// `ĝ = asinh(sqrt(N / (η η_coll M)))`.
pub fn estimate_gain(mean_n: f64, eta: f64, eta_coll: f64, m: f64) -> Result<f64> {
    let k = eta * eta_coll;
    if !(mean_n >= 0.0) || !(m >= 1.0) || !(k > 0.0 && k <= 1.0) {
        return Err(Error::config(
            "estimate_gain",
            format!("need N >= 0, M >= 1, 0 < η·η_coll <= 1 (N {mean_n}, M {m}, η·η_coll {k})"),
        ));
    }
    Ok((mean_n / (k * m)).sqrt().asinh())
}

/// ĝ with first-order uncertainty from the errors on N and M.
pub fn estimate_gain_with_error(
    mean_n: f64,
    mean_err: f64,
    eta: f64,
    eta_coll: f64,
    m: f64,
    m_err: f64,
) -> Result<(f64, f64)> {
    let g = estimate_gain(mean_n, eta, eta_coll, m)?;
    let u = (mean_n / (eta * eta_coll * m)).sqrt();
    let dg_du = 1.0 / (1.0 + u * u).sqrt();
    let du_dn = if mean_n > 0.0 { u / (2.0 * mean_n) } else { 0.0 };
    let du_dm = -u / (2.0 * m);
    let err = dg_du * ((du_dn * mean_err).powi(2) + (du_dm * m_err).powi(2)).sqrt();
    Ok((g, err))
}

/// Scalar estimates from one image, each with a 1σ uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub radius_pixels: f64,
    pub radius_err: f64,
    pub m_hat: f64,
    pub m_err: f64,
    pub g_hat: f64,
    pub g_err: f64,
    pub eta_coll: f64,
    pub mean_n: f64,
    pub mean_n_err: f64,
}

/// Full chain on one image: autocorrelation radius, M̂ and ĝ.
///
/// `eta` is the detection efficiency of the data (1 for photon-number maps).
/// The coherence area is π r² in pixel units.
pub fn analyze_image(
    data: ArrayView2<'_, f64>,
    cfg: &AnalysisConfig,
    noise: &NoiseModel,
    eta: f64,
) -> Result<EstimateReport> {
    let (rows, cols) = data.dim();
    let region = match cfg.region {
        Some(r) => r,
        None => Region::default_for(rows, cols)?,
    };
    let map = autocorrelation(data, &region, cfg.max_disp)?;
    let radius = speckle_radius_with(&map, cfg.radius)?;
    let modes = estimate_temporal_modes(data, &region, noise, cfg.stride)?;
    let eta_coll = collection_efficiency(1.0, PI * radius.radius * radius.radius)?;
    let (g_hat, g_err) =
        estimate_gain_with_error(modes.mean, modes.mean_err, eta, eta_coll, modes.m_hat, modes.m_err)?;
    Ok(EstimateReport {
        radius_pixels: radius.radius,
        radius_err: radius.stderr,
        m_hat: modes.m_hat,
        m_err: modes.m_err,
        g_hat,
        g_err,
        eta_coll,
        mean_n: modes.mean,
        mean_n_err: modes.mean_err,
    })
}
