//! CCD forward model: fixed-pattern efficiency, shot noise, read noise,
//! rounding and saturation.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2};
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::config::DetectorConfig;
use crate::error::{Error, Result};
use crate::rng;

/// Above this mean the Poisson draw is replaced by its Gaussian limit.
const POISSON_GAUSS_LIMIT: f64 = 1e12;

/// Generation record attached to every frame. Fields are `None` only for
/// frames loaded without their sidecar.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMetadata {
    pub seed: Option<u64>,
    pub pulse_power: Option<f64>,
    pub gain_peak: Option<f64>,
    pub mode_count: Option<u32>,
    pub waist: Option<f64>,
    pub exposure: Option<String>,
    /// At least one pixel reached the saturation level.
    pub saturated: bool,
}

/// Integer CCD counts: signal half in the left `cols/2` columns, idler half
/// on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub counts: Array2<u16>,
    pub metadata: FrameMetadata,
}

impl Frame {
    pub fn rows(&self) -> usize {
        self.counts.nrows()
    }

    pub fn cols(&self) -> usize {
        self.counts.ncols()
    }

    /// Width of one half.
    pub fn half_width(&self) -> usize {
        self.cols() / 2
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.counts.mapv(f64::from)
    }
}

/// Fractional pixel position on the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub col: f64,
    pub row: f64,
    pub inside: bool,
}

/// Optical axis position in pixel index units (the centre pixel).
pub fn optical_center(det: &DetectorConfig) -> (f64, f64) {
    ((det.height / 2) as f64, (det.width / 2) as f64)
}

/// Pixel hit by transverse wave vector `q` through the f-f lens,
/// `x = (λ f / 2π) q`. `q[0]` runs along columns, `q[1]` along rows.
pub fn map_q_to_pixel(q: [f64; 2], det: &DetectorConfig, wavelength: f64) -> PixelCoord {
    let scale = wavelength * det.focal_length / (2.0 * PI) / det.pixel_pitch;
    let (r0, c0) = optical_center(det);
    let col = c0 + q[0] * scale;
    let row = r0 + q[1] * scale;
    let inside = col >= -0.5
        && row >= -0.5
        && col < det.width as f64 - 0.5
        && row < det.height as f64 - 0.5;
    PixelCoord { col, row, inside }
}

/// η_coll = min(1, A_pix / A_coh).
pub fn collection_efficiency(pixel_area: f64, coherence_area: f64) -> Result<f64> {
    if !(pixel_area > 0.0 && coherence_area > 0.0) {
        return Err(Error::config(
            "collection_efficiency",
            format!("areas must be > 0 (pixel {pixel_area}, coherence {coherence_area})"),
        ));
    }
    Ok((pixel_area / coherence_area).min(1.0))
}

/// A camera instance with its frozen per-pixel efficiency map.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    efficiency: Array2<f64>,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.pattern_seed, rng::STREAM_PATTERN);
        let eta = config.quantum_efficiency;
        let spread = config.qe_fluct;
        let efficiency = Array2::from_shape_simple_fn((config.height, config.width), || {
            if spread > 0.0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                (eta * (1.0 + spread * e)).max(0.0)
            } else {
                eta
            }
        });
        Ok(Self { config, efficiency })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Per-pixel efficiency η_p over the whole sensor.
    pub fn efficiency_map(&self) -> &Array2<f64> {
        &self.efficiency
    }

    /// Top-left sensor pixel of a centred `rows × cols` window.
    pub fn window_origin(&self, rows: usize, cols: usize) -> Result<(usize, usize)> {
        let (h, w) = (self.config.height, self.config.width);
        if rows > h || cols > w {
            return Err(Error::Grid(format!(
                "intensity map {rows}x{cols} exceeds the {h}x{w} sensor"
            )));
        }
        Ok(((h - rows) / 2, (w - cols) / 2))
    }

    /// Efficiency of the pixels under a centred window.
    pub fn window_efficiency(&self, rows: usize, cols: usize) -> Result<ArrayView2<'_, f64>> {
        let (r0, c0) = self.window_origin(rows, cols)?;
        Ok(self.efficiency.slice(s![r0..r0 + rows, c0..c0 + cols]))
    }

    /// Signed readout before rounding and clamping: photocounts plus read noise.
    pub fn readout(&self, intensity: &Array2<f64>, seed: u64) -> Result<Array2<f64>> {
        let (rows, cols) = intensity.dim();
        if let Some(((row, col), &value)) = intensity
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::NegativeIntensity { row, col, value });
        }
        let eff = self.window_efficiency(rows, cols)?;
        let mut rng = rng::stream(seed, rng::STREAM_DETECTOR);
        let read = Normal::new(0.0, self.config.read_noise).expect("validated read noise");
        let mut out = Array2::<f64>::zeros((rows, cols));
        for ((o, &i), &eta) in out.iter_mut().zip(intensity.iter()).zip(eff.iter()) {
            let mu = eta * i;
            let photo = if !self.config.poisson || mu <= 0.0 {
                mu
            } else if mu < POISSON_GAUSS_LIMIT {
                Poisson::new(mu).expect("positive finite mean").sample(&mut rng)
            } else {
                let z: f64 = StandardNormal.sample(&mut rng);
                (mu + mu.sqrt() * z).max(0.0)
            };
            let noise = if self.config.read_noise > 0.0 {
                read.sample(&mut rng)
            } else {
                0.0
            };
            *o = photo + noise;
        }
        Ok(out)
    }

    /// Integer frame: readout rounded to the nearest count and clamped to
    /// `[0, saturation]`.
    pub fn detect(&self, intensity: &Array2<f64>, seed: u64) -> Result<Frame> {
        let raw = self.readout(intensity, seed)?;
        let sat = self.config.saturation;
        let mut saturated = false;
        let counts = raw.mapv(|v| {
            let r = v.round();
            if r >= sat as f64 {
                saturated = true;
                sat
            } else if r <= 0.0 {
                0
            } else {
                r as u16
            }
        });
        Ok(Frame {
            counts,
            metadata: FrameMetadata {
                seed: Some(seed),
                saturated,
                ..FrameMetadata::default()
            },
        })
    }
}

/// One-shot detection with a freshly built detector.
pub fn apply_detection(intensity: &Array2<f64>, det: &DetectorConfig, seed: u64) -> Result<Frame> {
    Detector::new(det.clone())?.detect(intensity, seed)
}
