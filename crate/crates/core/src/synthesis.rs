//! Stochastic generation of twin-beam far-field speckle.
//!
//! Each temporal mode is a realization of the local two-mode squeezing map
//! `b_s = cosh g · a_s + sinh g · a_i*` (and symmetrically for the idler)
//! applied to white complex Gaussian amplitudes on the near-field grid, then
//! carried to the far field by a unitary DFT. Speckle size and its growth
//! with gain follow from the shape of `g(x)`; nothing about narrowing is
//! imposed.

use std::f64::consts::{LN_2, PI};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use crate::config::{CrystalConfig, ExperimentConfig, PumpConfig, SamplingOrdering, SynthesisConfig};
use crate::error::{Error, Result};
use crate::fft::{unshift, Fft2};
use crate::phasematch::{predict_coherence, Detuning};
use crate::rng;

/// Largest peak gain accepted; sinh² already exceeds 1e40 photons here.
pub const MAX_GAIN: f64 = 50.0;

/// Sampling of the simulated near and far fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid {
    /// q-samples per axis of one half-plane.
    pub size: usize,
    /// q-samples per detector pixel per axis.
    pub oversample: usize,
    /// Pixels per axis of one half-plane.
    pub pixels: usize,
    /// Far-field sample spacing (rad/m).
    pub q_step: f64,
    /// Near-field sample spacing (m).
    pub x_step: f64,
}

impl SimulationGrid {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let det = &cfg.detector;
        let synth = &cfg.synthesis;
        let oversample = match synth.oversample {
            Some(s) => s,
            None => {
                let r = predict_coherence(&cfg.pump, &cfg.crystal, det)?.coherence_radius_pixels;
                (4.0 / r).ceil().max(1.0) as usize
            }
        };
        let q_per_pixel =
            2.0 * PI * det.pixel_pitch / (cfg.crystal.degenerate_wavelength * det.focal_length);
        let grid = Self::new(synth.grid_size, oversample, q_per_pixel)?;
        let (rows, cols) = grid.frame_shape();
        if rows > det.height || cols > det.width {
            return Err(Error::Grid(format!(
                "frame {rows}x{cols} does not fit on the {}x{} sensor",
                det.height, det.width
            )));
        }
        Ok(grid)
    }

    pub fn new(size: usize, oversample: usize, q_per_pixel: f64) -> Result<Self> {
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::Grid(format!("grid size {size} is not a power of two >= 8")));
        }
        if oversample == 0 {
            return Err(Error::Grid("oversample must be >= 1".into()));
        }
        let pixels = size / oversample;
        if pixels < 8 {
            return Err(Error::Grid(format!(
                "only {pixels} pixels per half with oversample {oversample}; enlarge the grid"
            )));
        }
        let q_step = q_per_pixel / oversample as f64;
        Ok(Self {
            size,
            oversample,
            pixels,
            q_step,
            x_step: 2.0 * PI / (size as f64 * q_step),
        })
    }

    /// (rows, cols) of a composed frame: signal half left, idler half right.
    pub fn frame_shape(&self) -> (usize, usize) {
        (self.pixels, 2 * self.pixels)
    }

    /// Near-field coordinate of sample `i` (m), zero at `size/2`.
    pub fn x_at(&self, i: usize) -> f64 {
        (i as f64 - (self.size / 2) as f64) * self.x_step
    }
}

/// Near-field parametric gain map.
#[derive(Debug, Clone)]
pub struct GainProfile {
    pub x_step: f64,
    pub gain: Array2<f64>,
    pub peak: f64,
    /// Pump waist scaled by the narrowing of sinh²(g(x)) relative to g²(x).
    pub effective_waist: f64,
    sinh: Array2<f64>,
    cosh: Array2<f64>,
}

impl GainProfile {
    fn from_gain(gain: Array2<f64>, x_step: f64, peak: f64, effective_waist: f64) -> Result<Self> {
        if !(peak.is_finite() && peak <= MAX_GAIN) || gain.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::config(
                "pump.gain_peak",
                format!("gain must be finite, non-negative and <= {MAX_GAIN} (peak {peak})"),
            ));
        }
        let sinh = gain.mapv(f64::sinh);
        let cosh = gain.mapv(f64::cosh);
        Ok(Self {
            x_step,
            gain,
            peak,
            effective_waist,
            sinh,
            cosh,
        })
    }

    /// Constant gain over an `n × n` grid; used for statistics checks.
    pub fn uniform(n: usize, x_step: f64, g: f64) -> Result<Self> {
        Self::from_gain(Array2::from_elem((n, n), g), x_step, g, f64::INFINITY)
    }

    pub fn size(&self) -> usize {
        self.gain.nrows()
    }

    pub fn sinh(&self) -> &Array2<f64> {
        &self.sinh
    }

    pub fn cosh(&self) -> &Array2<f64> {
        &self.cosh
    }
}

/// Ratio of the HWHM of sinh²(g₀ e^{−x²}) to the HWHM of (g₀ e^{−x²})².
pub fn effective_waist_ratio(g_peak: f64) -> f64 {
    if g_peak < 1e-6 {
        return 1.0;
    }
    let u = (g_peak.sinh() / 2f64.sqrt()).asinh() / g_peak;
    (-u.ln() / (LN_2 / 2.0)).sqrt()
}

/// Gain map g(x) = σ A_pump exp(−|x|²/w_p²) with A_pump = sqrt(P/(π w_p²/2)).
pub fn build_gain_profile(
    pump: &PumpConfig,
    crystal: &CrystalConfig,
    pulse_power: f64,
    grid: &SimulationGrid,
) -> Result<GainProfile> {
    if !(pulse_power.is_finite() && pulse_power >= 0.0) {
        return Err(Error::config("pump.power_w", "pulse power must be >= 0"));
    }
    let peak = crystal.gain_coefficient * pump.amplitude(pulse_power);
    let w2 = pump.waist * pump.waist;
    let n = grid.size;
    let gain = Array2::from_shape_fn((n, n), |(r, c)| {
        let x = grid.x_at(c);
        let y = grid.x_at(r);
        peak * (-(x * x + y * y) / w2).exp()
    });
    GainProfile::from_gain(gain, grid.x_step, peak, pump.waist * effective_waist_ratio(peak))
}

/// One laser shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDraw {
    pub power: f64,
    pub gain_peak: f64,
    pub temporal_mode_count: u32,
    /// Relative fluctuation sqrt(1 − 1/n) of an n-mode thermal laser, kept for
    /// comparison with the 1/sqrt(n) spread actually drawn.
    pub laser_thermal_fluct: f64,
}

/// Draw pulse power, peak gain and effective temporal mode count.
///
/// Power is `P̄ (1 + ε) X` with ε ~ N(0, power_fluct) and X the mean of `n`
/// unit exponentials (relative spread 1/sqrt(n)); negative draws clamp to 0.
pub fn draw_pulse(
    pump: &PumpConfig,
    gain_coefficient: f64,
    synth: &SynthesisConfig,
    seed: u64,
) -> PulseDraw {
    let mut rng = rng::stream(seed, rng::STREAM_PULSE);
    let mean = pump.resolved_mean_power(gain_coefficient);
    let drift = if pump.power_fluct_frac > 0.0 {
        1.0 + Normal::new(0.0, pump.power_fluct_frac)
            .expect("validated spread")
            .sample(&mut rng)
    } else {
        1.0
    };
    let (thermal, laser_thermal_fluct) = match pump.laser_mode_count {
        Some(n) => {
            let n = n as f64;
            let x = Gamma::new(n, 1.0 / n).expect("n >= 1").sample(&mut rng);
            (x, (1.0 - 1.0 / n).sqrt())
        }
        None => (1.0, 1.0),
    };
    let power = (mean * drift * thermal).max(0.0);
    let temporal_mode_count = draw_mode_count(synth.modes_min, synth.modes_max, &mut rng);
    PulseDraw {
        power,
        gain_peak: gain_coefficient * pump.amplitude(power),
        temporal_mode_count,
        laser_thermal_fluct,
    }
}

/// Log-uniform integer in `[lo, hi]`.
fn draw_mode_count(lo: u32, hi: u32, rng: &mut ChaCha8Rng) -> u32 {
    if lo >= hi {
        return lo;
    }
    let a = (lo as f64).ln();
    let b = (hi as f64 + 1.0).ln();
    let m = rng.random_range(a..b).exp().floor() as u32;
    m.clamp(lo, hi)
}

/// Far-field amplitudes of one temporal mode, centred layout
/// (index `i` ↔ q-offset `(i − n/2) · q_step` about each half-plane centre).
#[derive(Debug, Clone)]
pub struct SpeckleField {
    pub q_step: f64,
    pub signal_amp: Array2<Complex64>,
    pub idler_amp: Array2<Complex64>,
    pub mode_index: u32,
    pub pulse_gain: f64,
    pub ordering: SamplingOrdering,
}

impl SpeckleField {
    fn vacuum(&self) -> f64 {
        match self.ordering {
            SamplingOrdering::Normal => 0.0,
            SamplingOrdering::Symmetric => 0.5,
        }
    }

    /// Photon-number estimate |b|² minus the sampled vacuum offset.
    pub fn signal_photons(&self) -> Array2<f64> {
        let v = self.vacuum();
        self.signal_amp.mapv(|z| z.norm_sqr() - v)
    }

    pub fn idler_photons(&self) -> Array2<f64> {
        let v = self.vacuum();
        self.idler_amp.mapv(|z| z.norm_sqr() - v)
    }
}

/// Photon-number map of one shot on the pixel grid.
#[derive(Debug, Clone)]
pub struct FrameIntensity {
    /// `pixels × 2·pixels`: signal half in columns `[0, P)`, idler half in
    /// `[P, 2P)`. The idler half is registered so that the twin of signal
    /// pixel `(r, c)` sits at idler pixel `(P−1−r, P−1−c)`.
    pub map: Array2<f64>,
    pub pixels: usize,
    pub pulse: PulseDraw,
}

impl FrameIntensity {
    pub fn signal_half(&self) -> ndarray::ArrayView2<'_, f64> {
        self.map.slice(ndarray::s![.., ..self.pixels])
    }

    pub fn idler_half(&self) -> ndarray::ArrayView2<'_, f64> {
        self.map.slice(ndarray::s![.., self.pixels..])
    }
}

/// Reusable sampler bound to one grid and crystal.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    grid: SimulationGrid,
    fft: Fft2,
    ordering: SamplingOrdering,
    /// Amplitude envelopes in natural DFT order.
    envelope: Option<(Array2<f64>, Array2<f64>)>,
    independent_idler: bool,
}

impl Synthesizer {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let grid = SimulationGrid::from_config(cfg)?;
        Self::with_grid(grid, &cfg.crystal, cfg.synthesis.ordering, cfg.synthesis.apodization)
    }

    pub fn with_grid(
        grid: SimulationGrid,
        crystal: &CrystalConfig,
        ordering: SamplingOrdering,
        apodization: bool,
    ) -> Result<Self> {
        let envelope = if apodization {
            let detuning = Detuning::new(crystal)?;
            let n = grid.size;
            let q0 = detuning.ring_radius;
            let freq = |k: usize| -> f64 {
                let k = k as i64;
                let n = n as i64;
                (if k < n / 2 { k } else { k - n }) as f64
            };
            let make = |centre: f64| {
                Array2::from_shape_fn((n, n), |(r, c)| {
                    let qx = centre + freq(c) * grid.q_step;
                    let qy = freq(r) * grid.q_step;
                    detuning.envelope(qx.hypot(qy))
                })
            };
            let signal = make(q0);
            // exact mirror, including the unpaired Nyquist row and column
            let idler = Array2::from_shape_fn((n, n), |(r, c)| signal[[(n - r) % n, (n - c) % n]]);
            Some((signal, idler))
        } else {
            None
        };
        Ok(Self {
            grid,
            fft: Fft2::new(grid.size),
            ordering,
            envelope,
            independent_idler: false,
        })
    }

    /// Draw the idler from independent noise, destroying twin correlations.
    /// Debugging aid for null tests.
    pub fn with_independent_idler(mut self, on: bool) -> Self {
        self.independent_idler = on;
        self
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    fn check(&self, profile: &GainProfile) -> Result<()> {
        if profile.size() != self.grid.size {
            return Err(Error::Grid(format!(
                "gain profile is {}², synthesizer grid is {}²",
                profile.size(),
                self.grid.size
            )));
        }
        Ok(())
    }

    /// Fill natural-order far-field amplitudes for one mode.
    fn draw_fields(
        &self,
        profile: &GainProfile,
        rng: &mut ChaCha8Rng,
        signal: &mut Array2<Complex64>,
        idler: &mut Array2<Complex64>,
    ) {
        let n = self.grid.size;
        let sinh = profile.sinh();
        match self.ordering {
            SamplingOrdering::Normal => {
                fill_gaussian(signal, 1.0, rng);
                ndarray::Zip::from(&mut *signal)
                    .and(sinh)
                    .for_each(|z, &s| *z = z.conj() * s);
                self.fft.forward(signal);
                if self.independent_idler {
                    fill_gaussian(idler, 1.0, rng);
                    ndarray::Zip::from(&mut *idler)
                        .and(sinh)
                        .for_each(|z, &s| *z = z.conj() * s);
                    self.fft.forward(idler);
                } else {
                    for r in 0..n {
                        for c in 0..n {
                            idler[[r, c]] = signal[[(n - r) % n, (n - c) % n]].conj();
                        }
                    }
                }
                if let Some((es, ei)) = &self.envelope {
                    ndarray::Zip::from(&mut *signal).and(es).for_each(|z, &t| *z *= t);
                    ndarray::Zip::from(&mut *idler).and(ei).for_each(|z, &t| *z *= t);
                }
            }
            SamplingOrdering::Symmetric => {
                let cosh = profile.cosh();
                // a_s, a_i with ⟨|a|²⟩ = 1/2
                fill_gaussian(signal, 0.5, rng);
                fill_gaussian(idler, 0.5, rng);
                ndarray::Zip::from(&mut *signal)
                    .and(&mut *idler)
                    .and(sinh)
                    .and(cosh)
                    .for_each(|bs, bi, &s, &c| {
                        let (a_s, a_i) = (*bs, *bi);
                        *bs = a_s * c + a_i.conj() * s;
                        *bi = a_i * c + a_s.conj() * s;
                    });
                if self.independent_idler {
                    // replace the idler by an independent draw with the same marginal
                    let mut other = Array2::from_elem((n, n), Complex64::default());
                    let mut spare = other.clone();
                    fill_gaussian(&mut other, 0.5, rng);
                    fill_gaussian(&mut spare, 0.5, rng);
                    ndarray::Zip::from(&mut *idler)
                        .and(&other)
                        .and(&spare)
                        .and(sinh)
                        .and(cosh)
                        .for_each(|bi, &a, &b, &s, &c| *bi = a * c + b.conj() * s);
                }
                self.fft.forward(signal);
                self.fft.forward(idler);
                if let Some((es, ei)) = &self.envelope {
                    // loss with a fresh vacuum port keeps the ½ offset exact
                    for (field, env) in [(&mut *signal, es), (&mut *idler, ei)] {
                        let normal = Normal::new(0.0, 0.5).expect("fixed std");
                        ndarray::Zip::from(field).and(env).for_each(|z, &t| {
                            let v = Complex64::new(normal.sample(rng), normal.sample(rng));
                            *z = *z * t + v * (1.0 - t * t).max(0.0).sqrt();
                        });
                    }
                }
            }
        }
    }

    /// One temporal mode of signal and idler.
    pub fn mode_pair(&self, profile: &GainProfile, mode_index: u32, seed: u64) -> Result<SpeckleField> {
        self.check(profile)?;
        let n = self.grid.size;
        let mut rng = rng::stream(seed, rng::STREAM_MODES + mode_index as u64);
        let mut signal = Array2::from_elem((n, n), Complex64::default());
        let mut idler = signal.clone();
        self.draw_fields(profile, &mut rng, &mut signal, &mut idler);
        Ok(SpeckleField {
            q_step: self.grid.q_step,
            signal_amp: crate::fft::fftshift(&signal),
            idler_amp: crate::fft::fftshift(&idler),
            mode_index,
            pulse_gain: profile.peak,
            ordering: self.ordering,
        })
    }

    /// Sum `modes` temporal modes into natural-order photon-number maps,
    /// clamping the vacuum-subtracted sums at zero.
    pub fn accumulate(&self, profile: &GainProfile, modes: u32, seed: u64) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check(profile)?;
        let n = self.grid.size;
        let vacuum = match self.ordering {
            SamplingOrdering::Normal => 0.0,
            SamplingOrdering::Symmetric => 0.5,
        };
        let mut acc_s = Array2::<f64>::zeros((n, n));
        let mut acc_i = Array2::<f64>::zeros((n, n));
        let mut signal = Array2::from_elem((n, n), Complex64::default());
        let mut idler = signal.clone();
        for m in 0..modes {
            let mut rng = rng::stream(seed, rng::STREAM_MODES + m as u64);
            self.draw_fields(profile, &mut rng, &mut signal, &mut idler);
            ndarray::Zip::from(&mut acc_s)
                .and(&signal)
                .for_each(|a, z| *a += z.norm_sqr() - vacuum);
            ndarray::Zip::from(&mut acc_i)
                .and(&idler)
                .for_each(|a, z| *a += z.norm_sqr() - vacuum);
        }
        acc_s.mapv_inplace(|v| v.max(0.0));
        acc_i.mapv_inplace(|v| v.max(0.0));
        Ok((acc_s, acc_i))
    }

    /// Compose the binned two-half frame from natural-order accumulators.
    pub fn compose(&self, acc_s: &Array2<f64>, acc_i: &Array2<f64>) -> Array2<f64> {
        let n = self.grid.size;
        let s = self.grid.oversample;
        let p = self.grid.pixels;
        let span = p * s;
        let idler_start = n - span;
        let mut map = Array2::<f64>::zeros((p, 2 * p));
        for j in 0..span {
            for i in 0..span {
                let sig = acc_s[[unshift(j, n), unshift(i, n)]];
                map[[j / s, i / s]] += sig;
                // idler registered one sample over: twin of signal j is idler row n−1−j
                let jr = idler_start + j;
                let ir = idler_start + i;
                let idl = acc_i[[unshift((jr + 1) % n, n), unshift((ir + 1) % n, n)]];
                map[[j / s, p + i / s]] += idl;
            }
        }
        map
    }

    /// Full shot: pulse draw, `M` modes, binning into pixels.
    pub fn frame(&self, cfg: &ExperimentConfig, seed: u64) -> Result<FrameIntensity> {
        let pulse = draw_pulse(&cfg.pump, cfg.crystal.gain_coefficient, &cfg.synthesis, seed);
        let profile = build_gain_profile(&cfg.pump, &cfg.crystal, pulse.power, &self.grid)?;
        self.frame_from_profile(&profile, pulse, seed)
    }

    pub fn frame_from_profile(&self, profile: &GainProfile, pulse: PulseDraw, seed: u64) -> Result<FrameIntensity> {
        let (acc_s, acc_i) = self.accumulate(profile, pulse.temporal_mode_count, seed)?;
        Ok(FrameIntensity {
            map: self.compose(&acc_s, &acc_i),
            pixels: self.grid.pixels,
            pulse,
        })
    }
}

fn fill_gaussian(a: &mut Array2<Complex64>, variance: f64, rng: &mut ChaCha8Rng) {
    let std = (variance / 2.0).sqrt();
    for z in a.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = Complex64::new(re * std, im * std);
    }
}

/// One temporal mode without a cached sampler.
pub fn synthesize_mode_pair(
    profile: &GainProfile,
    crystal: &CrystalConfig,
    grid: &SimulationGrid,
    synth: &SynthesisConfig,
    seed: u64,
) -> Result<SpeckleField> {
    Synthesizer::with_grid(*grid, crystal, synth.ordering, synth.apodization)?.mode_pair(profile, 0, seed)
}

/// Photon-number map of one shot.
pub fn synthesize_frame_intensity(cfg: &ExperimentConfig, seed: u64) -> Result<FrameIntensity> {
    Synthesizer::new(cfg)?.frame(cfg, seed)
}
