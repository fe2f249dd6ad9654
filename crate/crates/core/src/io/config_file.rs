//! Line-oriented `key = value` configuration.
//!
//! Keys carry their unit in the name (`pump.waist_mm`); values are converted
//! to SI on load and back on save so that a save/load cycle reproduces the
//! configuration bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::Region;
use crate::config::{
    AnalysisSource, ExperimentConfig, RadiusConvention, RegimeSelection, SamplingOrdering,
};
use crate::error::{Error, Result};

/// Every recognised key, in file order. `pump.power_mw` is accepted on input
/// as an alias of `pump.power_w` expressed in megawatts.
pub const KEYS: &[&str] = &[
    "pump.wavelength_nm",
    "pump.waist_mm",
    "pump.power_w",
    "pump.gain_peak",
    "pump.pulse_duration_ns",
    "pump.power_fluct",
    "pump.laser_modes",
    "crystal.length_mm",
    "crystal.wavelength_nm",
    "crystal.emission_angle_rad",
    "crystal.sigma",
    "crystal.regime",
    "crystal.sinc_prefactor",
    "crystal.detuning_coeff",
    "detector.pixel_um",
    "detector.width",
    "detector.height",
    "detector.qe",
    "detector.qe_fluct",
    "detector.read_noise",
    "detector.focal_mm",
    "detector.saturation",
    "detector.poisson",
    "detector.pattern_seed",
    "synthesis.grid",
    "synthesis.oversample",
    "synthesis.modes_min",
    "synthesis.modes_max",
    "synthesis.ordering",
    "synthesis.apodization",
    "analysis.region",
    "analysis.max_disp",
    "analysis.stride",
    "analysis.radius",
    "analysis.source",
];

/// Decimal unit, SI = value · 10^exp. Conversion shifts the decimal exponent
/// of the text itself, so every double survives a write/read cycle exactly.
#[derive(Debug, Clone, Copy)]
struct Unit(i32);

impl Unit {
    fn parse(self, v: &str) -> std::result::Result<f64, SetError> {
        let x = num(v)?;
        if !x.is_finite() {
            return Ok(x);
        }
        let v = v.trim();
        let (mant, exp) = match v.find(['e', 'E']) {
            Some(i) => (&v[..i], v[i + 1..].parse::<i32>().map_err(|_| bad_number(v))?),
            None => (v, 0),
        };
        format!("{mant}e{}", exp + self.0)
            .parse()
            .map_err(|_| bad_number(v))
    }

    fn format(self, si: f64) -> String {
        if !si.is_finite() || si == 0.0 {
            return si.to_string();
        }
        // shortest round-trip digits d.ddd and exponent
        let sci = format!("{si:e}");
        let (mant, exp) = sci.split_once('e').expect("`{:e}` has an exponent");
        let exp: i32 = exp.parse().expect("integer exponent");
        let (sign, mant) = mant.strip_prefix('-').map_or(("", mant), |m| ("-", m));
        let digits: String = mant.chars().filter(|c| *c != '.').collect();
        let point = exp - self.0 + 1;
        let len = digits.len() as i32;
        let body = if point <= -6 || point > len + 6 {
            format!("{mant}e{}", point - 1)
        } else if point <= 0 {
            format!("0.{}{digits}", "0".repeat((-point) as usize))
        } else if point >= len {
            format!("{digits}{}", "0".repeat((point - len) as usize))
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        };
        format!("{sign}{body}")
    }
}

fn bad_number(v: &str) -> SetError {
    SetError::BadValue(format!("`{v}` is not a number"))
}

enum SetError {
    UnknownKey,
    BadValue(String),
}

fn num(v: &str) -> std::result::Result<f64, SetError> {
    v.parse::<f64>().map_err(|_| bad_number(v))
}

fn int<T: std::str::FromStr>(v: &str) -> std::result::Result<T, SetError> {
    v.parse::<T>()
        .map_err(|_| SetError::BadValue(format!("`{v}` is not a valid integer")))
}

fn boolean(v: &str) -> std::result::Result<bool, SetError> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(SetError::BadValue(format!("`{v}` is not a boolean"))),
    }
}

fn choice<T: Copy>(v: &str, opts: &[(&str, T)]) -> std::result::Result<T, SetError> {
    opts.iter()
        .find(|(name, _)| *name == v)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = opts.iter().map(|(n, _)| *n).collect();
            SetError::BadValue(format!("`{v}` is not one of {}", names.join(", ")))
        })
}

const MM: Unit = Unit(-3);
const NM: Unit = Unit(-9);
const UM: Unit = Unit(-6);
const NS: Unit = Unit(-9);
const MW: Unit = Unit(6);
/// (mm²/W)^½ → m/√W
const SIGMA: Unit = Unit(-3);

const REGIMES: &[(&str, RegimeSelection)] = &[
    ("auto", RegimeSelection::Auto),
    ("noncollinear", RegimeSelection::Noncollinear),
    ("collinear", RegimeSelection::Collinear),
];
const ORDERINGS: &[(&str, SamplingOrdering)] = &[
    ("normal", SamplingOrdering::Normal),
    ("symmetric", SamplingOrdering::Symmetric),
];
const RADII: &[(&str, RadiusConvention)] = &[
    ("hwhm", RadiusConvention::Hwhm),
    ("one_over_e", RadiusConvention::OneOverE),
];
const SOURCES: &[(&str, AnalysisSource)] = &[
    ("frame", AnalysisSource::Frame),
    ("intensity", AnalysisSource::Intensity),
];

fn apply(cfg: &mut ExperimentConfig, key: &str, v: &str) -> std::result::Result<(), SetError> {
    let p = &mut cfg.pump;
    let c = &mut cfg.crystal;
    let d = &mut cfg.detector;
    let s = &mut cfg.synthesis;
    let a = &mut cfg.analysis;
    match key {
        "pump.wavelength_nm" => p.wavelength = NM.parse(v)?,
        "pump.waist_mm" => p.waist = MM.parse(v)?,
        "pump.power_w" => p.mean_pulse_power = num(v)?,
        "pump.power_mw" => p.mean_pulse_power = MW.parse(v)?,
        "pump.gain_peak" => p.gain_peak = if v == "none" { None } else { Some(num(v)?) },
        "pump.pulse_duration_ns" => p.pulse_duration = NS.parse(v)?,
        "pump.power_fluct" => p.power_fluct_frac = num(v)?,
        "pump.laser_modes" => p.laser_mode_count = if v == "inf" { None } else { Some(int(v)?) },
        "crystal.length_mm" => c.length = MM.parse(v)?,
        "crystal.wavelength_nm" => c.degenerate_wavelength = NM.parse(v)?,
        "crystal.emission_angle_rad" => c.emission_angle = num(v)?,
        "crystal.sigma" => c.gain_coefficient = SIGMA.parse(v)?,
        "crystal.regime" => c.regime = choice(v, REGIMES)?,
        "crystal.sinc_prefactor" => c.sinc_prefactor = num(v)?,
        "crystal.detuning_coeff" => c.detuning_coeff = num(v)?,
        "detector.pixel_um" => d.pixel_pitch = UM.parse(v)?,
        "detector.width" => d.width = int(v)?,
        "detector.height" => d.height = int(v)?,
        "detector.qe" => d.quantum_efficiency = num(v)?,
        "detector.qe_fluct" => d.qe_fluct = num(v)?,
        "detector.read_noise" => d.read_noise = num(v)?,
        "detector.focal_mm" => d.focal_length = MM.parse(v)?,
        "detector.saturation" => d.saturation = int(v)?,
        "detector.poisson" => d.poisson = boolean(v)?,
        "detector.pattern_seed" => d.pattern_seed = int(v)?,
        "synthesis.grid" => s.grid_size = int(v)?,
        "synthesis.oversample" => s.oversample = if v == "auto" { None } else { Some(int(v)?) },
        "synthesis.modes_min" => s.modes_min = int(v)?,
        "synthesis.modes_max" => s.modes_max = int(v)?,
        "synthesis.ordering" => s.ordering = choice(v, ORDERINGS)?,
        "synthesis.apodization" => s.apodization = boolean(v)?,
        "analysis.region" => {
            a.region = if v == "auto" {
                None
            } else {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(SetError::BadValue("expected `auto` or `x,y,width,height`".into()));
                }
                let n: Vec<usize> = parts.iter().map(|p| int(p)).collect::<std::result::Result<_, _>>()?;
                Some(Region::new(n[0], n[1], n[2], n[3]).map_err(|e| SetError::BadValue(e.to_string()))?)
            }
        }
        "analysis.max_disp" => a.max_disp = int(v)?,
        "analysis.stride" => a.stride = int(v)?,
        "analysis.radius" => a.radius = choice(v, RADII)?,
        "analysis.source" => a.source = choice(v, SOURCES)?,
        _ => return Err(SetError::UnknownKey),
    }
    Ok(())
}

/// Set one key from its text value. Does not validate the whole config.
pub fn set_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    apply(cfg, key, value.trim()).map_err(|e| match e {
        SetError::UnknownKey => Error::config(key, "unknown key"),
        SetError::BadValue(r) => Error::config(key, r),
    })
}

/// Parse configuration text on top of the defaults and validate it.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::ConfigParse {
            line,
            reason: format!("expected `key = value`, found `{body}`"),
        })?;
        let key = key.trim();
        apply(&mut cfg, key, value.trim()).map_err(|e| Error::ConfigParse {
            line,
            reason: match e {
                SetError::UnknownKey => format!("unknown key `{key}`"),
                SetError::BadValue(r) => format!("`{key}`: {r}"),
            },
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn save_config(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, config_to_text(cfg))?;
    Ok(())
}

fn name_of<T: PartialEq + Copy>(opts: &[(&'static str, T)], t: T) -> &'static str {
    opts.iter().find(|(_, o)| *o == t).map(|(n, _)| *n).expect("complete table")
}

/// Render every key; parsing the result reproduces `cfg` exactly.
pub fn config_to_text(cfg: &ExperimentConfig) -> String {
    let p = &cfg.pump;
    let c = &cfg.crystal;
    let d = &cfg.detector;
    let s = &cfg.synthesis;
    let a = &cfg.analysis;
    let opt = |o: Option<String>, none: &str| o.unwrap_or_else(|| none.to_string());
    let values: Vec<String> = vec![
        NM.format(p.wavelength),
        MM.format(p.waist),
        p.mean_pulse_power.to_string(),
        opt(p.gain_peak.map(|g| g.to_string()), "none"),
        NS.format(p.pulse_duration),
        p.power_fluct_frac.to_string(),
        opt(p.laser_mode_count.map(|n| n.to_string()), "inf"),
        MM.format(c.length),
        NM.format(c.degenerate_wavelength),
        c.emission_angle.to_string(),
        SIGMA.format(c.gain_coefficient),
        name_of(REGIMES, c.regime).to_string(),
        c.sinc_prefactor.to_string(),
        c.detuning_coeff.to_string(),
        UM.format(d.pixel_pitch),
        d.width.to_string(),
        d.height.to_string(),
        d.quantum_efficiency.to_string(),
        d.qe_fluct.to_string(),
        d.read_noise.to_string(),
        MM.format(d.focal_length),
        d.saturation.to_string(),
        d.poisson.to_string(),
        d.pattern_seed.to_string(),
        s.grid_size.to_string(),
        opt(s.oversample.map(|o| o.to_string()), "auto"),
        s.modes_min.to_string(),
        s.modes_max.to_string(),
        name_of(ORDERINGS, s.ordering).to_string(),
        s.apodization.to_string(),
        opt(
            a.region.map(|r| format!("{},{},{},{}", r.x, r.y, r.width, r.height)),
            "auto",
        ),
        a.max_disp.to_string(),
        a.stride.to_string(),
        name_of(RADII, a.radius).to_string(),
        name_of(SOURCES, a.source).to_string(),
    ];
    let mut out = String::new();
    let mut section = "";
    for (key, value) in KEYS.iter().zip(values) {
        let head = key.split('.').next().unwrap_or("");
        if head != section {
            if !section.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "# {head}");
            section = head;
        }
        let _ = writeln!(out, "{key} = {value}");
    }
    out
}
