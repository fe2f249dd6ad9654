use std::fmt::Display;
use std::path::{Path, PathBuf};

use speckle_core::analysis::{fit_linear, fit_sinh2, FitResult};
use speckle_core::campaign::{analyze_frame, PointSetup};
use speckle_core::io::set_key;
use speckle_core::{
    load_config, load_frame, predict as predict_report, run_campaign, save_frame, CampaignSpec, Error,
    ExperimentConfig,
};

use crate::{Model, Setup};

const CONFIG_ERROR: u8 = 2;
const IO_ERROR: u8 = 3;
const ANALYSIS_ERROR: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(e.exit_code() as u8, e)
    }
}

fn io_failure(path: &Path, e: impl Display) -> Failure {
    Failure::new(IO_ERROR, format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn load_setup(setup: &Setup) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &setup.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    for item in &setup.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::new(CONFIG_ERROR, format!("--set `{item}` is not KEY=VALUE")))?;
        set_key(&mut cfg, key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

pub fn predict(setup: &Setup, out: Option<&Path>) -> Outcome {
    let cfg = load_setup(setup)?;
    let report = predict_report(&cfg)?;
    print!("{}", report.to_text());
    if let Some(dir) = out {
        create_dir(dir)?;
        write_file(&dir.join("predict.csv"), &report.to_csv())?;
    }
    Ok(())
}

pub fn simulate(setup: &Setup, seed: u64, frames: usize, out: &Path) -> Outcome {
    let cfg = load_setup(setup)?;
    let point = PointSetup::new(cfg)?;
    create_dir(out)?;
    for k in 0..frames as u64 {
        let s = seed + k;
        let (_, frame) = point.simulate(s)?;
        let path = out.join(format!("frame_{s}.pgm"));
        save_frame(&frame, &path)?;
        let total: f64 = frame.counts.iter().map(|&c| f64::from(c)).sum();
        println!(
            "{}  mean {:.2}  g_peak {:.4}  M {}{}",
            path.display(),
            total / frame.counts.len() as f64,
            frame.metadata.gain_peak.unwrap_or(f64::NAN),
            frame.metadata.mode_count.unwrap_or(0),
            if frame.metadata.saturated { "  saturated" } else { "" }
        );
    }
    Ok(())
}

pub fn analyze(setup: &Setup, inputs: &[PathBuf], out: Option<&Path>) -> Outcome {
    let cfg = load_setup(setup)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::new(IO_ERROR, e);
    w.write_record([
        "file",
        "seed",
        "mean_N_per_pixel",
        "M_hat",
        "M_err",
        "g_hat",
        "g_err",
        "radius_pixels",
        "radius_err",
        "eta_coll",
        "error",
    ])
    .map_err(csv_err)?;
    let mut ok = 0;
    for path in inputs {
        let frame = load_frame(path)?;
        let seed = frame.metadata.seed.map_or_else(String::new, |s| s.to_string());
        let mut rec = vec![path.display().to_string(), seed];
        match analyze_frame(&cfg, &frame) {
            Ok(e) => {
                ok += 1;
                rec.extend(
                    [
                        e.mean_n,
                        e.m_hat,
                        e.m_err,
                        e.g_hat,
                        e.g_err,
                        e.radius_pixels,
                        e.radius_err,
                        e.eta_coll,
                    ]
                    .map(|v| v.to_string()),
                );
                rec.push(String::new());
            }
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                rec.extend(std::iter::repeat(String::new()).take(8));
                rec.push(e.code().to_string());
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(IO_ERROR, e.error()))?;
    let text = String::from_utf8_lossy(&bytes);
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_file(&dir.join("analysis.csv"), &text)?;
        }
        None => print!("{text}"),
    }
    if ok == 0 {
        return Err(Failure::new(ANALYSIS_ERROR, "no frame could be analyzed"));
    }
    Ok(())
}

fn parse_sweep(sweep: &str) -> Result<(String, Vec<f64>), Failure> {
    let bad = || Failure::new(CONFIG_ERROR, format!("--sweep `{sweep}` is not KEY=V1,V2,..."));
    let (key, list) = sweep.split_once('=').ok_or_else(bad)?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    if key.trim().is_empty() || values.is_empty() {
        return Err(bad());
    }
    Ok((key.trim().to_string(), values))
}

pub fn campaign(
    setup: &Setup,
    sweep: &str,
    frames: usize,
    seed: u64,
    out: &Path,
    timestamp: bool,
    fits: bool,
) -> Outcome {
    let cfg = load_setup(setup)?;
    let (key, values) = parse_sweep(sweep)?;
    let mut spec = CampaignSpec::new(cfg, key, values, frames);
    spec.seed_base = seed;
    spec.timestamp = timestamp;
    spec.fits = fits;
    let result = run_campaign(&spec)?;
    result.write(&spec, out)?;
    for a in &result.aggregates {
        println!(
            "{} = {}: {}/{} frames, radius {:.3} px, M {:.1}, g {:.3}",
            spec.sweep_key,
            a.sweep_value,
            a.frames - a.failed,
            a.frames,
            a.radius.0,
            a.m_hat.0,
            a.g_hat.0
        );
    }
    for (name, fit) in &result.fits {
        match fit {
            Ok(f) => println!("fit {name}: {}", describe(f)),
            Err(e) => println!("fit {name}: failed: {e}"),
        }
    }
    if result.all_failed() {
        return Err(Failure::new(ANALYSIS_ERROR, "every frame failed analysis"));
    }
    Ok(())
}

fn describe(f: &FitResult) -> String {
    let mut parts: Vec<String> = f
        .parameters
        .iter()
        .map(|p| format!("{} = {} ± {}", p.name, p.value, p.stderr))
        .collect();
    parts.push(format!("points = {}", f.points));
    parts.push(format!("residual_norm = {}", f.residual_norm));
    parts.join(", ")
}

fn column(headers: &csv::StringRecord, name: Option<&str>, default: usize) -> Result<usize, Failure> {
    match name {
        Some(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Failure::new(CONFIG_ERROR, format!("no column `{n}`"))),
        None if default < headers.len() => Ok(default),
        None => Err(Failure::new(CONFIG_ERROR, "table needs at least two columns")),
    }
}

pub fn fit(model: Model, input: &Path, x: Option<&str>, y: Option<&str>, k: f64) -> Outcome {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(input)
        .map_err(|e| io_failure(input, e))?;
    let headers = reader.headers().map_err(|e| io_failure(input, e))?.clone();
    let (xi, yi) = (column(&headers, x, 0)?, column(&headers, y, 1)?);
    let mut points = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| io_failure(input, e))?;
        let get = |i: usize| rec.get(i).and_then(|v| v.trim().parse::<f64>().ok());
        // rows with blank cells (failed points) are skipped
        if let (Some(a), Some(b)) = (get(xi), get(yi)) {
            if a.is_finite() && b.is_finite() {
                points.push((a, b));
            }
        }
    }
    let result = match model {
        Model::Linear => fit_linear(&points),
        Model::Sinh2 => fit_sinh2(&points, k),
    }
    .map_err(|e| Failure::new(ANALYSIS_ERROR, e))?;
    for p in &result.parameters {
        println!("{} = {} ± {}", p.name, p.value, p.stderr);
    }
    println!("points = {}", result.points);
    println!("residual_norm = {}", result.residual_norm);
    Ok(())
}
