//! Frames as binary 16-bit PGM (`P5`, maxval 65535, big-endian samples) with
//! a `<path>.meta` text sidecar holding the generation record.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::detector::{Frame, FrameMetadata};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "P5";
const MAXVAL: u32 = 65535;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameFileHeader {
    pub magic: String,
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u32,
    /// Byte offset of the first sample.
    pub data_offset: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptFrame {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Parse the PGM header at the start of `bytes`.
pub fn read_header(bytes: &[u8], path: &Path) -> Result<FrameFileHeader> {
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt(path, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= bytes.len() && tokens.len() == 4 {
        return Err(corrupt(path, "missing payload"));
    }
    pos += 1;
    if tokens[0] != MAGIC {
        return Err(corrupt(path, format!("magic `{}` is not {MAGIC}", tokens[0])));
    }
    let parse = |t: &str, what: &str| -> Result<usize> {
        t.parse::<usize>()
            .map_err(|_| corrupt(path, format!("bad {what} `{t}`")))
    };
    let width = parse(&tokens[1], "width")?;
    let height = parse(&tokens[2], "height")?;
    let maxval = parse(&tokens[3], "maxval")?;
    if maxval != MAXVAL as usize {
        return Err(corrupt(path, format!("maxval {maxval}, expected {MAXVAL}")));
    }
    Ok(FrameFileHeader {
        magic: tokens[0].clone(),
        version: FORMAT_VERSION,
        width,
        height,
        bit_depth: 16,
        data_offset: pos,
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "unknown".to_string(), T::to_string)
}

fn sidecar_text(meta: &FrameMetadata) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(s, "generator = speckle-core {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "seed = {}", opt(&meta.seed));
    let _ = writeln!(s, "pulse_power_W = {}", opt(&meta.pulse_power));
    let _ = writeln!(s, "gain_peak = {}", opt(&meta.gain_peak));
    let _ = writeln!(s, "M = {}", opt(&meta.mode_count));
    let _ = writeln!(s, "waist_m = {}", opt(&meta.waist));
    let _ = writeln!(s, "exposure = {}", opt(&meta.exposure));
    let _ = writeln!(s, "saturated = {}", meta.saturated);
    s
}

fn parse_sidecar(text: &str, path: &Path) -> Result<FrameMetadata> {
    fn field<T: std::str::FromStr>(v: &str, key: &str, path: &Path) -> Result<Option<T>> {
        if v == "unknown" {
            return Ok(None);
        }
        v.parse::<T>()
            .map(Some)
            .map_err(|_| corrupt(path, format!("sidecar `{key}` has bad value `{v}`")))
    }
    let mut meta = FrameMetadata::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(corrupt(path, format!("sidecar line `{line}`")));
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "seed" => meta.seed = field(v, k, path)?,
            "pulse_power_W" => meta.pulse_power = field(v, k, path)?,
            "gain_peak" => meta.gain_peak = field(v, k, path)?,
            "M" => meta.mode_count = field(v, k, path)?,
            "waist_m" => meta.waist = field(v, k, path)?,
            "exposure" => meta.exposure = field(v, k, path)?,
            "saturated" => meta.saturated = field(v, k, path)?.unwrap_or(false),
            _ => {}
        }
    }
    Ok(meta)
}

pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = frame.counts.dim();
    let mut bytes = format!("{MAGIC}\n{w} {h}\n{MAXVAL}\n").into_bytes();
    bytes.reserve(2 * w * h);
    for &c in frame.counts.iter() {
        bytes.extend_from_slice(&c.to_be_bytes());
    }
    std::fs::write(path, bytes)?;
    std::fs::write(sidecar_path(path), sidecar_text(&frame.metadata))?;
    Ok(())
}

/// Load a frame. A missing sidecar is tolerated with a warning: metadata is
/// then unknown and the saturation flag is recomputed from the counts.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let header = read_header(&bytes, path)?;
    let payload = &bytes[header.data_offset.min(bytes.len())..];
    let expected = 2 * header.width * header.height;
    if payload.len() < expected {
        return Err(corrupt(
            path,
            format!("payload truncated: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(corrupt(
            path,
            format!("{} trailing bytes after payload", payload.len() - expected),
        ));
    }
    let samples: Vec<u16> = payload
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    let counts = Array2::from_shape_vec((header.height, header.width), samples)
        .map_err(|e| corrupt(path, e.to_string()))?;
    let side = sidecar_path(path);
    let metadata = match std::fs::read_to_string(&side) {
        Ok(text) => parse_sidecar(&text, path)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            log::warn!("{}: no sidecar, frame metadata unknown", path.display());
            FrameMetadata {
                saturated: counts.iter().any(|&c| c == u16::MAX),
                ..FrameMetadata::default()
            }
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Frame { counts, metadata })
}
