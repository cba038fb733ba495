//! Raw sample planes, JSON dataset sidecars and diagnostic images.
//!
//! Raw planes store frames back to back, row-major: one byte per sample for
//! 8-bit data, two bytes little endian otherwise. A dataset is described by a
//! JSON sidecar:
//!
//! ```json
//! { "width": 512, "height": 512, "bit_depth": 12, "frames": 32,
//!   "axis": "slice", "raw": "head.raw" }
//! ```
//!
//! `raw` is resolved relative to the sidecar's directory.
//!
//! PGM export of subbands uses an affine map: [`PgmMap::Symmetric`] centers
//! zero at mid-gray (128, or 32768 for 16-bit) and maps `±half_range` to the
//! extremes; values beyond are clamped.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::frame::{ConnectivityMap, Frame, Sequence, UpdateField};
use crate::{Error, Result};

fn bytes_per_sample(bit_depth: u8) -> usize {
    if bit_depth <= 8 {
        1
    } else {
        2
    }
}

pub fn decode_raw_sequence(
    bytes: &[u8],
    width: usize,
    height: usize,
    bit_depth: u8,
    frame_count: usize,
    axis_label: &str,
) -> Result<Sequence> {
    if bit_depth == 0 || bit_depth > 16 {
        return Err(Error::InvalidConfig(format!("bit depth {bit_depth}")));
    }
    let bps = bytes_per_sample(bit_depth);
    let frame_bytes = width * height * bps;
    let needed = frame_bytes * frame_count;
    if bytes.len() < needed {
        let frame = bytes.len() / frame_bytes.max(1);
        return Err(Error::ShortInput {
            frame,
            needed,
            available: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(Error::malformed(
            needed,
            format!("{} bytes beyond {frame_count} frames", bytes.len() - needed),
        ));
    }
    let max = (1u32 << bit_depth) - 1;
    let mut frames = Vec::with_capacity(frame_count);
    for (fi, chunk) in bytes.chunks_exact(frame_bytes.max(1)).take(frame_count).enumerate() {
        let mut samples = Vec::with_capacity(width * height);
        if bps == 1 {
            samples.extend(chunk.iter().map(|&b| b as i32));
        } else {
            for (i, c) in chunk.chunks_exact(2).enumerate() {
                let v = u16::from_le_bytes([c[0], c[1]]) as u32;
                if v > max {
                    return Err(Error::SampleRange {
                        frame: fi,
                        index: i,
                        value: v as i64,
                        bit_depth,
                    });
                }
                samples.push(v as i32);
            }
        }
        frames.push(Frame::new(width, height, bit_depth, samples)?);
    }
    Sequence::new(frames, axis_label)
}

pub fn read_raw_sequence(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    bit_depth: u8,
    frame_count: usize,
) -> Result<Sequence> {
    let bytes = fs::read(path)?;
    decode_raw_sequence(&bytes, width, height, bit_depth, frame_count, "time")
}

pub fn encode_raw_sequence(seq: &Sequence) -> Result<Vec<u8>> {
    let bps = bytes_per_sample(seq.bit_depth());
    let mut out = Vec::with_capacity(seq.len() * seq.width() * seq.height() * bps);
    for (fi, f) in seq.frames().iter().enumerate() {
        f.validate_original(fi)?;
        for &s in f.samples() {
            if bps == 1 {
                out.push(s as u8);
            } else {
                out.extend_from_slice(&(s as u16).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn write_raw_sequence(seq: &Sequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_raw_sequence(seq)?)?;
    Ok(())
}

/// JSON description of a raw dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub frames: usize,
    #[serde(default = "default_axis")]
    pub axis: String,
    pub raw: PathBuf,
}

fn default_axis() -> String {
    "time".to_string()
}

impl Sidecar {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn raw_path(&self, sidecar_path: &Path) -> PathBuf {
        match sidecar_path.parent() {
            Some(dir) if self.raw.is_relative() => dir.join(&self.raw),
            _ => self.raw.clone(),
        }
    }
}

/// Loads the dataset a sidecar describes.
pub fn read_dataset(sidecar_path: impl AsRef<Path>) -> Result<(Sidecar, Sequence)> {
    let sidecar_path = sidecar_path.as_ref();
    let sc = Sidecar::read(sidecar_path)?;
    let bytes = fs::read(sc.raw_path(sidecar_path))?;
    let seq = decode_raw_sequence(&bytes, sc.width, sc.height, sc.bit_depth, sc.frames, &sc.axis)?;
    Ok((sc, seq))
}

/// Writes `<dir>/<stem>.raw` and `<dir>/<stem>.json`, returning the sidecar path.
pub fn write_dataset(seq: &Sequence, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let raw = PathBuf::from(format!("{stem}.raw"));
    write_raw_sequence(seq, dir.join(&raw))?;
    let sc = Sidecar {
        width: seq.width(),
        height: seq.height(),
        bit_depth: seq.bit_depth(),
        frames: seq.len(),
        axis: seq.axis_label().to_string(),
        raw,
    };
    let path = dir.join(format!("{stem}.json"));
    sc.write(&path)?;
    Ok(path)
}

/// Sample-to-gray mapping for PGM export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PgmMap {
    /// Samples written as is, clamped to `0..=maxval`.
    Clamp,
    /// `lo` maps to 0 and `hi` to maxval.
    Range { lo: f64, hi: f64 },
    /// Zero maps to mid-gray, `±half_range` to the extremes.
    Symmetric { half_range: f64 },
}

impl PgmMap {
    fn apply(self, v: i32, maxval: u32) -> u32 {
        let m = maxval as f64;
        let g = match self {
            PgmMap::Clamp => v as f64,
            PgmMap::Range { lo, hi } => (v as f64 - lo) / (hi - lo) * m,
            PgmMap::Symmetric { half_range } => {
                let mid = (maxval / 2 + 1) as f64;
                mid + v as f64 / half_range * mid
            }
        };
        g.round().clamp(0.0, m) as u32
    }
}

fn pgm_bytes(frame: &Frame, map: PgmMap, maxval: u32) -> Vec<u8> {
    let mut out = format!("P5 {} {} {}\n", frame.width(), frame.height(), maxval).into_bytes();
    for &s in frame.samples() {
        let g = map.apply(s, maxval);
        if maxval > 255 {
            out.extend_from_slice(&(g as u16).to_be_bytes());
        } else {
            out.push(g as u8);
        }
    }
    out
}

/// Binary 8-bit PGM (`P5`, maxval 255).
pub fn write_pgm(frame: &Frame, path: impl AsRef<Path>, map: PgmMap) -> Result<()> {
    fs::write(path, pgm_bytes(frame, map, 255))?;
    Ok(())
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples).
pub fn write_pgm16(frame: &Frame, path: impl AsRef<Path>, map: PgmMap) -> Result<()> {
    fs::write(path, pgm_bytes(frame, map, 65535))?;
    Ok(())
}

pub fn encode_pgm(frame: &Frame, map: PgmMap, sixteen_bit: bool) -> Vec<u8> {
    pgm_bytes(frame, map, if sixteen_bit { 65535 } else { 255 })
}

/// A decoded binary PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::malformed(start, "truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if token(&mut pos)? != "P5" {
        return Err(Error::malformed(0, "not a binary PGM"));
    }
    let number = |pos: &mut usize| -> Result<usize> {
        let at = *pos;
        token(pos)?
            .parse()
            .map_err(|_| Error::malformed(at, "bad PGM header number"))
    };
    let width = number(&mut pos)?;
    let height = number(&mut pos)?;
    let maxval = number(&mut pos)? as u32;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::malformed(pos, format!("PGM maxval {maxval}")));
    }
    pos += 1;
    let bps = if maxval > 255 { 2 } else { 1 };
    let data = bytes.get(pos..).unwrap_or(&[]);
    if data.len() != width * height * bps {
        return Err(Error::malformed(
            pos,
            format!("PGM body has {} bytes, expected {}", data.len(), width * height * bps),
        ));
    }
    let samples = if bps == 1 {
        data.iter().map(|&b| b as u16).collect()
    } else {
        data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval,
        samples,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    decode_pgm(&fs::read(path)?)
}

pub const HEAT_ZERO: [u8; 3] = [0, 255, 0];
pub const HEAT_HOLE: [u8; 3] = [255, 255, 255];

/// Green at zero, toward red for positive and toward blue for negative values
/// (relative to `max_abs`); holes are white.
pub fn heat_color(value: f64, max_abs: f64, hole: bool) -> [u8; 3] {
    if hole {
        return HEAT_HOLE;
    }
    if max_abs <= 0.0 || value == 0.0 {
        return HEAT_ZERO;
    }
    let t = (value.abs() / max_abs).min(1.0);
    let hot = (255.0 * t).round() as u8;
    let green = (255.0 * (1.0 - t)).round() as u8;
    if value > 0.0 {
        [hot, green, 0]
    } else {
        [0, green, hot]
    }
}

/// RGB heat map of an update field, scaled to its largest non-hole magnitude.
pub fn update_heatmap(field: &UpdateField) -> Vec<u8> {
    let max_abs = field
        .values
        .iter()
        .zip(&field.hole_mask)
        .filter(|(_, &h)| !h)
        .fold(0.0f64, |m, (&v, _)| m.max(v.abs()));
    field
        .values
        .iter()
        .zip(&field.hole_mask)
        .flat_map(|(&v, &h)| heat_color(v, max_abs, h))
        .collect()
}

/// RGB heat map of connectivity counts; unconnected pixels are white.
pub fn connectivity_heatmap(conn: &ConnectivityMap) -> Vec<u8> {
    let max = conn.counts.iter().copied().max().unwrap_or(0) as f64;
    conn.counts
        .iter()
        .flat_map(|&k| heat_color(k as f64, max, k == 0))
        .collect()
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6 {width} {height} 255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Heat-map source for [`write_heatmap`].
pub enum HeatSource<'a> {
    Update(&'a UpdateField),
    Connectivity(&'a ConnectivityMap),
}

/// Binary PPM (`P6`) heat map.
pub fn write_heatmap(source: HeatSource<'_>, path: impl AsRef<Path>) -> Result<()> {
    let (w, h, rgb) = match source {
        HeatSource::Update(f) => (f.width, f.height, update_heatmap(f)),
        HeatSource::Connectivity(c) => (c.width, c.height, connectivity_heatmap(c)),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_ppm(w, h, &rgb))?;
    Ok(())
}
