//! Quality and rate measurements of the subbands.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::codec::encode_lossless;
use crate::frame::{ConnectivityMap, Frame};
use crate::frame::Sequence;
use crate::lifting::{PairAnalysis, SequenceBands};
use crate::{Error, Result};

/// Peak signal-to-noise ratio; identical frames give [`Psnr::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }
}

impl PartialOrd for Psnr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.db().partial_cmp(&other.db())
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    a.check_same_shape(b, "psnr")?;
    if a.bit_depth() != b.bit_depth() {
        return Err(Error::DimensionMismatch(format!(
            "bit depth {} vs {}",
            a.bit_depth(),
            b.bit_depth()
        )));
    }
    if a.is_empty() {
        return Err(Error::DimensionMismatch("psnr of an empty frame".into()));
    }
    let sse: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum();
    Ok(sse / a.len() as f64)
}

/// `10 log10(MAX^2 / MSE)` with `MAX = 2^bit_depth - 1`.
pub fn psnr(a: &Frame, b: &Frame) -> Result<Psnr> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(Psnr::Infinite);
    }
    let max = a.max_value() as f64;
    Ok(Psnr::Finite(10.0 * (max * max / e).log10()))
}

/// Mean of the finite values; infinite only when every value is infinite.
pub fn mean_psnr(values: &[Psnr]) -> Option<Psnr> {
    if values.is_empty() {
        return None;
    }
    let finite: Vec<f64> = values
        .iter()
        .filter_map(|p| match p {
            Psnr::Finite(v) => Some(*v),
            Psnr::Infinite => None,
        })
        .collect();
    if finite.is_empty() {
        Some(Psnr::Infinite)
    } else {
        Some(Psnr::Finite(finite.iter().sum::<f64>() / finite.len() as f64))
    }
}

/// Sum and count of `|LP[a] - LP[b]|` over 4-neighbour pairs where exactly
/// one side is unconnected.
pub fn boundary_step_parts(lowpass: &Frame, conn: &ConnectivityMap) -> Result<(f64, usize)> {
    if lowpass.width() != conn.width || lowpass.height() != conn.height {
        return Err(Error::DimensionMismatch("lowpass vs connectivity".into()));
    }
    let (w, h) = (lowpass.width(), lowpass.height());
    let s = lowpass.samples();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut visit = |a: usize, b: usize| {
        if (conn.counts[a] == 0) != (conn.counts[b] == 0) {
            sum += (s[a] - s[b]).abs() as f64;
            count += 1;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                visit(i, i + 1);
            }
            if y + 1 < h {
                visit(i, i + w);
            }
        }
    }
    Ok((sum, count))
}

/// Mean absolute intensity step across the boundary of unconnected regions;
/// zero when there is no boundary.
pub fn boundary_step_metric(lowpass: &Frame, conn: &ConnectivityMap) -> Result<f64> {
    let (sum, count) = boundary_step_parts(lowpass, conn)?;
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Shannon entropy of the sample histogram in bits per sample.
pub fn first_order_entropy(frame: &Frame) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    let mut hist: HashMap<i32, usize> = HashMap::new();
    for &s in frame.samples() {
        *hist.entry(s).or_default() += 1;
    }
    let n = frame.len() as f64;
    let h: f64 = hist
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Coded size of one decomposition, split the way rate tables report it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateReport {
    pub lowpass_bytes: usize,
    pub highpass_bytes: usize,
    pub motion_bytes: usize,
}

impl RateReport {
    pub fn total_bytes(&self) -> usize {
        self.lowpass_bytes + self.highpass_bytes + self.motion_bytes
    }
}

/// Codes every band with the built-in lossless coder; motion is counted at
/// its serialized size. The pass-through frame counts as lowpass.
pub fn rate_report(bands: &SequenceBands) -> Result<RateReport> {
    let mut r = RateReport::default();
    for p in &bands.pairs {
        r.lowpass_bytes += encode_lossless(&p.lowpass)?.len();
        r.highpass_bytes += encode_lossless(&p.highpass)?.len();
        r.motion_bytes += p.motion.serialized_len();
    }
    if let Some(t) = &bands.trailing {
        r.lowpass_bytes += encode_lossless(t)?.len();
    }
    Ok(r)
}

/// Rate and quality summary of one decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMetrics {
    pub rate: RateReport,
    /// Per pair, lowpass against the reference frame it replaces.
    pub lowpass_psnr: Vec<Psnr>,
    pub mean_lowpass_psnr: Psnr,
    /// Boundary step pooled over every boundary pixel pair of all pairs.
    pub boundary_step: f64,
    pub unconnected_pixels: usize,
}

pub fn sequence_metrics(seq: &Sequence, bands: &SequenceBands, analyses: &[PairAnalysis]) -> Result<SequenceMetrics> {
    if analyses.len() != bands.pairs.len() || seq.len() != bands.frame_count() {
        return Err(Error::DimensionMismatch("sequence, bands and analyses disagree".into()));
    }
    let mut lowpass_psnr = Vec::with_capacity(analyses.len());
    let (mut sum, mut count) = (0.0, 0usize);
    let mut unconnected_pixels = 0;
    for (t, a) in analyses.iter().enumerate() {
        lowpass_psnr.push(psnr(&a.bands.lowpass, &seq.frames()[2 * t])?);
        let (s, c) = boundary_step_parts(&a.bands.lowpass, &a.connectivity)?;
        sum += s;
        count += c;
        unconnected_pixels += a.connectivity.counts.iter().filter(|&&k| k == 0).count();
    }
    Ok(SequenceMetrics {
        rate: rate_report(bands)?,
        mean_lowpass_psnr: mean_psnr(&lowpass_psnr).unwrap_or(Psnr::Infinite),
        lowpass_psnr,
        boundary_step: if count == 0 { 0.0 } else { sum / count as f64 },
        unconnected_pixels,
    })
}
