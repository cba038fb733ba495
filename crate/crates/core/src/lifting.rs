//! Compensated Haar lifting: prediction and update steps with their inverses.
//!
//! ```text
//! HP_t = f_2t   - floor(p_2t)        p_2t = MC(f_2t-1)
//! LP_t = f_2t-1 + floor(u)           u = a_k * IMC(HP_t), holes filled or 0
//! ```
//!
//! The update `u` depends only on `HP_t` and the motion field, both of which
//! the decoder has, so synthesis recomputes it (including the extrapolated
//! fill) and undoes both steps exactly.

use rayon::prelude::*;

use crate::frame::{floor_scale, ConnectivityMap, Frame, LiftConfig, MotionField, Sequence, UpdateField, UpdateMode};
use crate::fse::{fse_reconstruct, FseParams, FseReport};
use crate::imc::{apply_connectivity_weights, imc_scatter};
use crate::motion::{estimate_motion, SearchConfig};
use crate::{Error, Result};

/// The two bands of one lifting step plus the motion they were built with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandPair {
    pub lowpass: Frame,
    pub highpass: Frame,
    pub motion: MotionField,
    pub update_mode: UpdateMode,
}

/// Every intermediate product of [`analyze_pair_detailed`].
#[derive(Debug, Clone)]
pub struct PairAnalysis {
    pub bands: SubbandPair,
    pub predictor: Frame,
    pub connectivity: ConnectivityMap,
    /// Weighted update `a_k * u`, holes at zero.
    pub weighted_update: UpdateField,
    /// The update actually added to the reference.
    pub applied_update: UpdateField,
    pub fse_report: Option<FseReport>,
}

/// Motion-compensated predictor: every block is copied from the reference
/// at its displaced position.
pub fn mc_predict(reference: &Frame, motion: &MotionField) -> Result<Frame> {
    let (w, h) = (reference.width(), reference.height());
    let rects = motion.check_in_bounds(w, h)?;
    let src = reference.samples();
    let mut out = vec![0i32; w * h];
    for (rect, &v) in rects.iter().zip(motion.vectors()) {
        let sx = (rect.x as i64 + v.dx as i64) as usize;
        let sy = (rect.y as i64 + v.dy as i64) as usize;
        for row in 0..rect.height {
            let d = (rect.y + row) * w + rect.x;
            let s = (sy + row) * w + sx;
            out[d..d + rect.width].copy_from_slice(&src[s..s + rect.width]);
        }
    }
    Frame::new(w, h, reference.bit_depth(), out)
}

/// `HP = current - floor(predictor)`.
pub fn analyze_highpass(current: &Frame, predictor: &Frame) -> Result<Frame> {
    current.check_same_shape(predictor, "highpass")?;
    let samples = current
        .samples()
        .iter()
        .zip(predictor.samples())
        .map(|(&c, &p)| c - floor_scale(p as f64) as i32)
        .collect();
    Frame::new(current.width(), current.height(), current.bit_depth(), samples)
}

fn check_update_shape(frame: &Frame, update: &UpdateField) -> Result<()> {
    if frame.width() != update.width || frame.height() != update.height || update.values.len() != frame.len() {
        return Err(Error::DimensionMismatch(format!(
            "frame {}x{} vs update {}x{}",
            frame.width(),
            frame.height(),
            update.width,
            update.height
        )));
    }
    Ok(())
}

/// `LP = reference + floor(update)`.
pub fn analyze_lowpass(reference: &Frame, update: &UpdateField) -> Result<Frame> {
    check_update_shape(reference, update)?;
    let samples = reference
        .samples()
        .iter()
        .zip(&update.values)
        .map(|(&r, &u)| r + floor_scale(u) as i32)
        .collect();
    Frame::new(reference.width(), reference.height(), reference.bit_depth(), samples)
}

/// Inverse of [`analyze_lowpass`].
pub fn synthesize_reference(lowpass: &Frame, update: &UpdateField) -> Result<Frame> {
    check_update_shape(lowpass, update)?;
    let samples = lowpass
        .samples()
        .iter()
        .zip(&update.values)
        .map(|(&l, &u)| l - floor_scale(u) as i32)
        .collect();
    Frame::new(lowpass.width(), lowpass.height(), lowpass.bit_depth(), samples)
}

/// Inverse of [`analyze_highpass`].
pub fn synthesize_current(highpass: &Frame, predictor: &Frame) -> Result<Frame> {
    highpass.check_same_shape(predictor, "current synthesis")?;
    let samples = highpass
        .samples()
        .iter()
        .zip(predictor.samples())
        .map(|(&h, &p)| h + floor_scale(p as f64) as i32)
        .collect();
    Frame::new(highpass.width(), highpass.height(), highpass.bit_depth(), samples)
}

struct UpdateStage {
    connectivity: ConnectivityMap,
    weighted: UpdateField,
    applied: UpdateField,
    report: Option<FseReport>,
}

/// Extrapolated values are clamped to the highpass range so a runaway model
/// cannot overflow the coefficient type.
fn clamp_fill(field: &mut UpdateField, bit_depth: u8) {
    let bound = (1i64 << bit_depth) as f64;
    for (v, &hole) in field.values.iter_mut().zip(&field.hole_mask) {
        if hole {
            *v = v.clamp(-bound, bound);
        }
    }
}

fn compute_update(highpass: &Frame, motion: &MotionField, mode: UpdateMode, fse: &FseParams) -> Result<UpdateStage> {
    let (accum, connectivity) = imc_scatter(highpass, motion)?;
    let weighted = apply_connectivity_weights(&accum, &connectivity);
    let (applied, report) = match mode {
        UpdateMode::NoUpdate => {
            let mut zero = UpdateField::zeros(highpass.width(), highpass.height());
            zero.hole_mask = weighted.hole_mask.clone();
            (zero, None)
        }
        UpdateMode::CopyUnconnected => (weighted.clone(), None),
        UpdateMode::FseFill => {
            let (mut filled, report) = fse_reconstruct(&weighted, fse)?;
            clamp_fill(&mut filled, highpass.bit_depth());
            (filled, Some(report))
        }
    };
    Ok(UpdateStage {
        connectivity,
        weighted,
        applied,
        report,
    })
}

/// One lifting step keeping every intermediate product.
pub fn analyze_pair_detailed(reference: &Frame, current: &Frame, cfg: &LiftConfig) -> Result<PairAnalysis> {
    cfg.validate()?;
    reference.check_same_shape(current, "frame pair")?;
    let search = SearchConfig {
        block_size: cfg.block_size,
        search_range: cfg.search_range,
    };
    let motion = estimate_motion(current, reference, &search)?;
    let predictor = mc_predict(reference, &motion)?;
    let highpass = analyze_highpass(current, &predictor)?;
    let stage = compute_update(&highpass, &motion, cfg.update_mode, &cfg.fse)?;
    let lowpass = analyze_lowpass(reference, &stage.applied)?;
    Ok(PairAnalysis {
        bands: SubbandPair {
            lowpass,
            highpass,
            motion,
            update_mode: cfg.update_mode,
        },
        predictor,
        connectivity: stage.connectivity,
        weighted_update: stage.weighted,
        applied_update: stage.applied,
        fse_report: stage.report,
    })
}

/// One lifting step: `(f_2t-1, f_2t)` to `(LP_t, HP_t)` and the motion field.
pub fn analyze_pair(reference: &Frame, current: &Frame, cfg: &LiftConfig) -> Result<SubbandPair> {
    analyze_pair_detailed(reference, current, cfg).map(|a| a.bands)
}

/// Inverse lifting step. The update mode is taken from `bands`; `cfg`
/// supplies the extrapolation parameters, which must match the analysis.
pub fn synthesize_pair(bands: &SubbandPair, cfg: &LiftConfig) -> Result<(Frame, Frame)> {
    bands.lowpass.check_same_shape(&bands.highpass, "subband pair")?;
    if bands.update_mode == UpdateMode::FseFill {
        cfg.fse.validate()?;
    }
    let stage = compute_update(&bands.highpass, &bands.motion, bands.update_mode, &cfg.fse)?;
    let reference = synthesize_reference(&bands.lowpass, &stage.applied)?;
    let predictor = mc_predict(&reference, &bands.motion)?;
    let current = synthesize_current(&bands.highpass, &predictor)?;
    Ok((reference, current))
}

/// One decomposition level over a whole sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceBands {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub update_mode: UpdateMode,
    pub pairs: Vec<SubbandPair>,
    /// Unpaired last frame of an odd-length sequence, passed through.
    pub trailing: Option<Frame>,
}

impl SequenceBands {
    /// Lowpass frames in order, the pass-through frame last.
    pub fn lowpass_frames(&self) -> Vec<Frame> {
        self.pairs
            .iter()
            .map(|p| p.lowpass.clone())
            .chain(self.trailing.clone())
            .collect()
    }

    pub fn lowpass_sequence(&self, axis_label: &str) -> Result<Sequence> {
        Sequence::new(self.lowpass_frames(), axis_label)
    }

    pub fn highpass_frames(&self) -> Vec<Frame> {
        self.pairs.iter().map(|p| p.highpass.clone()).collect()
    }

    pub fn motion_fields(&self) -> Vec<MotionField> {
        self.pairs.iter().map(|p| p.motion.clone()).collect()
    }

    pub fn has_trailing(&self) -> bool {
        self.trailing.is_some()
    }

    pub fn frame_count(&self) -> usize {
        2 * self.pairs.len() + usize::from(self.trailing.is_some())
    }
}

/// Pairs frames as `(f_0, f_1), (f_2, f_3), ...` and lifts each pair.
pub fn analyze_sequence(seq: &Sequence, cfg: &LiftConfig) -> Result<SequenceBands> {
    Ok(analyze_sequence_detailed(seq, cfg)?.0)
}

/// As [`analyze_sequence`], also returning the per-pair intermediates.
pub fn analyze_sequence_detailed(seq: &Sequence, cfg: &LiftConfig) -> Result<(SequenceBands, Vec<PairAnalysis>)> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    cfg.validate()?;
    let frames = seq.frames();
    let analyses: Vec<PairAnalysis> = frames
        .par_chunks_exact(2)
        .map(|p| analyze_pair_detailed(&p[0], &p[1], cfg))
        .collect::<Result<_>>()?;
    let trailing = (frames.len() % 2 == 1).then(|| frames[frames.len() - 1].clone());
    let bands = SequenceBands {
        width: seq.width(),
        height: seq.height(),
        bit_depth: seq.bit_depth(),
        update_mode: cfg.update_mode,
        pairs: analyses.iter().map(|a| a.bands.clone()).collect(),
        trailing,
    };
    Ok((bands, analyses))
}

pub fn synthesize_sequence(bands: &SequenceBands, cfg: &LiftConfig, axis_label: &str) -> Result<Sequence> {
    let restored: Vec<(Frame, Frame)> = bands
        .pairs
        .par_iter()
        .map(|p| synthesize_pair(p, cfg))
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(bands.frame_count());
    for (r, c) in restored {
        frames.push(r);
        frames.push(c);
    }
    frames.extend(bands.trailing.clone());
    Sequence::new(frames, axis_label)
}
