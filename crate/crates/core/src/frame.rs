//! Shared domain types: frames, motion fields, connectivity and update fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fse::FseParams;
use crate::{Error, Result};

/// Largest bit depth a [`Frame`] can represent.
pub const MAX_BIT_DEPTH: u8 = 16;

/// Arithmetic floor used by every rounding step of the lifting structure.
///
/// Rounds toward negative infinity; truncation would break exact inversion
/// for negative updates.
#[inline]
pub fn floor_scale(value: f64) -> i64 {
    debug_assert!(value.is_finite());
    value.floor() as i64
}

/// A 2-D grid of integer samples.
///
/// Original frames hold samples in `0..2^bit_depth`. Transform bands reuse the
/// same type with a wider signed range; `i32` leaves ample headroom over the
/// `bit_depth + 2` bits they need.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    bit_depth: u8,
    samples: Vec<i32>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("bit_depth", &self.bit_depth)
            .finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: usize, height: usize, bit_depth: u8, samples: Vec<i32>) -> Result<Self> {
        if bit_depth == 0 || bit_depth > MAX_BIT_DEPTH {
            return Err(Error::InvalidConfig(format!(
                "bit depth {bit_depth} not in 1..={MAX_BIT_DEPTH}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            bit_depth,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: i32) -> Result<Self> {
        Frame::new(width, height, bit_depth, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize) -> i32,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Frame::new(width, height, bit_depth, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest representable original sample, `2^bit_depth - 1`.
    pub fn max_value(&self) -> i32 {
        (1i32 << self.bit_depth) - 1
    }

    pub fn samples(&self) -> &[i32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [i32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<i32> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: i32) {
        self.samples[y * self.width + x] = value;
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Frame, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Checks the original-frame invariant `0 <= sample < 2^bit_depth`.
    pub fn validate_original(&self, frame_index: usize) -> Result<()> {
        let max = self.max_value();
        match self
            .samples
            .iter()
            .position(|&s| s < 0 || s > max)
        {
            None => Ok(()),
            Some(index) => Err(Error::SampleRange {
                frame: frame_index,
                index,
                value: self.samples[index] as i64,
                bit_depth: self.bit_depth,
            }),
        }
    }
}

/// Ordered frames of identical shape, taken along time or slice direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    frames: Vec<Frame>,
    axis_label: String,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>, axis_label: impl Into<String>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        for (i, f) in frames.iter().enumerate().skip(1) {
            if !f.same_shape(first) || f.bit_depth() != first.bit_depth() {
                return Err(Error::DimensionMismatch(format!(
                    "frame {i} is {}x{}@{} but frame 0 is {}x{}@{}",
                    f.width(),
                    f.height(),
                    f.bit_depth(),
                    first.width(),
                    first.height(),
                    first.bit_depth()
                )));
            }
        }
        Ok(Sequence {
            frames,
            axis_label: axis_label.into(),
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn axis_label(&self) -> &str {
        &self.axis_label
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn bit_depth(&self) -> u8 {
        self.frames[0].bit_depth()
    }
}

/// Integer displacement of a current-frame block into the reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub fn new(dx: i32, dy: i32) -> Self {
        MotionVector { dx, dy }
    }

    pub fn norm_sq(self) -> i64 {
        (self.dx as i64).pow(2) + (self.dy as i64).pow(2)
    }
}

/// Pixel rectangle of one (possibly clipped) block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl BlockRect {
    pub fn area(&self) -> usize {
        self.width * self.height
    }

    /// Whether the rectangle displaced by `v` lies inside a `width x height` frame.
    pub fn shifted_inside(&self, v: MotionVector, width: usize, height: usize) -> bool {
        let x0 = self.x as i64 + v.dx as i64;
        let y0 = self.y as i64 + v.dy as i64;
        x0 >= 0
            && y0 >= 0
            && x0 + self.width as i64 <= width as i64
            && y0 + self.height as i64 <= height as i64
    }
}

/// Raster grid of `block_size` blocks covering a frame; the last row and
/// column are clipped when the frame does not divide evenly.
pub fn block_grid(width: usize, height: usize, block_size: usize) -> Vec<BlockRect> {
    let bx = width.div_ceil(block_size);
    let by = height.div_ceil(block_size);
    let mut rects = Vec::with_capacity(bx * by);
    for j in 0..by {
        for i in 0..bx {
            let x = i * block_size;
            let y = j * block_size;
            rects.push(BlockRect {
                x,
                y,
                width: block_size.min(width - x),
                height: block_size.min(height - y),
            });
        }
    }
    rects
}

/// One motion vector per block, in raster block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionField {
    block_size: usize,
    blocks_x: usize,
    blocks_y: usize,
    vectors: Vec<MotionVector>,
}

impl MotionField {
    pub fn new(
        block_size: usize,
        blocks_x: usize,
        blocks_y: usize,
        vectors: Vec<MotionVector>,
    ) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        if vectors.len() != blocks_x * blocks_y {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors for {blocks_x}x{blocks_y} blocks",
                vectors.len()
            )));
        }
        Ok(MotionField {
            block_size,
            blocks_x,
            blocks_y,
            vectors,
        })
    }

    /// A field of zero vectors for a `width x height` frame.
    pub fn zero(width: usize, height: usize, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        let bx = width.div_ceil(block_size);
        let by = height.div_ceil(block_size);
        MotionField::new(block_size, bx, by, vec![MotionVector::ZERO; bx * by])
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    pub fn vectors(&self) -> &[MotionVector] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [MotionVector] {
        &mut self.vectors
    }

    pub fn vector(&self, bx: usize, by: usize) -> MotionVector {
        self.vectors[by * self.blocks_x + bx]
    }

    /// Block rectangles for a frame of the given size, checking that the
    /// block counts match.
    pub fn blocks_for(&self, width: usize, height: usize) -> Result<Vec<BlockRect>> {
        if width.div_ceil(self.block_size) != self.blocks_x
            || height.div_ceil(self.block_size) != self.blocks_y
        {
            return Err(Error::DimensionMismatch(format!(
                "motion field of {}x{} blocks ({}px) does not fit a {width}x{height} frame",
                self.blocks_x, self.blocks_y, self.block_size
            )));
        }
        Ok(block_grid(width, height, self.block_size))
    }

    /// Checks every displaced block against the reference bounds.
    pub fn check_in_bounds(&self, width: usize, height: usize) -> Result<Vec<BlockRect>> {
        let rects = self.blocks_for(width, height)?;
        for (block, (rect, &v)) in rects.iter().zip(&self.vectors).enumerate() {
            if !rect.shifted_inside(v, width, height) {
                return Err(Error::OutOfBounds {
                    block,
                    dx: v.dx,
                    dy: v.dy,
                });
            }
        }
        Ok(rects)
    }

    /// Little-endian layout: `block_size u16, blocks_x u16, blocks_y u16`,
    /// then `dx i16, dy i16` per block in raster order.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(6 + 4 * self.vectors.len());
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn serialized_len(&self) -> usize {
        6 + 4 * self.vectors.len()
    }

    pub(crate) fn write_to(&self, out: &mut Vec<u8>) -> Result<()> {
        let to_u16 = |v: usize, what: &str| {
            u16::try_from(v).map_err(|_| Error::InvalidConfig(format!("{what} {v} exceeds u16")))
        };
        out.extend_from_slice(&to_u16(self.block_size, "block size")?.to_le_bytes());
        out.extend_from_slice(&to_u16(self.blocks_x, "blocks_x")?.to_le_bytes());
        out.extend_from_slice(&to_u16(self.blocks_y, "blocks_y")?.to_le_bytes());
        for v in &self.vectors {
            for c in [v.dx, v.dy] {
                let c = i16::try_from(c).map_err(|_| {
                    Error::InvalidConfig(format!("vector component {c} exceeds i16"))
                })?;
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = crate::container::ByteReader::new(bytes);
        let field = MotionField::read_from(&mut reader)?;
        reader.expect_end()?;
        Ok(field)
    }

    pub(crate) fn read_from(reader: &mut crate::container::ByteReader<'_>) -> Result<Self> {
        let start = reader.offset();
        let block_size = reader.u16()? as usize;
        let blocks_x = reader.u16()? as usize;
        let blocks_y = reader.u16()? as usize;
        if block_size == 0 {
            return Err(Error::malformed(start, "motion field block size is zero"));
        }
        let mut vectors = Vec::with_capacity(blocks_x * blocks_y);
        for _ in 0..blocks_x * blocks_y {
            let dx = reader.i16()? as i32;
            let dy = reader.i16()? as i32;
            vectors.push(MotionVector { dx, dy });
        }
        MotionField::new(block_size, blocks_x, blocks_y, vectors)
    }
}

/// Per-pixel count of blocks scattered onto each reference position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityMap {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u32>,
}

impl ConnectivityMap {
    pub fn new(width: usize, height: usize) -> Self {
        ConnectivityMap {
            width,
            height,
            counts: vec![0; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.counts[y * self.width + x]
    }

    pub fn is_hole(&self, x: usize, y: usize) -> bool {
        self.get(x, y) == 0
    }

    pub fn hole_mask(&self) -> Vec<bool> {
        self.counts.iter().map(|&k| k == 0).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&k| k as u64).sum()
    }
}

/// Real-valued update signal with its hole (unconnected) mask.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub hole_mask: Vec<bool>,
}

impl UpdateField {
    pub fn zeros(width: usize, height: usize) -> Self {
        UpdateField {
            width,
            height,
            values: vec![0.0; width * height],
            hole_mask: vec![false; width * height],
        }
    }

    pub fn new(width: usize, height: usize, values: Vec<f64>, hole_mask: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || hole_mask.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "update field {width}x{height} with {} values and {} mask entries",
                values.len(),
                hole_mask.len()
            )));
        }
        Ok(UpdateField {
            width,
            height,
            values,
            hole_mask,
        })
    }

    pub fn hole_count(&self) -> usize {
        self.hole_mask.iter().filter(|&&h| h).count()
    }
}

/// How the update step treats the inverse-compensated highpass band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateMode {
    /// No update step; the lowpass band equals the reference frame.
    NoUpdate,
    /// Weighted block update; unconnected pixels get no update.
    CopyUnconnected,
    /// Weighted block update with unconnected pixels filled by extrapolation.
    FseFill,
}

impl UpdateMode {
    pub const ALL: [UpdateMode; 3] = [
        UpdateMode::NoUpdate,
        UpdateMode::CopyUnconnected,
        UpdateMode::FseFill,
    ];

    pub fn code(self) -> u8 {
        match self {
            UpdateMode::NoUpdate => 0,
            UpdateMode::CopyUnconnected => 1,
            UpdateMode::FseFill => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(UpdateMode::NoUpdate),
            1 => Some(UpdateMode::CopyUnconnected),
            2 => Some(UpdateMode::FseFill),
            _ => None,
        }
    }

    /// Command-line name: `none`, `block` or `block+fse`.
    pub fn name(self) -> &'static str {
        match self {
            UpdateMode::NoUpdate => "none",
            UpdateMode::CopyUnconnected => "block",
            UpdateMode::FseFill => "block+fse",
        }
    }
}

impl fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(UpdateMode::NoUpdate),
            "block" => Ok(UpdateMode::CopyUnconnected),
            "block+fse" => Ok(UpdateMode::FseFill),
            other => Err(Error::InvalidConfig(format!(
                "unknown update mode {other:?} (expected none, block or block+fse)"
            ))),
        }
    }
}

/// Parameters of one lifting step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftConfig {
    pub block_size: usize,
    pub search_range: usize,
    pub update_mode: UpdateMode,
    pub fse: FseParams,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            block_size: 16,
            search_range: 15,
            update_mode: UpdateMode::FseFill,
            fse: FseParams::default(),
        }
    }
}

impl LiftConfig {
    pub fn with_mode(mut self, mode: UpdateMode) -> Self {
        self.update_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 {
            return Err(Error::InvalidConfig("block size must be at least 1".into()));
        }
        if self.block_size > u16::MAX as usize {
            return Err(Error::InvalidConfig("block size exceeds u16".into()));
        }
        if self.search_range > i16::MAX as usize {
            return Err(Error::InvalidConfig("search range exceeds i16".into()));
        }
        if self.update_mode == UpdateMode::FseFill {
            self.fse.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_rounds_toward_negative_infinity() {
        assert_eq!(floor_scale(2.5), 2);
        assert_eq!(floor_scale(-2.5), -3);
        assert_eq!(floor_scale(7.0), 7);
        assert_eq!(floor_scale(-7.0), -7);
        assert_eq!(floor_scale(-0.0), 0);
    }

    #[test]
    fn frame_rejects_wrong_length_and_depth() {
        assert!(Frame::new(2, 2, 8, vec![0; 3]).is_err());
        assert!(Frame::new(2, 2, 0, vec![0; 4]).is_err());
        assert!(Frame::new(2, 2, 17, vec![0; 4]).is_err());
        assert!(Frame::new(2, 2, 16, vec![0; 4]).is_ok());
    }

    #[test]
    fn original_range_check_reports_index() {
        let f = Frame::new(2, 1, 8, vec![10, 256]).unwrap();
        match f.validate_original(3) {
            Err(Error::SampleRange { frame, index, .. }) => {
                assert_eq!((frame, index), (3, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sequence_requires_uniform_frames() {
        assert!(matches!(Sequence::new(vec![], "time"), Err(Error::EmptySequence)));
        let a = Frame::filled(4, 4, 8, 0).unwrap();
        let b = Frame::filled(4, 3, 8, 0).unwrap();
        let c = Frame::filled(4, 4, 12, 0).unwrap();
        assert!(Sequence::new(vec![a.clone(), b], "time").is_err());
        assert!(Sequence::new(vec![a.clone(), c], "time").is_err());
        assert_eq!(Sequence::new(vec![a.clone(), a], "slice").unwrap().len(), 2);
    }

    #[test]
    fn block_grid_clips_boundary_blocks() {
        let rects = block_grid(20, 10, 8);
        assert_eq!(rects.len(), 3 * 2);
        assert_eq!(rects[2], BlockRect { x: 16, y: 0, width: 4, height: 8 });
        assert_eq!(rects[5], BlockRect { x: 16, y: 8, width: 4, height: 2 });
        assert_eq!(rects.iter().map(BlockRect::area).sum::<usize>(), 200);
    }

    #[test]
    fn motion_field_bytes_layout() {
        let mf = MotionField::new(
            16,
            2,
            1,
            vec![MotionVector::new(-1, 2), MotionVector::new(300, -300)],
        )
        .unwrap();
        let bytes = mf.to_bytes().unwrap();
        assert_eq!(
            bytes,
            vec![16, 0, 2, 0, 1, 0, 0xFF, 0xFF, 2, 0, 0x2C, 0x01, 0xD4, 0xFE]
        );
        assert_eq!(bytes.len(), mf.serialized_len());
        assert_eq!(MotionField::from_bytes(&bytes).unwrap(), mf);
        assert!(MotionField::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn update_mode_names_round_trip() {
        for mode in UpdateMode::ALL {
            assert_eq!(mode.name().parse::<UpdateMode>().unwrap(), mode);
            assert_eq!(UpdateMode::from_code(mode.code()), Some(mode));
        }
        assert!("fse".parse::<UpdateMode>().is_err());
        assert_eq!(UpdateMode::from_code(3), None);
    }

    proptest::proptest! {
        #[test]
        fn floor_brackets_value(x in -1.0e9f64..1.0e9) {
            let f = floor_scale(x) as f64;
            proptest::prop_assert!(f <= x && x < f + 1.0);
        }
    }
}
