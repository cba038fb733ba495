//! `MCLF` subband container.
//!
//! ```text
//! "MCLF" | version u8 | bit_depth u8 | width u16 | height u16
//!        | pair_count u16 | update_mode u8
//! per pair: motion field | LP samples | HP samples     (i32 LE, row-major)
//! trailing flag u8 | trailing samples (i32 LE) if flag == 1
//! ```
//!
//! Motion fields use the layout of [`MotionField::to_bytes`]. All integers
//! are little endian.

use std::fs;
use std::path::Path;

use crate::frame::{Frame, MotionField, UpdateMode};
use crate::lifting::{SequenceBands, SubbandPair};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCLF";
pub const VERSION: u8 = 1;

/// Cursor over a byte slice whose errors carry the failing offset.
pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        ByteReader { data, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::malformed(
                self.pos,
                format!("need {n} bytes, {} left", self.data.len() - self.pos),
            ));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(Error::malformed(
                self.pos,
                format!("{} unexpected trailing bytes", self.data.len() - self.pos),
            ))
        }
    }
}

fn write_samples(out: &mut Vec<u8>, frame: &Frame) {
    for &s in frame.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
}

fn read_frame(r: &mut ByteReader<'_>, width: usize, height: usize, bit_depth: u8) -> Result<Frame> {
    let bytes = r.take(width * height * 4)?;
    let samples = bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Frame::new(width, height, bit_depth, samples)
}

pub fn encode_container(bands: &SequenceBands) -> Result<Vec<u8>> {
    let to_u16 = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| Error::InvalidConfig(format!("{what} {v} does not fit the container")))
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(bands.bit_depth);
    out.extend_from_slice(&to_u16(bands.width, "width")?.to_le_bytes());
    out.extend_from_slice(&to_u16(bands.height, "height")?.to_le_bytes());
    out.extend_from_slice(&to_u16(bands.pairs.len(), "pair count")?.to_le_bytes());
    out.push(bands.update_mode.code());
    for p in &bands.pairs {
        p.motion.write_to(&mut out)?;
        write_samples(&mut out, &p.lowpass);
        write_samples(&mut out, &p.highpass);
    }
    match &bands.trailing {
        Some(t) => {
            out.push(1);
            write_samples(&mut out, t);
        }
        None => out.push(0),
    }
    Ok(out)
}

pub fn decode_container(bytes: &[u8]) -> Result<SequenceBands> {
    let mut r = ByteReader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::malformed(0, "missing MCLF magic"));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::malformed(4, format!("unsupported version {version}")));
    }
    let bit_depth = r.u8()?;
    if bit_depth == 0 || bit_depth > crate::frame::MAX_BIT_DEPTH {
        return Err(Error::malformed(5, format!("bit depth {bit_depth}")));
    }
    let width = r.u16()? as usize;
    let height = r.u16()? as usize;
    let pair_count = r.u16()? as usize;
    let mode_at = r.offset();
    let mode_code = r.u8()?;
    let update_mode = UpdateMode::from_code(mode_code)
        .ok_or_else(|| Error::malformed(mode_at, format!("unknown update mode {mode_code}")))?;

    let mut pairs = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let at = r.offset();
        let motion = MotionField::read_from(&mut r)?;
        motion
            .blocks_for(width, height)
            .map_err(|e| Error::malformed(at, e.to_string()))?;
        let lowpass = read_frame(&mut r, width, height, bit_depth)?;
        let highpass = read_frame(&mut r, width, height, bit_depth)?;
        pairs.push(SubbandPair {
            lowpass,
            highpass,
            motion,
            update_mode,
        });
    }
    let flag_at = r.offset();
    let trailing = match r.u8()? {
        0 => None,
        1 => Some(read_frame(&mut r, width, height, bit_depth)?),
        f => return Err(Error::malformed(flag_at, format!("trailing flag {f}"))),
    };
    r.expect_end()?;
    Ok(SequenceBands {
        width,
        height,
        bit_depth,
        update_mode,
        pairs,
        trailing,
    })
}

pub fn write_container(bands: &SequenceBands, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_container(bands)?)?;
    Ok(())
}

pub fn read_container(path: impl AsRef<Path>) -> Result<SequenceBands> {
    decode_container(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::MotionVector;

    fn bands(trailing: bool) -> SequenceBands {
        let lp = Frame::from_fn(5, 3, 8, |x, y| (x + 10 * y) as i32).unwrap();
        let hp = Frame::from_fn(5, 3, 8, |x, y| x as i32 - y as i32 * 7).unwrap();
        let motion = MotionField::new(4, 2, 1, vec![MotionVector::new(1, -1), MotionVector::ZERO]).unwrap();
        SequenceBands {
            width: 5,
            height: 3,
            bit_depth: 8,
            update_mode: UpdateMode::FseFill,
            pairs: vec![SubbandPair {
                lowpass: lp.clone(),
                highpass: hp,
                motion,
                update_mode: UpdateMode::FseFill,
            }],
            trailing: trailing.then_some(lp),
        }
    }

    #[test]
    fn header_bytes() {
        let bytes = encode_container(&bands(false)).unwrap();
        assert_eq!(&bytes[..13], b"MCLF\x01\x08\x05\x00\x03\x00\x01\x00\x02");
        let expected_len = 13 + (6 + 8) + 2 * 15 * 4 + 1;
        assert_eq!(bytes.len(), expected_len);
        assert_eq!(*bytes.last().unwrap(), 0);
    }

    #[test]
    fn round_trip_with_and_without_trailing() {
        for t in [false, true] {
            let b = bands(t);
            assert_eq!(decode_container(&encode_container(&b).unwrap()).unwrap(), b);
        }
    }

    #[test]
    fn corruption_reports_offsets() {
        let bytes = encode_container(&bands(true)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_container(&bad), Err(Error::Malformed { offset: 0, .. })));

        let mut bad = bytes.clone();
        bad[12] = 7;
        assert!(matches!(decode_container(&bad), Err(Error::Malformed { offset: 12, .. })));

        assert!(matches!(
            decode_container(&bytes[..bytes.len() - 3]),
            Err(Error::Malformed { .. })
        ));

        let mut long = bytes.clone();
        long.push(0);
        assert!(decode_container(&long).is_err());

        // Block counts that do not fit the frame size.
        let mut bad = bytes.clone();
        bad[15] = 3;
        assert!(matches!(decode_container(&bad), Err(Error::Malformed { offset: 13, .. })));
    }
}
