//! Built-in lossless frame coder used for rate measurements.
//!
//! Payload layout: `codec_id u8, bit_depth u8, width u32, height u32`
//! (little endian) followed by the codec body. Codec 1 predicts every sample
//! from its left neighbour (the first column from the sample above),
//! zig-zag/LEB128 packs the residuals and deflates them.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::container::ByteReader;
use crate::frame::Frame;
use crate::{Error, Result};

pub const HEADER_LEN: usize = 10;

/// A lossless frame coder identified by a one-byte id.
pub trait LosslessCodec {
    fn id(&self) -> u8;
    /// Codec body only; the common header is added by [`encode_with`].
    fn encode_body(&self, frame: &Frame) -> Result<Vec<u8>>;
    fn decode_body(&self, body: &[u8], width: usize, height: usize, bit_depth: u8) -> Result<Frame>;
}

/// Horizontal prediction residuals behind a deflate stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeflateResidualCodec;

impl DeflateResidualCodec {
    pub const ID: u8 = 1;
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

fn predict(samples: &[i32], width: usize, i: usize) -> i64 {
    if !i.is_multiple_of(width) {
        samples[i - 1] as i64
    } else if i >= width {
        samples[i - width] as i64
    } else {
        0
    }
}

impl LosslessCodec for DeflateResidualCodec {
    fn id(&self) -> u8 {
        Self::ID
    }

    fn encode_body(&self, frame: &Frame) -> Result<Vec<u8>> {
        let s = frame.samples();
        let w = frame.width().max(1);
        let mut packed = Vec::with_capacity(s.len());
        for i in 0..s.len() {
            let mut u = zigzag(s[i] as i64 - predict(s, w, i));
            loop {
                let byte = (u & 0x7F) as u8;
                u >>= 7;
                if u == 0 {
                    packed.push(byte);
                    break;
                }
                packed.push(byte | 0x80);
            }
        }
        let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
        enc.write_all(&packed)?;
        Ok(enc.finish()?)
    }

    fn decode_body(&self, body: &[u8], width: usize, height: usize, bit_depth: u8) -> Result<Frame> {
        let mut packed = Vec::new();
        DeflateDecoder::new(body)
            .read_to_end(&mut packed)
            .map_err(|e| Error::malformed(HEADER_LEN, format!("deflate stream: {e}")))?;
        let n = width * height;
        let mut samples = vec![0i32; n];
        let mut pos = 0usize;
        for i in 0..n {
            let mut u = 0u64;
            let mut shift = 0;
            loop {
                let byte = *packed
                    .get(pos)
                    .ok_or_else(|| Error::malformed(pos, format!("residual stream ends at sample {i}")))?;
                pos += 1;
                if shift >= 64 {
                    return Err(Error::malformed(pos, "residual varint too long"));
                }
                u |= ((byte & 0x7F) as u64) << shift;
                shift += 7;
                if byte & 0x80 == 0 {
                    break;
                }
            }
            let v = unzigzag(u) + predict(&samples, width.max(1), i);
            samples[i] = i32::try_from(v).map_err(|_| Error::malformed(pos, "sample overflows i32"))?;
        }
        if pos != packed.len() {
            return Err(Error::malformed(pos, "trailing residual bytes"));
        }
        Frame::new(width, height, bit_depth, samples)
    }
}

pub fn encode_with(codec: &dyn LosslessCodec, frame: &Frame) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.push(codec.id());
    out.push(frame.bit_depth());
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("dimension {v} exceeds u32")));
    out.extend_from_slice(&dim(frame.width())?.to_le_bytes());
    out.extend_from_slice(&dim(frame.height())?.to_le_bytes());
    out.extend(codec.encode_body(frame)?);
    Ok(out)
}

/// Self-contained payload of `frame` with the default coder.
pub fn encode_lossless(frame: &Frame) -> Result<Vec<u8>> {
    encode_with(&DeflateResidualCodec, frame)
}

fn codec_for(id: u8) -> Option<Box<dyn LosslessCodec>> {
    match id {
        DeflateResidualCodec::ID => Some(Box::new(DeflateResidualCodec)),
        _ => None,
    }
}

pub fn decode_lossless(payload: &[u8]) -> Result<Frame> {
    let mut r = ByteReader::new(payload);
    let id = r.u8()?;
    let codec = codec_for(id).ok_or_else(|| Error::malformed(0, format!("unknown codec id {id}")))?;
    let bit_depth = r.u8()?;
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    codec.decode_body(&payload[HEADER_LEN..], width, height, bit_depth)
}
