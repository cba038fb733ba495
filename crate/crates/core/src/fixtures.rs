//! Deterministic synthetic datasets.
//!
//! * `translate`: a textured canvas moving by a fixed integer step per frame.
//! * `flash_disocclusion`: a smooth textured background lit brighter in
//!   every odd frame, with a patterned occluder moving across it. The moved
//!   occluder leaves reference areas no block points to.
//! * `noise`: independent uniform samples.
//! * `constant`: one value everywhere.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{Frame, Sequence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureKind {
    Translate,
    FlashDisocclusion,
    Noise,
    Constant,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 4] = [
        FixtureKind::Translate,
        FixtureKind::FlashDisocclusion,
        FixtureKind::Noise,
        FixtureKind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Translate => "translate",
            FixtureKind::FlashDisocclusion => "flash_disocclusion",
            FixtureKind::Noise => "noise",
            FixtureKind::Constant => "constant",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown fixture kind {s:?} (expected translate, flash_disocclusion, noise or constant)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub bit_depth: u8,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind, seed: u64) -> Self {
        FixtureSpec {
            kind,
            seed,
            width: 128,
            height: 128,
            frames: 4,
            bit_depth: 8,
        }
    }
}

/// Integer lattice hash in `[0, 1)`.
fn lattice(seed: u64, x: i64, y: i64) -> f64 {
    let mut h = seed ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Sum of plane waves of random direction, period and phase.
struct Waves {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl Waves {
    fn new(rng: &mut ChaCha8Rng, count: usize, min_period: f64, max_period: f64, amplitude: f64) -> Self {
        let terms = (0..count)
            .map(|_| {
                let dir = rng.random_range(0.0..PI);
                let period = rng.random_range(min_period..max_period);
                let phase = rng.random_range(0.0..2.0 * PI);
                let k = 2.0 * PI / period;
                (k * dir.cos(), k * dir.sin(), phase, amplitude / count as f64)
            })
            .collect();
        Waves { terms }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin()).sum()
    }
}

fn quantize(v: f64, max: i32) -> i32 {
    (v * max as f64).round().clamp(0.0, max as f64) as i32
}

fn check(spec: &FixtureSpec) -> Result<()> {
    if spec.width == 0 || spec.height == 0 || spec.frames == 0 {
        return Err(Error::InvalidConfig("fixture needs at least one pixel and one frame".into()));
    }
    if spec.bit_depth == 0 || spec.bit_depth > 16 {
        return Err(Error::InvalidConfig(format!("bit depth {}", spec.bit_depth)));
    }
    Ok(())
}

/// Per-frame step of the translate fixture.
pub fn translate_step(seed: u64) -> (i64, i64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472_616E);
    loop {
        let s = (rng.random_range(-4i64..=4), rng.random_range(-4i64..=4));
        if s != (0, 0) {
            return s;
        }
    }
}

fn translate(spec: &FixtureSpec) -> Result<Vec<Frame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let waves = Waves::new(&mut rng, 4, 6.0, 40.0, 0.5);
    let (sx, sy) = translate_step(spec.seed);
    let max = (1i32 << spec.bit_depth) - 1;
    (0..spec.frames)
        .map(|t| {
            let (ox, oy) = (t as i64 * sx, t as i64 * sy);
            Frame::from_fn(spec.width, spec.height, spec.bit_depth, |x, y| {
                let (cx, cy) = (x as i64 + ox, y as i64 + oy);
                let v = 0.5 + 0.6 * waves.at(cx as f64, cy as f64) + 0.2 * (lattice(spec.seed, cx, cy) - 0.5);
                quantize(v, max)
            })
        })
        .collect()
}

/// Geometry of the moving occluder in frame `t`: `(x, y, size)`.
pub fn occluder_position(width: usize, height: usize, t: usize) -> (i64, i64, i64) {
    let size = (width.min(height) / 4).max(2) as i64;
    let x = width as i64 / 4 + 6 * t as i64;
    let y = height as i64 / 4 + 3 * t as i64;
    (x, y, size)
}

fn flash_disocclusion(spec: &FixtureSpec) -> Result<Vec<Frame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let waves = Waves::new(&mut rng, 3, 12.0, 48.0, 0.35);
    let max = (1i32 << spec.bit_depth) - 1;
    let flash = 30.0 / 255.0;
    let noise = 2.0 / 255.0;
    (0..spec.frames)
        .map(|t| {
            let (ox, oy, size) = occluder_position(spec.width, spec.height, t);
            let lit = if t % 2 == 1 { flash } else { 0.0 };
            let frame_seed = spec.seed.wrapping_add(1 + t as u64);
            Frame::from_fn(spec.width, spec.height, spec.bit_depth, |x, y| {
                let (xi, yi) = (x as i64, y as i64);
                let n = noise * (2.0 * lattice(frame_seed, xi, yi) - 1.0);
                let inside = xi >= ox && xi < ox + size && yi >= oy && yi < oy + size;
                let base = if inside {
                    let (u, v) = (xi - ox, yi - oy);
                    let checker = if (u / 4 + v / 4) % 2 == 0 { 1.0 } else { -1.0 };
                    170.0 / 255.0 + checker * 20.0 / 255.0 + (u as f64 / size as f64) * 0.05
                } else {
                    0.4 + waves.at(x as f64, y as f64)
                };
                quantize(base + lit + n, max)
            })
        })
        .collect()
}

fn noise(spec: &FixtureSpec) -> Result<Vec<Frame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max = (1i32 << spec.bit_depth) - 1;
    (0..spec.frames)
        .map(|_| Frame::from_fn(spec.width, spec.height, spec.bit_depth, |_, _| rng.random_range(0..=max)))
        .collect()
}

fn constant(spec: &FixtureSpec) -> Result<Vec<Frame>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max = (1i32 << spec.bit_depth) - 1;
    let value = rng.random_range(0..=max);
    (0..spec.frames)
        .map(|_| Frame::filled(spec.width, spec.height, spec.bit_depth, value))
        .collect()
}

pub fn generate(spec: &FixtureSpec) -> Result<Sequence> {
    check(spec)?;
    let frames = match spec.kind {
        FixtureKind::Translate => translate(spec)?,
        FixtureKind::FlashDisocclusion => flash_disocclusion(spec)?,
        FixtureKind::Noise => noise(spec)?,
        FixtureKind::Constant => constant(spec)?,
    };
    Sequence::new(frames, "time")
}
