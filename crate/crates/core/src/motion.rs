//! Full-search block matching with an SSD cost.

use rayon::prelude::*;

use crate::frame::{block_grid, BlockRect, Frame, MotionField, MotionVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub block_size: usize,
    /// Candidates cover `-search_range..=search_range` on both axes.
    pub search_range: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            block_size: 16,
            search_range: 15,
        }
    }
}

/// Sum of squared differences between a current-frame block and the
/// reference block displaced by `v`.
pub fn block_ssd(
    current: &Frame,
    reference: &Frame,
    origin: (usize, usize),
    dims: (usize, usize),
    v: MotionVector,
) -> Result<u64> {
    current.check_same_shape(reference, "block_ssd")?;
    let rect = BlockRect {
        x: origin.0,
        y: origin.1,
        width: dims.0,
        height: dims.1,
    };
    if rect.x + rect.width > current.width() || rect.y + rect.height > current.height() {
        return Err(Error::DimensionMismatch(format!(
            "block {rect:?} exceeds the current frame"
        )));
    }
    if !rect.shifted_inside(v, reference.width(), reference.height()) {
        return Err(Error::OutOfBounds {
            block: 0,
            dx: v.dx,
            dy: v.dy,
        });
    }
    Ok(ssd_bounded(current, reference, &rect, v, u64::MAX))
}

/// SSD that gives up as soon as the partial sum reaches `bound`; the returned
/// value is then some number `>= bound`.
fn ssd_bounded(current: &Frame, reference: &Frame, rect: &BlockRect, v: MotionVector, bound: u64) -> u64 {
    let w = current.width();
    let cur = current.samples();
    let refs = reference.samples();
    let rx = (rect.x as i64 + v.dx as i64) as usize;
    let ry = (rect.y as i64 + v.dy as i64) as usize;
    let mut acc = 0u64;
    for row in 0..rect.height {
        let c = &cur[(rect.y + row) * w + rect.x..][..rect.width];
        let r = &refs[(ry + row) * w + rx..][..rect.width];
        acc += c
            .iter()
            .zip(r)
            .map(|(&a, &b)| {
                let d = (a - b) as i64;
                (d * d) as u64
            })
            .sum::<u64>();
        if acc >= bound {
            return acc;
        }
    }
    acc
}

/// All window offsets ordered by the tie-break key
/// `(dx^2 + dy^2, dy, dx)`, so the first minimum found is the winner.
fn ordered_candidates(range: i32) -> Vec<MotionVector> {
    let mut out = Vec::with_capacity(((2 * range + 1) * (2 * range + 1)) as usize);
    for dy in -range..=range {
        for dx in -range..=range {
            out.push(MotionVector { dx, dy });
        }
    }
    out.sort_by_key(|v| (v.norm_sq(), v.dy, v.dx));
    out
}

fn check_frames(current: &Frame, reference: &Frame, cfg: &SearchConfig) -> Result<()> {
    current.check_same_shape(reference, "motion search")?;
    if current.bit_depth() != reference.bit_depth() {
        return Err(Error::DimensionMismatch(format!(
            "bit depth {} vs {}",
            current.bit_depth(),
            reference.bit_depth()
        )));
    }
    if current.width() == 0 || current.height() == 0 {
        return Err(Error::DimensionMismatch("frame has no pixels".into()));
    }
    if cfg.block_size == 0 {
        return Err(Error::InvalidConfig("block size must be at least 1".into()));
    }
    if cfg.search_range > i16::MAX as usize {
        return Err(Error::InvalidConfig("search range exceeds i16".into()));
    }
    Ok(())
}

/// Full search returning the motion field together with each block's SSD.
pub fn estimate_motion_with_costs(
    current: &Frame,
    reference: &Frame,
    cfg: &SearchConfig,
) -> Result<(MotionField, Vec<u64>)> {
    check_frames(current, reference, cfg)?;
    let (w, h) = (current.width(), current.height());
    let rects = block_grid(w, h, cfg.block_size);
    let candidates = ordered_candidates(cfg.search_range as i32);

    let results: Vec<(MotionVector, u64)> = rects
        .par_iter()
        .map(|rect| {
            let mut best = (MotionVector::ZERO, u64::MAX);
            for &v in &candidates {
                if !rect.shifted_inside(v, w, h) {
                    continue;
                }
                let cost = ssd_bounded(current, reference, rect, v, best.1);
                if cost < best.1 {
                    best = (v, cost);
                    if cost == 0 {
                        break;
                    }
                }
            }
            best
        })
        .collect();

    let (vectors, costs) = results.into_iter().unzip();
    let field = MotionField::new(
        cfg.block_size,
        w.div_ceil(cfg.block_size),
        h.div_ceil(cfg.block_size),
        vectors,
    )?;
    Ok((field, costs))
}

/// For each block of `current`, the in-bounds displacement into `reference`
/// with minimal SSD. Ties prefer the shorter vector, then smaller `dy`, then
/// smaller `dx`.
pub fn estimate_motion(current: &Frame, reference: &Frame, cfg: &SearchConfig) -> Result<MotionField> {
    estimate_motion_with_costs(current, reference, cfg).map(|(field, _)| field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(w: usize, h: usize, s: &[i32]) -> Frame {
        Frame::new(w, h, 8, s.to_vec()).unwrap()
    }

    #[test]
    fn ssd_examples() {
        let a = frame(2, 2, &[1, 2, 3, 4]);
        let b = frame(2, 2, &[1, 2, 3, 5]);
        assert_eq!(block_ssd(&a, &a, (0, 0), (2, 2), MotionVector::ZERO).unwrap(), 0);
        assert_eq!(block_ssd(&a, &b, (0, 0), (2, 2), MotionVector::ZERO).unwrap(), 1);

        let cur = frame(2, 1, &[10, 0]);
        let reference = frame(2, 1, &[0, 7]);
        assert_eq!(
            block_ssd(&cur, &reference, (0, 0), (1, 1), MotionVector::new(1, 0)).unwrap(),
            9
        );
    }

    #[test]
    fn ssd_rejects_out_of_bounds_shift() {
        let a = frame(2, 2, &[1, 2, 3, 4]);
        assert!(matches!(
            block_ssd(&a, &a, (0, 0), (2, 2), MotionVector::new(1, 0)),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(block_ssd(&a, &a, (1, 1), (1, 1), MotionVector::new(-1, -1)).is_ok());
    }

    #[test]
    fn identical_frames_give_zero_motion() {
        let f = Frame::from_fn(40, 24, 8, |x, y| ((x * 7 + y * 13) % 256) as i32).unwrap();
        let cfg = SearchConfig { block_size: 8, search_range: 4 };
        let (mf, costs) = estimate_motion_with_costs(&f, &f, &cfg).unwrap();
        assert!(mf.vectors().iter().all(|&v| v == MotionVector::ZERO));
        assert!(costs.iter().all(|&c| c == 0));
        assert_eq!((mf.blocks_x(), mf.blocks_y()), (5, 3));
    }

    #[test]
    fn flat_frame_tie_breaks_to_zero() {
        let f = Frame::filled(16, 16, 8, 50).unwrap();
        let mf = estimate_motion(&f, &f, &SearchConfig { block_size: 4, search_range: 3 }).unwrap();
        assert!(mf.vectors().iter().all(|&v| v == MotionVector::ZERO));
    }

    #[test]
    fn candidate_order_follows_tie_break_key() {
        let c = ordered_candidates(1);
        let expect = [(0, 0), (0, -1), (-1, 0), (1, 0), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];
        let got: Vec<_> = c.iter().map(|v| (v.dx, v.dy)).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn rejects_mismatched_or_empty_frames() {
        let a = Frame::filled(4, 4, 8, 0).unwrap();
        let b = Frame::filled(4, 5, 8, 0).unwrap();
        let c = Frame::filled(4, 4, 12, 0).unwrap();
        let e = Frame::filled(0, 4, 8, 0).unwrap();
        let cfg = SearchConfig::default();
        assert!(estimate_motion(&a, &b, &cfg).is_err());
        assert!(estimate_motion(&a, &c, &cfg).is_err());
        assert!(estimate_motion(&e, &e, &cfg).is_err());
    }

    #[test]
    fn oversized_block_is_clipped_and_stays_put() {
        let f = Frame::from_fn(5, 3, 8, |x, y| (x + 5 * y) as i32).unwrap();
        let mf = estimate_motion(&f, &f, &SearchConfig { block_size: 16, search_range: 15 }).unwrap();
        assert_eq!(mf.vectors(), &[MotionVector::ZERO]);
    }
}
