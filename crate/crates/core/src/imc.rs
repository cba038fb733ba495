//! Inversion of the block-based compensation.
//!
//! Highpass blocks are moved back to the reference positions they were
//! predicted from. A reference pixel hit by `k` blocks is `k`-connected and
//! its summed contribution is weighted by `1/(k+1)`; pixels hit by no block
//! are unconnected and form the holes of the update field.

use crate::frame::{ConnectivityMap, Frame, MotionField, UpdateField};
use crate::Result;

/// Scatters `highpass` along the inverted motion.
///
/// Returns the raw per-pixel sums and the connectivity counts. Accumulation
/// is sequential in raster block order, so collisions always sum the same way.
pub fn imc_scatter(highpass: &Frame, motion: &MotionField) -> Result<(UpdateField, ConnectivityMap)> {
    let (w, h) = (highpass.width(), highpass.height());
    let rects = motion.check_in_bounds(w, h)?;
    let mut sums = vec![0i64; w * h];
    let mut conn = ConnectivityMap::new(w, h);
    let hp = highpass.samples();

    for (rect, &v) in rects.iter().zip(motion.vectors()) {
        let tx = (rect.x as i64 + v.dx as i64) as usize;
        let ty = (rect.y as i64 + v.dy as i64) as usize;
        for row in 0..rect.height {
            let src = (rect.y + row) * w + rect.x;
            let dst = (ty + row) * w + tx;
            for col in 0..rect.width {
                sums[dst + col] += hp[src + col] as i64;
                conn.counts[dst + col] += 1;
            }
        }
    }

    let values = sums.into_iter().map(|s| s as f64).collect();
    let hole_mask = conn.hole_mask();
    Ok((
        UpdateField {
            width: w,
            height: h,
            values,
            hole_mask,
        },
        conn,
    ))
}

/// Applies `a_k = 1/(k+1)` to the accumulated sums; unconnected pixels are
/// set to zero and flagged as holes.
pub fn apply_connectivity_weights(accum: &UpdateField, conn: &ConnectivityMap) -> UpdateField {
    let values = accum
        .values
        .iter()
        .zip(&conn.counts)
        .map(|(&sum, &k)| if k == 0 { 0.0 } else { sum / (k as f64 + 1.0) })
        .collect();
    UpdateField {
        width: accum.width,
        height: accum.height,
        values,
        hole_mask: conn.hole_mask(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConnectivityStats {
    pub unconnected: usize,
    pub one: usize,
    pub multi: usize,
}

impl ConnectivityStats {
    pub fn total(&self) -> usize {
        self.unconnected + self.one + self.multi
    }
}

pub fn connectivity_stats(conn: &ConnectivityMap) -> ConnectivityStats {
    conn.counts.iter().fold(ConnectivityStats::default(), |mut s, &k| {
        match k {
            0 => s.unconnected += 1,
            1 => s.one += 1,
            _ => s.multi += 1,
        }
        s
    })
}
