//! Frequency Selective Extrapolation of unconnected update pixels.
//!
//! The holes of the weighted update field are covered by aligned tiles. For
//! each tile a support area (the tile plus a border) is approximated by a
//! sparse superposition of 2-D Fourier basis functions defined on an
//! `fft_size x fft_size` grid:
//!
//! ```text
//! g[m, n] = sum_{k in K} c_k * exp(i 2 pi (k_y m + k_x n) / N)
//! ```
//!
//! Every iteration picks the frequency whose fit reduces the weighted
//! residual energy the most, adds `orth_gamma` times its projection to the
//! model and removes it from the residual spectrum. The model is then
//! evaluated on the tile's hole pixels.
//!
//! The model is kept real by treating each frequency together with its
//! conjugate mirror: the selected unit is the real pair `cos, sin` of one
//! frequency and its fit is the exact weighted least-squares projection onto
//! that pair. Selection uses that exact energy reduction instead of the
//! single-bin magnitude `|R_w[k]|^2`; the two agree whenever the weighted
//! cosine and sine are orthogonal. Frequency-dependent weighting of the
//! selection criterion is not applied.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::frame::UpdateField;
use crate::{Error, Result};

/// Tunables of the extrapolation. All of them live here so experiments can
/// sweep them from one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FseParams {
    /// Edge of the aligned tiles that own hole pixels.
    pub tile_size: usize,
    /// Support pixels added on each side of a tile.
    pub border: usize,
    /// Edge of the Fourier grid; a power of two `>= tile_size + 2 * border`.
    pub fft_size: usize,
    /// Spatial weight decay per pixel of distance from the tile center.
    pub decay_rho: f64,
    /// Fraction of each projection added to the model.
    pub orth_gamma: f64,
    pub max_iterations: usize,
    /// Stop once the weighted residual energy falls to this fraction of its
    /// initial value.
    pub stop_epsilon: f64,
}

impl Default for FseParams {
    fn default() -> Self {
        FseParams {
            tile_size: 16,
            border: 16,
            fft_size: 64,
            decay_rho: 0.8,
            orth_gamma: 0.5,
            max_iterations: 1000,
            stop_epsilon: 1e-20,
        }
    }
}

impl FseParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tile_size == 0 {
            return bad("FSE tile size must be at least 1".into());
        }
        if !self.fft_size.is_power_of_two() {
            return bad(format!("FSE size {} is not a power of two", self.fft_size));
        }
        if self.fft_size < self.tile_size + 2 * self.border {
            return bad(format!(
                "FSE size {} smaller than tile {} + 2 x border {}",
                self.fft_size, self.tile_size, self.border
            ));
        }
        if !(self.decay_rho > 0.0 && self.decay_rho < 1.0) {
            return bad(format!("decay {} not in (0, 1)", self.decay_rho));
        }
        if !(self.orth_gamma > 0.0 && self.orth_gamma <= 1.0) {
            return bad(format!("compensation factor {} not in (0, 1]", self.orth_gamma));
        }
        if self.max_iterations == 0 {
            return bad("FSE needs at least one iteration".into());
        }
        if !(self.stop_epsilon >= 0.0 && self.stop_epsilon.is_finite()) {
            return bad(format!("stop threshold {} must be finite and >= 0", self.stop_epsilon));
        }
        Ok(())
    }
}

/// A tile of owned hole pixels and the support area it is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub support_x: usize,
    pub support_y: usize,
    pub support_width: usize,
    pub support_height: usize,
}

impl Tile {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    /// Tile center in support-local coordinates `(row, col)`.
    fn local_center(&self) -> (f64, f64) {
        (
            (self.y - self.support_y) as f64 + (self.height as f64 - 1.0) / 2.0,
            (self.x - self.support_x) as f64 + (self.width as f64 - 1.0) / 2.0,
        )
    }
}

/// The `tile_size`-aligned cells that contain at least one hole pixel, each
/// with its support clamped to the frame. Cells are disjoint, so every hole
/// pixel has exactly one owner.
pub fn plan_tiles(hole_mask: &[bool], width: usize, height: usize, params: &FseParams) -> Vec<Tile> {
    assert_eq!(hole_mask.len(), width * height);
    let ts = params.tile_size.max(1);
    let b = params.border;
    let mut tiles = Vec::new();
    for ty in (0..height).step_by(ts) {
        for tx in (0..width).step_by(ts) {
            let tw = ts.min(width - tx);
            let th = ts.min(height - ty);
            let has_hole = (ty..ty + th).any(|y| hole_mask[y * width + tx..y * width + tx + tw].contains(&true));
            if !has_hole {
                continue;
            }
            let sx = tx.saturating_sub(b);
            let sy = ty.saturating_sub(b);
            let ex = (tx + tw + b).min(width);
            let ey = (ty + th + b).min(height);
            tiles.push(Tile {
                x: tx,
                y: ty,
                width: tw,
                height: th,
                support_x: sx,
                support_y: sy,
                support_width: ex - sx,
                support_height: ey - sy,
            });
        }
    }
    tiles
}

/// Samples of one support area in row-major support-local order.
#[derive(Debug, Clone, PartialEq)]
pub struct TileSupport {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub available: Vec<bool>,
    pub weights: Vec<f64>,
}

impl TileSupport {
    pub fn available_count(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    /// `sum w * (values - model)^2` over the support.
    pub fn weighted_residual_energy(&self, model: &FseModel) -> f64 {
        let mut e = 0.0;
        for m in 0..self.height {
            for n in 0..self.width {
                let i = m * self.width + n;
                if self.weights[i] > 0.0 {
                    let r = self.values[i] - model.evaluate(m, n);
                    e += self.weights[i] * r * r;
                }
            }
        }
        e
    }
}

/// Isotropic weights `rho^distance` from `center` on available pixels and
/// zero elsewhere.
pub fn weight_window(
    width: usize,
    height: usize,
    center: (f64, f64),
    available: &[bool],
    rho: f64,
) -> Vec<f64> {
    let mut w = Vec::with_capacity(width * height);
    for m in 0..height {
        for n in 0..width {
            if available[m * width + n] {
                let d = ((m as f64 - center.0).powi(2) + (n as f64 - center.1).powi(2)).sqrt();
                w.push(rho.powf(d));
            } else {
                w.push(0.0);
            }
        }
    }
    w
}

/// Sparse Fourier model of a support area.
///
/// Terms are stored per canonical frequency `k` (the lexicographically
/// smaller of `k` and `-k`) as the real amplitudes of `cos` and `sin`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FseModel {
    fft_size: usize,
    terms: BTreeMap<(usize, usize), [f64; 2]>,
}

impl FseModel {
    fn new(fft_size: usize) -> Self {
        FseModel {
            fft_size,
            terms: BTreeMap::new(),
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn is_empty(&self) -> bool {
        self.terms.values().all(|t| t[0] == 0.0 && t[1] == 0.0)
    }

    fn mirror(&self, k: (usize, usize)) -> (usize, usize) {
        let n = self.fft_size;
        ((n - k.0) % n, (n - k.1) % n)
    }

    /// Complex amplitude `c_k` of basis `exp(i 2 pi (k_y m + k_x n) / N)`.
    pub fn coefficient(&self, ky: usize, kx: usize) -> Complex64 {
        let k = (ky % self.fft_size, kx % self.fft_size);
        let mk = self.mirror(k);
        if let Some(&[a, b]) = self.terms.get(&k) {
            if mk == k {
                Complex64::new(a, 0.0)
            } else {
                Complex64::new(a, -b) / 2.0
            }
        } else if let Some(&[a, b]) = self.terms.get(&mk) {
            Complex64::new(a, b) / 2.0
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// The frequency set `K` with nonzero coefficients, both members of each
    /// conjugate pair included.
    pub fn basis_set(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (&k, t) in &self.terms {
            if t[0] == 0.0 && t[1] == 0.0 {
                continue;
            }
            out.push(k);
            let mk = self.mirror(k);
            if mk != k {
                out.push(mk);
            }
        }
        out.sort_unstable();
        out
    }

    /// Real model value at support-local `(m, n)`.
    pub fn evaluate(&self, m: usize, n: usize) -> f64 {
        let two_pi_n = 2.0 * PI / self.fft_size as f64;
        self.terms
            .iter()
            .map(|(&(ky, kx), &[a, b])| {
                let phase = ((ky * m + kx * n) % self.fft_size) as f64 * two_pi_n;
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    }

    /// `sum c_k phi_k[m, n]` evaluated in complex arithmetic over the full
    /// frequency set.
    pub fn evaluate_complex(&self, m: usize, n: usize) -> Complex64 {
        let two_pi_n = 2.0 * PI / self.fft_size as f64;
        self.basis_set()
            .into_iter()
            .map(|(ky, kx)| {
                let phase = ((ky * m + kx * n) % self.fft_size) as f64 * two_pi_n;
                self.coefficient(ky, kx) * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    fn add(&mut self, k: (usize, usize), cos_amp: f64, sin_amp: f64) {
        let t = self.terms.entry(k).or_insert([0.0, 0.0]);
        t[0] += cos_amp;
        t[1] += sin_amp;
    }
}

/// Result of fitting one support area.
#[derive(Debug, Clone, PartialEq)]
pub struct TileFit {
    pub model: FseModel,
    pub iterations: usize,
    /// Weighted residual energy before the first and after every iteration.
    pub energy_trace: Vec<f64>,
    /// Canonical frequency chosen in each iteration.
    pub selected: Vec<(usize, usize)>,
}

/// One canonical frequency with the pseudo-inverse of its weighted Gram
/// matrix `[[<c,c>, <c,s>], [<c,s>, <s,s>]]`, stored as `[p00, p01, p11]`.
struct Candidate {
    k: (usize, usize),
    self_mirror: bool,
    pinv: [f64; 3],
}

const RANK_TOLERANCE: f64 = 1e-3;

fn gram_pinv(a: f64, c: f64, d: f64, scale: f64) -> [f64; 3] {
    let half_tr = (a + d) / 2.0;
    let r = (((a - d) / 2.0).powi(2) + c * c).sqrt();
    let l1 = half_tr + r;
    let l2 = half_tr - r;
    if l1 <= 1e-14 * scale {
        return [0.0; 3];
    }
    if l2 > RANK_TOLERANCE * l1 {
        let det = l1 * l2;
        return [d / det, -c / det, a / det];
    }
    // Near rank one: project on the dominant direction only.
    let (ux, uy) = if c.abs() > 1e-300 {
        if a >= d {
            (l1 - d, c)
        } else {
            (c, l1 - a)
        }
    } else if a >= d {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm2 = ux * ux + uy * uy;
    let s = 1.0 / (l1 * norm2);
    [ux * ux * s, ux * uy * s, uy * uy * s]
}

fn fft2(buf: &mut [Complex64], n: usize, planner: &mut FftPlanner<f64>) {
    let fft = planner.plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }
}

/// Greedy sparse Fourier fit of the available pixels of a support area.
pub fn fse_tile_iterate(support: &TileSupport, params: &FseParams) -> Result<TileFit> {
    params.validate()?;
    let (sw, sh) = (support.width, support.height);
    let n = params.fft_size;
    if sw > n || sh > n {
        return Err(Error::InvalidConfig(format!(
            "support {sw}x{sh} exceeds FSE size {n}"
        )));
    }
    if support.values.len() != sw * sh
        || support.available.len() != sw * sh
        || support.weights.len() != sw * sh
    {
        return Err(Error::DimensionMismatch("tile support arrays".into()));
    }
    if !support
        .available
        .iter()
        .zip(&support.weights)
        .any(|(&a, &w)| a && w > 0.0)
    {
        return Err(Error::InvalidConfig("tile support has no available pixel".into()));
    }
    let weights: Vec<f64> = support
        .weights
        .iter()
        .zip(&support.available)
        .map(|(&w, &a)| if a { w } else { 0.0 })
        .collect();

    let mut planner = FftPlanner::new();
    let mut wspec = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rspec = vec![Complex64::new(0.0, 0.0); n * n];
    for m in 0..sh {
        for col in 0..sw {
            let w = weights[m * sw + col];
            wspec[m * n + col] = Complex64::new(w, 0.0);
            rspec[m * n + col] = Complex64::new(w * support.values[m * sw + col], 0.0);
        }
    }
    fft2(&mut wspec, n, &mut planner);
    fft2(&mut rspec, n, &mut planner);
    let w0 = wspec[0].re;

    let mut candidates = Vec::with_capacity(n * n / 2 + 2);
    for ky in 0..n {
        for kx in 0..n {
            let mk = ((n - ky) % n, (n - kx) % n);
            if (ky, kx) > mk {
                continue;
            }
            let self_mirror = mk == (ky, kx);
            let pinv = if self_mirror {
                if w0 > 0.0 {
                    [1.0 / w0, 0.0, 0.0]
                } else {
                    [0.0; 3]
                }
            } else {
                let w2k = wspec[((2 * ky) % n) * n + (2 * kx) % n];
                gram_pinv((w0 + w2k.re) / 2.0, -w2k.im / 2.0, (w0 - w2k.re) / 2.0, w0)
            };
            candidates.push(Candidate {
                k: (ky, kx),
                self_mirror,
                pinv,
            });
        }
    }

    let cos_table: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
    let sin_table: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin()).collect();

    let mut residual: Vec<f64> = support
        .values
        .iter()
        .zip(&weights)
        .map(|(&v, &w)| if w > 0.0 { v } else { 0.0 })
        .collect();
    let energy = |r: &[f64]| -> f64 { r.iter().zip(&weights).map(|(&x, &w)| w * x * x).sum() };

    let e0 = energy(&residual);
    let mut trace = vec![e0];
    let mut model = FseModel::new(n);
    let mut selected = Vec::new();
    if e0.is_nan() || e0 <= 0.0 {
        return Ok(TileFit {
            model,
            iterations: 0,
            energy_trace: trace,
            selected,
        });
    }
    let gamma = params.orth_gamma;
    let floor = params.stop_epsilon * e0;

    for _ in 0..params.max_iterations {
        let mut best: Option<(usize, f64)> = None;
        for (i, cand) in candidates.iter().enumerate() {
            let r = rspec[cand.k.0 * n + cand.k.1];
            let (b0, b1) = (r.re, -r.im);
            let [p00, p01, p11] = cand.pinv;
            let gain = p00 * b0 * b0 + 2.0 * p01 * b0 * b1 + p11 * b1 * b1;
            if gain > best.map_or(0.0, |b| b.1) {
                best = Some((i, gain));
            }
        }
        let Some((idx, gain)) = best else { break };
        if !gain.is_finite() || gain <= 1e-300 {
            break;
        }
        let cand = &candidates[idx];
        let r = rspec[cand.k.0 * n + cand.k.1];
        let (b0, b1) = (r.re, -r.im);
        let [p00, p01, p11] = cand.pinv;
        let alpha = gamma * (p00 * b0 + p01 * b1);
        let beta = if cand.self_mirror { 0.0 } else { gamma * (p01 * b0 + p11 * b1) };
        let (ky, kx) = cand.k;
        model.add(cand.k, alpha, beta);
        selected.push(cand.k);

        // rspec -= c_k W[l - k] + c_{-k} W[l + k]
        if cand.self_mirror {
            let ck = Complex64::new(alpha, 0.0);
            for ly in 0..n {
                let wy = ((ly + n - ky) % n) * n;
                for lx in 0..n {
                    rspec[ly * n + lx] -= ck * wspec[wy + (lx + n - kx) % n];
                }
            }
        } else {
            let ck = Complex64::new(alpha, -beta) / 2.0;
            let cmk = ck.conj();
            for ly in 0..n {
                let wy1 = ((ly + n - ky) % n) * n;
                let wy2 = ((ly + ky) % n) * n;
                for lx in 0..n {
                    rspec[ly * n + lx] -= ck * wspec[wy1 + (lx + n - kx) % n]
                        + cmk * wspec[wy2 + (lx + kx) % n];
                }
            }
        }

        for m in 0..sh {
            for col in 0..sw {
                let i = m * sw + col;
                if weights[i] > 0.0 {
                    let j = (ky * m + kx * col) % n;
                    residual[i] -= alpha * cos_table[j] + beta * sin_table[j];
                }
            }
        }
        let e = energy(&residual);
        trace.push(e);
        if e <= floor {
            break;
        }
    }

    Ok(TileFit {
        model,
        iterations: selected.len(),
        energy_trace: trace,
        selected,
    })
}

/// Per-tile diagnostics of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct TileReport {
    pub tile: Tile,
    pub iterations: usize,
    /// The support had no available pixel; the tile's holes were set to 0.
    pub degenerate: bool,
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FseReport {
    pub tiles: Vec<TileReport>,
}

impl FseReport {
    pub fn degenerate_tiles(&self) -> usize {
        self.tiles.iter().filter(|t| t.degenerate).count()
    }

    pub fn total_iterations(&self) -> usize {
        self.tiles.iter().map(|t| t.iterations).sum()
    }
}

/// Cuts the support of `tile` out of `field`, with weights centered on the
/// tile.
pub fn tile_support(field: &UpdateField, tile: &Tile, params: &FseParams) -> TileSupport {
    let (sw, sh) = (tile.support_width, tile.support_height);
    let mut values = Vec::with_capacity(sw * sh);
    let mut available = Vec::with_capacity(sw * sh);
    for m in 0..sh {
        let row = (tile.support_y + m) * field.width + tile.support_x;
        for col in 0..sw {
            let hole = field.hole_mask[row + col];
            available.push(!hole);
            values.push(if hole { 0.0 } else { field.values[row + col] });
        }
    }
    let weights = weight_window(sw, sh, tile.local_center(), &available, params.decay_rho);
    TileSupport {
        width: sw,
        height: sh,
        values,
        available,
        weights,
    }
}

fn fill_tile(field: &UpdateField, tile: &Tile, params: &FseParams) -> Result<(Vec<(usize, f64)>, TileReport)> {
    let support = tile_support(field, tile, params);
    let holes = (tile.y..tile.y + tile.height)
        .flat_map(|y| (tile.x..tile.x + tile.width).map(move |x| (x, y)))
        .filter(|&(x, y)| field.hole_mask[y * field.width + x]);

    if support.available_count() == 0 {
        let fills = holes.map(|(x, y)| (y * field.width + x, 0.0)).collect();
        return Ok((
            fills,
            TileReport {
                tile: *tile,
                iterations: 0,
                degenerate: true,
                energy_trace: Vec::new(),
            },
        ));
    }
    let fit = fse_tile_iterate(&support, params)?;
    let fills = holes
        .map(|(x, y)| {
            let v = fit.model.evaluate(y - tile.support_y, x - tile.support_x);
            (y * field.width + x, v)
        })
        .collect();
    Ok((
        fills,
        TileReport {
            tile: *tile,
            iterations: fit.iterations,
            degenerate: false,
            energy_trace: fit.energy_trace,
        },
    ))
}

/// Fills the holes of `field` tile by tile in the given tile order.
///
/// Each tile reads only the input field, so the result does not depend on
/// the order of `tiles` or on how many threads process them.
pub fn fse_reconstruct_tiles(
    field: &UpdateField,
    params: &FseParams,
    tiles: &[Tile],
) -> Result<(UpdateField, FseReport)> {
    params.validate()?;
    if field.values.len() != field.width * field.height || field.hole_mask.len() != field.values.len() {
        return Err(Error::DimensionMismatch("update field arrays".into()));
    }
    let results: Vec<_> = tiles
        .par_iter()
        .map(|t| fill_tile(field, t, params))
        .collect::<Result<_>>()?;
    let mut out = field.clone();
    let mut report = FseReport::default();
    for (fills, tile_report) in results {
        for (i, v) in fills {
            out.values[i] = v;
        }
        report.tiles.push(tile_report);
    }
    Ok((out, report))
}

/// Replaces every hole pixel of `field` by the value of its tile's Fourier
/// model. Non-hole pixels pass through untouched.
pub fn fse_reconstruct(field: &UpdateField, params: &FseParams) -> Result<(UpdateField, FseReport)> {
    params.validate()?;
    if field.hole_mask.len() != field.width * field.height {
        return Err(Error::DimensionMismatch("update field arrays".into()));
    }
    let tiles = plan_tiles(&field.hole_mask, field.width, field.height, params);
    fse_reconstruct_tiles(field, params, &tiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> FseParams {
        FseParams {
            tile_size: 8,
            border: 4,
            fft_size: 16,
            ..FseParams::default()
        }
    }

    #[test]
    fn default_params_are_valid() {
        FseParams::default().validate().unwrap();
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = FseParams::default();
        for bad in [
            FseParams { fft_size: 48, ..p.clone() },
            FseParams { fft_size: 32, ..p.clone() },
            FseParams { decay_rho: 1.0, ..p.clone() },
            FseParams { decay_rho: 0.0, ..p.clone() },
            FseParams { orth_gamma: 0.0, ..p.clone() },
            FseParams { orth_gamma: 1.5, ..p.clone() },
            FseParams { max_iterations: 0, ..p.clone() },
            FseParams { tile_size: 0, ..p.clone() },
            FseParams { stop_epsilon: f64::NAN, ..p.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn no_holes_plan_no_tiles() {
        let mask = vec![false; 40 * 40];
        assert!(plan_tiles(&mask, 40, 40, &FseParams::default()).is_empty());
    }

    #[test]
    fn single_hole_owned_by_aligned_tile() {
        let mut mask = vec![false; 64 * 64];
        mask[20 * 64 + 20] = true;
        let tiles = plan_tiles(&mask, 64, 64, &FseParams::default());
        assert_eq!(tiles.len(), 1);
        let t = tiles[0];
        assert_eq!((t.x, t.y, t.width, t.height), (16, 16, 16, 16));
        assert_eq!(
            (t.support_x, t.support_y, t.support_width, t.support_height),
            (0, 0, 48, 48)
        );
    }

    #[test]
    fn hole_across_two_cells_gives_two_owners() {
        let (w, h) = (48, 32);
        let mut mask = vec![false; w * h];
        for x in 12..20 {
            mask[5 * w + x] = true;
        }
        let tiles = plan_tiles(&mask, w, h, &FseParams::default());
        assert_eq!(tiles.len(), 2);
        for x in 12..20 {
            let owners = tiles.iter().filter(|t| t.contains(x, 5)).count();
            assert_eq!(owners, 1);
        }
        // Supports are clipped at the frame edge.
        assert_eq!((tiles[0].support_x, tiles[0].support_width), (0, 32));
        assert_eq!((tiles[1].support_x, tiles[1].support_width), (0, 48));
    }

    #[test]
    fn zero_residual_takes_no_iterations() {
        let (w, h) = (8, 8);
        let mut available = vec![true; w * h];
        available[27] = false;
        let support = TileSupport {
            width: w,
            height: h,
            values: vec![0.0; w * h],
            weights: weight_window(w, h, (3.5, 3.5), &available, 0.8),
            available,
        };
        let fit = fse_tile_iterate(&support, &small_params()).unwrap();
        assert_eq!(fit.iterations, 0);
        assert!(fit.model.is_empty());
        assert_eq!(fit.energy_trace, vec![0.0]);
    }

    #[test]
    fn tile_without_available_pixels_is_an_error() {
        let support = TileSupport {
            width: 2,
            height: 2,
            values: vec![0.0; 4],
            available: vec![false; 4],
            weights: vec![0.0; 4],
        };
        assert!(fse_tile_iterate(&support, &small_params()).is_err());
    }

    #[test]
    fn degenerate_tile_is_zero_filled_and_reported() {
        let field = UpdateField::new(8, 8, vec![0.0; 64], vec![true; 64]).unwrap();
        let (out, report) = fse_reconstruct(&field, &small_params()).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
        assert_eq!(report.degenerate_tiles(), 1);
    }

    #[test]
    fn gram_pinv_inverts_well_conditioned_matrix() {
        let [p00, p01, p11] = gram_pinv(2.0, 0.5, 1.0, 1.0);
        // [[2, .5], [.5, 1]]^-1 = [[1, -.5], [-.5, 2]] / 1.75
        assert!((p00 - 1.0 / 1.75).abs() < 1e-12);
        assert!((p01 + 0.5 / 1.75).abs() < 1e-12);
        assert!((p11 - 2.0 / 1.75).abs() < 1e-12);
    }

    #[test]
    fn gram_pinv_rank_one_matches_outer_product() {
        // [[1, 1], [1, 1]] has pinv [[.25, .25], [.25, .25]].
        let p = gram_pinv(1.0, 1.0, 1.0, 1.0);
        for v in p {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_are_conjugate_symmetric() {
        let mut model = FseModel::new(8);
        model.add((1, 2), 3.0, -1.0);
        model.add((0, 0), 2.0, 0.0);
        let c = model.coefficient(1, 2);
        let cm = model.coefficient(7, 6);
        assert_eq!(c, cm.conj());
        assert_eq!(model.basis_set(), vec![(0, 0), (1, 2), (7, 6)]);
        for (m, n) in [(0, 0), (3, 5), (7, 1)] {
            let z = model.evaluate_complex(m, n);
            assert!((z.re - model.evaluate(m, n)).abs() < 1e-12);
            assert!(z.im.abs() < 1e-12);
        }
    }
}
