use std::f64::consts::PI;

use mclift::container::{decode_container, encode_container};
use mclift::frame::block_grid;
use mclift::fse::{fse_tile_iterate, weight_window, TileSupport};
use mclift::imc::imc_scatter;
use mclift::lifting::{analyze_sequence, synthesize_sequence};
use mclift::metrics::{first_order_entropy, psnr};
use mclift::motion::{estimate_motion, estimate_motion_with_costs, SearchConfig};
use mclift::{Frame, FseParams, LiftConfig, MotionField, MotionVector, Sequence, UpdateMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame_from_seed(seed: u64, w: usize, h: usize, depth: u8, levels: i32) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max = ((1i32 << depth) - 1).min(levels - 1);
    Frame::from_fn(w, h, depth, |_, _| rng.random_range(0..=max)).unwrap()
}

fn shifted(f: &Frame, sx: i64, sy: i64) -> Frame {
    let (w, h) = (f.width() as i64, f.height() as i64);
    Frame::from_fn(f.width(), f.height(), f.bit_depth(), |x, y| {
        f.get((x as i64 + sx).clamp(0, w - 1) as usize, (y as i64 + sy).clamp(0, h - 1) as usize)
    })
    .unwrap()
}

fn small_fse() -> FseParams {
    FseParams {
        tile_size: 4,
        border: 4,
        fft_size: 16,
        max_iterations: 20,
        ..FseParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequences_round_trip_through_the_container(
        w in 4usize..40, h in 4usize..40, frames in 1usize..6,
        depth in prop::sample::select(vec![8u8, 12]),
        mode in prop::sample::select(UpdateMode::ALL.to_vec()),
        bs in 2usize..10, range in 0usize..5, seed in any::<u64>(),
    ) {
        let base = frame_from_seed(seed, w, h, depth, 1 << 16);
        let list = (0..frames).map(|t| shifted(&base, t as i64 % 3, -(t as i64 % 2))).collect();
        let seq = Sequence::new(list, "slice").unwrap();
        let cfg = LiftConfig { block_size: bs, search_range: range, update_mode: mode, fse: small_fse() };
        let bands = analyze_sequence(&seq, &cfg).unwrap();
        prop_assert_eq!(bands.has_trailing(), frames % 2 == 1);
        let decoded = decode_container(&encode_container(&bands).unwrap()).unwrap();
        prop_assert_eq!(&decoded, &bands);
        let back = synthesize_sequence(&decoded, &cfg, "slice").unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn larger_range_never_raises_block_cost(
        w in 4usize..32, h in 4usize..32, bs in 2usize..9, range in 0usize..5, seed in any::<u64>(),
    ) {
        let r = frame_from_seed(seed, w, h, 8, 256);
        let c = shifted(&r, 2, -1);
        let small = SearchConfig { block_size: bs, search_range: range };
        let large = SearchConfig { block_size: bs, search_range: range + 2 };
        let (_, a) = estimate_motion_with_costs(&c, &r, &small).unwrap();
        let (_, b) = estimate_motion_with_costs(&c, &r, &large).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y <= x);
        }
    }

    #[test]
    fn motion_search_ignores_thread_count(w in 8usize..48, h in 8usize..48, seed in any::<u64>()) {
        let r = frame_from_seed(seed, w, h, 12, 4);
        let c = frame_from_seed(seed ^ 1, w, h, 12, 4);
        let cfg = SearchConfig { block_size: 4, search_range: 3 };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| estimate_motion_with_costs(&c, &r, &cfg)).unwrap();
        let b = many.install(|| estimate_motion_with_costs(&c, &r, &cfg)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn identical_frames_give_zero_vectors(w in 1usize..40, h in 1usize..40, bs in 1usize..12, seed in any::<u64>()) {
        let f = frame_from_seed(seed, w, h, 8, 3);
        let field = estimate_motion(&f, &f, &SearchConfig { block_size: bs, search_range: 4 }).unwrap();
        prop_assert!(field.vectors().iter().all(|&v| v == MotionVector::ZERO));
    }

    #[test]
    fn every_vector_stays_in_bounds(w in 1usize..40, h in 1usize..40, bs in 1usize..12, seed in any::<u64>()) {
        let r = frame_from_seed(seed, w, h, 8, 256);
        let c = frame_from_seed(seed.wrapping_add(7), w, h, 8, 256);
        let field = estimate_motion(&c, &r, &SearchConfig { block_size: bs, search_range: 6 }).unwrap();
        prop_assert!(field.check_in_bounds(w, h).is_ok());
        for v in field.vectors() {
            prop_assert!(v.dx.abs() <= 6 && v.dy.abs() <= 6);
        }
    }

    #[test]
    fn scatter_conserves_highpass_mass(w in 1usize..32, h in 1usize..32, bs in 1usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rects = block_grid(w, h, bs);
        let vectors = rects.iter().map(|rect| loop {
            let v = MotionVector::new(rng.random_range(-4..=4), rng.random_range(-4..=4));
            if rect.shifted_inside(v, w, h) { break v; }
        }).collect();
        let field = MotionField::new(bs, w.div_ceil(bs), h.div_ceil(bs), vectors).unwrap();
        let hp = Frame::from_fn(w, h, 8, |_, _| rng.random_range(-255..=255)).unwrap();
        let (acc, conn) = imc_scatter(&hp, &field).unwrap();
        let total: i64 = hp.samples().iter().map(|&v| v as i64).sum();
        prop_assert_eq!(acc.values.iter().sum::<f64>() as i64, total);
        prop_assert_eq!(conn.total(), (w * h) as u64);
        for (i, &k) in conn.counts.iter().enumerate() {
            prop_assert_eq!(k == 0, acc.hole_mask[i]);
        }
    }

    #[test]
    fn entropy_is_bounded_by_bit_depth(w in 1usize..40, h in 1usize..40, depth in prop::sample::select(vec![8u8, 12]), seed in any::<u64>()) {
        let f = frame_from_seed(seed, w, h, depth, 1 << 16);
        let e = first_order_entropy(&f);
        prop_assert!((0.0..=depth as f64).contains(&e));
    }

    #[test]
    fn psnr_is_symmetric(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
        let a = frame_from_seed(seed, w, h, 8, 256);
        let b = frame_from_seed(seed ^ 0xFF, w, h, 8, 256);
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }
}

/// Weighted least squares onto `cos, sin` of one frequency, solved directly
/// in the spatial domain. Returns `(alpha, beta, remaining_energy)`.
fn spatial_pair_fit(s: &TileSupport, n: usize, ky: usize, kx: usize) -> (f64, f64, f64) {
    let (mut cc, mut ss, mut cs, mut bc, mut bs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let theta = |m: usize, col: usize| 2.0 * PI * ((ky * m + kx * col) % n) as f64 / n as f64;
    // Self-mirrored frequencies have no sine component; `sin(pi j)` is not
    // exactly zero in floating point and would fit rounding noise.
    let self_mirror = (2 * ky).is_multiple_of(n) && (2 * kx).is_multiple_of(n);
    let sine = |m: usize, col: usize| if self_mirror { 0.0 } else { theta(m, col).sin() };
    for m in 0..s.height {
        for col in 0..s.width {
            let i = m * s.width + col;
            let w = s.weights[i];
            let (c, sn) = (theta(m, col).cos(), sine(m, col));
            cc += w * c * c;
            ss += w * sn * sn;
            cs += w * c * sn;
            bc += w * c * s.values[i];
            bs += w * sn * s.values[i];
        }
    }
    let det = cc * ss - cs * cs;
    let (alpha, beta) = if self_mirror {
        (bc / cc, 0.0)
    } else {
        ((ss * bc - cs * bs) / det, (cc * bs - cs * bc) / det)
    };
    let mut e = 0.0;
    for m in 0..s.height {
        for col in 0..s.width {
            let i = m * s.width + col;
            let r = s.values[i] - alpha * theta(m, col).cos() - beta * sine(m, col);
            e += s.weights[i] * r * r;
        }
    }
    (alpha, beta, e)
}

#[test]
fn first_iteration_matches_spatial_projection_oracle() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let (sw, sh) = (rng.random_range(3..=n), rng.random_range(3..=n));
        let available: Vec<bool> = (0..sw * sh).map(|_| rng.random_bool(0.75)).collect();
        if !available.contains(&true) {
            continue;
        }
        let values = available.iter().map(|&a| if a { rng.random_range(-50.0..50.0) } else { 0.0 }).collect();
        let weights = weight_window(sw, sh, (sh as f64 / 2.0, sw as f64 / 2.0), &available, 0.8);
        let support = TileSupport { width: sw, height: sh, values, available, weights };

        let mut best: Option<(f64, (usize, usize), f64, f64)> = None;
        for ky in 0..n {
            for kx in 0..n {
                if (ky, kx) > ((n - ky) % n, (n - kx) % n) {
                    continue;
                }
                let (a, b, e) = spatial_pair_fit(&support, n, ky, kx);
                if best.is_none_or(|(be, ..)| e < be) {
                    best = Some((e, (ky, kx), a, b));
                }
            }
        }
        let (oracle_energy, (ky, kx), a, b) = best.unwrap();

        let params = FseParams {
            tile_size: 4,
            border: 2,
            fft_size: n,
            orth_gamma: 1.0,
            max_iterations: 1,
            stop_epsilon: 0.0,
            ..FseParams::default()
        };
        let fit = fse_tile_iterate(&support, &params).unwrap();
        let energy = support.weighted_residual_energy(&fit.model);
        let scale = oracle_energy.max(1.0);
        assert!((energy - oracle_energy).abs() <= 1e-8 * scale, "case {case}: {energy} vs {oracle_energy}");
        if fit.selected == [(ky, kx)] {
            for m in 0..sh {
                for col in 0..sw {
                    let th = 2.0 * PI * ((ky * m + kx * col) % n) as f64 / n as f64;
                    let want = a * th.cos() + b * th.sin();
                    assert!((fit.model.evaluate(m, col) - want).abs() < 1e-7, "case {case} at ({m},{col})");
                }
            }
        }
    }
}

#[test]
fn constant_support_is_one_full_dc_step() {
    // A constant support is captured exactly by one full DC step.
    let (w, h) = (6, 6);
    let available: Vec<bool> = (0..w * h).map(|i| i % 7 != 0).collect();
    let values: Vec<f64> = available.iter().map(|&a| if a { 42.0 } else { 0.0 }).collect();
    let weights = weight_window(w, h, (2.5, 2.5), &available, 0.8);
    let support = TileSupport { width: w, height: h, values, available, weights };
    let params = FseParams {
        tile_size: 2,
        border: 2,
        fft_size: 8,
        orth_gamma: 1.0,
        max_iterations: 1,
        ..FseParams::default()
    };
    let fit = fse_tile_iterate(&support, &params).unwrap();
    assert_eq!(fit.selected, vec![(0, 0)]);
    assert!((fit.model.evaluate(0, 0) - 42.0).abs() < 1e-9);
}
