//! Algebraic and geometric properties of scoring, layout, extraction and
//! pose estimation.

mod common;

use densefp::descriptor::{BaselineExtractor, DenseDescriptor};
use densefp::matching::{match_score, match_score_bruteforce};
use densefp::pose::{downsample_half, estimate_pose_baseline, CANONICAL_SIZE};
use densefp::synth::generate_synthetic_fingerprint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{canvas_center, random_descriptor};

const C: usize = 4;
const H: usize = 3;
const W: usize = 5;

fn pair(seed: u64) -> (DenseDescriptor, DenseDescriptor) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (random_descriptor(&mut r, C, H, W), random_descriptor(&mut r, C, H, W))
}

/// Reorders cells by `perm` (new cell `k` is old cell `perm[k]`).
fn permute_cells(d: &DenseDescriptor, perm: &[usize]) -> DenseDescriptor {
    let cells = d.cells();
    let mut values = vec![0.0; d.len()];
    for c in 0..d.channels() {
        for (k, &p) in perm.iter().enumerate() {
            values[c * cells + k] = d.values()[c * cells + p];
        }
    }
    let mask = perm.iter().map(|&p| d.mask()[p]).collect();
    DenseDescriptor::new(d.channels(), d.grid_h(), d.grid_w(), values, mask).unwrap()
}

proptest! {
    #[test]
    fn score_is_symmetric(seed in any::<u64>()) {
        let (a, b) = pair(seed);
        prop_assert_eq!(match_score(&a, &b).unwrap(), match_score(&b, &a).unwrap());
    }

    #[test]
    fn score_is_a_cosine(seed in any::<u64>()) {
        let (a, b) = pair(seed);
        let s = match_score(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&s), "{}", s);
        let oracle = match_score_bruteforce(&a, &b).unwrap();
        prop_assert!((s - oracle).abs() < 1e-9);
    }

    #[test]
    fn positive_scale_invariance(seed in any::<u64>(), k in 0.01f32..100.0) {
        let (a, b) = pair(seed);
        let s = match_score(&a, &b).unwrap();
        prop_assert!((match_score(&a.scaled(k), &b).unwrap() - s).abs() < 1e-6);
        prop_assert!((match_score(&a, &b.scaled(-k)).unwrap() + s).abs() < 1e-6);
    }

    #[test]
    fn shared_cell_permutation_keeps_score(seed in any::<u64>(), perm in Just((0..H * W).collect::<Vec<_>>()).prop_shuffle()) {
        let (a, b) = pair(seed);
        let s = match_score(&a, &b).unwrap();
        let t = match_score(&permute_cells(&a, &perm), &permute_cells(&b, &perm)).unwrap();
        prop_assert!((s - t).abs() < 1e-9);
    }

    #[test]
    fn flattening_order(seed in any::<u64>()) {
        let (a, _) = pair(seed);
        let cm = a.cell_major_values();
        for c in 0..C {
            for i in 0..H {
                for j in 0..W {
                    let cell = i * W + j;
                    prop_assert_eq!(a.values()[c * H * W + cell], a.get(c, i, j));
                    prop_assert_eq!(cm[cell * C + c], a.get(c, i, j));
                    prop_assert_eq!(a.mask()[cell], a.mask_at(i, j));
                }
            }
        }
    }
}

fn extraction_input(seed: u64) -> densefp::GrayImage {
    let print = generate_synthetic_fingerprint(seed, CANONICAL_SIZE).unwrap();
    let aligned = densefp::pose::align_to_canonical(&print.image, &canvas_center(), CANONICAL_SIZE).unwrap();
    downsample_half(&aligned).unwrap()
}

/// Shifting the 256 px input by whole cells (16 px) shifts the local cell
/// features, away from the image border and the foreground edge. The
/// position code is switched off: it deliberately ties cells to the grid.
#[test]
fn cell_shift_equivariance() {
    const CELL: isize = 16;
    const MARGIN: usize = 2;
    let local = BaselineExtractor { embedding_weight: 0.0 };
    for seed in 0..4u64 {
        let image = extraction_input(seed);
        let base = local.describe(&image).unwrap();
        for (di, dj) in [(1isize, 0isize), (0, -1), (-1, 1)] {
            let moved = local.describe(&image.shifted(dj * CELL, di * CELL)).unwrap();
            let (h, w) = (base.grid_h(), base.grid_w());
            let mut compared = 0;
            for i in MARGIN..h - MARGIN {
                for j in MARGIN..w - MARGIN {
                    let (si, sj) = (i as isize - di, j as isize - dj);
                    let (si, sj) = (si as usize, sj as usize);
                    let interior = |d: &DenseDescriptor, i: usize, j: usize| {
                        (i.saturating_sub(1)..=(i + 1).min(h - 1))
                            .all(|a| (j.saturating_sub(1)..=(j + 1).min(w - 1)).all(|b| d.mask_at(a, b) >= 0.5))
                    };
                    if !interior(&base, si, sj) {
                        continue;
                    }
                    compared += 1;
                    assert_eq!(moved.mask_at(i, j), base.mask_at(si, sj), "seed {seed} cell ({i},{j})");
                    for c in 0..base.channels() {
                        let (x, y) = (moved.get(c, i, j), base.get(c, si, sj));
                        assert!(
                            (x - y).abs() < 1e-4,
                            "seed {seed} shift ({di},{dj}) c{c} ({i},{j}): {x} vs {y}"
                        );
                    }
                }
            }
            assert!(compared >= 20, "only {compared} interior cells compared");
        }
    }
}

/// Integer translations of a print clear of the border move the baseline
/// centroid by the same amount and keep the orientation.
#[test]
fn baseline_pose_is_translation_equivariant() {
    for seed in 0..4u64 {
        let print = generate_synthetic_fingerprint(seed, CANONICAL_SIZE).unwrap();
        let mut image = print.image.clone();
        image.take_foreground();
        let p = estimate_pose_baseline(&image).unwrap();
        for (dx, dy) in [(7isize, -5isize), (-12, 9), (20, 20)] {
            let q = estimate_pose_baseline(&image.shifted(dx, dy)).unwrap();
            assert!((q.cx() - p.cx() - dx as f64).abs() < 1e-9, "seed {seed}");
            assert!((q.cy() - p.cy() - dy as f64).abs() < 1e-9, "seed {seed}");
            assert!((q.theta() - p.theta()).abs() < 1e-9, "seed {seed}");
        }
    }
}
