//! Masked-cosine scoring of dense descriptors, max-fusion over variants, and
//! batched gallery search.

mod index;
mod report;

pub use index::{GalleryIndex, MatchResult};
pub use report::{format_sig9, score_csv, score_csv_rows, SCORE_CSV_HEADER};

use crate::descriptor::{binarize, DenseDescriptor};
use crate::error::{Error, Result};

/// Restricted norms below this are treated as empty.
pub const NORM_GUARD: f64 = 1e-12;

/// Dot product of f32 slices accumulated in f64 with a fixed lane order, so
/// the result does not depend on who calls it or on thread count.
#[inline]
pub(crate) fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for k in 0..chunks {
        let (x, y) = (&a[k * 8..k * 8 + 8], &b[k * 8..k * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] as f64 * y[l] as f64;
        }
    }
    for i in chunks * 8..a.len() {
        acc[i % 8] += a[i] as f64 * b[i] as f64;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

/// Combines the four sums into a score with the empty-overlap and norm
/// guards.
#[inline]
pub(crate) fn guarded_cosine(numerator: f64, q_restricted_sq: f64, g_restricted_sq: f64, overlap: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let (nq, ng) = (q_restricted_sq.max(0.0).sqrt(), g_restricted_sq.max(0.0).sqrt());
    if nq < NORM_GUARD || ng < NORM_GUARD {
        return 0.0;
    }
    numerator / (nq * ng)
}

/// Masked cosine similarity: the full dot product over the norms of each
/// descriptor restricted to the other's binarized mask. Zero when the masks
/// do not overlap or a restricted norm vanishes.
pub fn match_score(q: &DenseDescriptor, g: &DenseDescriptor) -> Result<f64> {
    q.same_shape(g)?;
    let numerator = dot_f64(q.values(), g.values());
    let (qn, gn) = (q.cell_sq_norms(), g.cell_sq_norms());
    let (mut nq, mut ng, mut overlap) = (0.0f64, 0.0f64, 0usize);
    for cell in 0..q.cells() {
        let (bq, bg) = (binarize(q.mask()[cell]), binarize(g.mask()[cell]));
        if bg {
            nq += qn[cell];
        }
        if bq {
            ng += gn[cell];
        }
        overlap += (bq && bg) as usize;
    }
    Ok(guarded_cosine(numerator, nq, ng, overlap))
}

/// Reference implementation of [`match_score`] with explicit per-cell loops
/// and no precomputed norms. Test oracle only.
pub fn match_score_bruteforce(q: &DenseDescriptor, g: &DenseDescriptor) -> Result<f64> {
    q.same_shape(g)?;
    let (channels, h, w) = q.shape();
    let mut numerator = 0.0f64;
    let mut q_sq = 0.0f64;
    let mut g_sq = 0.0f64;
    let mut overlap = 0usize;
    for i in 0..h {
        for j in 0..w {
            let bq = if binarize(q.mask_at(i, j)) { 1.0 } else { 0.0 };
            let bg = if binarize(g.mask_at(i, j)) { 1.0 } else { 0.0 };
            if bq * bg > 0.0 {
                overlap += 1;
            }
            for c in 0..channels {
                let qv = q.get(c, i, j) as f64;
                let gv = g.get(c, i, j) as f64;
                numerator += qv * gv;
                q_sq += (qv * bg) * (qv * bg);
                g_sq += (gv * bq) * (gv * bq);
            }
        }
    }
    if overlap == 0 || q_sq.sqrt() < NORM_GUARD || g_sq.sqrt() < NORM_GUARD {
        return Ok(0.0);
    }
    Ok(numerator / (q_sq.sqrt() * g_sq.sqrt()))
}

/// Max over variant scores; ties go to the lowest index.
pub fn fuse_scores(scores: &[f64]) -> Result<(f64, usize)> {
    let (&first, rest) = scores
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("cannot fuse an empty score list".into()))?;
    let mut best = (first, 0);
    for (k, &s) in rest.iter().enumerate() {
        if s > best.0 {
            best = (s, k + 1);
        }
    }
    Ok(best)
}

/// Scores every variant pair `(query[k], gallery[k])` and fuses them.
pub fn match_fused(query: &[DenseDescriptor], gallery: &[DenseDescriptor]) -> Result<(f64, usize, Vec<f64>)> {
    if query.len() != gallery.len() {
        return Err(Error::SizeMismatch(format!(
            "{} query variants vs {} gallery variants",
            query.len(),
            gallery.len()
        )));
    }
    let scores = query
        .iter()
        .zip(gallery)
        .map(|(q, g)| match_score(q, g))
        .collect::<Result<Vec<_>>>()?;
    let (fused, best) = fuse_scores(&scores)?;
    Ok((fused, best, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(values: &[f32], mask: &[f32], channels: usize, h: usize, w: usize) -> DenseDescriptor {
        DenseDescriptor::new(channels, h, w, values.to_vec(), mask.to_vec()).unwrap()
    }

    #[test]
    fn hand_example() {
        let q = d(&[1.0, 0.0, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0], 1, 2, 2);
        let g = d(&[2.0, 0.0, 0.0, 3.0], &[1.0, 0.0, 0.0, 1.0], 1, 2, 2);
        assert!((match_score(&q, &g).unwrap() - 1.0).abs() < 1e-12);
        assert!((match_score_bruteforce(&q, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn self_score_is_one() {
        let q = d(&[0.3, -0.2, 0.9, 0.1, 0.5, 0.5, -0.7, 0.2], &[1.0; 4], 2, 2, 2);
        assert!((match_score(&q, &q).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_masks_score_zero() {
        let q = d(&[1.0, 0.0], &[1.0, 0.0], 1, 1, 2);
        let g = d(&[0.0, 1.0], &[0.0, 1.0], 1, 1, 2);
        assert_eq!(match_score(&q, &g).unwrap(), 0.0);
        assert_eq!(match_score_bruteforce(&q, &g).unwrap(), 0.0);
    }

    #[test]
    fn zero_values_hit_norm_guard() {
        let q = d(&[0.0; 4], &[1.0; 4], 1, 2, 2);
        assert_eq!(match_score(&q, &q).unwrap(), 0.0);
        assert_eq!(match_score_bruteforce(&q, &q).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let q = d(&[1.0; 4], &[1.0; 4], 1, 2, 2);
        let g = d(&[1.0; 4], &[1.0; 2], 2, 1, 2);
        assert!(matches!(match_score(&q, &g), Err(Error::SizeMismatch(_))));
        assert!(matches!(match_score_bruteforce(&q, &g), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn fusion_rules() {
        assert_eq!(fuse_scores(&[0.3]).unwrap(), (0.3, 0));
        assert_eq!(fuse_scores(&[0.1, 0.9, 0.9, 0.2]).unwrap(), (0.9, 1));
        assert!(matches!(fuse_scores(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f32> = (0..37).map(|i| (i as f32 * 0.3).sin()).collect();
        let b: Vec<f32> = (0..37).map(|i| (i as f32 * 0.7).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(&x, &y)| x as f64 * y as f64).sum();
        assert!((dot_f64(&a, &b) - naive).abs() < 1e-12);
    }
}
