use std::collections::HashSet;

use rayon::prelude::*;

use crate::descriptor::{binarize, DenseDescriptor};
use crate::error::{Error, Result};

use super::{dot_f64, fuse_scores, guarded_cosine};

/// One gallery hit.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub gallery_id: String,
    /// Row in insertion order.
    pub gallery_index: usize,
    pub fused_score: f64,
    pub per_variant_scores: Vec<f64>,
    pub best_variant: usize,
}

/// Per-variant precomputed matrices.
#[derive(Clone, Debug)]
struct VariantBlock {
    /// Values of masked-in cells only, cell-major (one cell's channels are
    /// contiguous), rows concatenated. Cells outside a row's mask are zero
    /// by the descriptor invariant and are not stored.
    values: Vec<f32>,
    /// Start of each row in `values`, plus one final end offset.
    row_start: Vec<usize>,
    /// Per row and mask word: stored cells of that row before the word.
    word_base: Vec<u32>,
    /// `N x G` per-cell squared norms.
    cell_norms: Vec<f32>,
    /// `N x G` binarized masks.
    masks: Vec<u8>,
    /// The same masks packed into `words` u64 per row.
    bits: Vec<u64>,
}

fn pack_bits(mask: impl Iterator<Item = bool>, words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (cell, on) in mask.enumerate() {
        out[cell / 64] |= (on as u64) << (cell % 64);
    }
    out
}

/// Calls `f(cell, rank)` for every set bit of `row & query`, ascending,
/// where `rank` counts the set bits of `row` below `cell`.
#[inline]
fn for_each_common(row: &[u64], base: &[u32], query: &[u64], mut f: impl FnMut(usize, usize)) {
    for (w, ((&x, &y), &b)) in row.iter().zip(query).zip(base).enumerate() {
        let mut m = x & y;
        while m != 0 {
            let bit = m.trailing_zeros();
            let below = (x & ((1u64 << bit) - 1)).count_ones();
            f(w * 64 + bit as usize, (b + below) as usize);
            m &= m - 1;
        }
    }
}

fn words(cells: usize) -> usize {
    cells.div_ceil(64)
}

/// Immutable gallery of `N` subjects with `K` descriptor variants each.
#[derive(Clone, Debug)]
pub struct GalleryIndex {
    shape: Option<(usize, usize, usize)>,
    variants: usize,
    ids: Vec<String>,
    blocks: Vec<VariantBlock>,
}

impl GalleryIndex {
    /// Builds the index from `(id, variants)` entries kept in insertion order.
    /// All descriptors must share one shape and every entry must carry the
    /// same number of variants.
    pub fn enroll<I>(entries: I) -> Result<GalleryIndex>
    where
        I: IntoIterator<Item = (String, Vec<DenseDescriptor>)>,
    {
        let mut index = GalleryIndex {
            shape: None,
            variants: 0,
            ids: Vec::new(),
            blocks: Vec::new(),
        };
        let mut seen = HashSet::new();
        for (id, descs) in entries {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId(id));
            }
            if descs.is_empty() {
                return Err(Error::InvalidArgument(format!("`{id}` has no variants")));
            }
            match index.shape {
                None => {
                    index.shape = Some(descs[0].shape());
                    index.variants = descs.len();
                    index.blocks = vec![
                        VariantBlock {
                            values: Vec::new(),
                            row_start: vec![0],
                            word_base: Vec::new(),
                            cell_norms: Vec::new(),
                            masks: Vec::new(),
                            bits: Vec::new(),
                        };
                        descs.len()
                    ];
                }
                Some(_) if descs.len() != index.variants => {
                    return Err(Error::SizeMismatch(format!(
                        "`{id}` has {} variants, gallery has {}",
                        descs.len(),
                        index.variants
                    )));
                }
                Some(_) => {}
            }
            let shape = index.shape.expect("set above");
            for (block, d) in index.blocks.iter_mut().zip(&descs) {
                if d.shape() != shape {
                    return Err(Error::SizeMismatch(format!(
                        "`{id}` has shape {:?}, gallery has {shape:?}",
                        d.shape()
                    )));
                }
                let bits = pack_bits(d.mask().iter().map(|&m| binarize(m)), words(d.cells()));
                let cm = d.cell_major_values();
                let c = d.channels();
                let mut seen = 0u32;
                for &w in &bits {
                    block.word_base.push(seen);
                    seen += w.count_ones();
                }
                for (cell, &m) in d.mask().iter().enumerate() {
                    if binarize(m) {
                        block.values.extend_from_slice(&cm[cell * c..(cell + 1) * c]);
                    }
                }
                block.row_start.push(block.values.len());
                block.cell_norms.extend(d.cell_sq_norms().into_iter().map(|v| v as f32));
                block.masks.extend(d.mask().iter().map(|&m| u8::from(binarize(m))));
                block.bits.extend(bits);
            }
            index.ids.push(id);
        }
        Ok(index)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn variants(&self) -> usize {
        self.variants
    }

    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        self.shape
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Stored per-cell squared norms of `row` for `variant`.
    pub fn cell_norms(&self, variant: usize, row: usize) -> &[f32] {
        let g = self.cells();
        &self.blocks[variant].cell_norms[row * g..(row + 1) * g]
    }

    /// Stored binarized mask of `row` for `variant`.
    pub fn binary_mask(&self, variant: usize, row: usize) -> &[u8] {
        let g = self.cells();
        &self.blocks[variant].masks[row * g..(row + 1) * g]
    }

    fn cells(&self) -> usize {
        self.shape.map_or(0, |(_, h, w)| h * w)
    }

    fn check_query(&self, query: &[DenseDescriptor]) -> Result<()> {
        let Some(shape) = self.shape else {
            return Ok(());
        };
        if query.len() != self.variants {
            return Err(Error::SizeMismatch(format!(
                "query has {} variants, gallery has {}",
                query.len(),
                self.variants
            )));
        }
        for q in query {
            if q.shape() != shape {
                return Err(Error::SizeMismatch(format!(
                    "query shape {:?} vs gallery {shape:?}",
                    q.shape()
                )));
            }
        }
        Ok(())
    }

    /// Scores of `query` against every row: `out[row][variant]`.
    ///
    /// Each descriptor is zero outside its own mask, so the full dot product
    /// equals the sum over cells in both masks; only those cells are read.
    /// Cells are visited in ascending order, so results do not depend on the
    /// number of threads.
    pub fn score_all(&self, query: &[DenseDescriptor]) -> Result<Vec<Vec<f64>>> {
        self.check_query(query)?;
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let (channels, _, _) = self.shape.expect("non-empty index has a shape");
        let g = self.cells();
        let nw = words(g);
        let mut out = vec![vec![0.0; self.variants]; self.len()];
        for (v, (q, block)) in query.iter().zip(&self.blocks).enumerate() {
            let q_cells = q.cell_sq_norms();
            let q_bits = pack_bits(q.mask().iter().map(|&m| binarize(m)), nw);
            let q_vals = q.cell_major_values();
            out.par_iter_mut().enumerate().for_each(|(row, scores)| {
                let vals = &block.values[block.row_start[row]..block.row_start[row + 1]];
                let bits = &block.bits[row * nw..(row + 1) * nw];
                let base = &block.word_base[row * nw..(row + 1) * nw];
                // Values vanish outside each mask, so both restricted norms
                // only collect from the common cells.
                let (mut numerator, mut q_sq, mut g_sq, mut overlap) = (0.0f64, 0.0f64, 0.0f64, 0usize);
                for_each_common(bits, base, &q_bits, |cell, rank| {
                    let stored = &vals[rank * channels..(rank + 1) * channels];
                    numerator += dot_f64(stored, &q_vals[cell * channels..(cell + 1) * channels]);
                    g_sq += dot_f64(stored, stored);
                    q_sq += q_cells[cell];
                    overlap += 1;
                });
                scores[v] = guarded_cosine(numerator, q_sq, g_sq, overlap);
            });
        }
        Ok(out)
    }

    /// Top `top_k` rows by fused score, ties broken by insertion order.
    pub fn search(&self, query: &[DenseDescriptor], top_k: usize) -> Result<Vec<MatchResult>> {
        if top_k == 0 {
            return Err(Error::InvalidArgument("top_k must be at least 1".into()));
        }
        let all = self.score_all(query)?;
        let mut fused = all
            .iter()
            .enumerate()
            .map(|(row, s)| fuse_scores(s).map(|(f, b)| (row, f, b)))
            .collect::<Result<Vec<_>>>()?;
        let order = |a: &(usize, f64, usize), b: &(usize, f64, usize)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        let k = top_k.min(fused.len());
        if k < fused.len() {
            fused.select_nth_unstable_by(k, order);
            fused.truncate(k);
        }
        fused.sort_by(order);
        Ok(fused
            .into_iter()
            .map(|(row, f, b)| MatchResult {
                gallery_id: self.ids[row].clone(),
                gallery_index: row,
                fused_score: f,
                per_variant_scores: all[row].clone(),
                best_variant: b,
            })
            .collect())
    }
}
