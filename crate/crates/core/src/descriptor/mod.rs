//! Fixed-length dense descriptors.
//!
//! A descriptor is a `channels x grid_h x grid_w` tensor stored channel-major
//! plus a soft per-cell foreground mask. Cells whose mask binarizes to 0 hold
//! zero values, so any dot product between two descriptors is already
//! restricted to the overlap of their foregrounds.

mod codec;
mod embedding;
mod extract;
mod loss;

pub use codec::{decode, deserialize, encode, read_descriptor_file, serialize, write_descriptor_file, MAGIC};
pub use embedding::{positional_embedding_2d, sinusoidal_embedding};
pub use extract::{describe_baseline, extract_baseline, BaselineExtractor, CELL, GRID, INPUT_SIZE};
pub use loss::{local_consistency_loss, ConsistencyLoss};

use crate::error::{Error, Result};

/// Per-branch channel count.
pub const DEFAULT_D: usize = 6;

/// Mask values at or above this count as foreground wherever a hard overlap
/// set is needed.
pub const MASK_THRESHOLD: f32 = 0.5;

#[inline]
pub fn binarize(m: f32) -> bool {
    m >= MASK_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Structure,
    Minutiae,
}

/// One branch's `channels x grid_h x grid_w` feature tensor, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchFeatures {
    branch: Branch,
    channels: usize,
    grid_h: usize,
    grid_w: usize,
    values: Vec<f32>,
}

impl BranchFeatures {
    pub fn new(branch: Branch, channels: usize, grid_h: usize, grid_w: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != channels * grid_h * grid_w {
            return Err(Error::SizeMismatch(format!(
                "branch tensor has {} values, expected {channels}x{grid_h}x{grid_w}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("branch features must be finite".into()));
        }
        Ok(BranchFeatures {
            branch,
            channels,
            grid_h,
            grid_w,
            values,
        })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_h, self.grid_w)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f32 {
        self.values[(c * self.grid_h + i) * self.grid_w + j]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseDescriptor {
    channels: usize,
    grid_h: usize,
    grid_w: usize,
    values: Vec<f32>,
    mask: Vec<f32>,
}

impl DenseDescriptor {
    /// Validates shape, finiteness, mask range, and that values vanish on
    /// cells outside the binarized mask.
    pub fn new(channels: usize, grid_h: usize, grid_w: usize, values: Vec<f32>, mask: Vec<f32>) -> Result<Self> {
        let cells = grid_h * grid_w;
        if values.len() != channels * cells || mask.len() != cells {
            return Err(Error::SizeMismatch(format!(
                "descriptor buffers {}+{} do not fit {channels}x{grid_h}x{grid_w}",
                values.len(),
                mask.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("descriptor values must be finite".into()));
        }
        if mask.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidArgument("mask entries must lie in [0, 1]".into()));
        }
        for (cell, &m) in mask.iter().enumerate() {
            if !binarize(m) && (0..channels).any(|c| values[c * cells + cell] != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "cell {cell} is outside the mask but carries nonzero values"
                )));
            }
        }
        Ok(DenseDescriptor {
            channels,
            grid_h,
            grid_w,
            values,
            mask,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    /// Flattened length, `channels * grid_h * grid_w`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.grid_h, self.grid_w)
    }

    /// Channel-major flattened values.
    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn mask(&self) -> &[f32] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f32 {
        self.values[(c * self.grid_h + i) * self.grid_w + j]
    }

    #[inline]
    pub fn mask_at(&self, i: usize, j: usize) -> f32 {
        self.mask[i * self.grid_w + j]
    }

    pub fn binary_mask(&self) -> Vec<bool> {
        self.mask.iter().map(|&m| binarize(m)).collect()
    }

    /// Fraction of cells in the binarized foreground.
    pub fn mask_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| binarize(m)).count() as f64 / self.cells().max(1) as f64
    }

    /// Per-cell squared L2 norm over channels, accumulated in f64.
    pub fn cell_sq_norms(&self) -> Vec<f64> {
        let cells = self.cells();
        let mut out = vec![0.0f64; cells];
        for c in 0..self.channels {
            let plane = &self.values[c * cells..(c + 1) * cells];
            for (o, &v) in out.iter_mut().zip(plane) {
                *o += v as f64 * v as f64;
            }
        }
        out
    }

    /// Cell-major flattening: all channels of cell 0, then cell 1, ...
    pub fn cell_major_values(&self) -> Vec<f32> {
        let cells = self.cells();
        let mut out = Vec::with_capacity(self.values.len());
        for cell in 0..cells {
            for c in 0..self.channels {
                out.push(self.values[c * cells + cell]);
            }
        }
        out
    }

    /// Same descriptor with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> DenseDescriptor {
        let mut d = self.clone();
        d.values.iter_mut().for_each(|v| *v *= factor);
        d
    }

    pub fn same_shape(&self, other: &DenseDescriptor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::SizeMismatch(format!(
                "descriptor shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// Concatenates the two branches along channels and applies the foreground
/// mask cell-wise: values are scaled by the soft mask where it binarizes to
/// foreground and zeroed elsewhere.
pub fn assemble_descriptor(f_s: &BranchFeatures, f_m: &BranchFeatures, mask: &[f32]) -> Result<DenseDescriptor> {
    if f_s.grid() != f_m.grid() {
        return Err(Error::SizeMismatch(format!(
            "branch grids {:?} and {:?} differ",
            f_s.grid(),
            f_m.grid()
        )));
    }
    let (gh, gw) = f_s.grid();
    let cells = gh * gw;
    if mask.len() != cells {
        return Err(Error::SizeMismatch(format!(
            "mask has {} cells, expected {cells}",
            mask.len()
        )));
    }
    if mask.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::InvalidArgument("mask entries must lie in [0, 1]".into()));
    }
    let channels = f_s.channels() + f_m.channels();
    let mut values = Vec::with_capacity(channels * cells);
    for branch in [f_s, f_m] {
        for plane in branch.values().chunks_exact(cells) {
            values.extend(
                plane
                    .iter()
                    .zip(mask)
                    .map(|(&v, &m)| if binarize(m) { v * m } else { 0.0 }),
            );
        }
    }
    DenseDescriptor::new(channels, gh, gw, values, mask.to_vec())
}
