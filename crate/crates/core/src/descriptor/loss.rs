use crate::error::Result;

use super::{binarize, DenseDescriptor};

/// Mean squared feature distance over the shared foreground cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyLoss {
    pub value: f64,
    pub overlap_cells: usize,
}

impl ConsistencyLoss {
    /// True when the masks share no cell; `value` is then 0.
    pub fn empty_overlap(&self) -> bool {
        self.overlap_cells == 0
    }
}

pub fn local_consistency_loss(a: &DenseDescriptor, b: &DenseDescriptor) -> Result<ConsistencyLoss> {
    a.same_shape(b)?;
    let cells = a.cells();
    let mut total = 0.0f64;
    let mut overlap = 0usize;
    for cell in 0..cells {
        if !(binarize(a.mask()[cell]) && binarize(b.mask()[cell])) {
            continue;
        }
        overlap += 1;
        for c in 0..a.channels() {
            let d = a.values()[c * cells + cell] as f64 - b.values()[c * cells + cell] as f64;
            total += d * d;
        }
    }
    let value = if overlap == 0 { 0.0 } else { total / overlap as f64 };
    Ok(ConsistencyLoss {
        value,
        overlap_cells: overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn desc(values: Vec<f32>, mask: Vec<f32>, channels: usize) -> DenseDescriptor {
        let cells = mask.len();
        DenseDescriptor::new(channels, 1, cells, values, mask).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = desc(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 1.0], 2);
        let l = local_consistency_loss(&a, &a).unwrap();
        assert_eq!(l.value, 0.0);
        assert_eq!(l.overlap_cells, 2);
    }

    #[test]
    fn orthogonal_unit_vectors() {
        // One shared cell holding e1 vs e2.
        let a = desc(vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0], 2);
        let b = desc(vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 1.0], 2);
        let l = local_consistency_loss(&a, &b).unwrap();
        assert_eq!(l.overlap_cells, 1);
        assert_eq!(l.value, 2.0);
    }

    #[test]
    fn disjoint_masks_flagged() {
        let a = desc(vec![1.0, 0.0], vec![1.0, 0.0], 1);
        let b = desc(vec![0.0, 1.0], vec![0.0, 1.0], 1);
        let l = local_consistency_loss(&a, &b).unwrap();
        assert!(l.empty_overlap());
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn symmetric() {
        let a = desc(vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.0], vec![1.0, 0.7, 1.0], 2);
        let b = desc(vec![1.3, 0.0, -2.0, 0.25, 0.0, 0.0], vec![0.9, 0.1, 1.0], 2);
        assert_eq!(
            local_consistency_loss(&a, &b).unwrap(),
            local_consistency_loss(&b, &a).unwrap()
        );
    }

    #[test]
    fn shape_mismatch() {
        let a = desc(vec![1.0, 0.0], vec![1.0, 1.0], 1);
        let b = desc(vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], 1);
        assert!(matches!(local_consistency_loss(&a, &b), Err(Error::SizeMismatch(_))));
    }
}
