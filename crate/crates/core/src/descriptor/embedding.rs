use crate::error::{Error, Result};

const BASE: f64 = 10000.0;

fn encode_axis(pos: f64, channel: usize, half: usize) -> f64 {
    let pair = (channel / 2) as f64;
    let freq = BASE.powf(-2.0 * pair / half as f64);
    if channel.is_multiple_of(2) {
        (pos * freq).sin()
    } else {
        (pos * freq).cos()
    }
}

/// 2D sinusoidal embedding for any even channel count: the first half of the
/// channels encodes the row index and the second half the column index, each
/// alternating sin/cos over geometric frequencies. Channel-major output.
pub fn sinusoidal_embedding(grid_h: usize, grid_w: usize, channels: usize) -> Result<Vec<f32>> {
    if channels == 0 || !channels.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "embedding channels must be even and positive, got {channels}"
        )));
    }
    let half = channels / 2;
    let mut out = Vec::with_capacity(channels * grid_h * grid_w);
    for c in 0..channels {
        for i in 0..grid_h {
            for j in 0..grid_w {
                let v = if c < half {
                    encode_axis(i as f64, c, half)
                } else {
                    encode_axis(j as f64, c - half, half)
                };
                out.push(v as f32);
            }
        }
    }
    Ok(out)
}

/// Standard 2D sinusoidal positional embedding; `channels` must be a
/// multiple of 4 so each axis gets whole sin/cos pairs.
pub fn positional_embedding_2d(grid_h: usize, grid_w: usize, channels: usize) -> Result<Vec<f32>> {
    if channels == 0 || !channels.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "positional embedding needs channels divisible by 4, got {channels}"
        )));
    }
    sinusoidal_embedding(grid_h, grid_w, channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(pe: &[f32], h: usize, w: usize, c: usize, i: usize, j: usize) -> Vec<f32> {
        (0..c).map(|k| pe[(k * h + i) * w + j]).collect()
    }

    #[test]
    fn bounded_and_origin_zero() {
        for (h, w, c) in [(16, 16, 4), (3, 5, 8), (16, 16, 12)] {
            let pe = positional_embedding_2d(h, w, c).unwrap();
            assert!(pe.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert_eq!(pe[0], 0.0);
        }
    }

    #[test]
    fn all_cells_distinct_on_16x16x4() {
        let pe = positional_embedding_2d(16, 16, 4).unwrap();
        let vecs: Vec<Vec<f32>> = (0..256).map(|k| cell(&pe, 16, 16, 4, k / 16, k % 16)).collect();
        let mut min_d = f64::INFINITY;
        for a in 0..256 {
            for b in a + 1..256 {
                let d: f64 = vecs[a]
                    .iter()
                    .zip(&vecs[b])
                    .map(|(x, y)| ((x - y) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_d = min_d.min(d);
            }
        }
        assert!(min_d > 1e-4, "min pairwise distance {min_d}");
    }

    #[test]
    fn row_half_ignores_column() {
        let pe = positional_embedding_2d(16, 16, 8).unwrap();
        let a = cell(&pe, 16, 16, 8, 5, 2);
        let b = cell(&pe, 16, 16, 8, 5, 11);
        assert_eq!(a[..4], b[..4]);
        assert_ne!(a[4..], b[4..]);
    }

    #[test]
    fn rejects_bad_channel_counts() {
        assert!(matches!(
            positional_embedding_2d(4, 4, 6),
            Err(Error::InvalidArgument(_))
        ));
        assert!(positional_embedding_2d(4, 4, 0).is_err());
        assert!(sinusoidal_embedding(4, 4, 6).is_ok());
        assert!(sinusoidal_embedding(4, 4, 5).is_err());
    }
}
