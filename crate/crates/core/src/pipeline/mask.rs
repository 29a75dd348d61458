use nalgebra::DVector;

use super::frame::FrameDims;
use crate::cost::PixelWeights;
use crate::error::{ensure_len, Error, Result};

/// Binary per-pixel labels, row-major; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationMask {
    width: usize,
    height: usize,
    labels: Vec<bool>,
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize, labels: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty mask {width}×{height}")));
        }
        ensure_len(labels.len(), width * height, "mask labels")?;
        Ok(SegmentationMask {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, foreground: bool) -> Self {
        SegmentationMask {
            width,
            height,
            labels: vec![foreground; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.labels[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }
}

/// Labels a pixel foreground when the largest absolute residual over its
/// channels is at least `delta`.
pub fn segment(residual: &DVector<f64>, dims: FrameDims, delta: f64) -> Result<SegmentationMask> {
    ensure_len(residual.len(), dims.len(), "residual")?;
    let n = dims.pixels();
    let labels = (0..n)
        .map(|i| {
            (0..dims.channels)
                .map(|c| residual[c * n + i].abs())
                .fold(0.0, f64::max)
                >= delta
        })
        .collect();
    SegmentationMask::new(dims.width, dims.height, labels)
}

/// 3×3 majority vote with edge replication at the borders.
pub fn median3x3(mask: &SegmentationMask) -> SegmentationMask {
    let (w, h) = (mask.width, mask.height);
    // Row-wise counts of foreground in each horizontal triple, then summed
    // over three rows.
    let mut row_counts = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let left = mask.get(x.saturating_sub(1), y);
            let right = mask.get((x + 1).min(w - 1), y);
            row_counts[y * w + x] = left as u8 + mask.get(x, y) as u8 + right as u8;
        }
    }
    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let total = row_counts[up * w + x] + row_counts[y * w + x] + row_counts[down * w + x];
            labels.push(total >= 5);
        }
    }
    SegmentationMask {
        width: w,
        height: h,
        labels,
    }
}

/// Expands a per-pixel mask to per-coordinate weights: every channel of a
/// foreground pixel gets `omega`, everything else gets 1.
pub fn foreground_weights_from_mask(
    mask: &SegmentationMask,
    channels: usize,
    omega: f64,
) -> Result<PixelWeights> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    let n = mask.labels.len();
    let values = DVector::from_fn(
        n * channels,
        |i, _| {
            if mask.labels[i % n] {
                omega
            } else {
                1.0
            }
        },
    );
    PixelWeights::from_values(values)
}

/// Nearest-neighbour upsampling (or downsampling) of labels.
pub fn upsample_mask(
    mask: &SegmentationMask,
    out_w: usize,
    out_h: usize,
) -> Result<SegmentationMask> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Dimension(format!(
            "mask target {out_w}×{out_h} is empty"
        )));
    }
    if out_w == mask.width && out_h == mask.height {
        return Ok(mask.clone());
    }
    let index = |o: usize, out: usize, len: usize| -> usize {
        // floor((o + 0.5)·len/out) in integer arithmetic.
        (((2 * o + 1) * len) / (2 * out)).min(len - 1)
    };
    let mut labels = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let sy = index(y, out_h, mask.height);
        for x in 0..out_w {
            labels.push(mask.get(index(x, out_w, mask.width), sy));
        }
    }
    SegmentationMask::new(out_w, out_h, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(w: usize, h: usize, seed: u64) -> SegmentationMask {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SegmentationMask::new(w, h, (0..w * h).map(|_| rng.random_bool(0.5)).collect()).unwrap()
    }

    fn naive_median(mask: &SegmentationMask) -> SegmentationMask {
        let (w, h) = (mask.width() as isize, mask.height() as isize);
        let mut labels = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut window = Vec::new();
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let sx = (x + dx).clamp(0, w - 1) as usize;
                        let sy = (y + dy).clamp(0, h - 1) as usize;
                        window.push(mask.get(sx, sy) as u8);
                    }
                }
                window.sort_unstable();
                labels.push(window[4] == 1);
            }
        }
        SegmentationMask::new(w as usize, h as usize, labels).unwrap()
    }

    #[test]
    fn zero_residual_is_background() {
        let dims = FrameDims::new(4, 3, 3).unwrap();
        let mask = segment(&DVector::zeros(36), dims, 0.35).unwrap();
        assert_eq!(mask.foreground_count(), 0);
    }

    #[test]
    fn single_channel_spike() {
        let dims = FrameDims::new(4, 3, 3).unwrap();
        let mut r = DVector::zeros(36);
        r[2 * 12 + 7] = -0.7;
        let mask = segment(&r, dims, 0.35).unwrap();
        assert_eq!(mask.foreground_count(), 1);
        assert!(mask.labels()[7]);
    }

    #[test]
    fn segment_matches_naive_max_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = FrameDims::new(9, 7, 3).unwrap();
        let r = DVector::from_fn(dims.len(), |_, _| rng.random_range(-1.0..1.0));
        let mask = segment(&r, dims, 0.6).unwrap();
        for i in 0..dims.pixels() {
            let mut peak = 0.0f64;
            for c in 0..3 {
                peak = peak.max(r[c * dims.pixels() + i].abs());
            }
            assert_eq!(mask.labels()[i], peak >= 0.6);
        }
    }

    #[test]
    fn boundary_is_foreground() {
        let dims = FrameDims::new(1, 1, 1).unwrap();
        let mask = segment(&DVector::from_element(1, 0.5), dims, 0.5).unwrap();
        assert!(mask.labels()[0]);
    }

    #[test]
    fn segment_length_mismatch() {
        let dims = FrameDims::new(2, 2, 3).unwrap();
        assert!(segment(&DVector::zeros(4), dims, 0.1).is_err());
    }

    #[test]
    fn median_trivial_cases() {
        let full = SegmentationMask::filled(5, 4, true);
        assert_eq!(median3x3(&full), full);
        let mut labels = vec![false; 25];
        labels[12] = true;
        let speck = SegmentationMask::new(5, 5, labels).unwrap();
        assert_eq!(median3x3(&speck).foreground_count(), 0);
        let mut labels = vec![true; 25];
        labels[12] = false;
        let hole = SegmentationMask::new(5, 5, labels).unwrap();
        assert_eq!(median3x3(&hole).foreground_count(), 25);
    }

    #[test]
    fn median_matches_sorted_window() {
        for seed in 0..20 {
            let mask = random_mask(16, 16, seed);
            assert_eq!(median3x3(&mask), naive_median(&mask));
        }
        assert_eq!(
            median3x3(&random_mask(1, 1, 3)),
            naive_median(&random_mask(1, 1, 3))
        );
        assert_eq!(
            median3x3(&random_mask(1, 7, 4)),
            naive_median(&random_mask(1, 7, 4))
        );
    }

    #[test]
    fn median_stable_on_solid_blocks() {
        let mut labels = vec![false; 12 * 10];
        for y in 2..6 {
            for x in 3..9 {
                labels[y * 12 + x] = true;
            }
        }
        let mask = SegmentationMask::new(12, 10, labels).unwrap();
        let once = median3x3(&mask);
        assert_eq!(median3x3(&once), once);
    }

    #[test]
    fn weights_from_mask() {
        let bg = SegmentationMask::filled(3, 2, false);
        let w = foreground_weights_from_mask(&bg, 3, 0.01).unwrap();
        assert_eq!(w.len(), 18);
        assert!(w.as_slice().iter().all(|v| *v == 1.0));

        let mut labels = vec![false; 6];
        labels[4] = true;
        let one = SegmentationMask::new(3, 2, labels).unwrap();
        let w = foreground_weights_from_mask(&one, 3, 0.01).unwrap();
        let flagged: Vec<usize> = (0..18).filter(|&i| w.as_slice()[i] == 0.01).collect();
        assert_eq!(flagged, vec![4, 10, 16]);
        assert!(foreground_weights_from_mask(&one, 3, 0.0).is_err());
    }

    #[test]
    fn weights_agree_with_tracker_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = FrameDims::new(6, 5, 3).unwrap();
        let r = DVector::from_fn(dims.len(), |_, _| rng.random_range(-0.6..0.6));
        let mask = segment(&r, dims, 0.35).unwrap();
        let from_mask = foreground_weights_from_mask(&mask, 3, 5e-5).unwrap();
        let from_tracker = crate::tracker::refresh_weights(&r, 3, 0.35, 5e-5);
        assert_eq!(from_mask, from_tracker);
    }

    #[test]
    fn upsampling() {
        let mask = random_mask(3, 2, 1);
        assert_eq!(upsample_mask(&mask, 3, 2).unwrap(), mask);

        let single = SegmentationMask::filled(1, 1, true);
        assert_eq!(
            upsample_mask(&single, 5, 4).unwrap(),
            SegmentationMask::filled(5, 4, true)
        );

        let small = SegmentationMask::new(2, 2, vec![true, false, false, true]).unwrap();
        let big = upsample_mask(&small, 4, 4).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(big.get(x, y), small.get(x / 2, y / 2));
            }
        }
        assert!(upsample_mask(&small, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn median_oracle(seed in any::<u64>(), w in 1usize..12, h in 1usize..12) {
            let mask = random_mask(w, h, seed);
            prop_assert_eq!(median3x3(&mask), naive_median(&mask));
        }
    }
}
