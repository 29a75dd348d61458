use nalgebra::DVector;

use super::frame::{FrameBuffer, FrameDims};
use crate::error::{ensure_len, Error, Result};

/// Lower bound applied to the normalization scale.
pub const STD_FLOOR: f64 = 1e-6;

/// Running per-coordinate mean and a single global intensity scale,
/// accumulated over the initialization window and then frozen.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocStats {
    mean: DVector<f64>,
    frames_seen: u64,
    // Pooled statistics over every scalar of every frame seen.
    pooled_count: f64,
    pooled_mean: f64,
    pooled_m2: f64,
    std: f64,
    frozen: bool,
}

impl PreprocStats {
    pub fn new(len: usize) -> Self {
        PreprocStats {
            mean: DVector::zeros(len),
            frames_seen: 0,
            pooled_count: 0.0,
            pooled_mean: 0.0,
            pooled_m2: 0.0,
            std: 1.0,
            frozen: false,
        }
    }

    pub fn for_dims(dims: FrameDims) -> Self {
        Self::new(dims.len())
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Sample standard deviation over all scalars seen so far, floored at
    /// [`STD_FLOOR`]. Once frozen this is the fixed normalization scale.
    pub fn std(&self) -> f64 {
        if self.frozen {
            return self.std;
        }
        if self.pooled_count < 2.0 {
            return STD_FLOOR;
        }
        (self.pooled_m2 / (self.pooled_count - 1.0))
            .sqrt()
            .max(STD_FLOOR)
    }

    /// Folds one more initialization frame into the statistics.
    pub fn update(&mut self, frame: &FrameBuffer) -> Result<()> {
        if self.frozen {
            return Err(Error::State("preprocessing statistics are frozen".into()));
        }
        ensure_len(frame.data().len(), self.mean.len(), "frame")?;
        frame.ensure_finite()?;

        self.frames_seen += 1;
        let inv = 1.0 / self.frames_seen as f64;
        for (m, x) in self.mean.iter_mut().zip(frame.data()) {
            *m += (x - *m) * inv;
        }

        // Two-pass moments of this frame, merged with Chan's update.
        let n_b = frame.data().len() as f64;
        let mean_b = frame.data().iter().sum::<f64>() / n_b;
        let m2_b: f64 = frame.data().iter().map(|x| (x - mean_b).powi(2)).sum();
        let n_a = self.pooled_count;
        let n = n_a + n_b;
        let delta = mean_b - self.pooled_mean;
        self.pooled_mean += delta * n_b / n;
        self.pooled_m2 += m2_b + delta * delta * n_a * n_b / n;
        self.pooled_count = n;
        Ok(())
    }

    /// Ends the initialization window.
    pub fn freeze(&mut self) -> Result<()> {
        if self.frames_seen == 0 {
            return Err(Error::State(
                "cannot freeze preprocessing statistics before any frame".into(),
            ));
        }
        self.std = self.std();
        self.frozen = true;
        Ok(())
    }

    /// `(x − mean) / std` with frozen statistics.
    pub fn apply(&self, frame: &FrameBuffer) -> Result<DVector<f64>> {
        if !self.frozen {
            return Err(Error::State(
                "preprocessing statistics are not frozen yet".into(),
            ));
        }
        self.normalize(frame)
    }

    /// `(x − mean) / std` with the statistics as they currently stand; used
    /// while the initialization window is still open.
    pub fn apply_provisional(&self, frame: &FrameBuffer) -> Result<DVector<f64>> {
        if self.frames_seen == 0 {
            return Err(Error::State("no frames have been accumulated yet".into()));
        }
        self.normalize(frame)
    }

    fn normalize(&self, frame: &FrameBuffer) -> Result<DVector<f64>> {
        ensure_len(frame.data().len(), self.mean.len(), "frame")?;
        let scale = 1.0 / self.std();
        Ok(DVector::from_iterator(
            self.mean.len(),
            frame
                .data()
                .iter()
                .zip(self.mean.iter())
                .map(|(x, m)| (x - m) * scale),
        ))
    }

    /// Inverse map `v·std + mean`.
    pub fn restore(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_len(v.len(), self.mean.len(), "normalized vector")?;
        Ok(v * self.std() + &self.mean)
    }

    /// Raw accumulator values, for snapshot files.
    pub(crate) fn raw_parts(&self) -> (f64, f64, f64, f64) {
        (
            self.pooled_count,
            self.pooled_mean,
            self.pooled_m2,
            self.std,
        )
    }

    pub(crate) fn from_raw_parts(
        mean: DVector<f64>,
        frames_seen: u64,
        (pooled_count, pooled_mean, pooled_m2, std): (f64, f64, f64, f64),
        frozen: bool,
    ) -> Self {
        PreprocStats {
            mean,
            frames_seen,
            pooled_count,
            pooled_mean,
            pooled_m2,
            std,
            frozen,
        }
    }
}
