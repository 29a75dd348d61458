use std::time::{Duration, Instant};

use nalgebra::DVector;

use super::frame::{resample, FrameBuffer, FrameDims};
use super::mask::{median3x3, segment, SegmentationMask};
use super::preproc::PreprocStats;
use crate::error::{Error, Result};
use crate::imageio::{open_sequence, SequenceItem, SequenceSpec};
use crate::tracker::{bootstrap, ProstParams, TrackerState};

/// How raw video frames are fed to the tracker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions {
    /// Working resolution every frame is resampled to.
    pub width: usize,
    pub height: usize,
    /// Convert colour input to luma and track a single channel.
    pub grayscale: bool,
    /// Length of the initialization window over which the running mean and
    /// intensity scale are accumulated before being frozen.
    pub i_init: u64,
    /// Seed for the random initial basis.
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            width: 160,
            height: 120,
            grayscale: false,
            i_init: 1,
            seed: 0,
        }
    }
}

/// Output of one processed frame, at working resolution.
#[derive(Clone, Debug)]
pub struct FrameResult {
    /// Thresholded residual before filtering.
    pub raw_mask: SegmentationMask,
    /// After the 3×3 median filter.
    pub mask: SegmentationMask,
    pub residual: DVector<f64>,
    pub step: f64,
    pub fit_cost: f64,
}

/// A tracker wired to preprocessing and segmentation.
#[derive(Clone, Debug)]
pub struct BackgroundSubtractor {
    state: TrackerState,
    params: ProstParams,
    dims: FrameDims,
    i_init: u64,
}

impl BackgroundSubtractor {
    /// Fresh subtractor for frames of working size `dims`.
    pub fn new(dims: FrameDims, params: ProstParams, i_init: u64, seed: u64) -> Result<Self> {
        let state = bootstrap(dims.len(), &params, seed)?.with_channels(dims.channels)?;
        Self::resume(state, params, dims, i_init)
    }

    /// Continues from a saved state.
    pub fn resume(
        state: TrackerState,
        params: ProstParams,
        dims: FrameDims,
        i_init: u64,
    ) -> Result<Self> {
        params.validate()?;
        if state.ambient_dim() != dims.len() || state.channels != dims.channels {
            return Err(Error::Dimension(format!(
                "tracker state covers {} coordinates in {} channel(s), frames are {}×{}×{}",
                state.ambient_dim(),
                state.channels,
                dims.width,
                dims.height,
                dims.channels
            )));
        }
        Ok(BackgroundSubtractor {
            state,
            params,
            dims,
            i_init: i_init.max(1),
        })
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn into_state(self) -> TrackerState {
        self.state
    }

    pub fn params(&self) -> &ProstParams {
        &self.params
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    /// Brings an input frame to the working size and channel count.
    pub fn prepare(&self, frame: &FrameBuffer) -> Result<FrameBuffer> {
        let frame = if self.dims.channels == 1 && frame.channels() == 3 {
            frame.to_grayscale()
        } else {
            frame.clone()
        };
        if frame.channels() != self.dims.channels {
            return Err(Error::Dimension(format!(
                "frame has {} channel(s), tracker expects {}",
                frame.channels(),
                self.dims.channels
            )));
        }
        resample(&frame, self.dims.width, self.dims.height)
    }

    /// Preprocesses, tracks and segments one frame. The state is unchanged
    /// if any step fails.
    pub fn process(&mut self, frame: &FrameBuffer) -> Result<FrameResult> {
        let work = self.prepare(frame)?;
        work.ensure_finite()?;

        let mut stats = self
            .state
            .preproc
            .clone()
            .unwrap_or_else(|| PreprocStats::for_dims(self.dims));
        let x = if stats.is_frozen() {
            stats.apply(&work)?
        } else {
            stats.update(&work)?;
            if stats.frames_seen() >= self.i_init {
                stats.freeze()?;
                stats.apply(&work)?
            } else {
                stats.apply_provisional(&work)?
            }
        };

        let mut state = self.state.clone();
        let outcome = state.process_frame(&x, &self.params)?;
        let raw_mask = segment(&outcome.residual, self.dims, self.params.delta)?;
        let mask = median3x3(&raw_mask);

        state.preproc = Some(stats);
        self.state = state;
        Ok(FrameResult {
            raw_mask,
            mask,
            residual: outcome.residual,
            step: outcome.step,
            fit_cost: outcome.fit.cost,
        })
    }

    /// Current background estimate `U·y` mapped back to intensities.
    pub fn background(&self) -> Result<FrameBuffer> {
        let normalized = self.state.basis.reconstruct(&self.state.y)?;
        let restored = match &self.state.preproc {
            Some(stats) if stats.frames_seen() > 0 => stats.restore(&normalized)?,
            _ => normalized,
        };
        FrameBuffer::from_vector(self.dims, &restored)
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub frames: u64,
    pub elapsed: Duration,
    /// Final tracker state; `None` when the sequence was empty.
    pub state: Option<TrackerState>,
}

impl RunSummary {
    pub fn frames_per_second(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.frames as f64 / secs
        } else {
            0.0
        }
    }
}

/// Streams a sequence through a [`BackgroundSubtractor`], one decoded frame
/// at a time, calling `on_frame` after each.
///
/// The subtractor is created on the first frame (its channel count follows
/// the input unless `opts.grayscale`), or resumed from `resume`.
pub fn run_sequence<F>(
    spec: &SequenceSpec,
    opts: &PipelineOptions,
    params: &ProstParams,
    resume: Option<TrackerState>,
    mut on_frame: F,
) -> Result<RunSummary>
where
    F: FnMut(&SequenceItem, &FrameResult, &BackgroundSubtractor) -> Result<()>,
{
    let reader = open_sequence(spec)?;
    let mut resume = resume;
    let mut subtractor: Option<BackgroundSubtractor> = None;
    let mut frames = 0;
    let start = Instant::now();

    for item in reader {
        let item = item?;
        let index = item.index;
        let sub = match subtractor.as_mut() {
            Some(s) => s,
            None => {
                let channels = if opts.grayscale {
                    1
                } else {
                    item.frame.channels()
                };
                let dims = FrameDims::new(opts.width, opts.height, channels)?;
                let built = match resume.take() {
                    Some(state) => BackgroundSubtractor::resume(state, *params, dims, opts.i_init),
                    None => BackgroundSubtractor::new(dims, *params, opts.i_init, opts.seed),
                };
                subtractor.insert(built.map_err(|e| e.at_frame(index))?)
            }
        };
        let result = sub.process(&item.frame).map_err(|e| e.at_frame(index))?;
        on_frame(&item, &result, sub).map_err(|e| e.at_frame(index))?;
        frames += 1;
    }

    Ok(RunSummary {
        frames,
        elapsed: start.elapsed(),
        state: subtractor.map(BackgroundSubtractor::into_state),
    })
}
