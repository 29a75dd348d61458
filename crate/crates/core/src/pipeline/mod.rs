//! Video-facing background subtraction: frame preprocessing, thresholded
//! segmentation and mask post-processing around the [`tracker`](crate::tracker).

mod frame;
mod mask;
mod preproc;
mod subtractor;

pub use frame::{resample, FrameBuffer, FrameDims};
pub use mask::{foreground_weights_from_mask, median3x3, segment, upsample_mask, SegmentationMask};
pub use preproc::{PreprocStats, STD_FLOOR};
pub use subtractor::{
    run_sequence, BackgroundSubtractor, FrameResult, PipelineOptions, RunSummary,
};
