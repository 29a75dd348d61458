//! Robust online subspace tracking for background subtraction.
//!
//! The background of a video is modelled as a low-dimensional subspace that is
//! tracked one frame at a time. Each frame is fitted to the current subspace by
//! minimizing a weighted, smoothed ℓp cost with nonlinear conjugate gradient;
//! the subspace then takes one geodesic gradient step on the Grassmannian, and
//! pixels whose residual exceeds a threshold are labelled foreground and
//! down-weighted for the next frame.
//!
//! Module map:
//!
//! * [`manifold`] orthonormal bases, tangent projection and rank-1 geodesics.
//! * [`cost`] the smoothed ℓp cost and its gradients.
//! * [`fit`] conjugate-gradient coordinate fitting.
//! * [`tracker`] the per-frame online loop and step-size schedule.
//! * [`pipeline`] preprocessing, segmentation and mask post-processing.
//! * [`imageio`] netpbm codecs, frame sequences, ground truth and snapshots.
//! * [`evaluate`] change-detection measures, ROC sweeps and synthetic benchmarks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod evaluate;
pub mod fit;
pub mod imageio;
pub mod manifold;
pub mod pipeline;
pub mod tracker;

pub use cost::{LpConfig, PixelWeights};
pub use error::{Error, ErrorKind, Result};
pub use evaluate::{ConfusionCounts, MeasureSet, SyntheticStreamSpec};
pub use fit::{CgOptions, FitResult, LineSearch};
pub use imageio::{GroundTruthFrame, SequenceSpec};
pub use manifold::{Rank1Direction, SubspaceBasis};
pub use pipeline::{FrameBuffer, PreprocStats, SegmentationMask};
pub use tracker::{ProstParams, TrackerState};
