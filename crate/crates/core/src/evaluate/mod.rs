//! Change-detection scoring, ROC sweeps over the threshold, synthetic
//! low-rank-plus-outlier streams and paired comparisons across exponents.

mod compare;
mod metrics;
mod report;
mod roc;
mod synthetic;

pub use compare::{compare_modes, median, mode_medians, run_stream, verdict, ModeRun};
pub use metrics::{accumulate, measures, ConfusionCounts, MeasureSet};
pub use report::{
    format_sig, measures_csv_header, measures_csv_row, Aggregation, CategoryReport, SequenceReport,
};
pub use roc::{evaluate_sequence, roc_sweep, score_frame, RocPoint, SweepMode, SweepOptions};
pub use synthetic::{
    generate_stream, subspace_error, StreamGenerator, SyntheticFrame, SyntheticStream,
    SyntheticStreamSpec,
};
