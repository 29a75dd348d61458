use rayon::prelude::*;

use super::metrics::{ConfusionCounts, MeasureSet};
use crate::cost::{mu_heuristic, LpConfig};
use crate::error::{Error, Result};
use crate::imageio::{GroundTruthFrame, SequenceSpec};
use crate::pipeline::{
    median3x3, run_sequence, segment, upsample_mask, PipelineOptions, RunSummary, SegmentationMask,
};
use crate::tracker::{ProstParams, TrackerState};

/// Scores a working-resolution mask against full-resolution ground truth.
pub fn score_frame(
    counts: &mut ConfusionCounts,
    mask: &SegmentationMask,
    truth: &GroundTruthFrame,
) -> Result<()> {
    let full = upsample_mask(mask, truth.width(), truth.height())?;
    counts.accumulate(&full, truth)
}

/// Tracks the whole sequence and pools counts over frames that carry ground
/// truth.
pub fn evaluate_sequence(
    spec: &SequenceSpec,
    opts: &PipelineOptions,
    params: &ProstParams,
    resume: Option<TrackerState>,
) -> Result<(ConfusionCounts, RunSummary)> {
    if spec.groundtruth_dir.is_none() {
        return Err(Error::InvalidParameter(format!(
            "sequence {} has no ground truth directory",
            spec.name()
        )));
    }
    let mut counts = ConfusionCounts::default();
    let summary = run_sequence(spec, opts, params, resume, |item, result, _| {
        match &item.truth {
            Some(truth) => score_frame(&mut counts, &result.mask, truth),
            None => Ok(()),
        }
    })?;
    Ok((counts, summary))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepMode {
    /// One full tracking pass per threshold.
    #[default]
    Independent,
    /// One pass at the configured threshold; its residuals are re-thresholded
    /// at every other value.
    Replay,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepOptions {
    pub mode: SweepMode,
    /// Recompute `μ` from each threshold (only for `p < 1`).
    pub couple_mu: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub delta: f64,
    pub counts: ConfusionCounts,
    pub measures: MeasureSet,
}

impl RocPoint {
    fn new(delta: f64, counts: ConfusionCounts) -> Self {
        RocPoint {
            delta,
            counts,
            measures: counts.measures(),
        }
    }

    pub fn fpr(&self) -> f64 {
        self.measures.fpr
    }

    pub fn recall(&self) -> f64 {
        self.measures.recall
    }
}

fn params_at(params: &ProstParams, delta: f64, couple_mu: bool) -> Result<ProstParams> {
    let mut p = *params;
    p.delta = delta;
    if couple_mu && params.lp.p() < 1.0 {
        p.lp = LpConfig::new(params.lp.p(), mu_heuristic(delta, params.lp.p())?)?;
    }
    p.validate()?;
    Ok(p)
}

/// ROC points over `deltas`, sorted by threshold.
pub fn roc_sweep(
    spec: &SequenceSpec,
    opts: &PipelineOptions,
    params: &ProstParams,
    deltas: &[f64],
    sweep: &SweepOptions,
) -> Result<Vec<RocPoint>> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one threshold is required".into(),
        ));
    }
    if let Some(bad) = deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "thresholds must be positive, got {bad}"
        )));
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(f64::total_cmp);

    match sweep.mode {
        SweepMode::Independent => sorted
            .par_iter()
            .map(|&delta| {
                let run = params_at(params, delta, sweep.couple_mu)?;
                let (counts, _) = evaluate_sequence(spec, opts, &run, None)?;
                Ok(RocPoint::new(delta, counts))
            })
            .collect(),
        SweepMode::Replay => {
            if spec.groundtruth_dir.is_none() {
                return Err(Error::InvalidParameter(format!(
                    "sequence {} has no ground truth directory",
                    spec.name()
                )));
            }
            let mut counts = vec![ConfusionCounts::default(); sorted.len()];
            run_sequence(spec, opts, params, None, |item, result, sub| {
                let Some(truth) = &item.truth else {
                    return Ok(());
                };
                for (c, &delta) in counts.iter_mut().zip(&sorted) {
                    let mask = median3x3(&segment(&result.residual, sub.dims(), delta)?);
                    score_frame(c, &mask, truth)?;
                }
                Ok(())
            })?;
            Ok(sorted
                .iter()
                .zip(counts)
                .map(|(&d, c)| RocPoint::new(d, c))
                .collect())
        }
    }
}
