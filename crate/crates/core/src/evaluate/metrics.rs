use std::iter::Sum;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::imageio::GroundTruthFrame;
use crate::pipeline::SegmentationMask;

/// Pixel-level confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Adds one scored pixel.
    pub fn record(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    /// Scores `predicted` against `truth`. Outside-ROI and unknown pixels are
    /// skipped; shadow counts as background.
    pub fn accumulate(
        &mut self,
        predicted: &SegmentationMask,
        truth: &GroundTruthFrame,
    ) -> Result<()> {
        if predicted.width() != truth.width() || predicted.height() != truth.height() {
            return Err(Error::Dimension(format!(
                "prediction is {}×{}, ground truth is {}×{}",
                predicted.width(),
                predicted.height(),
                truth.width(),
                truth.height()
            )));
        }
        for (p, t) in predicted.labels().iter().zip(truth.labels()) {
            if let Some(t) = t.truth() {
                self.record(*p, t);
            }
        }
        Ok(())
    }

    pub fn measures(&self) -> MeasureSet {
        measures(self)
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            tn: self.tn + rhs.tn,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

pub fn accumulate(
    counts: ConfusionCounts,
    predicted: &SegmentationMask,
    truth: &GroundTruthFrame,
) -> Result<ConfusionCounts> {
    let mut counts = counts;
    counts.accumulate(predicted, truth)?;
    Ok(counts)
}

/// The seven change-detection measures.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeasureSet {
    pub recall: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    /// Percentage of wrong classifications, in `[0, 100]`.
    pub pwc: f64,
    pub precision: f64,
    pub fmeasure: f64,
}

impl MeasureSet {
    /// Field-wise arithmetic mean; all zeros for an empty slice.
    pub fn mean(sets: &[MeasureSet]) -> MeasureSet {
        if sets.is_empty() {
            return MeasureSet::default();
        }
        let n = sets.len() as f64;
        let sum = |f: fn(&MeasureSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
        MeasureSet {
            recall: sum(|s| s.recall),
            specificity: sum(|s| s.specificity),
            fpr: sum(|s| s.fpr),
            fnr: sum(|s| s.fnr),
            pwc: sum(|s| s.pwc),
            precision: sum(|s| s.precision),
            fmeasure: sum(|s| s.fmeasure),
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.recall,
            self.specificity,
            self.fpr,
            self.fnr,
            self.pwc,
            self.precision,
            self.fmeasure,
        ]
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

/// Derives the seven measures from pooled counts.
///
/// Zero denominators: recall is 1 when there are no positives and nothing was
/// predicted positive, else 0; precision is 1 when nothing was predicted
/// positive and there are no positives, else 0; specificity follows the same
/// rule for negatives. FNR and FPR are the complements of recall and
/// specificity, F-measure is 0 when precision + recall is 0, and PWC is 0 for
/// an empty count.
pub fn measures(c: &ConfusionCounts) -> MeasureSet {
    let vacuous = |ok: bool| if ok { 1.0 } else { 0.0 };
    let recall = if c.tp + c.fn_ > 0 {
        ratio(c.tp, c.tp + c.fn_)
    } else {
        vacuous(c.fp == 0)
    };
    let precision = if c.tp + c.fp > 0 {
        ratio(c.tp, c.tp + c.fp)
    } else {
        vacuous(c.fn_ == 0)
    };
    let specificity = if c.tn + c.fp > 0 {
        ratio(c.tn, c.tn + c.fp)
    } else {
        vacuous(c.fn_ == 0)
    };
    let fpr = if c.tn + c.fp > 0 {
        ratio(c.fp, c.fp + c.tn)
    } else {
        1.0 - specificity
    };
    let fnr = if c.tp + c.fn_ > 0 {
        ratio(c.fn_, c.tp + c.fn_)
    } else {
        1.0 - recall
    };
    let total = c.total();
    let pwc = if total > 0 {
        100.0 * ratio(c.fn_ + c.fp, total)
    } else {
        0.0
    };
    let fmeasure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    MeasureSet {
        recall,
        specificity,
        fpr,
        fnr,
        pwc,
        precision,
        fmeasure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::GtLabel;
    use proptest::prelude::*;

    fn counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, tn, fn_ }
    }

    #[test]
    fn symmetric_case() {
        let m = measures(&counts(1, 1, 1, 1));
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.fmeasure, 0.5);
        assert_eq!(m.pwc, 50.0);
    }

    #[test]
    fn perfect_segmentation() {
        let m = measures(&counts(7, 0, 30, 0));
        assert_eq!(
            (m.recall, m.specificity, m.pwc, m.fmeasure),
            (1.0, 1.0, 0.0, 1.0)
        );
    }

    #[test]
    fn harmonic_mean_of_rounded_table_values() {
        let (p, r): (f64, f64) = (0.805, 0.801);
        let f = 2.0 * p * r / (p + r);
        assert!((f - 0.803).abs() < 5e-4);
    }

    #[test]
    fn sentinels() {
        let empty = measures(&ConfusionCounts::default());
        assert_eq!(
            (empty.recall, empty.precision, empty.fmeasure, empty.pwc),
            (1.0, 1.0, 1.0, 0.0)
        );
        // no positives, some false alarms
        let m = measures(&counts(0, 3, 10, 0));
        assert_eq!((m.recall, m.fnr, m.precision), (0.0, 1.0, 0.0));
        // positives exist, nothing predicted
        let m = measures(&counts(0, 0, 10, 4));
        assert_eq!((m.recall, m.precision, m.fmeasure), (0.0, 0.0, 0.0));
        // all-foreground truth, all predicted
        let m = measures(&counts(5, 0, 0, 0));
        assert_eq!((m.specificity, m.fpr), (1.0, 0.0));
    }

    #[test]
    fn accumulate_skips_unscored_pixels() {
        let pred =
            SegmentationMask::new(3, 2, vec![true, true, false, false, true, false]).unwrap();
        let truth = GroundTruthFrame::new(
            3,
            2,
            vec![
                GtLabel::Foreground,
                GtLabel::Shadow,
                GtLabel::Background,
                GtLabel::Foreground,
                GtLabel::OutsideRoi,
                GtLabel::Unknown,
            ],
        )
        .unwrap();
        let c = accumulate(ConfusionCounts::default(), &pred, &truth).unwrap();
        assert_eq!(c, counts(1, 1, 1, 1));

        let excluded = GroundTruthFrame::new(3, 2, vec![GtLabel::OutsideRoi; 6]).unwrap();
        assert_eq!(accumulate(c, &pred, &excluded).unwrap(), c);

        let wrong = GroundTruthFrame::new(2, 3, vec![GtLabel::Background; 6]).unwrap();
        assert!(accumulate(c, &pred, &wrong).is_err());
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(
            a in (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000),
            b in (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000),
            c in (0u64..1000, 0u64..1000, 0u64..1000, 0u64..1000),
        ) {
            let (a, b, c) = (counts(a.0, a.1, a.2, a.3), counts(b.0, b.1, b.2, b.3), counts(c.0, c.1, c.2, c.3));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a + b, b + a);
        }

        #[test]
        fn complement_identities(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let m = measures(&counts(tp, fp, tn, fn_));
            prop_assert!((m.recall + m.fnr - 1.0).abs() < 1e-12);
            prop_assert!((m.specificity + m.fpr - 1.0).abs() < 1e-12);
            for v in [m.recall, m.specificity, m.fpr, m.fnr, m.precision, m.fmeasure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!((0.0..=100.0).contains(&m.pwc));
        }
    }
}
