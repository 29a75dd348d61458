use std::fmt::Write as _;

use super::metrics::{ConfusionCounts, MeasureSet};

/// Formats like C's `%g` with six significant digits.
pub fn format_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Round to six significant digits first so the exponent reflects carries.
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// How a row's measures were formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// From counts summed over every scored pixel.
    Pooled,
    /// Mean of per-sequence measures.
    Averaged,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Pooled => "pooled",
            Aggregation::Averaged => "averaged",
        }
    }
}

pub fn measures_csv_header() -> &'static str {
    "sequence,delta,aggregation,tp,fp,tn,fn,recall,specificity,fpr,fnr,pwc,precision,fmeasure"
}

pub fn measures_csv_row(
    name: &str,
    delta: f64,
    aggregation: Aggregation,
    counts: &ConfusionCounts,
    m: &MeasureSet,
) -> String {
    let mut row = format!(
        "{name},{},{},{},{},{},{}",
        format_sig(delta),
        aggregation.as_str(),
        counts.tp,
        counts.fp,
        counts.tn,
        counts.fn_
    );
    for v in m.as_array() {
        let _ = write!(row, ",{}", format_sig(v));
    }
    row
}

/// Scores for one sequence; measures come from the pooled counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceReport {
    pub name: String,
    pub delta: f64,
    pub counts: ConfusionCounts,
}

impl SequenceReport {
    pub fn measures(&self) -> MeasureSet {
        self.counts.measures()
    }

    pub fn csv_row(&self) -> String {
        measures_csv_row(
            &self.name,
            self.delta,
            Aggregation::Pooled,
            &self.counts,
            &self.measures(),
        )
    }
}

/// Several sequences scored at the same threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryReport {
    pub name: String,
    pub delta: f64,
    pub sequences: Vec<SequenceReport>,
}

impl CategoryReport {
    pub fn total_counts(&self) -> ConfusionCounts {
        self.sequences.iter().map(|s| s.counts).sum()
    }

    pub fn pooled(&self) -> MeasureSet {
        self.total_counts().measures()
    }

    pub fn averaged(&self) -> MeasureSet {
        let per: Vec<MeasureSet> = self
            .sequences
            .iter()
            .map(SequenceReport::measures)
            .collect();
        MeasureSet::mean(&per)
    }

    /// Header, one row per sequence, then the pooled and averaged category rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(measures_csv_header());
        out.push('\n');
        for s in &self.sequences {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        let counts = self.total_counts();
        for (agg, m) in [
            (Aggregation::Pooled, self.pooled()),
            (Aggregation::Averaged, self.averaged()),
        ] {
            out.push_str(&measures_csv_row(&self.name, self.delta, agg, &counts, &m));
            out.push('\n');
        }
        out
    }

    /// Fixed-width table of the same rows.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<24} {:<9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8}\n",
            "sequence", "agg", "recall", "spec", "fpr", "fnr", "pwc", "precision", "fmeasure"
        );
        let mut line = |name: &str, agg: Aggregation, m: &MeasureSet| {
            let _ = writeln!(
                out,
                "{:<24} {:<9} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9.4} {:>8.4}",
                name,
                agg.as_str(),
                m.recall,
                m.specificity,
                m.fpr,
                m.fnr,
                m.pwc,
                m.precision,
                m.fmeasure
            );
        };
        for s in &self.sequences {
            line(&s.name, Aggregation::Pooled, &s.measures());
        }
        line(&self.name, Aggregation::Pooled, &self.pooled());
        line(&self.name, Aggregation::Averaged, &self.averaged());
        out
    }
}
