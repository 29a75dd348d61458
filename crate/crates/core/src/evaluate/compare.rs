use rayon::prelude::*;

use super::synthetic::{subspace_error, StreamGenerator, SyntheticStreamSpec};
use crate::cost::LpConfig;
use crate::error::{Error, Result};
use crate::tracker::{bootstrap, ProstParams};

/// One row of a mode comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeRun {
    pub p: f64,
    pub seed: u64,
    pub error: f64,
}

/// Tracks one synthetic stream from a random start and returns the final
/// subspace error.
pub fn run_stream(
    spec: &SyntheticStreamSpec,
    params: &ProstParams,
    tracker_seed: u64,
) -> Result<f64> {
    if params.k != spec.k {
        return Err(Error::Dimension(format!(
            "tracker k = {} does not match stream k = {}",
            params.k, spec.k
        )));
    }
    let mut stream = StreamGenerator::new(*spec)?;
    let mut state = bootstrap(spec.m, params, tracker_seed)?;
    for (i, frame) in stream.by_ref().enumerate() {
        state
            .process_frame(&frame.x, params)
            .map_err(|e| e.at_frame(i as u64))?;
    }
    subspace_error(&state.basis, stream.truth_basis())
}

fn tracker_seed(stream_seed: u64) -> u64 {
    stream_seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(1)
}

/// Runs every `(p, seed)` pair on the stream generated from `seed`. Trackers
/// differ only in `p`; `μ` and everything else is taken from `params`. Rows
/// are ordered by `p`, then by seed.
pub fn compare_modes(
    spec: &SyntheticStreamSpec,
    params: &ProstParams,
    p_values: &[f64],
    seeds: &[u64],
) -> Result<Vec<ModeRun>> {
    spec.validate()?;
    for &p in p_values {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 2], got {p}"
            )));
        }
    }
    let jobs: Vec<(f64, u64)> = p_values
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    jobs.par_iter()
        .map(|&(p, seed)| {
            let mut run_params = *params;
            run_params.lp = LpConfig::new(p, params.lp.mu())?;
            let stream = SyntheticStreamSpec { seed, ..*spec };
            let error = run_stream(&stream, &run_params, tracker_seed(seed))?;
            Ok(ModeRun { p, seed, error })
        })
        .collect()
}

/// Median of a non-empty sample; the mean of the two middle values for even
/// lengths. NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(p, median error)` per distinct `p`, in first-seen order.
pub fn mode_medians(runs: &[ModeRun]) -> Vec<(f64, f64)> {
    let mut ps: Vec<f64> = Vec::new();
    for r in runs {
        if !ps.contains(&r.p) {
            ps.push(r.p);
        }
    }
    ps.into_iter()
        .map(|p| {
            let errors: Vec<f64> = runs.iter().filter(|r| r.p == p).map(|r| r.error).collect();
            (p, median(&errors))
        })
        .collect()
}

/// Human-readable summary: "all modes converge" when every median is below
/// 0.01, otherwise the modes ordered from most to least accurate.
pub fn verdict(runs: &[ModeRun]) -> String {
    let mut medians = mode_medians(runs);
    if medians.is_empty() {
        return "no runs".into();
    }
    if medians.iter().all(|&(_, m)| m < 0.01) {
        return "all modes converge".into();
    }
    medians.sort_by(|a, b| a.1.total_cmp(&b.1));
    let order: Vec<String> = medians
        .iter()
        .map(|(p, m)| format!("p={} ({})", super::format_sig(*p), super::format_sig(*m)))
        .collect();
    format!("median error ordering: {}", order.join(" < "))
}
