//! The online loop: per frame, fit coordinates, take one geodesic step on the
//! basis, then relabel pixels to refresh the cost weights for the next frame.

use nalgebra::DVector;

use crate::cost::{eta, LpConfig, PixelWeights};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::fit::{fit_coordinates, CgOptions, FitResult};
use crate::manifold::{geodesic_step, project_rank1, random_orthonormal, SubspaceBasis};
use crate::pipeline::PreprocStats;

/// All tunables of the tracker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProstParams {
    /// Subspace dimension.
    pub k: usize,
    pub lp: LpConfig,
    /// Foreground threshold on the residual.
    pub delta: f64,
    /// Weight given to coordinates labelled foreground in the previous frame.
    pub omega: f64,
    pub t_init: f64,
    pub t_min: f64,
    /// Exponential decay rate of the step size.
    pub tau: f64,
    pub cg: CgOptions,
}

impl ProstParams {
    /// The benchmark configuration: `k = 15`, `ω = 5e-5`, `t_init = 5e-3`,
    /// `t_min = 1e-4`, `δ = 0.35`, `p = 0.25`, `μ = δ²(1 − p)`, five CG
    /// iterations, with `τ` chosen so the step reaches `t_min` after `i_init`
    /// frames.
    pub fn benchmark(i_init: u64) -> Result<Self> {
        let delta = 0.35;
        let p = 0.25;
        let (t_init, t_min) = (5e-3, 1e-4);
        let params = ProstParams {
            k: 15,
            lp: LpConfig::new(p, crate::cost::mu_heuristic(delta, p)?)?,
            delta,
            omega: 5e-5,
            t_init,
            t_min,
            tau: tau_from_init(t_init, t_min, i_init.max(1))?,
            cg: CgOptions::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter(
                "subspace dimension must be ≥ 1".into(),
            ));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in (0, 1], got {}",
                self.omega
            )));
        }
        if !(self.t_min > 0.0 && self.t_min <= self.t_init) || !self.t_init.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step sizes must satisfy 0 < t_min ≤ t_init, got t_min = {}, t_init = {}",
                self.t_min, self.t_init
            )));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tau must be finite and ≥ 0, got {}",
                self.tau
            )));
        }
        self.cg.validate()
    }

    /// Canonical `key=value` rendering; also the input of [`Self::hash`].
    pub fn describe(&self) -> String {
        format!(
            "k={} p={} mu={} delta={} omega={} t_init={} t_min={} tau={} cg_iters={} cg_tol={}",
            self.k,
            self.lp.p(),
            self.lp.mu(),
            self.delta,
            self.omega,
            self.t_init,
            self.t_min,
            self.tau,
            self.cg.max_iters,
            self.cg.grad_tol
        )
    }

    /// FNV-1a hash of [`Self::describe`], stable across builds.
    pub fn hash(&self) -> u64 {
        self.describe()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
                (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
            })
    }

    pub fn step_size(&self, i: u64) -> f64 {
        step_size(i, self)
    }
}

/// `max(e^{−τ i}·t_init, t_min)`.
pub fn step_size(i: u64, params: &ProstParams) -> f64 {
    ((-params.tau * i as f64).exp() * params.t_init).max(params.t_min)
}

/// Decay rate for which the schedule reaches `t_min` at frame `i_init`.
pub fn tau_from_init(t_init: f64, t_min: f64, i_init: u64) -> Result<f64> {
    if !(t_min > 0.0 && t_min <= t_init) || !t_init.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step sizes must satisfy 0 < t_min ≤ t_init, got t_min = {t_min}, t_init = {t_init}"
        )));
    }
    if i_init == 0 {
        return Err(Error::InvalidParameter("i_init must be ≥ 1".into()));
    }
    Ok(-(t_min / t_init).ln() / i_init as f64)
}

/// Everything the tracker carries from one frame to the next.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerState {
    pub basis: SubspaceBasis,
    /// Coordinates fitted to the last frame; warm start for the next one.
    pub y: DVector<f64>,
    pub weights: PixelWeights,
    /// Number of frames processed so far.
    pub frame_index: u64,
    /// Colour channels per pixel in channel-planar layout; weights are
    /// refreshed per pixel across all channels.
    pub channels: usize,
    /// Frozen or accumulating normalization statistics, when the tracker is
    /// fed raw video frames.
    pub preproc: Option<PreprocStats>,
}

/// Per-frame diagnostics from [`TrackerState::process_frame`].
#[derive(Clone, Debug)]
pub struct FrameOutcome {
    /// `x − U'·y` against the updated basis; input to segmentation.
    pub residual: DVector<f64>,
    /// Result of the coordinate fit against the previous basis.
    pub fit: FitResult,
    /// Step size used for the geodesic update.
    pub step: f64,
    /// Geodesic angle `σ₁·t` travelled by the basis.
    pub angle: f64,
}

/// Fresh tracker with a random basis, zero coordinates and unit weights.
pub fn bootstrap(m: usize, params: &ProstParams, seed: u64) -> Result<TrackerState> {
    params.validate()?;
    let basis = random_orthonormal(m, params.k, seed)?;
    Ok(TrackerState {
        basis,
        y: DVector::zeros(params.k),
        weights: PixelWeights::ones(m),
        frame_index: 0,
        channels: 1,
        preproc: None,
    })
}

impl TrackerState {
    pub fn ambient_dim(&self) -> usize {
        self.basis.ambient_dim()
    }

    pub fn with_channels(mut self, channels: usize) -> Result<Self> {
        if channels == 0 || !self.ambient_dim().is_multiple_of(channels) {
            return Err(Error::Dimension(format!(
                "{} coordinates cannot be split into {channels} channels",
                self.ambient_dim()
            )));
        }
        self.channels = channels;
        Ok(self)
    }

    /// Processes one preprocessed frame.
    ///
    /// 1. Fits `y` to `x` under the current weights, warm-started from the
    ///    previous coordinates (or from `Uᵀx` on the first frame).
    /// 2. Takes one geodesic descent step along the projected gradient at the
    ///    fitted residual, with the scheduled step size.
    /// 3. Recomputes the residual against the updated basis and sets each
    ///    pixel's weight to 1 if its largest channel residual is below `δ`,
    ///    `ω` otherwise.
    ///
    /// On error the state is left untouched.
    pub fn process_frame(
        &mut self,
        x: &DVector<f64>,
        params: &ProstParams,
    ) -> Result<FrameOutcome> {
        ensure_len(x.len(), self.ambient_dim(), "frame")?;
        ensure_finite(x.as_slice(), "frame")?;
        ensure_len(self.y.len(), params.k, "coordinates")?;
        if self.basis.dim() != params.k {
            return Err(Error::Dimension(format!(
                "tracker basis has k = {}, parameters ask for k = {}",
                self.basis.dim(),
                params.k
            )));
        }

        let warm_start = if self.frame_index == 0 {
            self.basis.coordinates(x)?
        } else {
            self.y.clone()
        };
        let fit = fit_coordinates(
            &self.basis,
            x,
            &warm_start,
            params.lp,
            &self.weights,
            &params.cg,
        )?;

        let eta = eta(&fit.residual, params.lp, &self.weights)?;
        let direction = project_rank1(&self.basis, &eta, &fit.y)?;
        let step = step_size(self.frame_index, params);
        let basis = geodesic_step(&self.basis, &direction, step, true)?;

        let mut residual = x.clone();
        residual.gemv(-1.0, basis.as_matrix(), &fit.y, 1.0);
        ensure_finite(residual.as_slice(), "residual")?;
        let weights = refresh_weights(&residual, self.channels, params.delta, params.omega);

        self.basis = basis;
        self.y = fit.y.clone();
        self.weights = weights;
        self.frame_index += 1;

        Ok(FrameOutcome {
            residual,
            fit,
            step,
            angle: direction.scale * step,
        })
    }
}

/// Weight rule on a channel-planar residual: every coordinate of a pixel
/// whose largest absolute channel residual reaches `delta` gets `omega`,
/// all others get 1.
pub fn refresh_weights(
    residual: &DVector<f64>,
    channels: usize,
    delta: f64,
    omega: f64,
) -> PixelWeights {
    let pixels = residual.len() / channels;
    let mut values = DVector::from_element(residual.len(), 1.0);
    for i in 0..pixels {
        let peak = (0..channels)
            .map(|c| residual[c * pixels + i].abs())
            .fold(0.0, f64::max);
        if peak >= delta {
            for c in 0..channels {
                values[c * pixels + i] = omega;
            }
        }
    }
    PixelWeights::from_values(values).expect("weights are 1 or omega")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::cost;
    use crate::evaluate::subspace_error;
    use rand::{seq::index::sample, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn params(k: usize, p: f64, mu: f64) -> ProstParams {
        ProstParams {
            k,
            lp: LpConfig::new(p, mu).unwrap(),
            delta: 0.35,
            omega: 5e-5,
            t_init: 1e-2,
            t_min: 1e-4,
            tau: tau_from_init(1e-2, 1e-4, 500).unwrap(),
            cg: CgOptions::default(),
        }
    }

    fn gaussian(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
    }

    #[test]
    fn schedule_origin_and_floor() {
        let mut p = params(3, 0.5, 0.01);
        assert_eq!(step_size(0, &p), p.t_init);
        p.tau = 0.0;
        assert_eq!(step_size(12345, &p), p.t_init);
    }

    #[test]
    fn schedule_reaches_floor_at_i_init() {
        let tau = tau_from_init(5e-3, 1e-4, 1000).unwrap();
        assert!((tau - 50f64.ln() / 1000.0).abs() < 1e-18);
        assert!((tau - 3.912e-3).abs() < 1e-6);
        let mut p = params(3, 0.5, 0.01);
        p.t_init = 5e-3;
        p.tau = tau;
        assert!((step_size(1000, &p) - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn schedule_is_monotone() {
        let p = params(3, 0.5, 0.01);
        let steps: Vec<f64> = (0..2000).map(|i| step_size(i, &p)).collect();
        assert!(steps.windows(2).all(|w| w[1] <= w[0]));
        assert!(steps.iter().all(|s| *s >= p.t_min));
    }

    #[test]
    fn tau_edge_cases() {
        assert_eq!(tau_from_init(1e-3, 1e-3, 10).unwrap(), 0.0);
        assert!(tau_from_init(1e-4, 1e-3, 10).is_err());
        assert!(tau_from_init(1e-3, 1e-4, 0).is_err());
    }

    #[test]
    fn param_validation() {
        let mut p = params(3, 0.5, 0.01);
        assert!(p.validate().is_ok());
        p.omega = 0.0;
        assert!(p.validate().is_err());
        let mut p = params(3, 0.5, 0.01);
        p.t_min = 1.0;
        assert!(p.validate().is_err());
        let mut p = params(3, 0.5, 0.01);
        p.delta = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn benchmark_defaults() {
        let p = ProstParams::benchmark(1000).unwrap();
        assert_eq!(p.k, 15);
        assert_eq!(p.omega, 5e-5);
        assert_eq!(p.lp.p(), 0.25);
        assert!((p.lp.mu() - 0.091875).abs() < 1e-15);
        assert_eq!(p.cg.max_iters, 5);
        assert!((step_size(1000, &p) - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_state() {
        let p = params(4, 0.5, 0.01);
        let a = bootstrap(30, &p, 9).unwrap();
        let b = bootstrap(30, &p, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.weights.as_slice().iter().all(|w| *w == 1.0));
        assert!(a.basis.orthonormality_defect() < 1e-12);
        assert_eq!(a.frame_index, 0);
        assert!(a.y.iter().all(|v| *v == 0.0));
        assert!(bootstrap(4, &p, 0).is_err());
    }

    #[test]
    fn in_span_stream_is_a_fixed_point() {
        // Least squares: the halved Armijo step solves the fit exactly, so an
        // in-span frame leaves a zero residual and no gradient.
        let p = params(3, 2.0, 0.01);
        let mut state = bootstrap(40, &p, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = state.basis.as_matrix() * gaussian(3, &mut rng);
            let before = state.basis.clone();
            let out = state.process_frame(&x, &p).unwrap();
            assert!(out.fit.residual.amax() < 1e-12);
            assert!(subspace_error(&state.basis, &before).unwrap() < 1e-8);
        }
        assert_eq!(state.frame_index, 50);
    }

    #[test]
    fn invariants_along_a_noisy_stream() {
        let p = params(4, 0.5, 0.06);
        let mut state = bootstrap(60, &p, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..200 {
            let x = gaussian(60, &mut rng) * 0.5;
            let out = state.process_frame(&x, &p).unwrap();
            assert!(state.basis.orthonormality_defect() < 1e-8);
            assert!(state
                .weights
                .as_slice()
                .iter()
                .all(|w| *w == 1.0 || *w == p.omega));
            assert_eq!(state.frame_index, i + 1);
            let direct = &x - state.basis.as_matrix() * &state.y;
            assert!((direct - &out.residual).amax() < 1e-12);
        }
    }

    #[test]
    fn taken_direction_is_a_descent_direction() {
        let p = params(3, 0.5, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for seed in 0..20 {
            let mut state = bootstrap(30, &p, seed).unwrap();
            state.frame_index = 1;
            state.y = gaussian(3, &mut rng);
            let x = gaussian(30, &mut rng);
            let fit =
                fit_coordinates(&state.basis, &x, &state.y, p.lp, &state.weights, &p.cg).unwrap();
            let e = eta(&fit.residual, p.lp, &state.weights).unwrap();
            let dir = project_rank1(&state.basis, &e, &fit.y).unwrap();
            let h = 1e-7;
            let moved = geodesic_step(&state.basis, &dir, h, true).unwrap();
            let f0 = cost(
                &(&x - state.basis.as_matrix() * &fit.y),
                p.lp,
                &state.weights,
            )
            .unwrap();
            let f1 = cost(&(&x - moved.as_matrix() * &fit.y), p.lp, &state.weights).unwrap();
            assert!(f1 <= f0, "seed {seed}: {f1} > {f0}");
        }
    }

    #[test]
    fn down_weighting_limits_basis_change() {
        let (m, k) = (80, 3);
        let mut p = params(k, 0.5, 0.06);
        p.t_init = 0.05;
        p.tau = 0.0;
        p.t_min = 0.05;
        let truth = random_orthonormal(m, k, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = truth.as_matrix() * gaussian(k, &mut rng);
        let block: Vec<usize> = (20..36).collect();
        for &i in &block {
            x[i] += 3.0;
        }

        let run = |omega: f64| {
            let mut state = bootstrap(m, &p, 0).unwrap();
            state.basis = truth.clone();
            state.frame_index = 1;
            state.y = truth.coordinates(&x).unwrap();
            let mut w = DVector::from_element(m, 1.0);
            for &i in &block {
                w[i] = omega;
            }
            state.weights = PixelWeights::from_values(w).unwrap();
            let before = state.basis.clone();
            state.process_frame(&x, &p).unwrap();
            subspace_error(&state.basis, &before).unwrap()
        };
        let weighted = run(5e-5);
        let unweighted = run(1.0);
        assert!(weighted < unweighted, "{weighted} vs {unweighted}");
    }

    #[test]
    fn refresh_weights_groups_channels() {
        // 2 pixels × 3 channels, planar: R0 R1 G0 G1 B0 B1
        let r = DVector::from_vec(vec![0.0, 0.1, 0.0, -0.2, 0.5, 0.0]);
        let w = refresh_weights(&r, 3, 0.35, 0.01);
        assert_eq!(w.as_slice(), &[0.01, 1.0, 0.01, 1.0, 0.01, 1.0]);
        let w = refresh_weights(&r, 1, 0.35, 0.01);
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0, 1.0, 0.01, 1.0]);
    }

    #[test]
    fn rejects_bad_frames_without_mutation() {
        let p = params(3, 0.5, 0.01);
        let mut state = bootstrap(20, &p, 2).unwrap();
        let snapshot = state.clone();
        let mut x = DVector::zeros(20);
        x[0] = f64::INFINITY;
        assert!(matches!(
            state.process_frame(&x, &p),
            Err(Error::NonFinite { .. })
        ));
        assert!(state.process_frame(&DVector::zeros(21), &p).is_err());
        assert_eq!(state, snapshot);
    }

    #[test]
    fn recovers_subspace_from_corrupted_stream() {
        let (m, k) = (100, 5);
        let mut p = params(k, 0.5, crate::cost::mu_heuristic(0.35, 0.5).unwrap());
        p.t_init = 0.1;
        p.t_min = 1e-3;
        p.tau = tau_from_init(p.t_init, p.t_min, 500).unwrap();
        let truth = random_orthonormal(m, k, 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let mut state = bootstrap(m, &p, 79).unwrap();
        for _ in 0..2000 {
            let mut x = truth.as_matrix() * gaussian(k, &mut rng);
            for i in sample(&mut rng, m, 10) {
                x[i] += if rand::Rng::random_bool(&mut rng, 0.5) {
                    1.0
                } else {
                    -1.0
                };
            }
            state.process_frame(&x, &p).unwrap();
        }
        let err = subspace_error(&state.basis, &truth).unwrap();
        assert!(err < 0.05, "final sine {err}");
    }
}
