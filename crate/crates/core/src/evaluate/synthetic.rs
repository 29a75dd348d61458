use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::manifold::{random_orthonormal, SubspaceBasis};

/// Parameters of a synthetic stream `x = U*·y + s + ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticStreamSpec {
    pub m: usize,
    pub k: usize,
    pub n_frames: usize,
    /// Fraction of coordinates corrupted per frame, in `[0, 1)`.
    pub outlier_fraction: f64,
    /// Outliers are `±outlier_magnitude` with a random sign.
    pub outlier_magnitude: f64,
    /// Standard deviation of the dense Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticStreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k >= self.m {
            return Err(Error::Dimension(format!(
                "synthetic stream needs 1 ≤ k < m, got k = {}, m = {}",
                self.k, self.m
            )));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidParameter(format!(
                "outlier fraction must lie in [0, 1), got {}",
                self.outlier_fraction
            )));
        }
        if !(self.noise_sigma >= 0.0)
            || !self.outlier_magnitude.is_finite()
            || !self.noise_sigma.is_finite()
        {
            return Err(Error::InvalidParameter(
                "noise sigma must be ≥ 0 and magnitudes finite".into(),
            ));
        }
        Ok(())
    }

    pub fn outliers_per_frame(&self) -> usize {
        (self.outlier_fraction * self.m as f64).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticFrame {
    pub x: DVector<f64>,
    /// Corrupted coordinates, ascending.
    pub support: Vec<usize>,
}

/// Lazily generated stream; frames are produced one at a time.
pub struct StreamGenerator {
    spec: SyntheticStreamSpec,
    truth: SubspaceBasis,
    rng: ChaCha8Rng,
    emitted: usize,
}

impl StreamGenerator {
    pub fn new(spec: SyntheticStreamSpec) -> Result<Self> {
        spec.validate()?;
        // Separate seeds for the basis and the per-frame draws.
        let truth = random_orthonormal(spec.m, spec.k, spec.seed ^ 0x7472_7574_6862_6173)?;
        Ok(StreamGenerator {
            spec,
            truth,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            emitted: 0,
        })
    }

    pub fn truth_basis(&self) -> &SubspaceBasis {
        &self.truth
    }
}

impl Iterator for StreamGenerator {
    type Item = SyntheticFrame;

    fn next(&mut self) -> Option<SyntheticFrame> {
        if self.emitted >= self.spec.n_frames {
            return None;
        }
        self.emitted += 1;
        let spec = &self.spec;
        let rng = &mut self.rng;

        let y = DVector::from_fn(spec.k, |_, _| StandardNormal.sample(&mut *rng));
        let mut x = self.truth.as_matrix() * y;
        let mut support = sample(&mut *rng, spec.m, spec.outliers_per_frame()).into_vec();
        support.sort_unstable();
        for &i in &support {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[i] += sign * spec.outlier_magnitude;
        }
        if spec.noise_sigma > 0.0 {
            for v in x.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut *rng);
                *v += spec.noise_sigma * n;
            }
        }
        Some(SyntheticFrame { x, support })
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticStream {
    pub frames: Vec<DVector<f64>>,
    pub truth_basis: SubspaceBasis,
    pub outlier_masks: Vec<Vec<usize>>,
}

pub fn generate_stream(spec: &SyntheticStreamSpec) -> Result<SyntheticStream> {
    let mut gen = StreamGenerator::new(*spec)?;
    let truth_basis = gen.truth_basis().clone();
    let (frames, outlier_masks) = gen.by_ref().map(|f| (f.x, f.support)).unzip();
    Ok(SyntheticStream {
        frames,
        truth_basis,
        outlier_masks,
    })
}

/// Sine of the largest principal angle between two subspaces: the spectral
/// norm of `(I − U_est·U_estᵀ)·U_true`.
pub fn subspace_error(estimate: &SubspaceBasis, truth: &SubspaceBasis) -> Result<f64> {
    if estimate.ambient_dim() != truth.ambient_dim() || estimate.dim() != truth.dim() {
        return Err(Error::Dimension(format!(
            "cannot compare a {}×{} basis with a {}×{} basis",
            estimate.ambient_dim(),
            estimate.dim(),
            truth.ambient_dim(),
            truth.dim()
        )));
    }
    let u = estimate.as_matrix();
    let residual = truth.as_matrix() - u * u.tr_mul(truth.as_matrix());
    let largest = residual
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max);
    Ok(largest.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn spec(fraction: f64, sigma: f64) -> SyntheticStreamSpec {
        SyntheticStreamSpec {
            m: 100,
            k: 5,
            n_frames: 20,
            outlier_fraction: fraction,
            outlier_magnitude: 1.0,
            noise_sigma: sigma,
            seed: 42,
        }
    }

    #[test]
    fn clean_stream_lies_in_span() {
        let s = generate_stream(&spec(0.0, 0.0)).unwrap();
        let u = s.truth_basis.as_matrix();
        for x in &s.frames {
            let off = x - u * u.tr_mul(x);
            assert!(off.norm() < 1e-12);
        }
        assert!(s.outlier_masks.iter().all(|m| m.is_empty()));
    }

    #[test]
    fn outlier_count_contract() {
        let s = generate_stream(&spec(0.1, 1e-3)).unwrap();
        assert_eq!(s.frames.len(), 20);
        assert!(s.outlier_masks.iter().all(|m| m.len() == 10));
        for m in &s.outlier_masks {
            let mut dedup = m.clone();
            dedup.dedup();
            assert_eq!(&dedup, m);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let a = generate_stream(&spec(0.3, 1e-3)).unwrap();
        let b = generate_stream(&spec(0.3, 1e-3)).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.truth_basis, b.truth_basis);
        let mut other = spec(0.3, 1e-3);
        other.seed = 43;
        assert_ne!(generate_stream(&other).unwrap().frames, a.frames);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_stream(&spec(1.0, 0.0)).is_err());
        assert!(generate_stream(&spec(0.1, -1.0)).is_err());
        let mut s = spec(0.1, 0.0);
        s.k = 100;
        assert!(generate_stream(&s).is_err());
    }

    #[test]
    fn subspace_error_cases() {
        let u = random_orthonormal(20, 3, 1).unwrap();
        assert!(subspace_error(&u, &u).unwrap() < 1e-14);

        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let rotated = SubspaceBasis::from_matrix(
            u.as_matrix() * nalgebra::DMatrix::from_fn(3, 3, |i, j| rot.matrix()[(i, j)]),
        )
        .unwrap();
        assert!(subspace_error(&rotated, &u).unwrap() < 1e-12);
        assert!(subspace_error(&u, &rotated).unwrap() < 1e-12);

        let mut e = DMatrix::zeros(6, 2);
        e[(0, 0)] = 1.0;
        e[(1, 1)] = 1.0;
        let mut f = DMatrix::zeros(6, 2);
        f[(2, 0)] = 1.0;
        f[(4, 1)] = 1.0;
        let (e, f) = (
            SubspaceBasis::from_matrix(e).unwrap(),
            SubspaceBasis::from_matrix(f).unwrap(),
        );
        assert!((subspace_error(&e, &f).unwrap() - 1.0).abs() < 1e-15);

        let other = random_orthonormal(20, 4, 1).unwrap();
        assert!(subspace_error(&u, &other).is_err());
    }
}
