//! Stiefel / Grassmann numerics for the background subspace.
//!
//! A point on the Grassmannian `Gr(k, m)` is stored as one orthonormal
//! representative `U` (an `m × k` matrix). Only rank-1 tangent directions
//! arise in the online tracker, so the geodesic step is specialised to that
//! case and never forms an SVD.
//!
//! All matrix-vector products go through nalgebra's sequential kernels, so
//! results are bit-reproducible for a given input.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest tolerated `‖UᵀU − I‖_F` before the basis is re-orthonormalized.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Norms below this are treated as zero when forming unit directions.
pub const DEGENERACY_FLOOR: f64 = 1e-14;

/// A thin QR is forced after this many geodesic steps even without drift.
pub const REORTHONORMALIZE_EVERY: u32 = 1000;

/// Steps between full `‖UᵀU − I‖_F` checks when every direction in between
/// was exactly orthonormality-preserving.
pub const DEFECT_CHECK_EVERY: u32 = 50;

/// Tolerance on `‖left‖ − 1`, `‖right‖ − 1` and `‖Uᵀ·left‖` for a direction
/// to count as exactly orthonormality-preserving. Each such step adds at most
/// about twice this to the defect.
const DIRECTION_TOL: f64 = 1e-11;

/// Orthonormal `m × k` representative of a point on the Grassmannian.
///
/// Equality compares the matrix only.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    data: DMatrix<f64>,
    steps_since_qr: u32,
}

impl PartialEq for SubspaceBasis {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl SubspaceBasis {
    /// Wraps a matrix, rejecting it unless `1 ≤ k < m` and the columns are
    /// orthonormal to [`ORTHONORMALITY_TOL`].
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        check_dims(data.nrows(), data.ncols())?;
        crate::error::ensure_finite(data.as_slice(), "basis")?;
        let basis = SubspaceBasis {
            data,
            steps_since_qr: 0,
        };
        let defect = basis.orthonormality_defect();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis columns are not orthonormal (‖UᵀU − I‖_F = {defect:e})"
            )));
        }
        Ok(basis)
    }

    /// Orthonormalizes the columns of an arbitrary full-rank matrix.
    pub fn orthonormalize(data: DMatrix<f64>) -> Result<Self> {
        check_dims(data.nrows(), data.ncols())?;
        crate::error::ensure_finite(data.as_slice(), "basis")?;
        Ok(SubspaceBasis {
            data: thin_q(data),
            steps_since_qr: 0,
        })
    }

    /// Ambient dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.data.nrows()
    }

    /// Subspace dimension `k`.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// `‖UᵀU − I‖_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut gram = self.data.tr_mul(&self.data);
        for i in 0..gram.ncols() {
            gram[(i, i)] -= 1.0;
        }
        gram.norm()
    }

    /// Re-runs a thin QR on the columns, keeping their orientation.
    pub fn reorthonormalize(&mut self) {
        let data = std::mem::replace(&mut self.data, DMatrix::zeros(0, 0));
        self.data = thin_q(data);
        self.steps_since_qr = 0;
    }

    /// Coordinates of the orthogonal projection of `x`: `Uᵀx`.
    pub fn coordinates(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::ensure_len(x.len(), self.ambient_dim(), "frame")?;
        Ok(self.data.tr_mul(x))
    }

    /// `U·y`.
    pub fn reconstruct(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::ensure_len(y.len(), self.dim(), "coordinates")?;
        Ok(&self.data * y)
    }

    /// Rebuilds a basis from raw parts without checking orthonormality.
    /// Used when restoring snapshots, which were valid when written.
    pub(crate) fn from_parts_unchecked(data: DMatrix<f64>, steps_since_qr: u32) -> Self {
        SubspaceBasis {
            data,
            steps_since_qr,
        }
    }

    /// Geodesic steps taken since the last thin QR.
    pub fn steps_since_qr(&self) -> u32 {
        self.steps_since_qr
    }
}

/// Rank-1 tangent direction `scale · left · rightᵀ` (a compact SVD).
#[derive(Clone, Debug, PartialEq)]
pub struct Rank1Direction {
    /// Unit `m`-vector orthogonal to the basis it was projected against.
    pub left: DVector<f64>,
    /// Unit `k`-vector.
    pub right: DVector<f64>,
    /// Nonnegative singular value.
    pub scale: f64,
}

impl Rank1Direction {
    /// `true` when the projected gradient fell below [`DEGENERACY_FLOOR`];
    /// the unit vectors are then meaningless.
    pub fn is_zero(&self) -> bool {
        self.scale == 0.0
    }

    /// Dense `scale · left · rightᵀ`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose() * self.scale
    }
}

fn check_dims(m: usize, k: usize) -> Result<()> {
    if k == 0 || k >= m {
        return Err(Error::Dimension(format!(
            "subspace dimension k = {k} must satisfy 1 ≤ k < m = {m}"
        )));
    }
    Ok(())
}

/// Thin Q factor with the sign of each column chosen so that `diag(R) ≥ 0`.
fn thin_q(data: DMatrix<f64>) -> DMatrix<f64> {
    let qr = data.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Random point on the Grassmannian: thin QR of an `m × k` matrix with
/// i.i.d. standard-normal entries drawn from a ChaCha8 stream seeded by `seed`.
pub fn random_orthonormal(m: usize, k: usize, seed: u64) -> Result<SubspaceBasis> {
    check_dims(m, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Column-major fill order is part of the determinism contract.
    let raw = DMatrix::from_iterator(m, k, (0..m * k).map(|_| StandardNormal.sample(&mut rng)));
    SubspaceBasis::orthonormalize(raw)
}

/// Projects `H` onto the tangent space at `[U]`: `(I − UUᵀ)H`.
pub fn tangent_project(basis: &SubspaceBasis, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.shape() != basis.data.shape() {
        return Err(Error::Dimension(format!(
            "tangent vector is {}×{}, basis is {}×{}",
            h.nrows(),
            h.ncols(),
            basis.ambient_dim(),
            basis.dim()
        )));
    }
    let coeffs = basis.data.tr_mul(h);
    Ok(h - &basis.data * coeffs)
}

/// `(I − UUᵀ)v` for a single ambient vector.
pub fn project_vector(basis: &SubspaceBasis, v: &DVector<f64>) -> Result<DVector<f64>> {
    crate::error::ensure_len(v.len(), basis.ambient_dim(), "ambient vector")?;
    let mut out = v.clone();
    let coeffs = basis.data.tr_mul(v);
    out.gemv(-1.0, &basis.data, &coeffs, 1.0);
    Ok(out)
}

/// Compact SVD of the projected gradient `π(η)·yᵀ`, built without forming
/// the `m × k` matrix.
pub fn project_rank1(
    basis: &SubspaceBasis,
    eta: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Rank1Direction> {
    crate::error::ensure_len(y.len(), basis.dim(), "coordinates")?;
    // Projecting twice keeps `left ⟂ span(U)` to working precision even when
    // η lies almost entirely inside the subspace.
    let once = project_vector(basis, eta)?;
    let mut left = project_vector(basis, &once)?;
    let left_norm = left.norm();
    let y_norm = y.norm();

    if left_norm < DEGENERACY_FLOOR || y_norm < DEGENERACY_FLOOR {
        return Ok(Rank1Direction {
            left: DVector::zeros(basis.ambient_dim()),
            right: DVector::zeros(basis.dim()),
            scale: 0.0,
        });
    }

    left /= left_norm;
    Ok(Rank1Direction {
        left,
        right: y / y_norm,
        scale: left_norm * y_norm,
    })
}

/// Moves along the Grassmann geodesic through `U` in the direction
/// `∓ scale · left · rightᵀ` for time `t`.
///
/// With `φ = scale · t` and `σ = −1` when descending, the rank-1 geodesic is
/// `U' = U + ((cos φ − 1)·U·right + σ·sin φ·left)·rightᵀ`.
pub fn geodesic_step(
    basis: &SubspaceBasis,
    dir: &Rank1Direction,
    t: f64,
    descend: bool,
) -> Result<SubspaceBasis> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and nonnegative, got {t}"
        )));
    }
    crate::error::ensure_len(dir.left.len(), basis.ambient_dim(), "direction (left)")?;
    crate::error::ensure_len(dir.right.len(), basis.dim(), "direction (right)")?;

    let phi = dir.scale * t;
    if dir.is_zero() || phi == 0.0 {
        return Ok(basis.clone());
    }

    let sign = if descend { -1.0 } else { 1.0 };
    let u_v = &basis.data * &dir.right;
    let mut column = u_v * (phi.cos() - 1.0);
    column.axpy(sign * phi.sin(), &dir.left, 1.0);

    let mut data = basis.data.clone();
    data.ger(1.0, &column, &dir.right, 1.0);

    // With unit `left ⟂ span(U)` and unit `right` the update is an exact
    // rotation, so only rounding drift remains and the O(mk²) Gram check can
    // be sampled. Anything else is checked immediately.
    let preserving = (dir.left.norm() - 1.0).abs() < DIRECTION_TOL
        && (dir.right.norm() - 1.0).abs() < DIRECTION_TOL
        && basis.data.tr_mul(&dir.left).norm() < DIRECTION_TOL;

    let mut next = SubspaceBasis {
        data,
        steps_since_qr: basis.steps_since_qr + 1,
    };
    let check = !preserving || next.steps_since_qr.is_multiple_of(DEFECT_CHECK_EVERY);
    if next.steps_since_qr >= REORTHONORMALIZE_EVERY
        || (check && next.orthonormality_defect() > ORTHONORMALITY_TOL)
    {
        next.reorthonormalize();
    }
    Ok(next)
}
