//! Synthetic index-model data and subspace-recovery metrics.
//!
//! Generators here produce datasets whose true central subspace is known,
//! so estimators can be scored with [`subspace_distance`].

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::criteria::Basis;
use crate::error::{Error, Result};
use crate::linalg::orthonormal_columns;
use crate::moments::Dataset;

/// Link function applied to each index AᵀX.
///
/// The first three are monotone, so a one-dimensional subspace is
/// recoverable by slice means. `Square` is symmetric about zero — the
/// classical failure mode of slice-mean methods — and is provided for
/// experimentation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Linear,
    Cubic,
    SinhLike,
    Square,
}

impl Link {
    fn apply(self, t: f64) -> f64 {
        match self {
            Link::Linear => t,
            Link::Cubic => t * t * t,
            Link::SinhLike => t.sinh(),
            Link::Square => t * t,
        }
    }
}

/// Specification of a synthetic index-model dataset.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub n: usize,
    /// True basis of the central subspace; columns must be orthonormal.
    pub true_basis: Basis,
    pub link: Link,
    pub noise_sd: f64,
    /// AR(1) correlation ρ between predictor coordinates, in [0, 1).
    pub predictor_correlation: f64,
    pub rng_seed: u64,
}

impl SimSpec {
    pub fn new(
        n: usize,
        true_basis: Basis,
        link: Link,
        noise_sd: f64,
        predictor_correlation: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidInput("noise_sd must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&predictor_correlation) {
            return Err(Error::InvalidInput(
                "predictor_correlation must lie in [0, 1)".into(),
            ));
        }
        let a = true_basis.matrix();
        let gram = a.transpose() * a;
        let identity = DMatrix::identity(a.ncols(), a.ncols());
        if (gram - identity).amax() > 1e-10 {
            return Err(Error::InvalidInput(
                "true_basis columns must be orthonormal".into(),
            ));
        }
        Ok(Self {
            n,
            true_basis,
            link,
            noise_sd,
            predictor_correlation,
            rng_seed,
        })
    }

    pub fn p(&self) -> usize {
        self.true_basis.p()
    }

    pub fn d(&self) -> usize {
        self.true_basis.d()
    }
}

/// The AR(1) covariance matrix with entries ρ^|i−j|.
pub fn ar1_covariance(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

/// Draws a dataset from the index model Y = Σ_j link(A_jᵀX) + noise,
/// with X zero-mean Gaussian under the AR(1) covariance. Bitwise
/// deterministic for a given spec.
pub fn simulate(spec: &SimSpec) -> Result<Dataset> {
    let (n, p) = (spec.n, spec.p());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let chol = nalgebra::Cholesky::new(ar1_covariance(p, spec.predictor_correlation))
        .ok_or_else(|| Error::InvalidInput("AR(1) covariance not positive definite".into()))?;
    let l = chol.l();

    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for k in 0..p {
            z[k] = StandardNormal.sample(&mut rng);
        }
        let row = &l * &z;
        x.row_mut(i).copy_from(&row.transpose());
    }

    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut value = 0.0;
        for j in 0..spec.d() {
            let index = spec
                .true_basis
                .matrix()
                .column(j)
                .dot(&x.row(i).transpose());
            value += spec.link.apply(index);
        }
        if spec.noise_sd > 0.0 {
            let eps: f64 = StandardNormal.sample(&mut rng);
            value += spec.noise_sd * eps;
        }
        y[i] = value;
    }

    Dataset::new(x, y)
}

/// Normalized projector distance between the spans of two bases:
/// ‖P_A − P_B‖_F / sqrt(2d), which is 0 for equal spans and 1 for
/// orthogonal ones. Invariant to right-multiplication of either argument
/// by a regular matrix.
pub fn subspace_distance(a: &Basis, b: &Basis) -> Result<f64> {
    if a.p() != b.p() || a.d() != b.d() {
        return Err(Error::ShapeMismatch(format!(
            "bases are {}x{} and {}x{}",
            a.p(),
            a.d(),
            b.p(),
            b.d()
        )));
    }
    let qa = orthonormal_columns(a.matrix())?;
    let qb = orthonormal_columns(b.matrix())?;
    let pa = &qa * qa.transpose();
    let pb = &qb * qb.transpose();
    Ok((pa - pb).norm() / (2.0 * a.d() as f64).sqrt())
}

/// Random basis with orthonormal columns, for benchmarks and tests.
pub fn random_orthonormal_basis(p: usize, d: usize, seed: u64) -> Result<Basis> {
    if d < 1 || d > p {
        return Err(Error::InvalidInput(format!(
            "d must be in 1..={p}, got {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(p, d, |_, _| StandardNormal.sample(&mut rng));
    Basis::new(orthonormal_columns(&raw)?)
}

/// The four-point, two-slice dataset used by the built-in degeneracy
/// demonstration: identity covariance and slice means (1,0), (1,2), so the
/// ridge minimizer does not exist and the alternating iteration collapses
/// along a hand-checkable trajectory.
pub fn builtin_2d_dataset() -> Dataset {
    let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
    let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
    Dataset::new(x, y).expect("fixture is valid")
}
