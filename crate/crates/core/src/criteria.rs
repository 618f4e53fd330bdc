//! The discrepancy criteria, their gradients and the algebraic identities
//! relating them.
//!
//! Three objectives are evaluated over a candidate basis A (p×d) and
//! per-slice loadings C (d×h):
//!
//! * `G` — the inverse-covariance-weighted slice-mean regression
//!   discrepancy of classical SIR,
//! * `G_tau` — the Euclidean residual plus a ridge penalty on vec(A),
//! * `H_tau` — `G` plus a penalty on the fitted directions A·C_y, whose
//!   minimization never needs the covariance inverse in shifted form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, MAX_CONDITION};
use crate::moments::SlicedMoments;

/// Materializing a Kronecker factor is refused above this many basis entries.
pub const KRON_MATERIALIZE_LIMIT: usize = 10_000;

/// A p×d candidate (or estimated) basis of the central subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis(DMatrix<f64>);

impl Basis {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let (p, d) = (a.nrows(), a.ncols());
        if d < 1 || p < 1 {
            return Err(Error::InvalidInput("basis must be at least 1x1".into()));
        }
        if d > p {
            return Err(Error::InvalidInput(format!(
                "basis has more columns ({d}) than rows ({p})"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in basis".into()));
        }
        Ok(Self(a))
    }

    pub fn p(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Entries stacked column by column, the vec(A) of the criteria.
    pub fn to_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(self.0.as_slice())
    }
}

/// The d×h loading matrix; column y holds the coefficients C_y.
#[derive(Debug, Clone, PartialEq)]
pub struct Loadings(DMatrix<f64>);

impl Loadings {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() < 1 || c.ncols() < 1 {
            return Err(Error::InvalidInput("loadings must be at least 1x1".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in loadings".into()));
        }
        Ok(Self(c))
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn h(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn column(&self, y: usize) -> DVector<f64> {
        self.0.column(y).into_owned()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Gradients of `G_tau` with respect to vec(A) and each C_y.
#[derive(Debug, Clone)]
pub struct GradientPair {
    /// Length p·d, column-major layout matching [`Basis::to_vec`].
    pub grad_a: DVector<f64>,
    /// One length-d gradient per slice.
    pub grad_c: Vec<DVector<f64>>,
}

fn check_shapes(m: &SlicedMoments, a: &Basis, c: &Loadings) -> Result<()> {
    if a.p() != m.p() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows, moments have p = {}",
            a.p(),
            m.p()
        )));
    }
    if c.d() != a.d() {
        return Err(Error::ShapeMismatch(format!(
            "loadings have {} rows, basis has d = {}",
            c.d(),
            a.d()
        )));
    }
    if c.h() != m.h() {
        return Err(Error::ShapeMismatch(format!(
            "loadings have {} columns, moments have h = {}",
            c.h(),
            m.h()
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
    }
    Ok(())
}

/// The classical SIR discrepancy: the f_y-weighted sum of covariance-inverse-
/// weighted squared residuals of the centered slice means against Σ̂x·A·C_y.
///
/// Errors when the sample covariance is singular or has condition number
/// at least `cond_limit`.
pub fn eval_g_with_limit(
    m: &SlicedMoments,
    a: &Basis,
    c: &Loadings,
    cond_limit: f64,
) -> Result<f64> {
    check_shapes(m, a, c)?;
    let (vals, vecs) = linalg::sym_eigen_desc(m.sigma());
    let cond = linalg::spd_condition(&vals);
    if !cond.is_finite() || cond >= cond_limit {
        return Err(Error::SingularCovariance(format!(
            "condition number {cond:.3e}"
        )));
    }
    let sa = m.sigma() * a.matrix();
    let mut total = 0.0;
    for y in 0..m.h() {
        let resid = m.centered_mean(y) - &sa * c.column(y);
        let rotated = vecs.transpose() * resid;
        let weighted: f64 = rotated
            .iter()
            .zip(vals.iter())
            .map(|(r, l)| r * r / l)
            .sum();
        total += m.f()[y] * weighted;
    }
    Ok(total)
}

/// [`eval_g_with_limit`] at the default condition limit.
pub fn eval_g(m: &SlicedMoments, a: &Basis, c: &Loadings) -> Result<f64> {
    eval_g_with_limit(m, a, c, MAX_CONDITION)
}

/// The ridge criterion: unweighted slice-mean residual plus τ‖vec(A)‖².
/// Never needs the covariance inverse.
pub fn eval_g_tau(m: &SlicedMoments, a: &Basis, c: &Loadings, tau: f64) -> Result<f64> {
    check_shapes(m, a, c)?;
    check_tau(tau)?;
    let sa = m.sigma() * a.matrix();
    let mut total = 0.0;
    for y in 0..m.h() {
        let resid = m.centered_mean(y) - &sa * c.column(y);
        total += m.f()[y] * resid.norm_squared();
    }
    Ok(total + tau * a.norm() * a.norm())
}

/// The modified criterion in absolute form: G plus τ·Σ_y f_y‖A·C_y‖².
/// Inherits the invertibility requirement of [`eval_g`].
pub fn eval_h_tau(m: &SlicedMoments, a: &Basis, c: &Loadings, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let g = eval_g(m, a, c)?;
    let mut penalty = 0.0;
    for y in 0..m.h() {
        let w = a.matrix() * c.column(y);
        penalty += m.f()[y] * w.norm_squared();
    }
    Ok(g + tau * penalty)
}

/// The modified criterion in shifted form, H_tau(A,C) − H_tau(0,0):
/// Σ_y f_y [C_yᵀAᵀ(Σ̂x+τI)AC_y − 2(X̄_y−X̄)ᵀAC_y].
/// Never needs the covariance inverse and never fails numerically.
pub fn eval_h_tau_shifted(m: &SlicedMoments, a: &Basis, c: &Loadings, tau: f64) -> Result<f64> {
    check_shapes(m, a, c)?;
    check_tau(tau)?;
    let mut total = 0.0;
    for y in 0..m.h() {
        let w = a.matrix() * c.column(y);
        let quad = (m.sigma() * &w).dot(&w) + tau * w.norm_squared();
        total += m.f()[y] * (quad - 2.0 * m.centered_mean(y).dot(&w));
    }
    Ok(total)
}

/// Analytic gradients of `G_tau`.
///
/// Computed in the Kronecker-free matrix form
/// 2·Σ_y f_y[Σ̂x(Σ̂x·A·C_y − (X̄_y−X̄))C_yᵀ] + 2τA for the basis block and
/// 2·f_y·Aᵀ·Σ̂x(Σ̂x·A·C_y − (X̄_y−X̄)) per slice, which is algebraically the
/// stacked-vector gradient without materializing any p·d × p·d operator.
pub fn grad_g_tau(m: &SlicedMoments, a: &Basis, c: &Loadings, tau: f64) -> Result<GradientPair> {
    check_shapes(m, a, c)?;
    check_tau(tau)?;
    let sa = m.sigma() * a.matrix();
    let mut grad_a_mat = a.matrix() * (2.0 * tau);
    let mut grad_c = Vec::with_capacity(m.h());
    for y in 0..m.h() {
        let cy = c.column(y);
        let resid = &sa * &cy - m.centered_mean(y);
        let back = m.sigma() * &resid;
        grad_a_mat += 2.0 * m.f()[y] * &back * cy.transpose();
        grad_c.push(2.0 * m.f()[y] * (sa.transpose() * &resid));
    }
    Ok(GradientPair {
        grad_a: DVector::from_column_slice(grad_a_mat.as_slice()),
        grad_c,
    })
}

/// Residual of the stationarity identity tying the two gradient blocks:
/// |vec(A)ᵀ∇_A − Σ_y C_yᵀ∇_{C_y} − 2τ‖vec(A)‖²|.
///
/// Zero in exact arithmetic for every (A, C, τ).
pub fn key_identity_residual(m: &SlicedMoments, a: &Basis, c: &Loadings, tau: f64) -> Result<f64> {
    let grads = grad_g_tau(m, a, c, tau)?;
    let lhs = a.to_vec().dot(&grads.grad_a);
    let mut rhs = 2.0 * tau * a.norm() * a.norm();
    for (y, gc) in grads.grad_c.iter().enumerate() {
        rhs += c.column(y).dot(gc);
    }
    Ok((lhs - rhs).abs())
}

/// Largest residual over slices of the stacking identity
/// Σ̂x·A·C_y = (C_yᵀ ⊗ Σ̂x)·vec(A), with the Kronecker factor materialized.
///
/// Diagnostic for small problems only; refuses p·d above
/// [`KRON_MATERIALIZE_LIMIT`].
pub fn vec_kron_check(m: &SlicedMoments, a: &Basis, c: &Loadings) -> Result<f64> {
    check_shapes(m, a, c)?;
    if a.p() * a.d() > KRON_MATERIALIZE_LIMIT {
        return Err(Error::InvalidInput(format!(
            "vec_kron_check materializes the Kronecker factor; p*d = {} exceeds {}",
            a.p() * a.d(),
            KRON_MATERIALIZE_LIMIT
        )));
    }
    let vec_a = a.to_vec();
    let mut worst = 0.0f64;
    for y in 0..m.h() {
        let cy = c.column(y);
        let direct = m.sigma() * a.matrix() * &cy;
        let kron = cy.transpose().kronecker(m.sigma());
        let stacked = kron * &vec_a;
        worst = worst.max((direct - stacked).norm());
    }
    Ok(worst)
}
