//! Small shared dense-linear-algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition numbers above this are treated as "not invertible".
pub const MAX_CONDITION: f64 = 1e12;

/// Symmetric eigendecomposition with eigenvalues sorted in decreasing order.
///
/// Ties keep the solver's original column order, so the output is
/// deterministic for a given input matrix.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("non-finite eigenvalue")
            .then(i.cmp(&j))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Condition number of a symmetric PSD matrix from its sorted eigenvalues.
/// Returns `f64::INFINITY` when the smallest eigenvalue is non-positive.
pub fn spd_condition(eigenvalues: &DVector<f64>) -> f64 {
    let max = eigenvalues[0];
    let min = eigenvalues[eigenvalues.len() - 1];
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Number of eigenvalues exceeding `rel_tol` times the largest one.
pub fn numerical_rank(eigenvalues: &DVector<f64>, rel_tol: f64) -> usize {
    let max = eigenvalues[0].max(0.0);
    if max == 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l > rel_tol * max).count()
}

/// Thin orthonormal column basis via QR, with a column-rank check.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.ncols();
    let qr = m.clone().qr();
    let r = qr.r();
    let scale = (0..d).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    for i in 0..d {
        if r[(i, i)].abs() <= 1e-12 * scale.max(1e-300) {
            return Err(Error::RankDeficientBasis(format!(
                "column rank < {d} (|R[{i},{i}]| too small)"
            )));
        }
    }
    Ok(qr.q())
}

/// `max_y` of nothing is zero; convenience for norm reductions.
pub fn max_or_zero(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0_f64, f64::max)
}

/// Cholesky factorization that also rejects ill-conditioned matrices,
/// which plain pivoting can let through on exactly singular input.
pub fn spd_cholesky_checked(
    m: &DMatrix<f64>,
    cond_limit: f64,
) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let (vals, _) = sym_eigen_desc(m);
    let cond = spd_condition(&vals);
    if !cond.is_finite() || cond >= cond_limit {
        return None;
    }
    nalgebra::Cholesky::new(m.clone())
}
