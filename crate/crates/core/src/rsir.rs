//! Classical and regularized SIR estimators, the profiled criterion that
//! certifies them, and cross-validated selection of the ridge parameter.
//!
//! Both estimators solve the symmetric-definite generalized eigenproblem
//! Γ̂·v = λ·(Σ̂x + τI)·v by whitening with a triangular factor of the
//! right-hand matrix (τ = 0 for classical SIR). The profiled criterion
//! [`profile_h`] evaluates, for a fixed basis, the best shifted `H_tau`
//! value over all loadings; its minimizers over bases are exactly the
//! leading generalized eigenvectors, which is what the brute-force oracle
//! in the test suite checks.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::criteria::Basis;
use crate::error::{Error, Result};
use crate::linalg::{self, MAX_CONDITION};
use crate::moments::{compute_sliced_moments, slice_by_response, Dataset, SlicedMoments};

/// Which estimator produced a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sir,
    Rsir,
}

/// Numerical context of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Condition number of Σ̂x + τI (τ = 0 for classical SIR).
    pub condition: f64,
    /// Numerical rank of Σ̂x.
    pub numerical_rank: usize,
    /// The d-th and (d+1)-th eigenvalues are nearly tied, so the estimated
    /// subspace is ill-determined.
    pub tied: bool,
    /// All eigenvalues vanish (Γ̂ ≈ 0); the returned basis is arbitrary.
    pub uninformative: bool,
}

/// An estimated basis with its eigenvalues and fit context.
///
/// Basis columns are unit-norm, ordered by decreasing eigenvalue, and
/// sign-fixed so the entry of largest magnitude in each column is positive.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub basis: Basis,
    pub eigenvalues: Vec<f64>,
    pub tau: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl Serialize for FitResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("FitResult", 7)?;
        s.serialize_field("method", &self.method)?;
        s.serialize_field("tau", &self.tau)?;
        s.serialize_field("d", &self.basis.d())?;
        s.serialize_field("p", &self.basis.p())?;
        s.serialize_field("eigenvalues", &self.eigenvalues)?;
        // column-major, p consecutive entries per basis column
        s.serialize_field("basis", self.basis.matrix().as_slice())?;
        s.serialize_field("diagnostics", &self.diagnostics)?;
        s.end()
    }
}

impl FitResult {
    /// Basis as CSV, one row per predictor coordinate.
    pub fn write_basis_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let a = self.basis.matrix();
        let header: Vec<String> = (1..=a.ncols()).map(|k| format!("v{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..a.nrows() {
            let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:?}", a[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn fit_eigen(m: &SlicedMoments, d: usize, tau: f64, method: Method) -> Result<FitResult> {
    let p = m.p();
    if d < 1 || d > p {
        return Err(Error::InvalidInput(format!(
            "d must be in 1..={p}, got {d}"
        )));
    }
    let (sigma_eigs, _) = linalg::sym_eigen_desc(m.sigma());
    let condition = if tau > 0.0 {
        (sigma_eigs[0].max(0.0) + tau) / (sigma_eigs[p - 1].max(0.0) + tau)
    } else {
        linalg::spd_condition(&sigma_eigs)
    };
    if method == Method::Sir && (!condition.is_finite() || condition >= MAX_CONDITION) {
        return Err(Error::SingularCovariance(format!(
            "condition number {condition:.3e}; use the regularized estimator \
             (fit_rsir, or --method rsir with --tau > 0)"
        )));
    }

    let shifted = m.sigma() + DMatrix::identity(p, p) * tau;
    let chol = nalgebra::Cholesky::new(shifted)
        .ok_or_else(|| Error::SingularCovariance("covariance factorization failed".into()))?;
    let l = chol.l();

    // M = L^-1 Γ̂ L^-T shares eigenvalues with (Σ̂x + τI)^-1 Γ̂.
    let half = l
        .solve_lower_triangular(m.gamma())
        .ok_or_else(|| Error::SingularCovariance("triangular solve failed".into()))?;
    let mut whitened = l
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(|| Error::SingularCovariance("triangular solve failed".into()))?;
    let sym = (whitened.clone() + whitened.transpose()) * 0.5;
    whitened = sym;

    let whitened_norm = whitened.norm();
    let (evals, evecs) = linalg::sym_eigen_desc(&whitened);
    let uninformative = evals[0] <= 1e-12 * whitened_norm.max(1e-300) || whitened_norm == 0.0;
    let tied =
        !uninformative && d < p && (evals[d - 1] - evals[d]).abs() <= 1e-8 * evals[0].max(1e-300);

    let mut basis = DMatrix::zeros(p, d);
    if uninformative {
        // Γ̂ carries no direction information; return a fixed orthonormal set.
        for k in 0..d {
            basis[(k, k)] = 1.0;
        }
    } else {
        let lt = l.transpose();
        for k in 0..d {
            let w = evecs.column(k).into_owned();
            let mut v = lt
                .solve_upper_triangular(&w)
                .ok_or_else(|| Error::SingularCovariance("back-transform failed".into()))?;
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            // sign convention: entry of largest magnitude is positive
            let mut lead = 0;
            for i in 1..p {
                if v[i].abs() > v[lead].abs() {
                    lead = i;
                }
            }
            if v[lead] < 0.0 {
                v = -v;
            }
            basis.set_column(k, &v);
        }
    }

    Ok(FitResult {
        basis: Basis::new(basis)?,
        eigenvalues: evals.as_slice()[..d].to_vec(),
        tau,
        method,
        diagnostics: Diagnostics {
            condition,
            numerical_rank: linalg::numerical_rank(&sigma_eigs, 1e-10),
            tied,
            uninformative,
        },
    })
}

/// Classical SIR: leading eigenvectors of Σ̂x⁻¹Γ̂.
///
/// Fails when Σ̂x is singular or too ill-conditioned to invert; the
/// regularized estimator handles those cases.
pub fn fit_sir(m: &SlicedMoments, d: usize) -> Result<FitResult> {
    fit_eigen(m, d, 0.0, Method::Sir)
}

/// Regularized SIR: leading eigenvectors of (Σ̂x + τI)⁻¹Γ̂, well defined for
/// every τ > 0, including p > n.
pub fn fit_rsir(m: &SlicedMoments, d: usize, tau: f64) -> Result<FitResult> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be > 0, got {tau}")));
    }
    fit_eigen(m, d, tau, Method::Rsir)
}

/// Shifted `H_tau` profiled over the loadings: the value of
/// H_tau(A, C) − H_tau(0, 0) at the loading optimum
/// C_y = (Aᵀ(Σ̂x+τI)A)⁻¹Aᵀ(X̄_y−X̄), namely
/// −Σ_y f_y (X̄_y−X̄)ᵀA(Aᵀ(Σ̂x+τI)A)⁻¹Aᵀ(X̄_y−X̄) ≤ 0.
///
/// Depends on A only through its span.
pub fn profile_h(m: &SlicedMoments, a: &Basis, tau: f64) -> Result<f64> {
    if a.p() != m.p() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows, moments have p = {}",
            a.p(),
            m.p()
        )));
    }
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
    }
    let gram = a.matrix().transpose() * (m.sigma() * a.matrix())
        + (a.matrix().transpose() * a.matrix()) * tau;
    let chol = linalg::spd_cholesky_checked(&gram, MAX_CONDITION)
        .ok_or_else(|| Error::RankDeficientBasis("A'(sigma + tau I)A is singular".into()))?;
    let mut value = 0.0;
    for y in 0..m.h() {
        let u = a.matrix().transpose() * m.centered_mean(y);
        value -= m.f()[y] * u.dot(&chol.solve(&u));
    }
    Ok(value)
}

fn serialize_scores<S: Serializer>(
    scores: &[f64],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mapped: Vec<Option<f64>> = scores
        .iter()
        .map(|&v| if v.is_finite() { Some(v) } else { None })
        .collect();
    mapped.serialize(serializer)
}

/// Grid of candidate τ values with their cross-validation scores.
#[derive(Debug, Clone, Serialize)]
pub struct TauSelection {
    pub grid: Vec<f64>,
    /// Mean held-out score per grid point; non-finite scores (singular
    /// τ = 0 folds) serialize as null.
    #[serde(serialize_with = "serialize_scores")]
    pub scores: Vec<f64>,
    pub chosen: f64,
    pub folds: usize,
    pub rng_seed: u64,
}

struct Fold {
    training: Vec<usize>,
    validation: Vec<usize>,
}

/// Deals each slice's observations round-robin over folds, after a
/// per-slice seeded shuffle, so every fold sees every slice when the
/// slices are large enough.
fn stratified_folds(labels: &[usize], h: usize, folds: usize, rng_seed: u64) -> Vec<Fold> {
    let mut fold_of = vec![0usize; labels.len()];
    for y in 0..h {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == y).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(
            rng_seed.wrapping_add((y as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            fold_of[i] = j % folds;
        }
    }
    (0..folds)
        .map(|k| Fold {
            training: (0..labels.len()).filter(|&i| fold_of[i] != k).collect(),
            validation: (0..labels.len()).filter(|&i| fold_of[i] == k).collect(),
        })
        .collect()
}

struct SubsetStats {
    /// Original slice id of each compact slice.
    slice_ids: Vec<usize>,
    moments: SlicedMoments,
}

fn subset_moments(ds: &Dataset, labels: &[usize], rows: &[usize]) -> Result<SubsetStats> {
    let mut present: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    present.sort_unstable();
    present.dedup();
    let compact_of = |orig: usize| present.binary_search(&orig).expect("present slice");

    let x = ds.x().select_rows(rows.iter());
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| ds.y()[i]));
    let sub = Dataset::new(x, y)?;
    let sub_labels: Vec<usize> = rows.iter().map(|&i| compact_of(labels[i])).collect();
    let assignment = crate::moments::SliceAssignment::from_labels(sub_labels, present.len())?;
    let moments = compute_sliced_moments(&sub, &assignment)?;
    Ok(SubsetStats {
        slice_ids: present,
        moments,
    })
}

/// Selects τ by stratified k-fold cross-validation.
///
/// For each fold and grid value, a basis is fitted on the training
/// moments, training loadings come from the [`profile_h`] closed form, and
/// the held-out slice means are scored by their unweighted reconstruction
/// error Σ_y f_y^val ‖(X̄_y^val − X̄^val) − Σ̂x^tr·Â·Ĉ_y‖². Slices are
/// fixed once on the full dataset so a training loading and a held-out
/// mean always refer to the same response bin. A τ = 0 grid point with a
/// singular training covariance scores +∞ instead of aborting. Ties pick
/// the smaller τ.
pub fn select_tau_cv(
    ds: &Dataset,
    h: usize,
    d: usize,
    grid: &[f64],
    folds: usize,
    rng_seed: u64,
) -> Result<TauSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("tau grid must be non-empty".into()));
    }
    for pair in grid.windows(2) {
        if pair[0] >= pair[1] || pair[0].is_nan() || pair[1].is_nan() {
            return Err(Error::InvalidInput(
                "tau grid must be strictly increasing".into(),
            ));
        }
    }
    if grid.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::InvalidInput("tau grid values must be >= 0".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    if folds > ds.n() {
        return Err(Error::InvalidInput(format!(
            "folds = {folds} exceeds n = {}",
            ds.n()
        )));
    }

    let assignment = slice_by_response(ds, h)?;
    let folds_idx = stratified_folds(assignment.labels(), h, folds, rng_seed);
    for fold in &folds_idx {
        if fold.training.len() < h.max(2) {
            return Err(Error::InvalidInput(format!(
                "training part of a fold has {} observations, need at least {}",
                fold.training.len(),
                h.max(2)
            )));
        }
    }

    // Training moments and validation statistics are independent of tau.
    let mut prepared = Vec::with_capacity(folds);
    for fold in &folds_idx {
        let training = subset_moments(ds, assignment.labels(), &fold.training)?;

        let n_val = fold.validation.len();
        let mut xbar_val = DVector::zeros(ds.p());
        for &i in &fold.validation {
            xbar_val += ds.x().row(i).transpose();
        }
        if n_val > 0 {
            xbar_val /= n_val as f64;
        }
        let mut val_slices: Vec<(usize, f64, DVector<f64>)> = Vec::new();
        let mut present: Vec<usize> = fold
            .validation
            .iter()
            .map(|&i| assignment.labels()[i])
            .collect();
        present.sort_unstable();
        present.dedup();
        for &y in &present {
            let members: Vec<usize> = fold
                .validation
                .iter()
                .copied()
                .filter(|&i| assignment.labels()[i] == y)
                .collect();
            let mut mean = DVector::zeros(ds.p());
            for &i in &members {
                mean += ds.x().row(i).transpose();
            }
            mean /= members.len() as f64;
            val_slices.push((y, members.len() as f64 / n_val as f64, mean - &xbar_val));
        }
        prepared.push((training, val_slices));
    }

    let mut scores = Vec::with_capacity(grid.len());
    for &tau in grid {
        let mut total = 0.0;
        for (training, val_slices) in &prepared {
            total += fold_score(training, val_slices, d, tau);
        }
        scores.push(total / folds as f64);
    }

    let mut chosen = grid[0];
    let mut best = scores[0];
    for (idx, &tau) in grid.iter().enumerate().skip(1) {
        if scores[idx] < best {
            best = scores[idx];
            chosen = tau;
        }
    }

    Ok(TauSelection {
        grid: grid.to_vec(),
        scores,
        chosen,
        folds,
        rng_seed,
    })
}

fn fold_score(
    training: &SubsetStats,
    val_slices: &[(usize, f64, DVector<f64>)],
    d: usize,
    tau: f64,
) -> f64 {
    let m = &training.moments;
    let fit = if tau > 0.0 {
        fit_rsir(m, d, tau)
    } else {
        fit_sir(m, d)
    };
    let fit = match fit {
        Ok(fit) => fit,
        Err(_) => return f64::INFINITY,
    };
    let a = fit.basis.matrix();
    let gram = a.transpose() * (m.sigma() * a) + (a.transpose() * a) * tau;
    let chol = match linalg::spd_cholesky_checked(&gram, MAX_CONDITION) {
        Some(chol) => chol,
        None => return f64::INFINITY,
    };
    let sigma_a = m.sigma() * a;
    let mut score = 0.0;
    for (orig_y, f_val, centered_val) in val_slices {
        let Ok(compact) = training.slice_ids.binary_search(orig_y) else {
            // slice absent from the training part; skip it
            continue;
        };
        let loading = chol.solve(&(a.transpose() * m.centered_mean(compact)));
        let resid = centered_val - &sigma_a * loading;
        score += f_val * resid.norm_squared();
    }
    score
}
