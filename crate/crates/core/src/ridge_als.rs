//! Alternating least squares for the ridge criterion `G_tau`, plus the
//! diagnostics showing why that criterion has no useful minimizer.
//!
//! The iteration alternates a closed-form loading update with a ridge
//! basis update. Its only stationary basis is the zero matrix, so a run
//! either collapses toward zero or ends with a singular loading update;
//! [`run_als`] records the whole trajectory so the collapse is observable.
//! [`check_existence`] decides whether the minimizer set is non-empty, and
//! [`construct_counterexample`] produces an explicit pair strictly below
//! the zero-basis plateau whenever it is not.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::criteria::{eval_g_tau, Basis, Loadings, KRON_MATERIALIZE_LIMIT};
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::SlicedMoments;

/// Settings for [`run_als`].
#[derive(Debug, Clone)]
pub struct AlsConfig {
    /// Ridge weight; must be strictly positive.
    pub tau: f64,
    /// Number of basis columns.
    pub d: usize,
    pub max_iters: usize,
    /// Stop once the Frobenius norm of the basis falls below this.
    pub a_norm_tolerance: f64,
    /// Seed for the Gaussian initialization.
    pub rng_seed: u64,
    /// Standard deviation of the Gaussian initialization entries.
    pub init_scale: f64,
    /// Stop once successive basis iterates differ by less than this in
    /// Frobenius norm.
    pub iterate_tolerance: f64,
    /// Start from this basis instead of a random one (used by the built-in
    /// demonstration fixture and by tests that replay hand-computed runs).
    pub initial_basis: Option<Basis>,
}

impl AlsConfig {
    pub fn new(tau: f64, d: usize) -> Self {
        Self {
            tau,
            d,
            max_iters: 1000,
            a_norm_tolerance: 1e-6,
            rng_seed: 0,
            init_scale: 1.0,
            iterate_tolerance: 1e-12,
            initial_basis: None,
        }
    }

    fn validate(&self, m: &SlicedMoments) -> Result<()> {
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tau must be > 0 for the ridge iteration, got {}",
                self.tau
            )));
        }
        if self.d < 1 || self.d > m.p() {
            return Err(Error::InvalidInput(format!(
                "d must be in 1..={}, got {}",
                m.p(),
                self.d
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if self.a_norm_tolerance.is_nan() || self.a_norm_tolerance <= 0.0 {
            return Err(Error::InvalidInput(
                "a_norm_tolerance must be positive".into(),
            ));
        }
        if !self.init_scale.is_finite() || self.init_scale <= 0.0 {
            return Err(Error::InvalidInput("init_scale must be positive".into()));
        }
        if self.iterate_tolerance.is_nan() || self.iterate_tolerance < 0.0 {
            return Err(Error::InvalidInput(
                "iterate_tolerance must be non-negative".into(),
            ));
        }
        if let Some(a0) = &self.initial_basis {
            if a0.p() != m.p() || a0.d() != self.d {
                return Err(Error::ShapeMismatch(format!(
                    "initial basis is {}x{}, expected {}x{}",
                    a0.p(),
                    a0.d(),
                    m.p(),
                    self.d
                )));
            }
        }
        Ok(())
    }
}

/// Why [`run_als`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    /// ‖A‖_F fell below `a_norm_tolerance`: the predicted collapse.
    ANormBelowTolerance,
    /// The loading update hit a singular normal matrix.
    CUpdateSingular,
    /// Successive basis iterates stopped moving.
    IterateConverged,
}

/// One iteration of the trace: the state before the step and the loadings
/// computed from it.
#[derive(Debug, Clone, Serialize)]
pub struct AlsRecord {
    pub iter: usize,
    /// G_tau at (A^(k), C^(k+1)).
    pub objective: f64,
    /// ‖A^(k)‖_F.
    pub a_norm: f64,
    /// ‖C^(k+1)‖_F.
    pub c_norm: f64,
    /// max_y ‖Σ̂x·A^(k)·C_y^(k+1)‖.
    pub product_norm: f64,
}

/// Full record of an alternating least-squares run.
#[derive(Debug, Clone)]
pub struct AlsTrace {
    pub records: Vec<AlsRecord>,
    pub stop: StopReason,
    /// ‖A‖_F of the iterate the run stopped at.
    pub final_a_norm: f64,
    pub warnings: Vec<String>,
}

impl AlsTrace {
    /// One JSON object per iteration, one per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for record in &self.records {
            let line = serde_json::to_string(record)
                .map_err(|e| Error::InvalidInput(format!("serialize trace: {e}")))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Plot-ready CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,objective,a_norm,c_norm,product_norm")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?}",
                r.iter, r.objective, r.a_norm, r.c_norm, r.product_norm
            )?;
        }
        Ok(())
    }
}

fn loading_update(m: &SlicedMoments, a: &Basis) -> Result<Loadings> {
    let sa = m.sigma() * a.matrix();
    let gram = sa.transpose() * &sa;
    let chol = nalgebra::Cholesky::new(gram).ok_or(Error::CUpdateSingular)?;
    let mut c = DMatrix::zeros(a.d(), m.h());
    for y in 0..m.h() {
        c.set_column(y, &chol.solve(&(sa.transpose() * m.centered_mean(y))));
    }
    Loadings::new(c)
}

/// Solves {Σ_y f_y(C_yᵀ⊗Σ̂x)ᵀ(C_yᵀ⊗Σ̂x) + τI}·vec(A) = Σ_y f_y(C_yᵀ⊗Σ̂x)ᵀ(X̄_y−X̄)
/// by materializing the p·d × p·d normal matrix.
fn basis_update_dense(m: &SlicedMoments, c: &Loadings, tau: f64) -> Result<Basis> {
    let (p, d) = (m.p(), c.d());
    let mut w = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(p, d);
    for y in 0..m.h() {
        let cy = c.column(y);
        w += m.f()[y] * &cy * cy.transpose();
        b += m.f()[y] * m.centered_mean(y) * cy.transpose();
    }
    let rhs_mat = m.sigma() * b;
    let rhs = DVector::from_column_slice(rhs_mat.as_slice());
    let s2 = m.sigma() * m.sigma();
    let normal = w.kronecker(&s2) + DMatrix::identity(p * d, p * d) * tau;
    let solution = match nalgebra::Cholesky::new(normal.clone()) {
        Some(chol) => chol.solve(&rhs),
        None => normal
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidInput("basis-update system solve failed".into()))?,
    };
    Basis::new(DMatrix::from_column_slice(p, d, solution.as_slice()))
}

/// Same system in its Sylvester form Σ̂x²·A·W + τA = Σ̂x·B, solved in the
/// eigenbases of Σ̂x and W without forming the p·d × p·d operator.
fn basis_update_sylvester(m: &SlicedMoments, c: &Loadings, tau: f64) -> Result<Basis> {
    let (p, d) = (m.p(), c.d());
    let mut w = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(p, d);
    for y in 0..m.h() {
        let cy = c.column(y);
        w += m.f()[y] * &cy * cy.transpose();
        b += m.f()[y] * m.centered_mean(y) * cy.transpose();
    }
    let rhs = m.sigma() * b;
    let (lambda, q) = linalg::sym_eigen_desc(m.sigma());
    let (dvals, u) = linalg::sym_eigen_desc(&w);
    let mut transformed = q.transpose() * rhs * &u;
    for i in 0..p {
        for j in 0..d {
            transformed[(i, j)] /= lambda[i] * lambda[i] * dvals[j].max(0.0) + tau;
        }
    }
    Basis::new(q * transformed * u.transpose())
}

fn basis_update(m: &SlicedMoments, c: &Loadings, tau: f64) -> Result<Basis> {
    if m.p() * c.d() <= KRON_MATERIALIZE_LIMIT {
        basis_update_dense(m, c, tau)
    } else {
        basis_update_sylvester(m, c, tau)
    }
}

/// One alternating step: the loading update followed by the basis update.
///
/// Fails with [`Error::CUpdateSingular`] when AᵀΣ̂x²A is singular, the
/// expected terminal state of the degenerate iteration.
pub fn als_step(m: &SlicedMoments, a: &Basis, tau: f64) -> Result<(Loadings, Basis)> {
    if a.p() != m.p() {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} rows, moments have p = {}",
            a.p(),
            m.p()
        )));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be > 0, got {tau}")));
    }
    let c = loading_update(m, a)?;
    let a_next = basis_update(m, &c, tau)?;
    Ok((c, a_next))
}

/// Runs the alternating iteration and records the full trajectory.
///
/// The `iter`-th record holds the basis norm *before* the step and the
/// loadings computed from it, so the objective column
/// G_tau(A^(k), C^(k+1)) is non-increasing along the trace. A singular
/// loading update is a stop reason, not an error.
pub fn run_als(m: &SlicedMoments, config: &AlsConfig) -> Result<AlsTrace> {
    config.validate(m)?;

    let mut warnings = Vec::new();
    let (sigma_eigs, _) = linalg::sym_eigen_desc(m.sigma());
    let rank = linalg::numerical_rank(&sigma_eigs, 1e-10);
    if config.d > rank {
        warnings.push(format!(
            "d = {} exceeds numerical rank {} of the covariance",
            config.d, rank
        ));
    }

    let mut a = match &config.initial_basis {
        Some(a0) => a0.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            let gaussian = DMatrix::from_fn(m.p(), config.d, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * config.init_scale
            });
            Basis::new(gaussian)?
        }
    };

    let mut records = Vec::new();
    let mut iter = 0usize;
    let stop = loop {
        let a_norm = a.norm();
        if a_norm < config.a_norm_tolerance {
            break StopReason::ANormBelowTolerance;
        }
        if iter >= config.max_iters {
            break StopReason::MaxIters;
        }
        let c = match loading_update(m, &a) {
            Ok(c) => c,
            Err(Error::CUpdateSingular) => break StopReason::CUpdateSingular,
            Err(other) => return Err(other),
        };
        let objective = eval_g_tau(m, &a, &c, config.tau)?;
        let product_norm =
            linalg::max_or_zero((0..m.h()).map(|y| (m.sigma() * a.matrix() * c.column(y)).norm()));
        records.push(AlsRecord {
            iter,
            objective,
            a_norm,
            c_norm: c.norm(),
            product_norm,
        });
        let a_next = basis_update(m, &c, config.tau)?;
        let delta = (a_next.matrix() - a.matrix()).norm();
        a = a_next;
        iter += 1;
        if delta < config.iterate_tolerance {
            break StopReason::IterateConverged;
        }
    };

    Ok(AlsTrace {
        records,
        stop,
        final_a_norm: a.norm(),
        warnings,
    })
}

/// Outcome of the minimizer-existence test.
///
/// The minimizer set of G_tau is non-empty exactly when Σ̂x annihilates
/// every centered slice mean; `witnesses` lists the slices where it does
/// not (so `exists` is true iff `witnesses` is empty). When the minimizer
/// exists it is the zero basis, with minimum Σ_y f_y‖X̄_y−X̄‖².
#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub exists: bool,
    /// 0-based indices of slices with ‖Σ̂x(X̄_y−X̄)‖ above the threshold.
    pub witnesses: Vec<usize>,
    pub threshold: f64,
}

/// Default witness threshold: 1e-10 · ‖Σ̂x‖_F · max_y ‖X̄_y−X̄‖.
pub fn default_existence_threshold(m: &SlicedMoments) -> f64 {
    let mean_scale = linalg::max_or_zero((0..m.h()).map(|y| m.centered_mean(y).norm()));
    1e-10 * m.sigma().norm() * mean_scale
}

/// Existence test with an explicit threshold (must be non-negative).
pub fn check_existence_with(m: &SlicedMoments, threshold: f64) -> Result<ExistenceReport> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidInput("threshold must be non-negative".into()));
    }
    let witnesses: Vec<usize> = (0..m.h())
        .filter(|&y| (m.sigma() * m.centered_mean(y)).norm() > threshold)
        .collect();
    Ok(ExistenceReport {
        exists: witnesses.is_empty(),
        witnesses,
        threshold,
    })
}

/// Existence test at the default threshold.
pub fn check_existence(m: &SlicedMoments) -> ExistenceReport {
    check_existence_with(m, default_existence_threshold(m))
        .expect("default threshold is non-negative")
}

/// Builds an explicit pair (A, C) with G_tau(A, C) < G_tau(0, C), certifying
/// that the ridge minimizer does not exist.
///
/// The basis columns are ε times orthonormal eigenvectors of Σ̂x with
/// positive eigenvalues, led by the one most aligned with the centered mean
/// of the most separated slice; the loadings are zero except in that slice,
/// where they take their closed-form optimum. Returns the pair together
/// with the analytic gap −f_{y0}·Σ_cols((X̄_{y0}−X̄)ᵀq)² + τ·d·ε², which is
/// strictly negative for any `epsilon_fraction` in (0, 1).
pub fn construct_counterexample(
    m: &SlicedMoments,
    tau: f64,
    d: usize,
    epsilon_fraction: f64,
) -> Result<(Basis, Loadings, f64)> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be > 0, got {tau}")));
    }
    if epsilon_fraction.is_nan() || epsilon_fraction <= 0.0 || epsilon_fraction >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "epsilon_fraction must lie in (0, 1), got {epsilon_fraction}"
        )));
    }
    if d < 1 || d > m.p() {
        return Err(Error::InvalidInput(format!(
            "d must be in 1..={}, got {d}",
            m.p()
        )));
    }

    let (lambda, q) = linalg::sym_eigen_desc(m.sigma());
    let positive: Vec<usize> = (0..m.p())
        .filter(|&i| lambda[i] > 1e-10 * lambda[0].max(0.0))
        .collect();
    if positive.len() < d {
        return Err(Error::InsufficientRank {
            rank: positive.len(),
            d,
        });
    }

    // Most separated slice.
    let threshold = default_existence_threshold(m);
    let mut y0 = None;
    let mut best = threshold;
    for y in 0..m.h() {
        let norm = (m.sigma() * m.centered_mean(y)).norm();
        if norm > best {
            best = norm;
            y0 = Some(y);
        }
    }
    let y0 = y0.ok_or(Error::MinimizerExists)?;
    let mean0 = m.centered_mean(y0);

    // Positive-eigenvalue eigenvector most aligned with that slice mean.
    let star = positive
        .iter()
        .copied()
        .max_by(|&i, &j| {
            let vi = q.column(i).dot(mean0).abs();
            let vj = q.column(j).dot(mean0).abs();
            vi.partial_cmp(&vj)
                .expect("finite projections")
                .then(j.cmp(&i))
        })
        .expect("at least one positive eigenvalue");

    let mut columns = vec![star];
    columns.extend(positive.iter().copied().filter(|&i| i != star).take(d - 1));

    let proj_star = q.column(star).dot(mean0).abs();
    if proj_star == 0.0 {
        return Err(Error::MinimizerExists);
    }
    let epsilon = epsilon_fraction * (m.f()[y0] / (tau * d as f64)).sqrt() * proj_star;

    let mut a = DMatrix::zeros(m.p(), d);
    let mut c = DMatrix::zeros(d, m.h());
    let mut projection_sum = 0.0;
    for (k, &i) in columns.iter().enumerate() {
        let proj = q.column(i).dot(mean0);
        a.set_column(k, &(q.column(i) * epsilon));
        c[(k, y0)] = proj / (epsilon * lambda[i]);
        projection_sum += proj * proj;
    }
    let gap = -m.f()[y0] * projection_sum + tau * d as f64 * epsilon * epsilon;

    Ok((Basis::new(a)?, Loadings::new(c)?, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{compute_sliced_moments, slice_by_response, Dataset};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_slice_moments() -> SlicedMoments {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 2).unwrap();
        compute_sliced_moments(&ds, &assign).unwrap()
    }

    fn balanced_moments() -> SlicedMoments {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 2.0, 2.0, 0.0, 0.0, 2.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 2).unwrap();
        compute_sliced_moments(&ds, &assign).unwrap()
    }

    fn random_moments(rng: &mut ChaCha8Rng, n: usize, p: usize, h: usize) -> SlicedMoments {
        use rand_distr::{Distribution, StandardNormal};
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
        let y = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, h).unwrap();
        compute_sliced_moments(&ds, &assign).unwrap()
    }

    fn column_basis(values: &[f64]) -> Basis {
        Basis::new(DMatrix::from_column_slice(values.len(), 1, values)).unwrap()
    }

    #[test]
    fn als_step_hand_iteration() {
        let m = two_slice_moments();
        let (c1, a1) = als_step(&m, &column_basis(&[0.0, 1.0]), 1.0).unwrap();
        assert_abs_diff_eq!(
            c1.matrix().as_slice(),
            [-1.0, 1.0].as_slice(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            a1.matrix().as_slice(),
            [0.0, 0.5].as_slice(),
            epsilon = 1e-12
        );

        let (c2, a2) = als_step(&m, &a1, 1.0).unwrap();
        assert_abs_diff_eq!(
            c2.matrix().as_slice(),
            [-2.0, 2.0].as_slice(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            a2.matrix().as_slice(),
            [0.0, 0.4].as_slice(),
            epsilon = 1e-12
        );

        let (c3, a3) = als_step(&m, &a2, 1.0).unwrap();
        assert_abs_diff_eq!(
            c3.matrix().as_slice(),
            [-2.5, 2.5].as_slice(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            a3.matrix().as_slice(),
            [0.0, 10.0 / 29.0].as_slice(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn dense_and_sylvester_updates_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_moments(&mut rng, 50, 5, 4);
            let a = Basis::new(DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>() - 0.5)).unwrap();
            let c = loading_update(&m, &a).unwrap();
            let tau = 0.3;
            let dense = basis_update_dense(&m, &c, tau).unwrap();
            let sylvester = basis_update_sylvester(&m, &c, tau).unwrap();
            let scale = dense.norm().max(1e-3);
            assert!(
                (dense.matrix() - sylvester.matrix()).norm() <= 1e-9 * scale,
                "solver paths disagree"
            );
        }
    }

    #[test]
    fn run_als_reproduces_hand_sequence() {
        let m = two_slice_moments();
        let mut config = AlsConfig::new(1.0, 1);
        config.initial_basis = Some(column_basis(&[0.0, 1.0]));
        config.max_iters = 10;
        config.a_norm_tolerance = 1e-9;
        let trace = run_als(&m, &config).unwrap();
        let expected = [1.0, 0.5, 0.4, 10.0 / 29.0];
        for (record, want) in trace.records.iter().zip(expected) {
            assert_abs_diff_eq!(record.a_norm, want, epsilon = 1e-12);
        }
        assert_eq!(trace.stop, StopReason::MaxIters);
        // norms decrease, loadings grow, the product stays bounded
        for pair in trace.records.windows(2) {
            assert!(pair[1].a_norm < pair[0].a_norm);
            assert!(pair[1].c_norm > pair[0].c_norm);
            assert!(pair[1].product_norm <= 1.5);
        }
    }

    #[test]
    fn balanced_data_collapses_in_one_step() {
        let m = balanced_moments();
        let mut config = AlsConfig::new(1.0, 1);
        config.rng_seed = 9;
        config.max_iters = 50;
        let trace = run_als(&m, &config).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.stop, StopReason::ANormBelowTolerance);
        assert_eq!(trace.final_a_norm, 0.0);
    }

    #[test]
    fn objective_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for seed in 0..5u64 {
            let m = random_moments(&mut rng, 80, 4, 5);
            let mut config = AlsConfig::new(0.5, 2);
            config.rng_seed = seed;
            config.max_iters = 100;
            let trace = run_als(&m, &config).unwrap();
            let initial = trace.records[0].objective;
            for pair in trace.records.windows(2) {
                assert!(
                    pair[1].objective <= pair[0].objective + 1e-10 * initial.abs(),
                    "objective increased: {} -> {}",
                    pair[0].objective,
                    pair[1].objective
                );
            }
        }
    }

    #[test]
    fn existence_fixture_has_two_witnesses() {
        let report = check_existence(&two_slice_moments());
        assert!(!report.exists);
        assert_eq!(report.witnesses, vec![0, 1]);
    }

    #[test]
    fn existence_constant_predictors() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 2).unwrap();
        let m = compute_sliced_moments(&ds, &assign).unwrap();
        assert!(check_existence(&m).exists);
    }

    #[test]
    fn existence_single_slice() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 1).unwrap();
        let m = compute_sliced_moments(&ds, &assign).unwrap();
        assert!(check_existence(&m).exists);
    }

    #[test]
    fn counterexample_matches_hand_construction() {
        let m = two_slice_moments();
        let (a, c, gap) = construct_counterexample(&m, 1.0, 1, 0.5).unwrap();
        let epsilon = 0.5 * (0.5f64).sqrt();
        assert_abs_diff_eq!(a.matrix()[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a.matrix()[(1, 0)].abs(), epsilon, epsilon = 1e-12);
        // loading in the witness slice satisfies eps * C = q*' m, so |C| = 1/eps
        assert_abs_diff_eq!(c.matrix()[(0, 0)].abs(), 1.0 / epsilon, epsilon = 1e-10);
        assert_abs_diff_eq!(c.matrix()[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gap, -0.375, epsilon = 1e-12);

        // the fixture-level criterion value quoted in the module docs
        let value = eval_g_tau(&m, &a, &c, 1.0).unwrap();
        assert_abs_diff_eq!(value, 0.625, epsilon = 1e-12);
    }

    #[test]
    fn counterexample_gap_matches_direct_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let m = random_moments(&mut rng, 60, 5, 4);
            let tau = 0.4;
            let (a, c, gap) = construct_counterexample(&m, tau, 2, 0.5).unwrap();
            let zero = Basis::new(DMatrix::zeros(5, 2)).unwrap();
            let direct =
                eval_g_tau(&m, &a, &c, tau).unwrap() - eval_g_tau(&m, &zero, &c, tau).unwrap();
            assert!(gap < 0.0);
            assert!(
                (gap - direct).abs() <= 1e-10 * gap.abs().max(direct.abs()),
                "analytic {gap} vs direct {direct}"
            );
        }
    }

    #[test]
    fn counterexample_gap_negative_for_all_fractions() {
        let m = two_slice_moments();
        for fraction in [0.1, 0.5, 0.9] {
            let (_, _, gap) = construct_counterexample(&m, 1.0, 1, fraction).unwrap();
            assert!(gap < 0.0, "gap {gap} at fraction {fraction}");
        }
    }

    #[test]
    fn counterexample_requires_rank() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 2).unwrap();
        let m = compute_sliced_moments(&ds, &assign).unwrap();
        // covariance has rank 1, asking for d = 2 must fail
        assert!(matches!(
            construct_counterexample(&m, 1.0, 2, 0.5),
            Err(Error::InsufficientRank { rank: 1, d: 2 })
        ));
    }

    #[test]
    fn counterexample_refused_when_minimizer_exists() {
        let m = balanced_moments();
        assert!(matches!(
            construct_counterexample(&m, 1.0, 1, 0.5),
            Err(Error::MinimizerExists)
        ));
    }

    #[test]
    fn existence_dichotomy() {
        // exists = true: zero basis is a global minimizer
        let m = balanced_moments();
        let report = check_existence(&m);
        assert!(report.exists);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let zero = Basis::new(DMatrix::zeros(2, 1)).unwrap();
        for _ in 0..20 {
            let a = Basis::new(DMatrix::from_fn(2, 1, |_, _| rng.random::<f64>() - 0.5)).unwrap();
            let c =
                Loadings::new(DMatrix::from_fn(1, 2, |_, _| rng.random::<f64>() - 0.5)).unwrap();
            let at_a = eval_g_tau(&m, &a, &c, 0.7).unwrap();
            let at_zero = eval_g_tau(&m, &zero, &c, 0.7).unwrap();
            assert!(at_a >= at_zero - 1e-12);
        }

        // exists = false: the counterexample strictly improves on A = 0
        let m = two_slice_moments();
        assert!(!check_existence(&m).exists);
        let (_, _, gap) = construct_counterexample(&m, 0.7, 1, 0.5).unwrap();
        assert!(gap < 0.0);
    }

    #[test]
    fn trace_serialization_formats() {
        let m = two_slice_moments();
        let mut config = AlsConfig::new(1.0, 1);
        config.initial_basis = Some(column_basis(&[0.0, 1.0]));
        config.max_iters = 3;
        let trace = run_als(&m, &config).unwrap();

        let mut jsonl = Vec::new();
        trace.write_jsonl(&mut jsonl).unwrap();
        let text = String::from_utf8(jsonl).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["iter"], 0);
        assert_eq!(first["a_norm"], 1.0);

        let mut csv_out = Vec::new();
        trace.write_csv(&mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        assert!(text.starts_with("iter,objective,a_norm,c_norm,product_norm\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn run_als_warns_when_d_exceeds_rank() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0]);
        let ds = Dataset::new(x, y).unwrap();
        let assign = slice_by_response(&ds, 2).unwrap();
        let m = compute_sliced_moments(&ds, &assign).unwrap();
        let mut config = AlsConfig::new(1.0, 2);
        config.max_iters = 5;
        let trace = run_als(&m, &config).unwrap();
        assert!(!trace.warnings.is_empty());
    }

    #[test]
    fn config_validation() {
        let m = two_slice_moments();
        assert!(run_als(&m, &AlsConfig::new(0.0, 1)).is_err());
        assert!(run_als(&m, &AlsConfig::new(-1.0, 1)).is_err());
        assert!(run_als(&m, &AlsConfig::new(1.0, 0)).is_err());
        assert!(run_als(&m, &AlsConfig::new(1.0, 3)).is_err());
    }
}
