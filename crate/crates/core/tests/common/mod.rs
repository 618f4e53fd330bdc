//! Shared generators and independent oracles for the integration and
//! acceptance suites. Everything here is deliberately brute-force so it
//! cannot share a code path with the implementations it checks.

// each test target uses a different subset of these helpers
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sirkit::criteria::{eval_g_tau, Basis, Loadings};
use sirkit::moments::{compute_sliced_moments, slice_by_response, Dataset, SlicedMoments};
use sirkit::rsir::profile_h;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let x = DMatrix::from_fn(n, p, |_, _| randn(rng));
    let y = DVector::from_fn(n, |_, _| rng.random::<f64>());
    Dataset::new(x, y).expect("random dataset is valid")
}

pub fn random_moments(rng: &mut ChaCha8Rng, n: usize, p: usize, h: usize) -> SlicedMoments {
    let ds = random_dataset(rng, n, p);
    let assign = slice_by_response(&ds, h).expect("valid slicing");
    compute_sliced_moments(&ds, &assign).expect("valid moments")
}

pub fn random_basis(rng: &mut ChaCha8Rng, p: usize, d: usize) -> Basis {
    Basis::new(DMatrix::from_fn(p, d, |_, _| randn(rng))).expect("finite basis")
}

pub fn random_loadings(rng: &mut ChaCha8Rng, d: usize, h: usize) -> Loadings {
    Loadings::new(DMatrix::from_fn(d, h, |_, _| randn(rng))).expect("finite loadings")
}

pub fn zero_basis(p: usize, d: usize) -> Basis {
    Basis::new(DMatrix::zeros(p, d)).expect("zero basis")
}

/// The four-point fixture's moments: identity covariance, centered slice
/// means (0, -1) and (0, 1), frequencies 1/2.
pub fn fixture_moments() -> SlicedMoments {
    let ds = sirkit::sim::builtin_2d_dataset();
    let assign = slice_by_response(&ds, 2).expect("two slices");
    compute_sliced_moments(&ds, &assign).expect("fixture moments")
}

/// Central finite difference of G_tau in one coordinate of A.
pub fn fd_grad_a(
    m: &SlicedMoments,
    a: &Basis,
    c: &Loadings,
    tau: f64,
    index: usize,
    step: f64,
) -> f64 {
    let mut plus = a.matrix().clone();
    let mut minus = a.matrix().clone();
    plus.as_mut_slice()[index] += step;
    minus.as_mut_slice()[index] -= step;
    let up = eval_g_tau(m, &Basis::new(plus).unwrap(), c, tau).unwrap();
    let down = eval_g_tau(m, &Basis::new(minus).unwrap(), c, tau).unwrap();
    (up - down) / (2.0 * step)
}

/// Central finite difference of G_tau in one coordinate of C.
pub fn fd_grad_c(
    m: &SlicedMoments,
    a: &Basis,
    c: &Loadings,
    tau: f64,
    row: usize,
    col: usize,
    step: f64,
) -> f64 {
    let mut plus = c.matrix().clone();
    let mut minus = c.matrix().clone();
    plus[(row, col)] += step;
    minus[(row, col)] -= step;
    let up = eval_g_tau(m, a, &Loadings::new(plus).unwrap(), tau).unwrap();
    let down = eval_g_tau(m, a, &Loadings::new(minus).unwrap(), tau).unwrap();
    (up - down) / (2.0 * step)
}

/// 720 unit vectors evenly spread over the circle.
pub fn circle_directions(count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            DVector::from_vec(vec![theta.cos(), theta.sin()])
        })
        .collect()
}

/// Fibonacci-lattice unit vectors on the sphere.
pub fn sphere_directions(count: usize) -> Vec<DVector<f64>> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * i as f64 / golden;
            DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Brute-force directional minimizer of the profiled criterion over a
/// grid of unit vectors; the independent oracle for the d = 1 eigen
/// characterization.
pub fn grid_profile_minimizer(
    m: &SlicedMoments,
    directions: &[DVector<f64>],
    tau: f64,
) -> DVector<f64> {
    let mut best_value = f64::INFINITY;
    let mut best = directions[0].clone();
    for dir in directions {
        let basis = Basis::new(DMatrix::from_column_slice(dir.len(), 1, dir.as_slice())).unwrap();
        let value = profile_h(m, &basis, tau).expect("unit direction is full rank");
        if value < best_value {
            best_value = value;
            best = dir.clone();
        }
    }
    best
}
