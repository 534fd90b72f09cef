//! Fixtures shared by the benchmarks.

use lyalab::experiments::PerturbationSpec;
use lyalab::holder::diagonal_base;
use lyalab::FiniteCocycle;

pub const WEIGHTS: [f64; 2] = [0.7, 0.3];

/// The diagonal reference cocycle, σ = 2.
pub fn diagonal() -> FiniteCocycle {
    diagonal_base(2.0, WEIGHTS).expect("valid reference cocycle")
}

/// An irreducible perturbation of [`diagonal`].
pub fn perturbed(gamma: f64) -> FiniteCocycle {
    PerturbationSpec::default_matrix(2)
        .apply(&diagonal(), gamma)
        .expect("small perturbations stay invertible")
}
