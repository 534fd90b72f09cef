//! Lyapunov exponents of random products of 2×2 complex matrices.
//!
//! A cocycle is a finite family of invertible matrices `A_1..A_m` drawn
//! i.i.d. with weights `p_1..p_m` ([`FiniteCocycle`]), or more generally a
//! matrix that depends on a finite window of the symbol sequence
//! ([`WindowCocycle`]). The crate estimates the extremal exponents λ± of
//! their products, solves for stationary measures on the projective line,
//! approximates the Oseledets directions, and builds an explicit family of
//! Hölder-close cocycles whose exponents collapse to zero.
//!
//! All randomness is seeded: results depend only on the inputs and the
//! seed, never on the thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod cocycle_file;
pub mod error;
pub mod experiments;
pub mod exponents;
pub mod holder;
pub mod oseledets;
pub mod projective;
pub mod report;
pub mod stationary;

pub use cocycle::{
    cocycle_distance, sample_path, window_eval, window_product, word_product, Cocycle,
    FiniteCocycle, PathSample, RenormalizedProduct, WindowCocycle, WindowField,
};
pub use error::{Error, Result};
pub use experiments::{Budgets, PerturbationSpec, SweepResult, SweepRow};
pub use exponents::{EstimateMethod, ExponentEstimate};
pub use holder::{HolderConstruction, ShiftMetricParams};
pub use oseledets::OseledetsFrame;
pub use projective::{angle_between, mobius_apply, proj_apply, ExtComplex, Mat2C, ProjPoint};
pub use report::{emit_report, Format, Report};
pub use stationary::{ParticleMeasure, UStateSample};
