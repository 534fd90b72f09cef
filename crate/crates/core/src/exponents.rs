//! Estimators for the extremal Lyapunov exponents λ₊ ≥ λ₋.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, FiniteCocycle, ProductAccumulator, SymbolStream, WindowCoder};
use crate::error::{Error, Result};
use crate::stationary::ParticleMeasure;

/// Default word-evaluation budget for [`enumeration_upper_bound`].
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 20_000_000;

/// Off-diagonal tolerance for [`exact_diagonal`], relative to the largest entry.
pub const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    MonteCarlo,
    ExactDiagonal,
    Furstenberg,
    EnumerationBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub stderr_plus: f64,
    pub stderr_minus: f64,
    pub n_steps: usize,
    pub n_trials: usize,
    pub method: EstimateMethod,
}

impl ExponentEstimate {
    /// `λ₊ + λ₋`.
    pub fn sum(&self) -> f64 {
        self.lambda_plus + self.lambda_minus
    }
}

/// Per-trial `(λ₊, λ₋)` along one sampled path of `n_steps` positions.
pub fn trial_exponents<C: Cocycle + ?Sized>(
    cocycle: &C,
    n_steps: usize,
    seed: u64,
    trial: u64,
) -> Result<(f64, f64)> {
    let mut source = SymbolStream::new(cocycle.weights(), seed, trial)?;
    let coder = WindowCoder::new(cocycle.alphabet_size(), cocycle.window_len())?;
    let mut code = 0;
    for _ in 1..cocycle.window_len() {
        code = coder.push(code, source.next_symbol());
    }
    let mut acc = ProductAccumulator::new();
    for _ in 0..n_steps {
        code = coder.push(code, source.next_symbol());
        acc.push(
            cocycle.matrix_at_code(code),
            cocycle.log_abs_det_at_code(code),
        );
    }
    let prod = acc.finish();
    let n = n_steps as f64;
    Ok((prod.log_norm() / n, prod.log_smallest_singular() / n))
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo λ± from `n_trials` independent paths of length `n_steps`.
///
/// Trial `t` draws its symbols from ChaCha stream `t` of `seed`, and trial
/// results are merged in index order, so the estimate does not depend on
/// the thread count.
pub fn estimate_extremal_mc<C: Cocycle + ?Sized>(
    cocycle: &C,
    n_steps: usize,
    n_trials: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    if n_steps == 0 || n_trials == 0 {
        return Err(Error::InvalidParams(
            "n_steps and n_trials must be positive".into(),
        ));
    }
    let per_trial = (0..n_trials as u64)
        .into_par_iter()
        .map(|t| trial_exponents(cocycle, n_steps, seed, t))
        .collect::<Result<Vec<_>>>()?;
    let plus: Vec<f64> = per_trial.iter().map(|t| t.0).collect();
    let minus: Vec<f64> = per_trial.iter().map(|t| t.1).collect();
    let (lambda_plus, stderr_plus) = mean_and_stderr(&plus);
    let (lambda_minus, stderr_minus) = mean_and_stderr(&minus);
    Ok(ExponentEstimate {
        lambda_plus,
        lambda_minus,
        stderr_plus,
        stderr_minus,
        n_steps,
        n_trials,
        method: EstimateMethod::MonteCarlo,
    })
}

/// Exact exponents of a simultaneously diagonal cocycle
/// `A_i = diag(a_i, d_i)`: the two Birkhoff averages `Σ p_i log|a_i|` and
/// `Σ p_i log|d_i|`, ordered.
pub fn exact_diagonal(cocycle: &FiniteCocycle) -> Result<ExponentEstimate> {
    let mut top = 0.0;
    let mut bottom = 0.0;
    for (i, (m, p)) in cocycle.matrices().iter().zip(cocycle.weights()).enumerate() {
        let off = m.off_diagonal();
        if off > DIAGONAL_TOL * m.max_abs() {
            return Err(Error::NotDiagonal {
                index: i,
                off_diagonal: off,
            });
        }
        if *p > 0.0 {
            top += p * m.a.norm().ln();
            bottom += p * m.d.norm().ln();
        }
    }
    Ok(ExponentEstimate {
        lambda_plus: f64::max(top, bottom),
        lambda_minus: f64::min(top, bottom),
        stderr_plus: 0.0,
        stderr_minus: 0.0,
        n_steps: 0,
        n_trials: 0,
        method: EstimateMethod::ExactDiagonal,
    })
}

/// `c_n = (1/n) Σ_{|w| = n} p(w) log ‖A_w‖`, the n-th term of the
/// subadditive sequence whose infimum is λ₊.
pub fn enumeration_upper_bound(cocycle: &FiniteCocycle, n: usize) -> Result<f64> {
    enumeration_upper_bound_with_budget(cocycle, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumeration_upper_bound_with_budget(
    cocycle: &FiniteCocycle,
    n: usize,
    budget: u128,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams(
            "word length must be at least 1".into(),
        ));
    }
    let support: Vec<usize> = (0..cocycle.len())
        .filter(|&i| cocycle.weights()[i] > 0.0)
        .collect();
    let needed = (support.len() as u128)
        .checked_pow(n as u32)
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    // Depth-first over words, sharing prefix products. The first level is
    // split across threads; partial sums are added in symbol order.
    let partial: Vec<f64> = support
        .par_iter()
        .map(|&s| {
            let mut acc = ProductAccumulator::new();
            acc.push(&cocycle.matrices()[s], cocycle.log_abs_dets()[s]);
            enumerate(cocycle, &support, n - 1, acc, cocycle.weights()[s])
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / n as f64)
}

fn enumerate(
    cocycle: &FiniteCocycle,
    support: &[usize],
    remaining: usize,
    acc: ProductAccumulator,
    prob: f64,
) -> f64 {
    if remaining == 0 {
        return prob * acc.log_norm();
    }
    support
        .iter()
        .map(|&s| {
            let mut next = acc;
            next.push(&cocycle.matrices()[s], cocycle.log_abs_dets()[s]);
            enumerate(
                cocycle,
                support,
                remaining - 1,
                next,
                prob * cocycle.weights()[s],
            )
        })
        .sum()
}

/// `∫∫ log (‖A_x v‖ / ‖v‖) dp(x) dη(v)`.
pub fn furstenberg_integral(cocycle: &FiniteCocycle, eta: &ParticleMeasure) -> Result<f64> {
    eta.check_normalized()?;
    let mut total = 0.0;
    for (m, p) in cocycle.matrices().iter().zip(cocycle.weights()) {
        if *p == 0.0 {
            continue;
        }
        let inner: f64 = eta
            .particles()
            .iter()
            .map(|(v, w)| {
                let image = m.apply(v.vector());
                let norm_sq = image[0].norm_sqr() + image[1].norm_sqr();
                w * 0.5 * norm_sq.ln()
            })
            .sum();
        total += p * inner;
    }
    Ok(total)
}
