//! Parameter sweeps: continuity in the cocycle and in the weights, and
//! jittering the support into clusters of nearby atoms.

use serde::{Deserialize, Serialize};

use crate::cocycle::{cocycle_distance, weight_distance, Cocycle, FiniteCocycle};
use crate::error::{Error, Result};
use crate::exponents::estimate_extremal_mc;
use crate::projective::{operator_norm, Mat2C};
use crate::report::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub n_steps: usize,
    pub n_trials: usize,
}

impl Budgets {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_trials == 0 {
            return Err(Error::InvalidParams("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// `[[0, −1], [1, 0]]`, the generator of rotations.
pub const ROTATION_GENERATOR: Mat2C = Mat2C::real(0.0, -1.0, 1.0, 0.0);

fn normalize(m: Mat2C) -> Result<Mat2C> {
    let n = operator_norm(&m);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParams(
            "perturbation direction must be non-zero".into(),
        ));
    }
    Ok(m.scale_real(1.0 / n))
}

/// How a sweep moves away from the base cocycle at size `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Unit-norm additive directions `D_i`: `A_i ↦ A_i + γ D_i`. `None`
    /// leaves the matrices alone.
    pub directions: Option<Vec<Mat2C>>,
    /// Weight direction `u` with `Σ u = 0`, `Σ |u| = 1`: `p ↦ p + γ u`.
    pub weight_direction: Option<Vec<f64>>,
}

impl PerturbationSpec {
    /// The default family `D_i ∝ J + S_i / 2`, a rotation mixed with an
    /// upper shear on even atoms and a lower shear on odd ones. No line is
    /// invariant under all perturbed atoms of a diagonal base.
    pub fn default_matrix(m: usize) -> Self {
        let directions = (0..m)
            .map(|i| {
                let shear = if i % 2 == 0 {
                    Mat2C::real(0.0, 1.0, 0.0, 0.0)
                } else {
                    Mat2C::real(0.0, 0.0, 1.0, 0.0)
                };
                normalize(ROTATION_GENERATOR + shear.scale_real(0.5)).expect("non-zero")
            })
            .collect();
        PerturbationSpec {
            directions: Some(directions),
            weight_direction: None,
        }
    }

    /// `A_i ↦ A_i + γ J / ‖J‖` for every atom.
    pub fn rotation(m: usize) -> Self {
        PerturbationSpec {
            directions: Some(vec![ROTATION_GENERATOR; m]),
            weight_direction: None,
        }
    }

    /// Explicit directions, rescaled to unit operator norm, and an optional
    /// weight direction, rescaled to total variation 1.
    pub fn custom(
        directions: Option<Vec<Mat2C>>,
        weight_direction: Option<Vec<f64>>,
    ) -> Result<Self> {
        let directions = directions
            .map(|ds| ds.into_iter().map(normalize).collect::<Result<Vec<_>>>())
            .transpose()?;
        let weight_direction = weight_direction
            .map(|u| {
                let total: f64 = u.iter().sum();
                let tv: f64 = u.iter().map(|x| x.abs()).sum();
                if total.abs() > 1e-12 || !(tv > 0.0) {
                    return Err(Error::InvalidParams(
                        "weight direction must be non-zero and sum to 0".into(),
                    ));
                }
                Ok(u.iter().map(|x| x / tv).collect())
            })
            .transpose()?;
        Ok(PerturbationSpec {
            directions,
            weight_direction,
        })
    }

    /// The cocycle at distance `γ` from `base`.
    pub fn apply(&self, base: &FiniteCocycle, gamma: f64) -> Result<FiniteCocycle> {
        let m = base.len();
        let matrices = match &self.directions {
            None => base.matrices().to_vec(),
            Some(ds) => {
                if ds.len() != m {
                    return Err(Error::AlphabetMismatch {
                        left: m,
                        right: ds.len(),
                    });
                }
                base.matrices()
                    .iter()
                    .zip(ds)
                    .map(|(a, d)| *a + d.scale_real(gamma))
                    .collect()
            }
        };
        for (index, a) in matrices.iter().enumerate() {
            if a.is_singular() {
                return Err(Error::PerturbationLeavesGL {
                    index,
                    det: a.det().norm(),
                });
            }
        }
        let weights = match &self.weight_direction {
            None => base.weights().to_vec(),
            Some(u) => {
                if u.len() != m {
                    return Err(Error::AlphabetMismatch {
                        left: m,
                        right: u.len(),
                    });
                }
                let p: Vec<f64> = base
                    .weights()
                    .iter()
                    .zip(u)
                    .map(|(p, u)| p + gamma * u)
                    .collect();
                if p.iter().any(|x| !(*x > 0.0)) {
                    return Err(Error::InvalidParams(format!(
                        "weight perturbation of size {gamma} leaves the simplex"
                    )));
                }
                p
            }
        };
        FiniteCocycle::new(matrices, weights)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Swept parameter (`γ` or `δ`).
    pub param: f64,
    pub lambda_plus: f64,
    pub stderr_plus: f64,
    pub lambda_minus: f64,
    pub stderr_minus: f64,
    /// Operator-norm distance of the matrices from the base.
    pub matrix_distance: f64,
    /// Total variation distance of the weights from the base (for jitter:
    /// 0, since supports differ).
    pub weight_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: String,
    pub param_name: String,
    pub seed: u64,
    pub budgets: Budgets,
    /// Rows in the order swept (descending parameter, base last).
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `|λ₊(row) − λ₊(base)|` for every row, base being the last row.
    pub fn deviations(&self) -> Vec<f64> {
        let base = self.rows.last().map_or(f64::NAN, |r| r.lambda_plus);
        self.rows
            .iter()
            .map(|r| (r.lambda_plus - base).abs())
            .collect()
    }

    pub fn to_report(&self) -> Report {
        let mut report = Report::new(
            &self.kind,
            &[
                &self.param_name,
                "lambda_plus",
                "stderr_plus",
                "lambda_minus",
                "stderr_minus",
                "matrix_distance",
                "weight_distance",
            ],
        )
        .with_meta("seed", self.seed)
        .with_meta("n_steps", self.budgets.n_steps)
        .with_meta("n_trials", self.budgets.n_trials);
        for r in &self.rows {
            report
                .push_row(vec![
                    r.param,
                    r.lambda_plus,
                    r.stderr_plus,
                    r.lambda_minus,
                    r.stderr_minus,
                    r.matrix_distance,
                    r.weight_distance,
                ])
                .expect("fixed column count");
        }
        report
    }
}

fn check_descending(values: &[f64], name: &str) -> Result<()> {
    if values.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "{name} values must be finite and ≥ 0"
        )));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams(format!(
            "{name} values must be strictly descending"
        )));
    }
    Ok(())
}

/// Estimate λ± along `A + γ·direction` for each `γ`, ending with `γ = 0`.
///
/// Every row uses the same seed, so the rows share their random paths
/// whenever the weights agree and differences between rows are not masked
/// by independent sampling noise.
pub fn run_continuity_sweep(
    base: &FiniteCocycle,
    spec: &PerturbationSpec,
    gammas: &[f64],
    budgets: Budgets,
    seed: u64,
) -> Result<SweepResult> {
    budgets.validate()?;
    check_descending(gammas, "gamma")?;
    let mut gammas = gammas.to_vec();
    if gammas.last() != Some(&0.0) {
        gammas.push(0.0);
    }
    let rows = gammas
        .iter()
        .map(|&gamma| {
            let c = if gamma == 0.0 {
                base.clone()
            } else {
                spec.apply(base, gamma)?
            };
            let e = estimate_extremal_mc(&c, budgets.n_steps, budgets.n_trials, seed)?;
            Ok(SweepRow {
                param: gamma,
                lambda_plus: e.lambda_plus,
                stderr_plus: e.stderr_plus,
                lambda_minus: e.lambda_minus,
                stderr_minus: e.stderr_minus,
                matrix_distance: cocycle_distance(base, &c)?,
                weight_distance: weight_distance(base.weights(), c.weights())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind: "sweep".into(),
        param_name: "gamma".into(),
        seed,
        budgets,
        rows,
    })
}

/// Directions `E_j ∝ cos θ_j J + sin θ_j diag(1, −1)`, `θ_j = 2πj/c`.
pub fn cluster_directions(c: usize) -> Vec<Mat2C> {
    (0..c)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / c as f64;
            let m = ROTATION_GENERATOR.scale_real(theta.cos())
                + Mat2C::diag(1.0, -1.0).scale_real(theta.sin());
            normalize(m).expect("J and diag(1,-1) are independent")
        })
        .collect()
}

/// Replace each atom `A_i` by `c = split.len()` atoms `A_i + δ E_j` with
/// weights `p_i · split_j`.
pub fn jitter_support(base: &FiniteCocycle, delta: f64, split: &[f64]) -> Result<FiniteCocycle> {
    if split.is_empty() || split.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParams(
            "split fractions must be positive".into(),
        ));
    }
    let total: f64 = split.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "split fractions sum to {total}, not 1"
        )));
    }
    let dirs = cluster_directions(split.len());
    let mut matrices = Vec::with_capacity(base.len() * split.len());
    let mut weights = Vec::with_capacity(base.len() * split.len());
    for (i, (a, p)) in base
        .matrices()
        .iter()
        .zip(base.weights().to_vec())
        .enumerate()
    {
        for (d, s) in dirs.iter().zip(split) {
            let m = *a + d.scale_real(delta);
            if m.is_singular() {
                return Err(Error::PerturbationLeavesGL {
                    index: i,
                    det: m.det().norm(),
                });
            }
            matrices.push(m);
            weights.push(p * s);
        }
    }
    FiniteCocycle::new(matrices, weights)
}

/// Estimate λ± for each jittered support, in the given order of `deltas`.
pub fn run_support_jitter(
    base: &FiniteCocycle,
    deltas: &[f64],
    split: &[f64],
    budgets: Budgets,
    seed: u64,
) -> Result<SweepResult> {
    budgets.validate()?;
    check_descending(deltas, "delta")?;
    let rows = deltas
        .iter()
        .map(|&delta| {
            let c = jitter_support(base, delta, split)?;
            let e = estimate_extremal_mc(&c, budgets.n_steps, budgets.n_trials, seed)?;
            Ok(SweepRow {
                param: delta,
                lambda_plus: e.lambda_plus,
                stderr_plus: e.stderr_plus,
                lambda_minus: e.lambda_minus,
                stderr_minus: e.stderr_minus,
                matrix_distance: delta,
                weight_distance: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind: "jitter".into(),
        param_name: "delta".into(),
        seed,
        budgets,
        rows,
    })
}
