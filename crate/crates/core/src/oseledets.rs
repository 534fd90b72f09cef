//! Finite-depth approximants of the Oseledets directions E^u and E^s.
//!
//! E^u at a point depends only on the past symbols and is approximated by
//! the most expanded image direction of the backward product; E^s depends
//! only on the future and is the most contracted input direction of the
//! forward product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{word_product, Cocycle, FiniteCocycle, RenormalizedProduct, SymbolStream};
use crate::error::{Error, Result};
use crate::projective::{angle_between, orthogonal, top_singular_directions, ProjPoint};

/// Products with `σ₁/σ₂` below this ratio do not resolve a direction.
pub const MIN_GAP_RATIO: f64 = 1.0 + 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OseledetsFrame {
    pub unstable: ProjPoint,
    pub stable: ProjPoint,
    pub depth: usize,
    /// `(log σ₁ − log σ₂) / depth` of the backward product.
    pub gap_estimate: f64,
}

fn log_gap(prod: &RenormalizedProduct) -> f64 {
    (prod.log_norm() - prod.log_smallest_singular()).max(0.0)
}

fn resolved_product(cocycle: &FiniteCocycle, word: &[usize]) -> Result<(RenormalizedProduct, f64)> {
    if word.is_empty() {
        return Err(Error::InvalidParams(
            "word must have at least one symbol".into(),
        ));
    }
    let prod = word_product(cocycle, word)?;
    let gap = log_gap(&prod);
    if gap < MIN_GAP_RATIO.ln() {
        return Err(Error::DegenerateGap { ratio: gap.exp() });
    }
    Ok((prod, gap))
}

/// E^u from `past_word = (x_{-n}, …, x_{-1})`: the top left singular
/// direction of `A_{x_{-1}} ⋯ A_{x_{-n}}`.
pub fn estimate_unstable(cocycle: &FiniteCocycle, past_word: &[usize]) -> Result<ProjPoint> {
    let (prod, _) = resolved_product(cocycle, past_word)?;
    Ok(singular_directions(&prod)?.0)
}

/// E^s from `future_word = (x_0, …, x_{n-1})`: the right singular
/// direction of `A_{x_{n-1}} ⋯ A_{x_0}` for its smallest singular value.
pub fn estimate_stable(cocycle: &FiniteCocycle, future_word: &[usize]) -> Result<ProjPoint> {
    let (prod, _) = resolved_product(cocycle, future_word)?;
    Ok(orthogonal(&singular_directions(&prod)?.1))
}

fn singular_directions(prod: &RenormalizedProduct) -> Result<(ProjPoint, ProjPoint)> {
    top_singular_directions(&prod.direction).ok_or(Error::DegenerateGap { ratio: 1.0 })
}

/// Both directions at the point whose past is `past_word` and whose future
/// is `future_word`.
pub fn estimate_frame(
    cocycle: &FiniteCocycle,
    past_word: &[usize],
    future_word: &[usize],
) -> Result<OseledetsFrame> {
    let (back, gap) = resolved_product(cocycle, past_word)?;
    let unstable = singular_directions(&back)?.0;
    let stable = estimate_stable(cocycle, future_word)?;
    Ok(OseledetsFrame {
        unstable,
        stable,
        depth: past_word.len(),
        gap_estimate: gap / past_word.len() as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleExperiment {
    /// Share of non-excluded points where both angle conditions hold.
    pub fraction: f64,
    pub n_points: usize,
    /// Points dropped because a frame was not resolved.
    pub n_excluded: usize,
    pub depth: usize,
    pub eps: f64,
}

/// Compare the Oseledets frames of `a` and `b` on common random words.
///
/// Point `i` draws `depth` past and `depth` future symbols from stream `i`
/// of `seed` with the weights of `a`. A point counts when both
/// `∠(E^u_a, E^u_b) ≤ eps` and `∠(E^s_a, E^s_b) ≤ eps`.
pub fn angle_convergence_experiment(
    a: &FiniteCocycle,
    b: &FiniteCocycle,
    eps: f64,
    depth: usize,
    n_points: usize,
    seed: u64,
) -> Result<AngleExperiment> {
    if a.len() != b.len() {
        return Err(Error::AlphabetMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if depth == 0 || n_points == 0 {
        return Err(Error::InvalidParams(
            "depth and n_points must be positive".into(),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParams("eps must be positive".into()));
    }
    let outcomes = (0..n_points as u64)
        .into_par_iter()
        .map(|i| {
            let mut source = SymbolStream::new(a.weights(), seed, i)?;
            let mut past = source.take_vec(depth);
            past.reverse();
            let future = source.take_vec(depth);
            let frames = estimate_frame(a, &past, &future)
                .and_then(|fa| estimate_frame(b, &past, &future).map(|fb| (fa, fb)));
            match frames {
                Ok((fa, fb)) => Ok(Some(
                    angle_between(&fa.unstable, &fb.unstable) <= eps
                        && angle_between(&fa.stable, &fb.stable) <= eps,
                )),
                Err(Error::DegenerateGap { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let n_excluded = outcomes.iter().filter(|o| o.is_none()).count();
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    let counted = n_points - n_excluded;
    if counted == 0 {
        return Err(Error::DegenerateGap { ratio: 1.0 });
    }
    Ok(AngleExperiment {
        fraction: hits as f64 / counted as f64,
        n_points,
        n_excluded,
        depth,
        eps,
    })
}
