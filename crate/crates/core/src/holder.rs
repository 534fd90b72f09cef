//! The discontinuity construction over the two-symbol shift.
//!
//! The base cocycle is `A(x) = diag(σ, 1/σ)` when `x₀` is symbol 0 and
//! `diag(1/σ, σ)` otherwise. For `n = 2k + 1` the perturbation `B_n = A·R_n`
//! rotates by `δ_n = atan σ^{-k}` on `f^k(Z_n)` and shears on
//! `Z_n ∪ f^{2k}(Z_n)`, where `Z_n` is the cylinder `[0; 1^k 0^{k+1}]`
//! (symbols 0-based). Along one visit to `Z_n` the perturbed product swaps
//! the horizontal and vertical axes exactly, which kills the exponents while
//! `B_n → A` in every Hölder norm with `2^{2r} < σ`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{
    Cocycle, FiniteCocycle, ProductAccumulator, SymbolStream, WindowCocycle, WindowCoder,
    WindowField,
};
use crate::error::{Error, Result};
use crate::exponents::{estimate_extremal_mc, ExponentEstimate};
use crate::projective::{angle_between, operator_norm, proj_apply, Mat2C, ProjPoint};

/// Largest window table [`holder_seminorm`] will scan (`k ≤ 4` for the
/// construction).
pub const HOLDER_TABLE_BUDGET: usize = 1 << 17;

/// Largest `k` for which the construction's table fits in memory.
pub const MAX_K: usize = 5;

/// Stage tolerance of [`verify_subspace_swap`].
pub const SWAP_TOL: f64 = 1e-10;

/// Minimum number of returns for [`induced_return_experiment`].
pub const MIN_RETURNS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct HolderConstruction {
    pub sigma: f64,
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub weights: [f64; 2],
    /// The word `w` with `Z_n = {x : x_0 … x_{2k} = w}`.
    pub cylinder_word: Vec<usize>,
    /// `B_n` on windows of radius `2k`.
    pub perturbed: WindowCocycle,
    /// `A` on the same windows, for pointwise comparison.
    pub unperturbed: WindowCocycle,
}

impl HolderConstruction {
    pub fn radius(&self) -> usize {
        2 * self.k
    }

    /// `A` as a cocycle reading only `x₀`.
    pub fn base(&self) -> FiniteCocycle {
        diagonal_base(self.sigma, self.weights).expect("validated at construction")
    }

    /// `μ(Z_n) = p₁^k · p₀^{k+1}`.
    pub fn cylinder_measure(&self) -> f64 {
        self.cylinder_word
            .iter()
            .map(|&s| self.weights[s])
            .product()
    }

    /// `|p₀ − p₁| log σ`, the top exponent of `A`.
    pub fn unperturbed_lambda(&self) -> f64 {
        (self.weights[0] - self.weights[1]).abs() * self.sigma.ln()
    }

    /// `sup_x ‖A(x) − B_n(x)‖`.
    pub fn sup_distance(&self) -> f64 {
        self.perturbed
            .sup_distance(&self.unperturbed)
            .expect("same window shape")
    }

    /// `B_n − A` as a window field.
    pub fn difference(&self) -> WindowField {
        self.perturbed
            .field()
            .difference(self.unperturbed.field())
            .expect("same window shape")
    }

    /// Which of the three designated sets the window word lies in.
    pub fn classify(&self, word: &[usize]) -> Region {
        classify(word, &self.cylinder_word, self.k)
    }
}

/// Position of a point relative to the cylinder `Z_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `x ∈ Z_n`: shear.
    Cylinder,
    /// `x ∈ f^k(Z_n)`: rotation.
    Middle,
    /// `x ∈ f^{2k}(Z_n)`: shear.
    End,
    Outside,
}

fn classify(word: &[usize], w: &[usize], k: usize) -> Region {
    let c = 2 * k;
    if word[c..=c + 2 * k] == *w {
        Region::Cylinder
    } else if word[k..=k + 2 * k] == *w {
        Region::Middle
    } else if word[..=2 * k] == *w {
        Region::End
    } else {
        Region::Outside
    }
}

/// `diag(σ, 1/σ)` and `diag(1/σ, σ)` with weights `p`.
pub fn diagonal_base(sigma: f64, weights: [f64; 2]) -> Result<FiniteCocycle> {
    FiniteCocycle::new(
        vec![
            Mat2C::diag(sigma, 1.0 / sigma),
            Mat2C::diag(1.0 / sigma, sigma),
        ],
        weights.to_vec(),
    )
}

fn base_matrix(sigma: f64, symbol: usize) -> Mat2C {
    if symbol == 0 {
        Mat2C::diag(sigma, 1.0 / sigma)
    } else {
        Mat2C::diag(1.0 / sigma, sigma)
    }
}

/// Rotation by `atan ε`. The sine is formed as `ε · cos` so that the
/// rotation sends `[ε : 1]` to the vertical with no rounding residue when
/// `ε` is a power of two.
fn rotation_by_slope(eps: f64) -> Mat2C {
    let c = 1.0 / (1.0 + eps * eps).sqrt();
    let s = eps * c;
    Mat2C::real(c, -s, s, c)
}

/// The word `1^k 0^{k+1}`.
pub fn cylinder_word(k: usize) -> Vec<usize> {
    let mut w = vec![1; k];
    w.extend(std::iter::repeat_n(0, k + 1));
    w
}

pub fn build_construction(sigma: f64, k: usize, weights: [f64; 2]) -> Result<HolderConstruction> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(Error::InvalidParams(format!(
            "sigma must exceed 1, got {sigma}"
        )));
    }
    if k == 0 || k > MAX_K {
        return Err(Error::InvalidParams(format!(
            "k must lie in 1..={MAX_K}, got {k}"
        )));
    }
    if weights.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidParams("weights must be positive".into()));
    }
    let eps = sigma.powi(-(k as i32));
    let delta = eps.atan();
    let w = cylinder_word(k);
    let rotation = rotation_by_slope(eps);
    let shear = Mat2C::real(1.0, 0.0, eps, 1.0);
    let radius = 2 * k;

    let unperturbed = WindowField::from_fn(2, radius, |word| base_matrix(sigma, word[radius]))?;
    let perturbed = WindowField::from_fn(2, radius, |word| {
        let a = base_matrix(sigma, word[radius]);
        match classify(word, &w, k) {
            Region::Middle => a * rotation,
            Region::Cylinder | Region::End => a * shear,
            Region::Outside => a,
        }
    })?;
    Ok(HolderConstruction {
        sigma,
        k,
        n: 2 * k + 1,
        eps,
        delta,
        weights,
        cylinder_word: w,
        perturbed: WindowCocycle::new(perturbed, weights.to_vec())?,
        unperturbed: WindowCocycle::new(unperturbed, weights.to_vec())?,
    })
}

/// Dyadic shift metric `d(x, y) = 2^{-N(x,y)}` raised to the power `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMetricParams {
    pub r: f64,
}

impl ShiftMetricParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParams(format!("r must be positive, got {r}")));
        }
        Ok(ShiftMetricParams { r })
    }

    /// `2^{2r} < σ`: the regime where `‖B_n − A‖_r → 0`.
    pub fn in_discontinuity_regime(&self, sigma: f64) -> bool {
        (2.0 * self.r).exp2() < sigma
    }

    /// `3σ (2^{2r}/σ)^k`.
    pub fn bound(&self, sigma: f64, k: usize) -> f64 {
        3.0 * sigma * ((2.0 * self.r).exp2() / sigma).powi(k as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderNorm {
    /// `sup_x ‖L(x)‖`.
    pub sup_term: f64,
    /// `sup_{x≠y} ‖L(x) − L(y)‖ / d(x,y)^r`.
    pub quotient_term: f64,
    pub total: f64,
}

/// Exact `‖L‖_r` of a window field.
///
/// Pairs agreeing on `|i| < N` lie in one cylinder on the central `2N − 1`
/// coordinates, so the quotient term is the largest `2^{rN}` times the
/// diameter of `L` over such a cylinder, for `N = 0 ..= w`. Beyond the
/// window radius `L` no longer varies.
pub fn holder_seminorm(l: &WindowField, params: ShiftMetricParams) -> Result<HolderNorm> {
    let table = l.table();
    if table.len() > HOLDER_TABLE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: table.len() as u128,
            budget: HOLDER_TABLE_BUDGET as u128,
        });
    }
    let sup_term = table.iter().map(operator_norm).fold(0.0, f64::max);
    let m = l.alphabet_size();
    let w = l.radius();
    let quotient_term = (0..=w)
        .into_par_iter()
        .map(|big_n| {
            let diameter = max_group_diameter(table, |code| group_key(code, m, w, big_n));
            (params.r * big_n as f64).exp2() * diameter
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(HolderNorm {
        sup_term,
        quotient_term,
        total: sup_term + quotient_term,
    })
}

/// Digits of the coordinates `|i| < N` in a window code.
fn group_key(code: usize, m: usize, w: usize, big_n: usize) -> usize {
    if big_n == 0 {
        return 0;
    }
    (code / m.pow((w + 1 - big_n) as u32)) % m.pow((2 * big_n - 1) as u32)
}

fn max_group_diameter(table: &[Mat2C], key: impl Fn(usize) -> usize) -> f64 {
    let mut groups: HashMap<usize, Vec<Mat2C>> = HashMap::new();
    let mut seen: HashMap<usize, Vec<[u64; 8]>> = HashMap::new();
    for (code, m) in table.iter().enumerate() {
        let g = key(code);
        let bits = seen.entry(g).or_default();
        let b = m.bits();
        if !bits.contains(&b) {
            bits.push(b);
            groups.entry(g).or_default().push(*m);
        }
    }
    groups
        .values()
        .map(|vals| {
            let mut d: f64 = 0.0;
            for (i, a) in vals.iter().enumerate() {
                for b in &vals[i + 1..] {
                    d = d.max(operator_norm(&(*a - *b)));
                }
            }
            d
        })
        .fold(0.0, f64::max)
}

/// One report row: `(k, r, sup_term, quotient_term, total, bound)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub k: usize,
    pub r: f64,
    pub norm: HolderNorm,
    pub bound: f64,
}

pub fn holder_rows(
    sigma: f64,
    ks: &[usize],
    params: ShiftMetricParams,
    weights: [f64; 2],
) -> Result<Vec<HolderRow>> {
    ks.iter()
        .map(|&k| {
            let c = build_construction(sigma, k, weights)?;
            Ok(HolderRow {
                k,
                r: params.r,
                norm: holder_seminorm(&c.difference(), params)?,
                bound: params.bound(sigma, k),
            })
        })
        .collect()
}

/// Images of the two axes under `C^j(x) = C(f^{j-1} x) ⋯ C(x)` where `x`
/// sits at `path[origin]`, for `j = 0 ..= steps`.
pub fn propagate_axes<C: Cocycle + ?Sized>(
    cocycle: &C,
    path: &[usize],
    origin: usize,
    steps: usize,
) -> Result<Vec<(ProjPoint, ProjPoint)>> {
    let w = cocycle.radius();
    if origin < w || origin + steps + w > path.len() {
        return Err(Error::OutOfRange {
            start: origin as i64 - w as i64,
            end: (origin + steps + w) as i64 - 1,
            len: path.len(),
        });
    }
    let coder = WindowCoder::new(cocycle.alphabet_size(), cocycle.window_len())?;
    let mut h = ProjPoint::HORIZONTAL;
    let mut v = ProjPoint::VERTICAL;
    let mut out = vec![(h, v)];
    for pos in origin..origin + steps {
        let word = &path[pos - w..=pos + w];
        if let Some(s) = word.iter().find(|&&s| s >= cocycle.alphabet_size()) {
            return Err(Error::InvalidParams(format!(
                "symbol {s} outside the alphabet"
            )));
        }
        let m = cocycle.matrix_at_code(coder.encode(word));
        h = proj_apply(m, &h)?;
        v = proj_apply(m, &v)?;
        out.push((h, v));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapStage {
    pub label: String,
    pub expected: ProjPoint,
    pub actual: ProjPoint,
    pub angle: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub stages: Vec<SwapStage>,
}

impl SwapReport {
    pub fn all_pass(&self) -> bool {
        self.stages.iter().all(|s| s.pass)
    }

    pub fn max_angle(&self) -> f64 {
        self.stages.iter().map(|s| s.angle).fold(0.0, f64::max)
    }
}

/// A path with `Z_n` at `origin = 2k`, padded with `fill` so every window
/// along the visit is defined.
pub fn swap_test_path(c: &HolderConstruction, fill: usize) -> (Vec<usize>, usize) {
    let r = c.radius();
    let mut path = vec![fill; r];
    path.extend_from_slice(&c.cylinder_word);
    path.extend(std::iter::repeat_n(fill, r));
    (path, r)
}

/// Check the stages of the axis swap along one visit to `Z_n`:
///
/// | stage | image |
/// |---|---|
/// | `B^k H` | `[ε : 1]` |
/// | `B^k V` | `V` |
/// | `B^{k+1} H` | `V` |
/// | `B^{2k} H` | `V` |
/// | `B^{2k} V` | `[−1 : ε]` |
/// | `B^n H` | `V` |
/// | `B^n V` | `H` |
pub fn verify_subspace_swap(
    c: &HolderConstruction,
    path: &[usize],
    origin: usize,
) -> Result<SwapReport> {
    let k = c.k;
    if origin + c.n > path.len() || path[origin..origin + c.n] != c.cylinder_word[..] {
        return Err(Error::WordNotInCylinder);
    }
    let images = propagate_axes(&c.perturbed, path, origin, c.n)?;
    let slope = ProjPoint::real(c.eps, 1.0)?;
    let tilted = ProjPoint::real(-1.0, c.eps)?;
    let (h, v) = (ProjPoint::HORIZONTAL, ProjPoint::VERTICAL);
    let checks = [
        ("B^k H", images[k].0, slope),
        ("B^k V", images[k].1, v),
        ("B^(k+1) H", images[k + 1].0, v),
        ("B^(2k) H", images[2 * k].0, v),
        ("B^(2k) V", images[2 * k].1, tilted),
        ("B^n H", images[c.n].0, v),
        ("B^n V", images[c.n].1, h),
    ];
    Ok(SwapReport {
        stages: checks
            .into_iter()
            .map(|(label, actual, expected)| {
                let angle = angle_between(&actual, &expected);
                SwapStage {
                    label: label.to_string(),
                    expected,
                    actual,
                    angle,
                    pass: angle <= SWAP_TOL,
                }
            })
            .collect(),
    })
}

/// Monte-Carlo exponents of `B_n`.
pub fn vanishing_exponent_check(
    c: &HolderConstruction,
    n_steps: usize,
    n_trials: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    estimate_extremal_mc(&c.perturbed, n_steps, n_trials, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InducedTarget {
    Perturbed,
    Unperturbed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InducedReturn {
    pub mean_return: f64,
    /// Growth rate of the product per return to `Z_n`.
    pub induced_lambda: f64,
    /// Batch-means standard error of `induced_lambda`.
    pub induced_stderr: f64,
    pub returns: usize,
}

const INDUCED_BATCHES: usize = 32;

/// Follow one path of `n_steps` positions, record visits to `Z_n`, and
/// measure the cocycle product accumulated between the first and last
/// visit.
pub fn induced_return_experiment(
    c: &HolderConstruction,
    target: InducedTarget,
    n_steps: usize,
    seed: u64,
) -> Result<InducedReturn> {
    let cocycle = match target {
        InducedTarget::Perturbed => &c.perturbed,
        InducedTarget::Unperturbed => &c.unperturbed,
    };
    let coder = WindowCoder::new(2, cocycle.window_len())?;
    let tail = 1usize << c.n;
    let target_code = WindowCoder::new(2, c.n)?.encode(&c.cylinder_word);
    let mut source = SymbolStream::new(&c.weights, seed, 0)?;
    let mut code = 0;
    for _ in 1..cocycle.window_len() {
        code = coder.push(code, source.next_symbol());
    }

    let mut acc = ProductAccumulator::new();
    let mut visits: Vec<usize> = Vec::new();
    // log ‖product‖ at each visit after the first.
    let mut log_norms: Vec<f64> = Vec::new();
    for pos in 0..n_steps {
        code = coder.push(code, source.next_symbol());
        // The low n digits are the coordinates pos ..= pos + 2k.
        if code % tail == target_code {
            if !visits.is_empty() {
                log_norms.push(acc.log_norm());
            }
            visits.push(pos);
        }
        if !visits.is_empty() {
            acc.push(
                cocycle.matrix_at_code(code),
                cocycle.log_abs_det_at_code(code),
            );
        }
    }
    if visits.len() < MIN_RETURNS {
        return Err(Error::InsufficientReturns {
            returns: visits.len(),
            required: MIN_RETURNS,
        });
    }
    let returns = visits.len() - 1;
    let span = (visits[returns] - visits[0]) as f64;
    let increments: Vec<f64> = std::iter::once(log_norms[0])
        .chain(log_norms.windows(2).map(|p| p[1] - p[0]))
        .collect();
    let induced_lambda = log_norms[returns - 1] / returns as f64;
    let batch = (n_steps as f64 * c.cylinder_measure() / INDUCED_BATCHES as f64)
        .floor()
        .max(1.0) as usize;
    let means: Vec<f64> = increments
        .chunks_exact(batch)
        .map(|b| b.iter().sum::<f64>() / batch as f64)
        .collect();
    let induced_stderr = if means.len() < 2 {
        f64::NAN
    } else {
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (var / means.len() as f64).sqrt()
    };
    Ok(InducedReturn {
        mean_return: span / returns as f64,
        induced_lambda,
        induced_stderr,
        returns,
    })
}

/// `A₀ = diag(σ, 1/σ)`, `A₁ = [[0, −1], [1, 0]]` with weights `(p₁, 1 − p₁)`.
pub fn kifer_family(sigma: f64, p1: f64) -> Result<FiniteCocycle> {
    if !(sigma > 1.0) {
        return Err(Error::InvalidParams(format!(
            "sigma must exceed 1, got {sigma}"
        )));
    }
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidParams(format!(
            "p1 must lie in [0, 1], got {p1}"
        )));
    }
    FiniteCocycle::new(
        vec![
            Mat2C::diag(sigma, 1.0 / sigma),
            Mat2C::real(0.0, -1.0, 1.0, 0.0),
        ],
        vec![p1, 1.0 - p1],
    )
}

/// Monte-Carlo λ₊ of the Kifer family at each path length.
pub fn kifer_crossover(
    sigma: f64,
    p1: f64,
    lengths: &[usize],
    n_trials: usize,
    seed: u64,
) -> Result<Vec<ExponentEstimate>> {
    let c = kifer_family(sigma, p1)?;
    lengths
        .iter()
        .map(|&n| estimate_extremal_mc(&c, n, n_trials, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_shape() {
        let c = build_construction(2.0, 1, [0.7, 0.3]).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.cylinder_word, vec![1, 0, 0]);
        assert_eq!(c.perturbed.window_len(), 5);
        assert_eq!(c.perturbed.field().table().len(), 32);
        assert!((c.cylinder_measure() - 0.147).abs() < 1e-15);
    }

    #[test]
    fn outside_the_sets_b_equals_a() {
        let c = build_construction(2.0, 2, [0.7, 0.3]).unwrap();
        let coder = *c.perturbed.field().coder();
        let mut counts = [0usize; 4];
        for code in 0..coder.table_len() {
            let word = coder.decode(code);
            let b = c.perturbed.field().get(code);
            let a = base_matrix(2.0, word[4]);
            let region = c.classify(&word);
            counts[region as usize] += 1;
            match region {
                Region::Outside => assert_eq!(*b, a),
                Region::Middle => assert_eq!(*b, a * rotation_by_slope(0.25)),
                _ => assert_eq!(*b, a * Mat2C::real(1.0, 0.0, 0.25, 1.0)),
            }
            assert!((b.det().re - 1.0).abs() < 1e-15 && b.det().im == 0.0);
        }
        // Each designated set fixes 5 of 9 coordinates.
        assert_eq!(&counts[..3], &[16, 16, 16]);
    }

    #[test]
    fn designated_sets_are_disjoint() {
        for k in 1..=4 {
            let w = cylinder_word(k);
            let coder = WindowCoder::new(2, 4 * k + 1).unwrap();
            for code in 0..coder.table_len() {
                let word = coder.decode(code);
                let hits = [
                    word[2 * k..] == w[..],
                    word[k..=3 * k] == w[..],
                    word[..=2 * k] == w[..],
                ];
                assert!(
                    hits.iter().filter(|h| **h).count() <= 1,
                    "k={k} word={word:?}"
                );
            }
        }
    }

    #[test]
    fn rotation_angle_is_delta() {
        let c = build_construction(3.0, 2, [0.6, 0.4]).unwrap();
        let r = rotation_by_slope(c.eps);
        assert!((r.c.re.atan2(r.a.re) - c.delta).abs() < 1e-15);
    }

    #[test]
    fn swap_stages_small_cases() {
        for (sigma, k) in [(2.0, 1), (2.0, 3), (3.0, 2)] {
            let c = build_construction(sigma, k, [0.7, 0.3]).unwrap();
            for fill in [0, 1] {
                let (path, origin) = swap_test_path(&c, fill);
                let report = verify_subspace_swap(&c, &path, origin).unwrap();
                assert!(report.all_pass(), "sigma={sigma} k={k}: {report:?}");
            }
        }
    }

    #[test]
    fn swap_requires_cylinder() {
        let c = build_construction(2.0, 1, [0.7, 0.3]).unwrap();
        let (mut path, origin) = swap_test_path(&c, 0);
        path[origin] = 0;
        assert!(matches!(
            verify_subspace_swap(&c, &path, origin),
            Err(Error::WordNotInCylinder)
        ));
    }

    #[test]
    fn unperturbed_preserves_axes() {
        let c = build_construction(2.0, 2, [0.7, 0.3]).unwrap();
        let (path, origin) = swap_test_path(&c, 1);
        let images = propagate_axes(&c.unperturbed, &path, origin, c.n).unwrap();
        assert_eq!(images[c.n], (ProjPoint::HORIZONTAL, ProjPoint::VERTICAL));
    }

    #[test]
    fn double_swap_returns_horizontal() {
        let c = build_construction(2.0, 2, [0.7, 0.3]).unwrap();
        let r = c.radius();
        let mut path = vec![0; r];
        path.extend_from_slice(&c.cylinder_word);
        path.extend_from_slice(&c.cylinder_word);
        path.extend(std::iter::repeat_n(0, r));
        let images = propagate_axes(&c.perturbed, &path, r, 2 * c.n).unwrap();
        assert!(angle_between(&images[c.n].0, &ProjPoint::VERTICAL) < SWAP_TOL);
        assert!(angle_between(&images[2 * c.n].0, &ProjPoint::HORIZONTAL) < SWAP_TOL);
    }

    #[test]
    fn seminorm_of_zero_and_constant() {
        let p = ShiftMetricParams::new(0.5).unwrap();
        let zero = WindowField::from_fn(2, 2, |_| Mat2C::ZERO).unwrap();
        let n = holder_seminorm(&zero, p).unwrap();
        assert_eq!((n.sup_term, n.quotient_term, n.total), (0.0, 0.0, 0.0));
        let c0 = Mat2C::real(1.0, 2.0, 0.0, -1.0);
        let constant = WindowField::from_fn(2, 2, |_| c0).unwrap();
        let n = holder_seminorm(&constant, p).unwrap();
        assert_eq!(n.quotient_term, 0.0);
        assert_eq!(n.total, operator_norm(&c0));
    }

    #[test]
    fn seminorm_matches_brute_force_pairs() {
        // L depends on x_{-1} and x_1 only; pairs differing only at |i| = 1
        // agree on the core of radius 1, so d = 2^{-1}.
        let l =
            WindowField::from_fn(2, 2, |w| Mat2C::diag(w[1] as f64, 2.0 * w[3] as f64)).unwrap();
        let p = ShiftMetricParams::new(0.7).unwrap();
        let coder = *l.coder();
        let mut brute: f64 = 0.0;
        for x in 0..coder.table_len() {
            for y in 0..coder.table_len() {
                let (wx, wy) = (coder.decode(x), coder.decode(y));
                let agree = (0..=2)
                    .take_while(|&big_n| {
                        (0..2 * big_n).all(|j| j == 0 || wx[2 + j - big_n] == wy[2 + j - big_n])
                    })
                    .last()
                    .unwrap();
                let diff = operator_norm(&(*l.get(x) - *l.get(y)));
                if diff > 0.0 {
                    brute = brute.max(diff * (p.r * agree as f64).exp2());
                }
            }
        }
        let n = holder_seminorm(&l, p).unwrap();
        assert!(
            (n.quotient_term - brute).abs() < 1e-12,
            "{} vs {brute}",
            n.quotient_term
        );
        assert!((n.quotient_term - 2.0 * 0.7f64.exp2()).abs() < 1e-12);
    }

    #[test]
    fn seminorm_guard() {
        let big = WindowField::from_fn(2, 9, |_| Mat2C::ZERO).unwrap();
        assert!(matches!(
            holder_seminorm(&big, ShiftMetricParams::new(0.5).unwrap()),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sup_distance_is_sigma_eps() {
        for (sigma, k) in [(2.0, 1), (2.0, 2), (4.0, 3)] {
            let c = build_construction(sigma, k, [0.7, 0.3]).unwrap();
            assert!((c.sup_distance() - sigma * c.eps).abs() < 1e-15);
        }
    }

    #[test]
    fn regime_flag() {
        let half = ShiftMetricParams::new(0.5).unwrap();
        assert!(half.in_discontinuity_regime(4.0));
        assert!(!half.in_discontinuity_regime(2.0));
        assert!((half.bound(4.0, 1) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn kifer_validation() {
        assert!(kifer_family(1.0, 0.5).is_err());
        assert!(kifer_family(2.0, 1.5).is_err());
        let k = kifer_family(2.0, 1.0).unwrap();
        let e = estimate_extremal_mc(&k, 1000, 1, 0).unwrap();
        assert!((e.lambda_plus - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn too_few_returns() {
        let c = build_construction(2.0, 3, [0.7, 0.3]).unwrap();
        assert!(matches!(
            induced_return_experiment(&c, InducedTarget::Unperturbed, 100, 0),
            Err(Error::InsufficientReturns { .. })
        ));
    }
}
