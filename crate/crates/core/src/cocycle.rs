//! Locally constant cocycles over a Bernoulli shift.
//!
//! Symbols are 0-based alphabet indices. A [`FiniteCocycle`] reads only the
//! zeroth coordinate of the path; a [`WindowCocycle`] reads coordinates
//! `-w..=w`. Both are driven through the [`Cocycle`] trait by a rolling
//! base-`m` window code, so every estimator works for either.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projective::{operator_norm, Mat2C};

/// Tolerance on `Σ p_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Upper bound on window table sizes (`m^(2w+1)` entries).
pub const MAX_TABLE_LEN: usize = 1 << 22;

/// A cocycle that depends on a finite window of coordinates.
pub trait Cocycle: Sync {
    fn alphabet_size(&self) -> usize;
    fn weights(&self) -> &[f64];
    /// Window radius `w`: the matrix at position `t` depends on `x_{t-w..=t+w}`.
    fn radius(&self) -> usize;
    /// Matrix for a window word encoded in base `m`, coordinate `-w` most
    /// significant.
    fn matrix_at_code(&self, code: usize) -> &Mat2C;
    /// `log |det|` of [`Cocycle::matrix_at_code`].
    fn log_abs_det_at_code(&self, code: usize) -> f64;

    fn window_len(&self) -> usize {
        2 * self.radius() + 1
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidCocycle("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidCocycle(format!(
            "weight {w} is not a probability"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidCocycle(format!(
            "weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

fn validate_invertible(index: usize, m: &Mat2C) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::InvalidCocycle(format!(
            "matrix {index} has non-finite entries"
        )));
    }
    if m.is_singular() {
        return Err(Error::InvalidCocycle(format!(
            "matrix {index} is singular (|det| = {:e})",
            m.det().norm()
        )));
    }
    Ok(())
}

/// Matrices `A_1..A_m` with Bernoulli weights `p_1..p_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFinite", into = "RawFinite")]
pub struct FiniteCocycle {
    matrices: Vec<Mat2C>,
    weights: Vec<f64>,
    log_abs_dets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFinite {
    matrices: Vec<Mat2C>,
    weights: Vec<f64>,
}

impl TryFrom<RawFinite> for FiniteCocycle {
    type Error = Error;

    fn try_from(raw: RawFinite) -> Result<Self> {
        FiniteCocycle::new(raw.matrices, raw.weights)
    }
}

impl From<FiniteCocycle> for RawFinite {
    fn from(c: FiniteCocycle) -> Self {
        RawFinite {
            matrices: c.matrices,
            weights: c.weights,
        }
    }
}

impl FiniteCocycle {
    pub fn new(matrices: Vec<Mat2C>, weights: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidCocycle("no matrices".into()));
        }
        if matrices.len() != weights.len() {
            return Err(Error::InvalidCocycle(format!(
                "{} matrices but {} weights",
                matrices.len(),
                weights.len()
            )));
        }
        validate_weights(&weights)?;
        for (i, m) in matrices.iter().enumerate() {
            validate_invertible(i, m)?;
        }
        let log_abs_dets = matrices.iter().map(|m| m.det().norm().ln()).collect();
        Ok(FiniteCocycle {
            matrices,
            weights,
            log_abs_dets,
        })
    }

    /// Single-matrix (deterministic) cocycle.
    pub fn constant(m: Mat2C) -> Result<Self> {
        FiniteCocycle::new(vec![m], vec![1.0])
    }

    pub fn matrices(&self) -> &[Mat2C] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn log_abs_dets(&self) -> &[f64] {
        &self.log_abs_dets
    }

    /// Same matrices, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        FiniteCocycle::new(self.matrices.clone(), weights)
    }

    /// `{P A_i P⁻¹}` with the same weights.
    pub fn conjugate(&self, p: &Mat2C) -> Result<Self> {
        let inv = p.inverse()?;
        FiniteCocycle::new(
            self.matrices.iter().map(|a| *p * *a * inv).collect(),
            self.weights.clone(),
        )
    }

    /// `Σ p_i log |det A_i|`, the sum `λ₊ + λ₋`.
    pub fn mean_log_abs_det(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.log_abs_dets)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| p * l)
            .sum()
    }

    fn check_symbol(&self, s: usize) -> Result<()> {
        if s >= self.len() {
            return Err(Error::InvalidParams(format!(
                "symbol {s} outside alphabet of size {}",
                self.len()
            )));
        }
        Ok(())
    }
}

impl Cocycle for FiniteCocycle {
    fn alphabet_size(&self) -> usize {
        self.matrices.len()
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn radius(&self) -> usize {
        0
    }

    fn matrix_at_code(&self, code: usize) -> &Mat2C {
        &self.matrices[code]
    }

    fn log_abs_det_at_code(&self, code: usize) -> f64 {
        self.log_abs_dets[code]
    }
}

/// Encodes window words of length `len` over an alphabet of size `m` as
/// base-`m` integers, first coordinate most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowCoder {
    alphabet: usize,
    len: usize,
    high: usize,
}

impl WindowCoder {
    pub fn new(alphabet: usize, len: usize) -> Result<Self> {
        let table = table_len(alphabet, len)?;
        Ok(WindowCoder {
            alphabet,
            len,
            high: table / alphabet,
        })
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn table_len(&self) -> usize {
        self.high * self.alphabet
    }

    /// Shift the window one coordinate to the right, appending `symbol`.
    #[inline]
    pub fn push(&self, code: usize, symbol: usize) -> usize {
        (code % self.high) * self.alphabet + symbol
    }

    pub fn encode(&self, word: &[usize]) -> usize {
        debug_assert_eq!(word.len(), self.len);
        word.iter().fold(0, |acc, &s| acc * self.alphabet + s)
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut word = vec![0; self.len];
        for slot in word.iter_mut().rev() {
            *slot = code % self.alphabet;
            code /= self.alphabet;
        }
        word
    }
}

fn table_len(alphabet: usize, len: usize) -> Result<usize> {
    if alphabet == 0 {
        return Err(Error::InvalidParams("alphabet must be non-empty".into()));
    }
    let mut total: usize = 1;
    for _ in 0..len {
        total = total
            .checked_mul(alphabet)
            .filter(|t| *t <= MAX_TABLE_LEN)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "window table {alphabet}^{len} exceeds {MAX_TABLE_LEN} entries"
                ))
            })?;
    }
    Ok(total)
}

/// A matrix-valued function of a window word, not necessarily invertible.
/// Differences of window cocycles live here.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowField {
    coder: WindowCoder,
    radius: usize,
    table: Vec<Mat2C>,
}

impl WindowField {
    pub fn new(alphabet: usize, radius: usize, table: Vec<Mat2C>) -> Result<Self> {
        let coder = WindowCoder::new(alphabet, 2 * radius + 1)?;
        if table.len() != coder.table_len() {
            return Err(Error::InvalidCocycle(format!(
                "window table has {} entries, expected {}",
                table.len(),
                coder.table_len()
            )));
        }
        if table.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidCocycle(
                "non-finite window table entry".into(),
            ));
        }
        Ok(WindowField {
            coder,
            radius,
            table,
        })
    }

    /// Tabulate `f(word)` over every window word (`word[j]` is coordinate `j - w`).
    pub fn from_fn(alphabet: usize, radius: usize, f: impl Fn(&[usize]) -> Mat2C) -> Result<Self> {
        let coder = WindowCoder::new(alphabet, 2 * radius + 1)?;
        let table = (0..coder.table_len())
            .map(|code| f(&coder.decode(code)))
            .collect();
        WindowField::new(alphabet, radius, table)
    }

    pub fn coder(&self) -> &WindowCoder {
        &self.coder
    }

    pub fn alphabet_size(&self) -> usize {
        self.coder.alphabet
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn table(&self) -> &[Mat2C] {
        &self.table
    }

    pub fn get(&self, code: usize) -> &Mat2C {
        &self.table[code]
    }

    pub fn eval_word(&self, word: &[usize]) -> &Mat2C {
        &self.table[self.coder.encode(word)]
    }

    /// Pointwise `self − other`.
    pub fn difference(&self, other: &WindowField) -> Result<WindowField> {
        self.check_compatible(other)?;
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| *a - *b)
            .collect();
        WindowField::new(self.alphabet_size(), self.radius, table)
    }

    /// `sup_x ‖self(x) − other(x)‖`.
    pub fn sup_distance(&self, other: &WindowField) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| operator_norm(&(*a - *b)))
            .fold(0.0, f64::max))
    }

    fn check_compatible(&self, other: &WindowField) -> Result<()> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet_size(),
                right: other.alphabet_size(),
            });
        }
        if self.radius != other.radius {
            return Err(Error::InvalidParams(format!(
                "window radii differ: {} vs {}",
                self.radius, other.radius
            )));
        }
        Ok(())
    }
}

/// Invertible [`WindowField`] over a Bernoulli base with the given weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCocycle {
    field: WindowField,
    weights: Vec<f64>,
    log_abs_dets: Vec<f64>,
}

impl WindowCocycle {
    pub fn new(field: WindowField, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != field.alphabet_size() {
            return Err(Error::AlphabetMismatch {
                left: field.alphabet_size(),
                right: weights.len(),
            });
        }
        validate_weights(&weights)?;
        for (i, m) in field.table.iter().enumerate() {
            validate_invertible(i, m)?;
        }
        let log_abs_dets = field.table.iter().map(|m| m.det().norm().ln()).collect();
        Ok(WindowCocycle {
            field,
            weights,
            log_abs_dets,
        })
    }

    /// The radius-0 window cocycle reading only `x_0`.
    pub fn from_finite(c: &FiniteCocycle) -> Self {
        let field = WindowField::new(c.len(), 0, c.matrices.clone()).expect("validated cocycle");
        WindowCocycle {
            field,
            weights: c.weights.clone(),
            log_abs_dets: c.log_abs_dets.clone(),
        }
    }

    pub fn field(&self) -> &WindowField {
        &self.field
    }

    pub fn sup_distance(&self, other: &WindowCocycle) -> Result<f64> {
        self.field.sup_distance(&other.field)
    }
}

impl Cocycle for WindowCocycle {
    fn alphabet_size(&self) -> usize {
        self.field.alphabet_size()
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn radius(&self) -> usize {
        self.field.radius
    }

    fn matrix_at_code(&self, code: usize) -> &Mat2C {
        &self.field.table[code]
    }

    fn log_abs_det_at_code(&self, code: usize) -> f64 {
        self.log_abs_dets[code]
    }
}

/// Seeded i.i.d. symbol source. `(seed, stream)` fixes the sequence, so
/// parallel trials draw from disjoint ChaCha streams.
pub struct SymbolStream {
    rng: ChaCha8Rng,
    dist: WeightedIndex<f64>,
}

impl SymbolStream {
    pub fn new(weights: &[f64], seed: u64, stream: u64) -> Result<Self> {
        let dist = WeightedIndex::new(weights)
            .map_err(|e| Error::InvalidCocycle(format!("weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(SymbolStream { rng, dist })
    }

    #[inline]
    pub fn next_symbol(&mut self) -> usize {
        self.dist.sample(&mut self.rng)
    }

    pub fn take_vec(&mut self, len: usize) -> Vec<usize> {
        (0..len).map(|_| self.next_symbol()).collect()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Finite stretch of a Bernoulli path with the seed that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSample {
    pub seed: u64,
    pub stream: u64,
    pub symbols: Vec<usize>,
}

/// `length` i.i.d. symbols drawn with the cocycle's weights.
pub fn sample_path<C: Cocycle + ?Sized>(
    cocycle: &C,
    length: usize,
    seed: u64,
) -> Result<PathSample> {
    sample_path_stream(cocycle.weights(), length, seed, 0)
}

pub fn sample_path_stream(
    weights: &[f64],
    length: usize,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    let mut source = SymbolStream::new(weights, seed, stream)?;
    Ok(PathSample {
        seed,
        stream,
        symbols: source.take_vec(length),
    })
}

/// `Lⁿ = exp(log_scale) · direction` with `‖direction‖ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormalizedProduct {
    pub direction: Mat2C,
    pub log_scale: f64,
    /// `log |det Lⁿ|`, accumulated exactly from the factors.
    pub log_abs_det: f64,
}

impl RenormalizedProduct {
    pub fn log_norm(&self) -> f64 {
        self.log_scale + operator_norm(&self.direction).ln()
    }

    /// `log σ₂(Lⁿ) = log |det Lⁿ| − log σ₁(Lⁿ)`.
    pub fn log_smallest_singular(&self) -> f64 {
        self.log_abs_det - self.log_norm()
    }
}

/// Running left product `A_k ⋯ A_1` kept in range by power-of-two rescaling.
///
/// Rescaling by powers of two is exact, so entry ratios are never rounded;
/// the integer exponent is carried separately and only converted to a
/// logarithm when the product is finished.
#[derive(Clone, Copy, Debug)]
pub struct ProductAccumulator {
    m: Mat2C,
    exp2: i64,
    log_abs_det: f64,
}

impl Default for ProductAccumulator {
    fn default() -> Self {
        ProductAccumulator {
            m: Mat2C::IDENTITY,
            exp2: 0,
            log_abs_det: 0.0,
        }
    }
}

#[inline]
fn binary_exponent(x: f64) -> i64 {
    let raw = ((x.to_bits() >> 52) & 0x7ff) as i64;
    if raw == 0 {
        x.log2().floor() as i64
    } else {
        raw - 1023
    }
}

#[inline]
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

impl ProductAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// `self ← a · self`.
    #[inline]
    pub fn push(&mut self, a: &Mat2C, log_abs_det: f64) {
        self.m = *a * self.m;
        self.log_abs_det += log_abs_det;
        self.rescale();
    }

    /// `self ← self · a` (extend on the right, i.e. further into the past).
    #[inline]
    pub fn push_right(&mut self, a: &Mat2C, log_abs_det: f64) {
        self.m = self.m * *a;
        self.log_abs_det += log_abs_det;
        self.rescale();
    }

    #[inline]
    fn rescale(&mut self) {
        let s = self.m.max_abs();
        if s > 0.0 && s.is_finite() {
            let e = binary_exponent(s).clamp(-1022, 1022);
            if e != 0 {
                self.m = self.m.scale_real(pow2(-e));
                self.exp2 += e;
            }
        }
    }

    /// Current (unnormalized) matrix factor.
    pub fn matrix(&self) -> &Mat2C {
        &self.m
    }

    pub fn log_norm(&self) -> f64 {
        self.exp2 as f64 * LN_2 + operator_norm(&self.m).ln()
    }

    pub fn finish(&self) -> RenormalizedProduct {
        let n = operator_norm(&self.m);
        RenormalizedProduct {
            direction: self.m.scale_real(1.0 / n),
            log_scale: self.exp2 as f64 * LN_2 + n.ln(),
            log_abs_det: self.log_abs_det,
        }
    }
}

/// `Lⁿ = A_{s_{n-1}} ⋯ A_{s_0}` for the word `symbols = (s_0, …, s_{n-1})`.
pub fn word_product(cocycle: &FiniteCocycle, symbols: &[usize]) -> Result<RenormalizedProduct> {
    let mut acc = ProductAccumulator::new();
    for &s in symbols {
        cocycle.check_symbol(s)?;
        acc.push(&cocycle.matrices[s], cocycle.log_abs_dets[s]);
    }
    Ok(acc.finish())
}

/// Product `B(f^{end-1} x) ⋯ B(f^{start} x)` of a window cocycle along a path.
pub fn window_product<C: Cocycle + ?Sized>(
    cocycle: &C,
    path: &[usize],
    start: usize,
    end: usize,
) -> Result<RenormalizedProduct> {
    let mut acc = ProductAccumulator::new();
    for pos in start..end {
        let code = window_code(cocycle, path, pos as i64)?;
        acc.push(
            cocycle.matrix_at_code(code),
            cocycle.log_abs_det_at_code(code),
        );
    }
    Ok(acc.finish())
}

fn window_code<C: Cocycle + ?Sized>(cocycle: &C, path: &[usize], position: i64) -> Result<usize> {
    let w = cocycle.radius() as i64;
    let (start, end) = (position - w, position + w);
    if start < 0 || end >= path.len() as i64 {
        return Err(Error::OutOfRange {
            start,
            end,
            len: path.len(),
        });
    }
    let m = cocycle.alphabet_size();
    let mut code = 0usize;
    for &s in &path[start as usize..=end as usize] {
        if s >= m {
            return Err(Error::InvalidParams(format!(
                "symbol {s} outside alphabet of size {m}"
            )));
        }
        code = code * m + s;
    }
    Ok(code)
}

/// The matrix of a window cocycle at `path[position]`.
pub fn window_eval<C: Cocycle + ?Sized>(
    cocycle: &C,
    path: &PathSample,
    position: i64,
) -> Result<Mat2C> {
    window_code(cocycle, &path.symbols, position).map(|code| *cocycle.matrix_at_code(code))
}

/// `sup_i ‖A_i − B_i‖` over paired atoms.
pub fn cocycle_distance(a: &FiniteCocycle, b: &FiniteCocycle) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AlphabetMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.matrices
        .iter()
        .zip(&b.matrices)
        .map(|(x, y)| operator_norm(&(*x - *y)))
        .fold(0.0, f64::max))
}

/// Total variation `Σ |p_i − q_i|`, the sup of `|∫ φ d(p − q)|` over `|φ| ≤ 1`.
pub fn weight_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Split `A_i = c_i B_i` with `c_i = √det A_i` (principal branch) and
/// `det B_i = 1`.
pub fn scalar_split(a: &FiniteCocycle) -> Result<(FiniteCocycle, Vec<Complex64>)> {
    let mut scalars = Vec::with_capacity(a.len());
    let mut unimodular = Vec::with_capacity(a.len());
    for m in &a.matrices {
        let det = m.det();
        if m.is_singular() {
            return Err(Error::SingularMatrix { det: det.norm() });
        }
        let c = det.sqrt();
        scalars.push(c);
        unimodular.push(m.scale(c.inv()));
    }
    Ok((FiniteCocycle::new(unimodular, a.weights.clone())?, scalars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::angle_between;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diagonal_six(sigma: f64, p1: f64) -> FiniteCocycle {
        FiniteCocycle::new(
            vec![
                Mat2C::diag(sigma, 1.0 / sigma),
                Mat2C::diag(1.0 / sigma, sigma),
            ],
            vec![p1, 1.0 - p1],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_cocycles() {
        assert!(FiniteCocycle::new(vec![], vec![]).is_err());
        assert!(FiniteCocycle::new(vec![Mat2C::IDENTITY], vec![0.9]).is_err());
        assert!(FiniteCocycle::new(vec![Mat2C::diag(1.0, 0.0)], vec![1.0]).is_err());
        assert!(FiniteCocycle::new(vec![Mat2C::IDENTITY; 2], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn weight_distance_examples() {
        assert_eq!(weight_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(weight_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((weight_distance(&[0.7, 0.3], &[0.6, 0.4]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            weight_distance(&[1.0], &[0.5, 0.5]),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn cocycle_distance_examples() {
        let a = diagonal_six(2.0, 0.7);
        assert_eq!(cocycle_distance(&a, &a).unwrap(), 0.0);
        let single = FiniteCocycle::constant(Mat2C::IDENTITY).unwrap();
        assert!(matches!(
            cocycle_distance(&a, &single),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn sample_path_examples() {
        let a = diagonal_six(2.0, 0.7);
        assert!(sample_path(&a, 0, 1).unwrap().symbols.is_empty());

        let certain = diagonal_six(2.0, 1.0);
        assert!(sample_path(&certain, 1000, 9)
            .unwrap()
            .symbols
            .iter()
            .all(|&s| s == 0));

        let p1 = sample_path(&a, 500, 42).unwrap();
        let p2 = sample_path(&a, 500, 42).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, sample_path(&a, 500, 43).unwrap());
    }

    #[test]
    fn empirical_frequencies_within_clt_bound() {
        let weights = [0.5, 0.2, 0.3];
        let n = 1_000_000;
        let path = sample_path_stream(&weights, n, 7, 0).unwrap();
        let mut counts = [0usize; 3];
        for &s in &path.symbols {
            counts[s] += 1;
        }
        for (count, p) in counts.iter().zip(weights) {
            let freq = *count as f64 / n as f64;
            assert!((freq - p).abs() < 4.0 / (n as f64).sqrt(), "{freq} vs {p}");
        }
    }

    #[test]
    fn empty_word_product() {
        let a = diagonal_six(2.0, 0.7);
        let prod = word_product(&a, &[]).unwrap();
        assert_eq!(prod.direction, Mat2C::IDENTITY);
        assert_eq!(prod.log_scale, 0.0);
    }

    #[test]
    fn word_product_rejects_unknown_symbol() {
        let a = diagonal_six(2.0, 0.7);
        assert!(word_product(&a, &[0, 2]).is_err());
    }

    fn moderate_cocycle() -> FiniteCocycle {
        FiniteCocycle::new(
            vec![
                Mat2C::new(c(1.1, 0.2), c(0.4, -0.1), c(-0.3, 0.0), c(0.9, 0.5)),
                Mat2C::new(c(0.7, 0.0), c(-0.6, 0.3), c(0.5, 0.2), c(1.3, -0.4)),
            ],
            vec![0.4, 0.6],
        )
        .unwrap()
    }

    #[test]
    fn word_product_matches_direct_product() {
        let a = moderate_cocycle();
        let word: Vec<usize> = (0..20).map(|i| (i * 7 + i / 3) % 2).collect();
        let mut direct = Mat2C::IDENTITY;
        for &s in &word {
            direct = a.matrices()[s] * direct;
        }
        let prod = word_product(&a, &word).unwrap();
        assert!((prod.log_norm() - operator_norm(&direct).ln()).abs() < 1e-9);
        assert!((operator_norm(&prod.direction) - 1.0).abs() < 1e-12);

        // |det Lⁿ| = Π |det A_{s_i}|.
        let lhs = 2.0 * prod.log_scale + prod.direction.det().norm().ln();
        let rhs: f64 = word.iter().map(|&s| a.log_abs_dets()[s]).sum();
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
        assert!((prod.log_abs_det - rhs).abs() < 1e-12);
    }

    #[test]
    fn long_products_do_not_overflow() {
        let a = diagonal_six(2.0, 1.0);
        let word = vec![0usize; 100_000];
        let prod = word_product(&a, &word).unwrap();
        assert_eq!(prod.log_norm(), 100_000.0 * LN_2);
        assert_eq!(prod.log_smallest_singular(), -100_000.0 * LN_2);
    }

    #[test]
    fn word_product_is_associative() {
        let a = moderate_cocycle();
        let path = sample_path(&a, 400, 3).unwrap().symbols;
        let whole = word_product(&a, &path).unwrap();
        let first = word_product(&a, &path[..150]).unwrap();
        let second = word_product(&a, &path[150..]).unwrap();
        let joined = second.direction * first.direction;
        let acc = first.log_scale + second.log_scale + operator_norm(&joined).ln();
        assert!((acc - whole.log_norm()).abs() < 1e-9);
        let (left_whole, _) = crate::projective::top_singular_directions(&whole.direction).unwrap();
        let (left_joined, _) = crate::projective::top_singular_directions(&joined).unwrap();
        assert!(angle_between(&left_whole, &left_joined) < 1e-9);
    }

    #[test]
    fn scalar_split_examples() {
        let sl2 = FiniteCocycle::constant(Mat2C::real(2.0, 1.0, 1.0, 1.0)).unwrap();
        let (b, cs) = scalar_split(&sl2).unwrap();
        assert_eq!(cs[0], c(1.0, 0.0));
        assert_eq!(b.matrices()[0], sl2.matrices()[0]);

        let twice = FiniteCocycle::constant(Mat2C::diag(2.0, 2.0)).unwrap();
        let (b, cs) = scalar_split(&twice).unwrap();
        assert_eq!(cs[0], c(2.0, 0.0));
        assert_eq!(b.matrices()[0], Mat2C::IDENTITY);

        let a = moderate_cocycle();
        let (b, cs) = scalar_split(&a).unwrap();
        for ((ai, bi), ci) in a.matrices().iter().zip(b.matrices()).zip(&cs) {
            assert!((bi.det() - c(1.0, 0.0)).norm() < 1e-12);
            let back = bi.scale(*ci);
            for (x, y) in back.entries().iter().zip(ai.entries()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn window_coder_round_trip() {
        let coder = WindowCoder::new(3, 4).unwrap();
        for code in 0..coder.table_len() {
            assert_eq!(coder.encode(&coder.decode(code)), code);
        }
        let word = [2, 0, 1, 1];
        let code = coder.encode(&word);
        assert_eq!(coder.push(code, 2), coder.encode(&[0, 1, 1, 2]));
    }

    #[test]
    fn radius_zero_window_matches_finite() {
        let a = moderate_cocycle();
        let w = WindowCocycle::from_finite(&a);
        let path = sample_path(&a, 50, 11).unwrap();
        for pos in 0..50 {
            assert_eq!(
                window_eval(&w, &path, pos).unwrap(),
                a.matrices()[path.symbols[pos as usize]]
            );
        }
        assert!(matches!(
            window_eval(&w, &path, 50),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            window_eval(&w, &path, -1),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn window_eval_reads_neighbours() {
        // Matrix depends on (x_{-1}, x_0, x_1) through diag(1 + code, 1).
        let field = WindowField::from_fn(2, 1, |w| {
            Mat2C::diag(1.0 + (4 * w[0] + 2 * w[1] + w[2]) as f64, 1.0)
        })
        .unwrap();
        let cocycle = WindowCocycle::new(field, vec![0.5, 0.5]).unwrap();
        let path = PathSample {
            seed: 0,
            stream: 0,
            symbols: vec![1, 0, 1, 1],
        };
        assert_eq!(
            window_eval(&cocycle, &path, 1).unwrap(),
            Mat2C::diag(6.0, 1.0)
        );
        assert_eq!(
            window_eval(&cocycle, &path, 2).unwrap(),
            Mat2C::diag(4.0, 1.0)
        );
        assert!(window_eval(&cocycle, &path, 0).is_err());
    }
}
