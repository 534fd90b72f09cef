//! Stationary measures on P(C²) as weighted particle clouds.
//!
//! A measure η is `(A, p)`-stationary when `η = Σ p_i (A_i)_* η`. The
//! transfer operator is applied exactly to a cloud, and clouds are kept to
//! a fixed budget by merging particles cell by cell into their centroids. The stationarity defect is
//! measured against a fixed dictionary of 64 smooth test functions.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, FiniteCocycle, SymbolStream};
use crate::error::{Error, Result};
use crate::projective::{angle_between, proj_apply_unchecked, ProjPoint};

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-10;

/// Version of the residual test-function dictionary.
pub const DICTIONARY_VERSION: u32 = 1;

pub const DICTIONARY_SIZE: usize = 64;

const BUMP_COUNT: usize = 45;
const BUMP_WIDTH: f64 = 0.5;

const PAR_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleMeasure {
    particles: Vec<(ProjPoint, f64)>,
}

impl ParticleMeasure {
    pub fn new(particles: Vec<(ProjPoint, f64)>) -> Result<Self> {
        if particles.iter().any(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParams(
                "particle weights must be non-negative".into(),
            ));
        }
        let eta = ParticleMeasure { particles };
        eta.check_normalized()?;
        Ok(eta)
    }

    /// Rescale arbitrary non-negative weights to total mass 1.
    pub fn normalized(mut particles: Vec<(ProjPoint, f64)>) -> Result<Self> {
        let total: f64 = particles.iter().map(|(_, w)| w).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::UnnormalizedMeasure { total });
        }
        for (_, w) in particles.iter_mut() {
            *w /= total;
        }
        ParticleMeasure::new(particles)
    }

    pub fn dirac(p: ProjPoint) -> Self {
        ParticleMeasure {
            particles: vec![(p, 1.0)],
        }
    }

    /// `n` equal-weight points on a Fibonacci lattice of the Riemann sphere,
    /// an approximation of the rotation-invariant measure.
    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / n as f64;
        ParticleMeasure {
            particles: fibonacci_sphere(n)
                .into_iter()
                .map(|p| (ProjPoint::from_sphere(p), w))
                .collect(),
        }
    }

    /// `n` equal-weight points drawn uniformly from the sphere.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1.0 / n as f64;
        let particles = (0..n)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..2.0 * PI);
                let r = (1.0 - z * z).max(0.0).sqrt();
                (ProjPoint::from_sphere([r * phi.cos(), r * phi.sin(), z]), w)
            })
            .collect();
        ParticleMeasure { particles }
    }

    pub fn particles(&self) -> &[(ProjPoint, f64)] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|(_, w)| w).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::UnnormalizedMeasure { total });
        }
        Ok(())
    }

    /// `∫ f dη`.
    pub fn integrate(&self, f: impl Fn(&ProjPoint) -> f64 + Sync) -> f64 {
        let partial: Vec<f64> = self
            .particles
            .par_chunks(PAR_CHUNK)
            .map(|chunk| chunk.iter().map(|(p, w)| w * f(p)).sum::<f64>())
            .collect();
        partial.iter().sum()
    }
}

/// Points `c_j` of the Fibonacci lattice on S².
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// The 64 residual test functions evaluated at `p`: the 19 monomials
/// `x^a y^b z^c` with `1 ≤ a+b+c ≤ 3` in the sphere coordinates of `p`,
/// followed by 45 Gaussian bumps of width 0.5 centred on a Fibonacci
/// lattice. All are smooth and bounded by 1.
pub fn dictionary_values(p: &ProjPoint) -> [f64; DICTIONARY_SIZE] {
    let s = p.sphere();
    let mut out = [0.0; DICTIONARY_SIZE];
    let mut k = 0;
    for degree in 1..=3u32 {
        for a in (0..=degree).rev() {
            for b in (0..=degree - a).rev() {
                let c = degree - a - b;
                out[k] = s[0].powi(a as i32) * s[1].powi(b as i32) * s[2].powi(c as i32);
                k += 1;
            }
        }
    }
    debug_assert_eq!(k, DICTIONARY_SIZE - BUMP_COUNT);
    for center in bump_centers() {
        let d2: f64 = (0..3).map(|i| (s[i] - center[i]).powi(2)).sum();
        out[k] = (-d2 / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp();
        k += 1;
    }
    out
}

fn bump_centers() -> &'static [[f64; 3]] {
    use std::sync::OnceLock;
    static CENTERS: OnceLock<Vec<[f64; 3]>> = OnceLock::new();
    CENTERS.get_or_init(|| fibonacci_sphere(BUMP_COUNT))
}

fn dictionary_integrals(particles: &[(ProjPoint, f64)]) -> [f64; DICTIONARY_SIZE] {
    let partial: Vec<[f64; DICTIONARY_SIZE]> = particles
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            let mut acc = [0.0; DICTIONARY_SIZE];
            for (p, w) in chunk {
                for (a, v) in acc.iter_mut().zip(dictionary_values(p)) {
                    *a += w * v;
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; DICTIONARY_SIZE];
    for part in partial {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    total
}

/// `Σ_i p_i (A_i)_* η`, exactly (the output has `m · |η|` particles).
pub fn transfer_step(cocycle: &FiniteCocycle, eta: &ParticleMeasure) -> Result<ParticleMeasure> {
    eta.check_normalized()?;
    Ok(ParticleMeasure {
        particles: push_forward(cocycle, &eta.particles),
    })
}

/// [`transfer_step`] followed by [`merge_to_budget`].
pub fn transfer_step_reduced(
    cocycle: &FiniteCocycle,
    eta: &ParticleMeasure,
    budget: usize,
) -> Result<ParticleMeasure> {
    let image = transfer_step(cocycle, eta)?;
    Ok(ParticleMeasure {
        particles: merge_to_budget(&image.particles, budget),
    })
}

fn push_forward(cocycle: &FiniteCocycle, particles: &[(ProjPoint, f64)]) -> Vec<(ProjPoint, f64)> {
    let atoms: Vec<_> = cocycle
        .matrices()
        .iter()
        .zip(cocycle.weights())
        .filter(|(_, p)| **p > 0.0)
        .map(|(m, p)| (*m, *p))
        .collect();
    particles
        .par_iter()
        .flat_map_iter(|(v, w)| {
            atoms
                .iter()
                .map(move |(m, p)| (proj_apply_unchecked(m, v), p * w))
        })
        .collect()
}

/// Largest discrepancy `|∫ f dη − ∫ f d(Tη)|` over the test dictionary.
pub fn residual(cocycle: &FiniteCocycle, eta: &ParticleMeasure) -> f64 {
    let before = dictionary_integrals(&eta.particles);
    let after = dictionary_integrals(&push_forward(cocycle, &eta.particles));
    before
        .iter()
        .zip(after.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationarySolution {
    pub measure: ParticleMeasure,
    pub residual: f64,
    pub iterations: usize,
}

/// Length of the first averaging epoch; each later epoch doubles.
const FIRST_EPOCH: usize = 8;

/// Approximate a stationary measure by Cesàro averages of the transfer
/// orbit of a spread-out initial cloud.
///
/// The initial cloud is `particle_budget` uniform random points drawn from
/// `seed`. Each step applies the transfer operator exactly and reduces the
/// image with [`merge_to_budget`]. Iterates are
/// averaged over doubling epochs `(T/2, T]`, so early transients drop out of
/// later averages. Each epoch average is checked against `tol`; the best
/// average seen is returned inside [`Error::NotConverged`] when `max_iters`
/// runs out.
pub fn solve_stationary(
    cocycle: &FiniteCocycle,
    particle_budget: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<StationarySolution> {
    solve_stationary_from(
        cocycle,
        ParticleMeasure::random(particle_budget, seed),
        particle_budget,
        max_iters,
        tol,
    )
}

pub fn solve_stationary_from(
    cocycle: &FiniteCocycle,
    initial: ParticleMeasure,
    particle_budget: usize,
    max_iters: usize,
    tol: f64,
) -> Result<StationarySolution> {
    if particle_budget < 100 {
        return Err(Error::InvalidParams(
            "particle budget must be at least 100".into(),
        ));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParams("max_iters must be positive".into()));
    }
    initial.check_normalized()?;

    let mut current = initial;
    let mut average: Vec<(ProjPoint, f64)> = Vec::new();
    let mut epoch_end = FIRST_EPOCH.min(max_iters);
    let mut best: Option<StationarySolution> = None;

    for t in 1..=max_iters {
        current = transfer_step_reduced(cocycle, &current, particle_budget)?;
        average.extend_from_slice(&current.particles);
        if average.len() > 4 * particle_budget {
            average = merge_to_budget(&average, 2 * particle_budget);
        }
        if t == epoch_end {
            let merged = merge_to_budget(&std::mem::take(&mut average), particle_budget);
            let measure = ParticleMeasure::normalized(merged)?;
            let r = residual(cocycle, &measure);
            let candidate = StationarySolution {
                measure,
                residual: r,
                iterations: t,
            };
            if r <= tol {
                return Ok(candidate);
            }
            if best.as_ref().is_none_or(|b| r < b.residual) {
                best = Some(candidate);
            }
            epoch_end = (2 * t).min(max_iters);
        }
    }
    let best = best.expect("at least one epoch completes");
    Err(Error::NotConverged {
        residual: best.residual,
        iterations: max_iters,
        best: Box::new(best.measure),
    })
}

/// Leaves narrower than this keep their heaviest particle verbatim instead
/// of a centroid, so exactly placed points (such as fixed axes) survive.
const MERGE_EXTENT_FLOOR: f64 = 1e-9;

/// Reduce a cloud to at most about `budget` particles.
///
/// The cloud is split recursively at the weighted median of its widest
/// coordinate on the sphere until every cell carries mass at most
/// `2 · total / budget` (or holds a single particle); each cell is then
/// replaced by its centroid. Cells are small where the mass concentrates,
/// so multi-scale structure near attracting directions is kept, and
/// merging a cell moves `∫ f` by `O(mass · diameter²)` for smooth `f`.
/// Deterministic, and total mass is preserved.
pub fn merge_to_budget(particles: &[(ProjPoint, f64)], budget: usize) -> Vec<(ProjPoint, f64)> {
    if particles.len() <= budget {
        return particles.to_vec();
    }
    let total: f64 = particles.iter().map(|(_, w)| w).sum();
    let threshold = 2.0 * total / budget.max(1) as f64;
    let mut items: Vec<MergeItem> = particles
        .iter()
        .map(|(p, w)| MergeItem {
            point: *p,
            sphere: p.sphere(),
            weight: *w,
        })
        .collect();
    let mut out = Vec::with_capacity(budget);
    split_cell(&mut items, threshold, &mut out);
    out
}

#[derive(Clone, Copy)]
struct MergeItem {
    point: ProjPoint,
    sphere: [f64; 3],
    weight: f64,
}

fn split_cell(items: &mut [MergeItem], threshold: f64, out: &mut Vec<(ProjPoint, f64)>) {
    let mass: f64 = items.iter().map(|i| i.weight).sum();
    let (axis, extent) = widest_axis(items);
    if items.len() == 1 || extent < MERGE_EXTENT_FLOOR {
        let heaviest = items
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
            .expect("non-empty cell");
        out.push((heaviest.point, mass));
        return;
    }
    if mass <= threshold {
        out.push((centroid(items), mass));
        return;
    }
    items.sort_by(|a, b| a.sphere[axis].total_cmp(&b.sphere[axis]));
    let mut acc = 0.0;
    let mut cut = items.len() - 1;
    for (i, item) in items.iter().enumerate() {
        acc += item.weight;
        if acc >= 0.5 * mass {
            cut = i + 1;
            break;
        }
    }
    let cut = cut.clamp(1, items.len() - 1);
    let (left, right) = items.split_at_mut(cut);
    split_cell(left, threshold, out);
    split_cell(right, threshold, out);
}

fn widest_axis(items: &[MergeItem]) -> (usize, f64) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for item in items {
        for k in 0..3 {
            lo[k] = lo[k].min(item.sphere[k]);
            hi[k] = hi[k].max(item.sphere[k]);
        }
    }
    (0..3)
        .map(|k| (k, hi[k] - lo[k]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three axes")
}

fn centroid(items: &[MergeItem]) -> ProjPoint {
    let mut c = [0.0; 3];
    for item in items {
        for (ck, sk) in c.iter_mut().zip(item.sphere) {
            *ck += item.weight * sk;
        }
    }
    let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    if norm > 0.0 {
        ProjPoint::from_sphere([c[0] / norm, c[1] / norm, c[2] / norm])
    } else {
        items[0].point
    }
}

/// One backward sample: `point = A_{x_{-1}} ⋯ A_{x_{-depth}} · seed_point`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UStateSample {
    /// `(x_{-depth}, …, x_{-1})`.
    pub past_word: Vec<usize>,
    pub point: ProjPoint,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UStateSamples {
    pub samples: Vec<UStateSample>,
    pub depth: usize,
}

/// Default threshold on [`UStateSamples::dispersion`] below which a sample
/// set counts as concentrated.
pub const CONCENTRATION_THRESHOLD: f64 = 0.05;

impl UStateSamples {
    /// `2 (1 − ℓ)` where `ℓ` is the top eigenvalue of the mean projector
    /// `E[v v*]`: 0 when every sample is the same point, 1 for an isotropic
    /// cloud.
    pub fn dispersion(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (mut a, mut d) = (0.0, 0.0);
        let mut b = num_complex::Complex64::new(0.0, 0.0);
        for s in &self.samples {
            let [z1, z2] = s.point.vector();
            a += z1.norm_sqr();
            d += z2.norm_sqr();
            b += z1 * z2.conj();
        }
        let (a, d, b) = (a / n, d / n, b / n);
        let top = 0.5 * (a + d + ((a - d).powi(2) + 4.0 * b.norm_sqr()).sqrt());
        (2.0 * (1.0 - top)).clamp(0.0, 1.0)
    }

    pub fn is_concentrated(&self) -> bool {
        self.dispersion() < CONCENTRATION_THRESHOLD
    }

    pub fn to_measure(&self) -> ParticleMeasure {
        let w = 1.0 / self.samples.len() as f64;
        ParticleMeasure {
            particles: self.samples.iter().map(|s| (s.point, w)).collect(),
        }
    }
}

/// Default seed point of the backward sampler, `[1:1]`.
pub fn default_seed_point() -> ProjPoint {
    ProjPoint::real(1.0, 1.0).expect("non-zero")
}

/// Backward products applied to `[1:1]`; see [`ustate_backward_sample_from`].
pub fn ustate_backward_sample(
    cocycle: &FiniteCocycle,
    depth: usize,
    n_samples: usize,
    seed: u64,
) -> Result<UStateSamples> {
    ustate_backward_sample_from(cocycle, default_seed_point(), depth, n_samples, seed)
}

/// Draw `n_samples` i.i.d. past words and push `seed_point` through the
/// backward products.
///
/// Sample `i` reads symbols `x_{-1}, x_{-2}, …` from stream `i` of `seed`,
/// so for a fixed seed the depth-`2n` words extend the depth-`n` words into
/// the past. That is the coupling under which the sampled points form a
/// martingale in `n`.
pub fn ustate_backward_sample_from(
    cocycle: &FiniteCocycle,
    seed_point: ProjPoint,
    depth: usize,
    n_samples: usize,
    seed: u64,
) -> Result<UStateSamples> {
    if depth == 0 {
        return Err(Error::InvalidParams("depth must be at least 1".into()));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut source = SymbolStream::new(cocycle.weights(), seed, i)?;
            let mut past_word = source.take_vec(depth);
            past_word.reverse();
            let point = past_word.iter().fold(seed_point, |v, &s| {
                proj_apply_unchecked(&cocycle.matrices()[s], &v)
            });
            Ok(UStateSample {
                past_word,
                point,
                depth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UStateSamples { samples, depth })
}

/// `η({v : ∠(v, direction) ≤ eps})`.
pub fn directional_mass(eta: &ParticleMeasure, direction: &ProjPoint, eps: f64) -> f64 {
    eta.particles
        .iter()
        .filter(|(v, _)| angle_between(v, direction) <= eps)
        .map(|(_, w)| w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

const DUMP_MAGIC: &str = "# lyalab particle measure v1";
const DUMP_COLUMNS: &str = "z1_re,z1_im,z2_re,z2_im,weight";

/// Write `eta` as a text table: three `#` header lines (format tag,
/// residual, provenance), a column header, then one row per particle with
/// 17 significant digits.
pub fn write_measure_dump(
    eta: &ParticleMeasure,
    residual: f64,
    provenance: &str,
    out: &mut impl Write,
) -> Result<()> {
    writeln!(out, "{DUMP_MAGIC}")?;
    writeln!(out, "# residual: {}", crate::report::format_float(residual))?;
    writeln!(out, "# provenance: {}", provenance.replace('\n', " "))?;
    writeln!(out, "{DUMP_COLUMNS}")?;
    for (p, w) in &eta.particles {
        let [z1, z2] = p.vector();
        let row = [z1.re, z1.im, z2.re, z2.im, *w].map(crate::report::format_float);
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Parse a dump written by [`write_measure_dump`]; returns the measure and
/// the recorded residual.
pub fn read_measure_dump(input: impl BufRead) -> Result<(ParticleMeasure, f64)> {
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse("truncated measure dump".into()))
    };
    if next()? != DUMP_MAGIC {
        return Err(Error::Parse("not a particle measure dump".into()));
    }
    let residual_line = next()?;
    let residual = residual_line
        .strip_prefix("# residual: ")
        .ok_or_else(|| Error::Parse("missing residual header".into()))?
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("residual: {e}")))?;
    next()?;
    if next()? != DUMP_COLUMNS {
        return Err(Error::Parse("unexpected column header".into()));
    }
    let mut particles = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("row: {e}")))?;
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "expected 5 columns, got {}",
                fields.len()
            )));
        }
        let p = ProjPoint::from_stored(
            num_complex::Complex64::new(fields[0], fields[1]),
            num_complex::Complex64::new(fields[2], fields[3]),
        )
        .ok_or_else(|| Error::Parse("zero or non-finite point".into()))?;
        particles.push((p, fields[4]));
    }
    Ok((ParticleMeasure::new(particles)?, residual))
}
