//! 2×2 complex matrices and their action on the projective line P(C²).
//!
//! Points of P(C²) are stored as unit homogeneous pairs `(z1, z2)` with a
//! canonical phase, so the horizontal direction `[1:0]` and the vertical
//! direction `[0:1]` are ordinary points. The chart `z1 / z2` onto the
//! Riemann sphere only appears through [`ProjPoint::chart`] and
//! [`mobius_apply`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singularity threshold: `|det M| <= SINGULAR_TOL * ‖M‖_F²`.
pub const SINGULAR_TOL: f64 = 1e-14;

/// Coordinates below this modulus are treated as zero when fixing the phase.
const PHASE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major 2×2 complex matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2C {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2C {
    pub const IDENTITY: Mat2C = Mat2C {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub const ZERO: Mat2C = Mat2C {
        a: ZERO,
        b: ZERO,
        c: ZERO,
        d: ZERO,
    };

    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2C { a, b, c, d }
    }

    pub const fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2C {
            a: Complex64::new(a, 0.0),
            b: Complex64::new(b, 0.0),
            c: Complex64::new(c, 0.0),
            d: Complex64::new(d, 0.0),
        }
    }

    pub const fn diag(a: f64, d: f64) -> Self {
        Mat2C::real(a, 0.0, 0.0, d)
    }

    /// Real rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2C::real(c, -s, s, c)
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Mat2C::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Mat2C::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mat2C::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn is_singular(&self) -> bool {
        let f = self.frobenius_sq();
        !(self.det().norm() > SINGULAR_TOL * f)
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.is_singular() {
            return Err(Error::SingularMatrix {
                det: self.det().norm(),
            });
        }
        let inv_det = self.det().inv();
        Ok(Mat2C::new(self.d, -self.b, -self.c, self.a).scale(inv_det))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Largest off-diagonal modulus.
    pub fn off_diagonal(&self) -> f64 {
        self.b.norm().max(self.c.norm())
    }

    pub(crate) fn bits(&self) -> [u64; 8] {
        let e = self.entries();
        [
            e[0].re.to_bits(),
            e[0].im.to_bits(),
            e[1].re.to_bits(),
            e[1].im.to_bits(),
            e[2].re.to_bits(),
            e[2].im.to_bits(),
            e[3].re.to_bits(),
            e[3].im.to_bits(),
        ]
    }
}

impl Mul for Mat2C {
    type Output = Mat2C;

    fn mul(self, o: Mat2C) -> Mat2C {
        Mat2C::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2C {
    type Output = Mat2C;

    fn add(self, o: Mat2C) -> Mat2C {
        Mat2C::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2C {
    type Output = Mat2C;

    fn sub(self, o: Mat2C) -> Mat2C {
        Mat2C::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2C {
    type Output = Mat2C;

    fn neg(self) -> Mat2C {
        self.scale_real(-1.0)
    }
}

impl fmt::Display for Mat2C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Squared singular values `(σ1², σ2²)` of the matrix scaled by `1 / max_abs`.
fn scaled_singular_sq(m: &Mat2C) -> Option<(f64, f64, f64)> {
    let s = m.max_abs();
    if s == 0.0 || !s.is_finite() {
        return None;
    }
    let n = m.scale_real(1.0 / s);
    let f = n.frobenius_sq();
    let det = n.det().norm();
    // σ1² is the larger root of x² − F x + |det|² = 0.
    let disc = ((f - 2.0 * det) * (f + 2.0 * det)).max(0.0);
    let s1 = 0.5 * (f + disc.sqrt());
    let s2 = if s1 > 0.0 { det * det / s1 } else { 0.0 };
    Some((s, s1, s2))
}

/// Largest singular value, from the closed-form 2×2 identity.
pub fn operator_norm(m: &Mat2C) -> f64 {
    match scaled_singular_sq(m) {
        Some((s, s1, _)) => s * s1.sqrt(),
        None => 0.0,
    }
}

/// Smallest singular value `|det M| / σ1`, or 0 for the zero matrix.
pub fn smallest_singular(m: &Mat2C) -> f64 {
    let s = m.max_abs();
    if s == 0.0 {
        return 0.0;
    }
    let n = m.scale_real(1.0 / s);
    let s1 = operator_norm(&n);
    if s1 == 0.0 {
        0.0
    } else {
        s * n.det().norm() / s1
    }
}

/// Point of the complex projective line, stored as a unit vector whose first
/// non-negligible coordinate is real and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    z1: Complex64,
    z2: Complex64,
}

impl ProjPoint {
    /// The horizontal direction `[1:0]`.
    pub const HORIZONTAL: ProjPoint = ProjPoint { z1: ONE, z2: ZERO };
    /// The vertical direction `[0:1]`.
    pub const VERTICAL: ProjPoint = ProjPoint { z1: ZERO, z2: ONE };

    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        Self::from_vector([z1, z2])
            .ok_or_else(|| Error::InvalidParams("zero or non-finite homogeneous vector".into()))
    }

    pub fn real(x: f64, y: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
    }

    /// Canonical representative of `[v]`, or `None` for the zero vector.
    pub fn from_vector(v: [Complex64; 2]) -> Option<Self> {
        // Rescale first so squaring cannot overflow or underflow.
        let s = v
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max);
        if s == 0.0 || !s.is_finite() {
            return None;
        }
        let (u1, u2) = (v[0] / s, v[1] / s);
        let norm = (u1.norm_sqr() + u2.norm_sqr()).sqrt();
        let (mut z1, mut z2) = (u1 / norm, u2 / norm);
        let lead = if z1.norm() > PHASE_TOL { z1 } else { z2 };
        let phase = lead.conj() / lead.norm();
        z1 *= phase;
        z2 *= phase;
        if z1.norm() > PHASE_TOL {
            z1.im = 0.0;
        } else {
            z2.im = 0.0;
        }
        Some(ProjPoint { z1, z2 })
    }

    /// Keep `(z1, z2)` verbatim when it is already a canonical representative,
    /// so stored points read back bit for bit.
    pub(crate) fn from_stored(z1: Complex64, z2: Complex64) -> Option<Self> {
        let unit = ((z1.norm_sqr() + z2.norm_sqr()) - 1.0).abs() < 1e-14;
        let phase_ok = if z1.norm() > PHASE_TOL {
            z1.im == 0.0 && z1.re > 0.0
        } else {
            z2.im == 0.0 && z2.re >= 0.0
        };
        if unit && phase_ok && z1.is_finite() && z2.is_finite() {
            Some(ProjPoint { z1, z2 })
        } else {
            Self::from_vector([z1, z2])
        }
    }

    /// Point with the given chart value `z1 / z2`.
    pub fn from_chart(z: ExtComplex) -> Self {
        match z {
            ExtComplex::Infinity => ProjPoint::HORIZONTAL,
            ExtComplex::Finite(w) => {
                ProjPoint::from_vector([w, ONE]).unwrap_or(ProjPoint::HORIZONTAL)
            }
        }
    }

    /// Direction at angle `theta` from the horizontal in the real plane.
    pub fn real_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        ProjPoint::from_vector([Complex64::new(c, 0.0), Complex64::new(s, 0.0)])
            .expect("unit vector")
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    pub fn vector(&self) -> [Complex64; 2] {
        [self.z1, self.z2]
    }

    /// Chart value `z1 / z2` on the Riemann sphere.
    pub fn chart(&self) -> ExtComplex {
        if self.z2 == ZERO {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(self.z1 / self.z2)
        }
    }

    /// Image on the unit sphere S² ⊂ R³ under the Hopf map. `[1:0]` goes to
    /// the north pole `(0, 0, 1)`.
    pub fn sphere(&self) -> [f64; 3] {
        let w = self.z1 * self.z2.conj();
        [
            2.0 * w.re,
            2.0 * w.im,
            self.z1.norm_sqr() - self.z2.norm_sqr(),
        ]
    }

    /// Inverse of [`ProjPoint::sphere`].
    pub fn from_sphere(p: [f64; 3]) -> Self {
        let [x, y, z] = p;
        let r = (x * x + y * y + z * z).sqrt();
        let (x, y, z) = (x / r, y / r, z / r);
        let a = ((1.0 + z) / 2.0).max(0.0).sqrt();
        if a > 1e-8 {
            let z2 = Complex64::new(x, -y) / (2.0 * a);
            ProjPoint::from_vector([Complex64::new(a, 0.0), z2]).expect("non-zero")
        } else {
            ProjPoint::VERTICAL
        }
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {}]", self.z1, self.z2)
    }
}

/// Point of the extended complex plane C ∪ {∞}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    /// Chordal distance on the Riemann sphere (diameter 2 normalization).
    pub fn chordal_distance(&self, other: &ExtComplex) -> f64 {
        match (self, other) {
            (ExtComplex::Infinity, ExtComplex::Infinity) => 0.0,
            (ExtComplex::Finite(z), ExtComplex::Infinity)
            | (ExtComplex::Infinity, ExtComplex::Finite(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
            (ExtComplex::Finite(z), ExtComplex::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
            }
        }
    }
}

/// Canonical representative of `[M v]`.
pub fn proj_apply(m: &Mat2C, v: &ProjPoint) -> Result<ProjPoint> {
    if m.is_singular() {
        return Err(Error::SingularMatrix {
            det: m.det().norm(),
        });
    }
    Ok(proj_apply_unchecked(m, v))
}

/// [`proj_apply`] without the singularity check, for hot loops over
/// cocycles whose atoms were validated at construction.
pub(crate) fn proj_apply_unchecked(m: &Mat2C, v: &ProjPoint) -> ProjPoint {
    ProjPoint::from_vector(m.apply(v.vector())).unwrap_or(*v)
}

/// Möbius map `z ↦ (a z + b) / (c z + d)` with the usual conventions at the
/// pole and at ∞.
pub fn mobius_apply(m: &Mat2C, z: ExtComplex) -> Result<ExtComplex> {
    if m.is_singular() {
        return Err(Error::SingularMatrix {
            det: m.det().norm(),
        });
    }
    Ok(match z {
        ExtComplex::Infinity => {
            if m.c == ZERO {
                ExtComplex::Infinity
            } else {
                ExtComplex::Finite(m.a / m.c)
            }
        }
        ExtComplex::Finite(z) => {
            let den = m.c * z + m.d;
            if den == ZERO {
                ExtComplex::Infinity
            } else {
                ExtComplex::Finite((m.a * z + m.b) / den)
            }
        }
    })
}

/// Projective angle `arccos |⟨u, v⟩|` in `[0, π/2]`.
///
/// Evaluated as `atan2(|u ∧ v|, |⟨u, v⟩|)`, which agrees with the arccos form
/// for unit vectors and stays accurate for nearly equal points.
pub fn angle_between(u: &ProjPoint, v: &ProjPoint) -> f64 {
    let inner = (u.z1.conj() * v.z1 + u.z2.conj() * v.z2).norm();
    let wedge = (u.z1 * v.z2 - u.z2 * v.z1).norm();
    wedge.atan2(inner).clamp(0.0, FRAC_PI_2)
}

/// Singular directions of a non-zero matrix: the image of the most expanded
/// direction (top left singular vector) and the most expanded input
/// direction (top right singular vector).
pub fn top_singular_directions(m: &Mat2C) -> Option<(ProjPoint, ProjPoint)> {
    let (s, s1, _) = scaled_singular_sq(m)?;
    let n = m.scale_real(1.0 / s);
    let right = top_eigenvector(&(n.adjoint() * n), s1);
    let left = top_eigenvector(&(n * n.adjoint()), s1);
    Some((left, right))
}

/// Unit eigenvector of a 2×2 Hermitian matrix for its eigenvalue `lambda`.
fn top_eigenvector(h: &Mat2C, lambda: f64) -> ProjPoint {
    let p = h.a.re;
    let r = h.d.re;
    let q = h.b;
    let x = [q, Complex64::new(lambda - p, 0.0)];
    let y = [Complex64::new(lambda - r, 0.0), q.conj()];
    let nx = x[0].norm_sqr() + x[1].norm_sqr();
    let ny = y[0].norm_sqr() + y[1].norm_sqr();
    let v = if nx >= ny { x } else { y };
    ProjPoint::from_vector(v).unwrap_or(ProjPoint::HORIZONTAL)
}

/// The point orthogonal to `v`.
pub fn orthogonal(v: &ProjPoint) -> ProjPoint {
    ProjPoint::from_vector([-v.z2.conj(), v.z1.conj()]).expect("unit vector")
}
