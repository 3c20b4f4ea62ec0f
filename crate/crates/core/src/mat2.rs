//! Complex 2×2 matrices and 2-vectors.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A column vector in C².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2(pub C64, pub C64);

impl Vec2 {
    pub fn new(a: C64, b: C64) -> Self {
        Vec2(a, b)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr() + self.1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.0.hypot(self.1)
    }

    pub fn scale(&self, s: C64) -> Vec2 {
        Vec2(self.0 * s, self.1 * s)
    }

    /// Hermitian inner product ⟨self, other⟩ = conj(self)·other.
    pub fn dot(&self, other: &Vec2) -> C64 {
        self.0.conj() * other.0 + self.1.conj() * other.1
    }

    pub fn normalized(&self) -> Vec2 {
        let n = self.norm();
        Vec2(self.0 / n, self.1 / n)
    }

    pub fn conj(&self) -> Vec2 {
        Vec2(self.0.conj(), self.1.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

/// Determinant of the matrix with columns `u`, `v`.
pub fn wedge(u: &Vec2, v: &Vec2) -> C64 {
    u.0 * v.1 - u.1 * v.0
}

trait Hypot {
    fn hypot(self, other: C64) -> f64;
}

impl Hypot for C64 {
    fn hypot(self, other: C64) -> f64 {
        let a = self.norm();
        let b = other.norm();
        a.hypot(b)
    }
}

/// Row-major complex 2×2 matrix `((a, b), (c, d))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(x: C64, y: C64) -> Self {
        Mat2::new(x, ZERO, ZERO, y)
    }

    pub fn from_columns(u: Vec2, v: Vec2) -> Self {
        Mat2::new(u.0, v.0, u.1, v.1)
    }

    pub fn col0(&self) -> Vec2 {
        Vec2(self.a, self.c)
    }

    pub fn col1(&self) -> Vec2 {
        Vec2(self.b, self.d)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    /// Inverse via the adjugate.
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let r = det.inv();
        Some(Mat2::new(self.d * r, -self.b * r, -self.c * r, self.a * r))
    }

    /// Adjugate; equals the inverse for unit determinant.
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_re(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn conj(&self) -> Mat2 {
        Mat2::new(self.a.conj(), self.b.conj(), self.c.conj(), self.d.conj())
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        Vec2(self.a * v.0 + self.b * v.1, self.c * v.0 + self.d * v.1)
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm(&self) -> f64 {
        let f = self.frobenius_sqr();
        let det = self.det().norm();
        // σ₁² + σ₂² = f, σ₁σ₂ = |det|.  Use σ₁ = (√(f+2|det|) + √(f−2|det|))/2
        // which avoids cancellation when σ₂ ≪ σ₁.
        let p = (f + 2.0 * det).max(0.0).sqrt();
        let m = (f - 2.0 * det).max(0.0).sqrt();
        0.5 * (p + m)
    }

    /// Natural log of the operator norm, safe for tiny/huge entries.
    pub fn ln_norm(&self) -> f64 {
        let s = self.max_abs();
        if s == 0.0 {
            return f64::NEG_INFINITY;
        }
        s.ln() + self.scale_re(1.0 / s).norm().ln()
    }

    /// Top eigenvector of the Hermitian matrix `M M*`: the most expanded
    /// output direction (top left singular vector).
    pub fn top_left_singular(&self) -> Vec2 {
        top_eigvec_hermitian(&(*self * self.adjoint()))
    }

    /// Top eigenvector of `M* M` (top right singular vector).
    pub fn top_right_singular(&self) -> Vec2 {
        top_eigvec_hermitian(&(self.adjoint() * *self))
    }

    /// Least expanded input direction (bottom right singular vector).
    pub fn bottom_right_singular(&self) -> Vec2 {
        let v = self.top_right_singular();
        Vec2(-v.1.conj(), v.0.conj())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Distance to another matrix in operator norm.
    pub fn dist(&self, other: &Mat2) -> f64 {
        (*self - *other).norm()
    }
}

/// Unit eigenvector for the larger eigenvalue of a Hermitian 2×2 matrix.
fn top_eigvec_hermitian(h: &Mat2) -> Vec2 {
    let s = h.max_abs();
    if s == 0.0 || !s.is_finite() {
        return Vec2(ONE, ZERO);
    }
    let h = h.scale_re(1.0 / s);
    let p = h.a.re;
    let q = h.d.re;
    let r = h.b;
    let half = 0.5 * (p - q);
    let disc = (half * half + r.norm_sqr()).sqrt();
    let lam = 0.5 * (p + q) + disc;
    // Two candidate eigenvectors; keep the better conditioned one.
    let v1 = Vec2(r, C64::from(lam - p));
    let v2 = Vec2(C64::from(lam - q), r.conj());
    let v = if v1.norm_sqr() >= v2.norm_sqr() {
        v1
    } else {
        v2
    };
    if v.norm_sqr() == 0.0 {
        // Scalar multiple of the identity: every direction is extremal.
        return Vec2(ONE, ZERO);
    }
    v.normalized()
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::new(-self.a, -self.b, -self.c, -self.d)
    }
}
