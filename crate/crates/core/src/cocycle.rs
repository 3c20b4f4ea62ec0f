//! Quasiperiodic cocycles `(x, y) ↦ (x + α, A(x)·y)` and their products.

use crate::analytic::{FourierMap, MatrixMap};
use crate::arithmetic::Frequency;
use crate::error::{Error, Result};
use crate::mat2::{wedge, Mat2, Vec2, C64, I, ONE, ZERO};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Multiplications between renormalizations in [`product`].
const RENORM_EVERY: usize = 32;
/// Tolerance on `|det A − 1|` accepted by [`Cocycle::new`].
const DET_TOL: f64 = 1e-10;
const DET_CHECK_GRID: usize = 256;

/// A frequency together with an analytic `SL(2, C)`-valued map.
#[derive(Clone, Debug)]
pub struct Cocycle {
    frequency: Frequency,
    map: MatrixMap,
    real_symmetric: bool,
    strip_radius: f64,
}

impl Cocycle {
    /// Checks `det A = 1` on the real line and both strip boundaries.
    pub fn new(frequency: Frequency, map: MatrixMap) -> Result<Self> {
        let strip_radius = map.strip_radius();
        for t in [-strip_radius, 0.0, strip_radius] {
            for m in map.sample_line(t, DET_CHECK_GRID) {
                if !m.is_finite() {
                    return Err(Error::NonFinite("cocycle map".into()));
                }
                let err = (m.det() - ONE).norm();
                if err > DET_TOL * m.frobenius_sqr().max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "determinant off by {err:.3e} at height {t}"
                    )));
                }
            }
        }
        let real_symmetric = map.is_real_symmetric(1e-12);
        Ok(Cocycle {
            frequency,
            map,
            real_symmetric,
            strip_radius,
        })
    }

    /// Constant cocycle.
    pub fn constant(frequency: Frequency, m: Mat2, strip_radius: f64) -> Result<Self> {
        Cocycle::new(frequency, MatrixMap::constant(m, strip_radius))
    }

    /// Schrödinger cocycle with potential `v` at energy `E`.
    pub fn schrodinger(frequency: Frequency, energy: f64, v: &FourierMap) -> Result<Self> {
        Cocycle::new(frequency, schrodinger_map(energy, v)?)
    }

    pub fn frequency(&self) -> &Frequency {
        &self.frequency
    }

    pub fn map(&self) -> &MatrixMap {
        &self.map
    }

    pub fn strip_radius(&self) -> f64 {
        self.strip_radius
    }

    pub fn is_real_symmetric(&self) -> bool {
        self.real_symmetric
    }

    pub fn eval(&self, z: C64) -> Result<Mat2> {
        self.map.eval(z)
    }

    /// `R_θ · A` for a complex angle `θ`.
    pub fn rotated(&self, theta: C64) -> Cocycle {
        let map = self.map.left_mul_const(&rotation(theta));
        let real_symmetric = map.is_real_symmetric(1e-12);
        Cocycle {
            frequency: self.frequency.clone(),
            map,
            real_symmetric,
            strip_radius: self.strip_radius,
        }
    }

    /// The perturbation `R_{−iθ} · A`.
    pub fn perturbed(&self, theta: f64) -> Cocycle {
        self.rotated(C64::new(0.0, -theta))
    }

    /// Same frequency, different map.
    pub fn with_map(&self, map: MatrixMap) -> Result<Cocycle> {
        Cocycle::new(self.frequency.clone(), map)
    }

    fn check_height(&self, t: f64) -> Result<()> {
        if t.abs() > self.strip_radius * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip {
                im: t.abs(),
                radius: self.strip_radius,
            });
        }
        Ok(())
    }
}

/// `R_θ = ((cos 2πθ, −sin 2πθ), (sin 2πθ, cos 2πθ))` for complex `θ`.
pub fn rotation(theta: C64) -> Mat2 {
    let a = theta * (2.0 * PI);
    let (c, s) = (a.cos(), a.sin());
    Mat2::new(c, -s, s, c)
}

/// Real-valued Fourier potential `v` at energy `E` as the map
/// `z ↦ ((E − v(z), −1), (1, 0))`.
pub fn schrodinger_map(energy: f64, v: &FourierMap) -> Result<MatrixMap> {
    if !energy.is_finite() {
        return Err(Error::NonFinite(format!("energy {energy}")));
    }
    if !v.is_real_symmetric(1e-12) {
        return Err(Error::InvalidInput(
            "potential is not real-symmetric".into(),
        ));
    }
    let r = v.strip_radius();
    let diag = FourierMap::constant(C64::from(energy), r).sub(v);
    Ok(MatrixMap::from_entries(
        diag,
        FourierMap::constant(-ONE, r),
        FourierMap::constant(ONE, r),
        FourierMap::zero(r),
    ))
}

/// Almost Mathieu potential `2λ cos 2πx`. The map is entire; `strip_radius`
/// only records the intended domain.
pub fn amo_potential(lambda: f64, strip_radius: f64) -> FourierMap {
    FourierMap::real_trig(0.0, &[2.0 * lambda], &[], strip_radius)
}

/// A point of the Riemann sphere in homogeneous coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint(Vec2);

impl ProjPoint {
    pub fn new(xi1: C64, xi2: C64) -> Result<Self> {
        let v = Vec2(xi1, xi2);
        if !v.is_finite() {
            return Err(Error::NonFinite("projective point".into()));
        }
        if v.norm_sqr() == 0.0 {
            return Err(Error::InvalidInput("zero homogeneous vector".into()));
        }
        Ok(ProjPoint(v))
    }

    /// Wrap a nonzero vector without checks.
    pub fn from_vec(v: Vec2) -> Self {
        ProjPoint(v)
    }

    /// The point with chart value `z`.
    pub fn from_chart(z: C64) -> Self {
        ProjPoint(Vec2(z, ONE))
    }

    pub fn infinity() -> Self {
        ProjPoint(Vec2(ONE, ZERO))
    }

    pub fn vector(&self) -> Vec2 {
        self.0
    }

    /// `ξ₁/ξ₂`, or `None` at ∞.
    pub fn chart(&self) -> Option<C64> {
        if self.0 .1.norm_sqr() == 0.0 {
            None
        } else {
            Some(self.0 .0 / self.0 .1)
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.0 .1.norm_sqr() == 0.0
    }

    /// Unit representative.
    pub fn normalized(&self) -> ProjPoint {
        ProjPoint(self.0.normalized())
    }

    /// Strictly inside the upper half plane: `Im(ξ₁ conj ξ₂) > 0`.
    pub fn in_upper_half_plane(&self) -> bool {
        (self.0 .0 * self.0 .1.conj()).im > 0.0
    }

    /// Complex conjugate point (reflection across the real circle).
    pub fn conj(&self) -> ProjPoint {
        ProjPoint(self.0.conj())
    }
}

/// Projective action `M·(ξ₁, ξ₂)`.
pub fn act(m: &Mat2, p: &ProjPoint) -> Result<ProjPoint> {
    let det = m.det();
    if det.norm() == 0.0 || !det.is_finite() {
        return Err(Error::SingularMatrix);
    }
    Ok(ProjPoint(m.apply(&p.0)))
}

/// Sine of the angle between two lines of C²: `|ξ ∧ η| / (‖ξ‖‖η‖)`.
pub fn sphere_distance(u: &ProjPoint, s: &ProjPoint) -> f64 {
    let (a, b) = (u.0.normalized(), s.0.normalized());
    wedge(&a, &b).norm().min(1.0)
}

/// The Cayley chart `z ↦ (z − i)/(z + i)`, sending H to the unit disk.
pub fn disk_chart(p: &ProjPoint) -> C64 {
    let Vec2(x, y) = p.0;
    (x - I * y) / (x + I * y)
}

/// A transfer-matrix product stored as `matrix · e^{log_scale}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductResult {
    pub matrix: Mat2,
    pub log_scale: f64,
    pub n: u64,
}

impl ProductResult {
    pub fn identity() -> Self {
        ProductResult {
            matrix: Mat2::identity(),
            log_scale: 0.0,
            n: 0,
        }
    }

    pub fn ln_norm(&self) -> f64 {
        self.log_scale + self.matrix.ln_norm()
    }

    /// The unscaled product; overflows for long products.
    pub fn true_product(&self) -> Mat2 {
        self.matrix.scale_re(self.log_scale.exp())
    }

    fn renormalize(&mut self) {
        let s = self.matrix.max_abs();
        if s > 0.0 && s.is_finite() {
            self.matrix = self.matrix.scale_re(1.0 / s);
            self.log_scale += s.ln();
        }
    }
}

/// `A_n(z) = A(z + (n−1)α) ⋯ A(z)`.
pub fn product(c: &Cocycle, n: u64, z: C64) -> Result<ProductResult> {
    c.check_height(z.im)?;
    Ok(product_from(c, n, z.re, z.im, 0))
}

/// `A(x + (k0+n−1)α + it) ⋯ A(x + k0·α + it)`, renormalized.
pub fn product_from(c: &Cocycle, n: u64, x: f64, t: f64, k0: i64) -> ProductResult {
    let mut acc = ProductResult::identity();
    run(c, &mut acc, n, x, t, k0);
    acc
}

/// Continue `acc = A_m(x + it)` to `A_{m+steps}(x + it)`.
pub fn extend(c: &Cocycle, acc: &mut ProductResult, steps: u64, x: f64, t: f64) {
    let k0 = acc.n as i64;
    run(c, acc, steps, x, t, k0);
}

fn run(c: &Cocycle, acc: &mut ProductResult, steps: u64, x: f64, t: f64, k0: i64) {
    let mut since = 0;
    for j in 0..steps {
        let xj = c.frequency.phase_signed(x, k0 + j as i64);
        acc.matrix = c.map.eval_unchecked(C64::new(xj, t)) * acc.matrix;
        since += 1;
        if since == RENORM_EVERY {
            acc.renormalize();
            since = 0;
        }
    }
    acc.renormalize();
    acc.n += steps;
}

/// Products `A_n(x_j + it)` over the grid `x_j = j/grid`, in grid order.
pub fn line_products(c: &Cocycle, n: u64, t: f64, grid: usize) -> Result<Vec<ProductResult>> {
    c.check_height(t)?;
    Ok((0..grid)
        .into_par_iter()
        .map(|j| product_from(c, n, j as f64 / grid as f64, t, 0))
        .collect())
}
