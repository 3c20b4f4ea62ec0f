//! 1-periodic analytic functions stored as finite Fourier series.
//!
//! A [`FourierMap`] is `f(z) = Σ_{|k|≤K} c_k e^{2πikz}` together with the
//! half-width of the strip `|Im z| ≤ r` on which it is meant to be used.
//! Matrix-valued maps are four scalar maps ([`MatrixMap`]). Strip norms are
//! grid maxima on the boundary lines, not certified bounds.

use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64, ZERO};
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

/// Default sampling grid for line evaluations and strip norms.
pub const DEFAULT_GRID: usize = 1024;
/// Default cap on retained Fourier modes after fitting.
pub const DEFAULT_MODE_CAP: usize = 256;

/// Equispaced grid `x_j = j/n` on the circle.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / n as f64).collect()
}

fn check_grid_size(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "grid size {n} is not a power of two"
        )));
    }
    Ok(())
}

fn fft_forward(data: &mut [C64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(data.len()).process(data);
}

fn fft_inverse(data: &mut [C64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(data.len()).process(data);
}

/// Scalar 1-periodic analytic function on a horizontal strip.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMap {
    /// `coeffs[k + K]` is the coefficient of `e^{2πikz}`.
    coeffs: Vec<C64>,
    strip_radius: f64,
}

impl FourierMap {
    pub fn zero(strip_radius: f64) -> Self {
        FourierMap {
            coeffs: vec![ZERO],
            strip_radius,
        }
    }

    pub fn constant(c: C64, strip_radius: f64) -> Self {
        FourierMap {
            coeffs: vec![c],
            strip_radius,
        }
    }

    /// Build from `(mode, coefficient)` pairs; repeated modes add up.
    pub fn from_modes(modes: &[(i64, C64)], strip_radius: f64) -> Self {
        let k_max = modes
            .iter()
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut coeffs = vec![ZERO; 2 * k_max + 1];
        for &(k, c) in modes {
            coeffs[(k + k_max as i64) as usize] += c;
        }
        FourierMap {
            coeffs,
            strip_radius,
        }
    }

    /// Build from a dense coefficient vector of odd length `2K+1`.
    pub fn from_dense(coeffs: Vec<C64>, strip_radius: f64) -> Self {
        assert!(
            coeffs.len() % 2 == 1,
            "dense coefficient vector must have odd length"
        );
        FourierMap {
            coeffs,
            strip_radius,
        }
    }

    /// `a_0 + Σ_k (a_k cos 2πkx + b_k sin 2πkx)` with real coefficients,
    /// `cos[k-1] = a_k`, `sin[k-1] = b_k`.
    pub fn real_trig(constant: f64, cos: &[f64], sin: &[f64], strip_radius: f64) -> Self {
        let k_max = cos.len().max(sin.len());
        let mut coeffs = vec![ZERO; 2 * k_max + 1];
        coeffs[k_max] = C64::from(constant);
        for k in 1..=k_max {
            let a = cos.get(k - 1).copied().unwrap_or(0.0);
            let b = sin.get(k - 1).copied().unwrap_or(0.0);
            // a cos + b sin = (a − ib)/2 e^{iθ} + (a + ib)/2 e^{−iθ}
            coeffs[k_max + k] = C64::new(a / 2.0, -b / 2.0);
            coeffs[k_max - k] = C64::new(a / 2.0, b / 2.0);
        }
        FourierMap {
            coeffs,
            strip_radius,
        }
    }

    /// Trigonometric interpolant of equispaced samples on `x_j = j/n`,
    /// `n` a power of two. The Nyquist coefficient is split evenly between
    /// modes `±n/2`.
    pub fn fit(samples: &[C64], strip_radius: f64) -> Result<Self> {
        let n = samples.len();
        check_grid_size(n)?;
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("sample values".into()));
        }
        let mut data = samples.to_vec();
        fft_forward(&mut data);
        let inv = 1.0 / n as f64;
        if n == 1 {
            return Ok(FourierMap::constant(data[0], strip_radius));
        }
        let half = n / 2;
        let mut coeffs = vec![ZERO; 2 * half + 1];
        for k in -(half as i64)..=(half as i64) {
            let bin = k.rem_euclid(n as i64) as usize;
            let mut c = data[bin] * inv;
            if k.unsigned_abs() as usize == half {
                c *= 0.5;
            }
            coeffs[(k + half as i64) as usize] = c;
        }
        Ok(FourierMap {
            coeffs,
            strip_radius,
        })
    }

    pub fn strip_radius(&self) -> f64 {
        self.strip_radius
    }

    pub fn with_strip_radius(mut self, r: f64) -> Self {
        self.strip_radius = r;
        self
    }

    /// Highest stored mode `K`.
    pub fn max_mode(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let kk = self.max_mode() as i64;
        if k.abs() > kk {
            ZERO
        } else {
            self.coeffs[(k + kk) as usize]
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Iterate `(k, c_k)` from `-K` to `K`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let kk = self.max_mode() as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - kk, *c))
    }

    pub fn mean(&self) -> C64 {
        self.coeff(0)
    }

    /// Evaluate after checking `|Im z| ≤ strip_radius`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if z.im.abs() > self.strip_radius * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip {
                im: z.im.abs(),
                radius: self.strip_radius,
            });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Evaluate `Σ c_k e^{2πikz}` by Horner's rule in `e^{±2πiz}`.
    pub fn eval_unchecked(&self, z: C64) -> C64 {
        let kk = self.max_mode();
        let w = (C64::new(0.0, 2.0 * PI) * z).exp();
        horner(&self.coeffs, kk, w)
    }

    /// Values on the line `Im z = t` at `x_j = j/n` (aliasing is exact).
    pub fn sample_line(&self, t: f64, n: usize) -> Vec<C64> {
        let mut bins = vec![ZERO; n];
        for (k, c) in self.modes() {
            let bin = k.rem_euclid(n as i64) as usize;
            bins[bin] += c * (-2.0 * PI * k as f64 * t).exp();
        }
        fft_inverse(&mut bins);
        bins
    }

    /// Grid estimate of `sup_{|Im z| ≤ ε} |f(z)|` from the two boundary lines.
    pub fn strip_norm(&self, eps: f64) -> Result<f64> {
        if eps.abs() > self.strip_radius * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip {
                im: eps.abs(),
                radius: self.strip_radius,
            });
        }
        let n = norm_grid(self.max_mode());
        let top = self.sample_line(eps, n);
        let bottom = self.sample_line(-eps, n);
        Ok(top
            .iter()
            .chain(bottom.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }

    /// The map `z ↦ conj(f(conj z))`, i.e. `c_k ↦ conj(c_{-k})`.
    pub fn reflect(&self) -> Self {
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        FourierMap {
            coeffs,
            strip_radius: self.strip_radius,
        }
    }

    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        self.modes()
            .all(|(k, c)| (c - self.coeff(-k).conj()).norm() <= tol * scale)
    }

    /// Drop modes `|k| > K`; the tail bound is `Σ_{|k|>K} |c_k|`, a bound on
    /// the discarded part on the real line.
    pub fn truncate(&self, k_keep: usize) -> (Self, f64) {
        let kk = self.max_mode();
        if k_keep >= kk {
            return (self.clone(), 0.0);
        }
        let tail: f64 = self
            .modes()
            .filter(|(k, _)| k.unsigned_abs() as usize > k_keep)
            .map(|(_, c)| c.norm())
            .sum();
        let start = kk - k_keep;
        let coeffs = self.coeffs[start..start + 2 * k_keep + 1].to_vec();
        (
            FourierMap {
                coeffs,
                strip_radius: self.strip_radius,
            },
            tail,
        )
    }

    /// Smallest `K` whose truncation tail is below `tol`.
    pub fn truncation_order(&self, tol: f64) -> usize {
        let kk = self.max_mode();
        let mut tail = 0.0;
        for k in (1..=kk).rev() {
            tail += self.coeff(k as i64).norm() + self.coeff(-(k as i64)).norm();
            if tail >= tol {
                return k;
            }
        }
        0
    }

    /// Remove modes below `rel_tol` times the largest coefficient beyond the
    /// last significant one, capped at `cap` modes.
    pub fn trim(&self, rel_tol: f64, cap: usize) -> Self {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let kk = self.max_mode();
        let mut keep = 0;
        for k in (0..=kk).rev() {
            let m = self
                .coeff(k as i64)
                .norm()
                .max(self.coeff(-(k as i64)).norm());
            if m > rel_tol * scale {
                keep = k;
                break;
            }
        }
        self.truncate(keep.min(cap)).0
    }

    /// Ratio of the largest high-mode coefficient (`|k| > K/2`) to the largest
    /// coefficient overall; small values witness analyticity.
    pub fn decay_ratio(&self) -> f64 {
        let kk = self.max_mode();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 || kk < 2 {
            return 0.0;
        }
        let tail = self
            .modes()
            .filter(|(k, _)| k.unsigned_abs() as usize > kk / 2)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        tail / scale
    }

    /// `z ↦ f(z + it)`.
    pub fn shift_imag(&self, t: f64) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, c)| c * (-2.0 * PI * k as f64 * t).exp())
            .collect();
        FourierMap {
            coeffs,
            strip_radius: (self.strip_radius - t.abs()).max(0.0),
        }
    }

    /// `z ↦ f(z + s)` for real `s`.
    pub fn shift_real(&self, s: f64) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, c)| c * C64::from_polar(1.0, 2.0 * PI * k as f64 * s))
            .collect();
        FourierMap {
            coeffs,
            strip_radius: self.strip_radius,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        FourierMap {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            strip_radius: self.strip_radius,
        }
    }

    pub fn add(&self, other: &FourierMap) -> Self {
        let kk = self.max_mode().max(other.max_mode());
        let coeffs = (-(kk as i64)..=kk as i64)
            .map(|k| self.coeff(k) + other.coeff(k))
            .collect();
        FourierMap {
            coeffs,
            strip_radius: self.strip_radius.min(other.strip_radius),
        }
    }

    pub fn sub(&self, other: &FourierMap) -> Self {
        self.add(&other.scale(C64::from(-1.0)))
    }

    /// Product of two maps (coefficient convolution).
    pub fn mul(&self, other: &FourierMap) -> Self {
        let (ka, kb) = (self.max_mode(), other.max_mode());
        let kk = ka + kb;
        let mut coeffs = vec![ZERO; 2 * kk + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        FourierMap {
            coeffs,
            strip_radius: self.strip_radius.min(other.strip_radius),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

fn horner(coeffs: &[C64], kk: usize, w: C64) -> C64 {
    // Non-negative modes in w, negative modes in 1/w.
    let mut pos = ZERO;
    for c in coeffs[kk..].iter().rev() {
        pos = pos * w + c;
    }
    if kk == 0 {
        return pos;
    }
    let winv = w.inv();
    let mut neg = ZERO;
    for c in coeffs[..kk].iter() {
        neg = neg * winv + c;
    }
    pos + neg * winv
}

fn norm_grid(k_max: usize) -> usize {
    DEFAULT_GRID.max((4 * k_max + 4).next_power_of_two())
}

#[derive(Serialize, Deserialize)]
struct FourierMapRepr {
    strip_radius: f64,
    coefficients: Vec<[f64; 3]>,
}

impl Serialize for FourierMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FourierMapRepr {
            strip_radius: self.strip_radius,
            coefficients: self.modes().map(|(k, c)| [k as f64, c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FourierMapRepr::deserialize(d)?;
        let mut modes = Vec::with_capacity(repr.coefficients.len());
        for [k, re, im] in repr.coefficients {
            if k.fract() != 0.0 {
                return Err(serde::de::Error::custom(format!("non-integer mode {k}")));
            }
            modes.push((k as i64, C64::new(re, im)));
        }
        Ok(FourierMap::from_modes(&modes, repr.strip_radius))
    }
}

/// 2×2-matrix-valued periodic analytic map, stored entrywise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixMap {
    /// Entries `a, b, c, d` of `((a, b), (c, d))`.
    pub entries: [FourierMap; 4],
}

impl MatrixMap {
    pub fn constant(m: Mat2, strip_radius: f64) -> Self {
        MatrixMap {
            entries: [
                FourierMap::constant(m.a, strip_radius),
                FourierMap::constant(m.b, strip_radius),
                FourierMap::constant(m.c, strip_radius),
                FourierMap::constant(m.d, strip_radius),
            ],
        }
    }

    pub fn from_entries(a: FourierMap, b: FourierMap, c: FourierMap, d: FourierMap) -> Self {
        MatrixMap {
            entries: [a, b, c, d],
        }
    }

    /// Entrywise trigonometric interpolation of matrix samples.
    pub fn fit(samples: &[Mat2], strip_radius: f64) -> Result<Self> {
        let pick = |f: fn(&Mat2) -> C64| samples.iter().map(f).collect::<Vec<_>>();
        Ok(MatrixMap {
            entries: [
                FourierMap::fit(&pick(|m| m.a), strip_radius)?,
                FourierMap::fit(&pick(|m| m.b), strip_radius)?,
                FourierMap::fit(&pick(|m| m.c), strip_radius)?,
                FourierMap::fit(&pick(|m| m.d), strip_radius)?,
            ],
        })
    }

    pub fn strip_radius(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.strip_radius)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_mode(&self) -> usize {
        self.entries.iter().map(|e| e.max_mode()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: C64) -> Result<Mat2> {
        let r = self.strip_radius();
        if z.im.abs() > r * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip {
                im: z.im.abs(),
                radius: r,
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub fn eval_unchecked(&self, z: C64) -> Mat2 {
        let w = (C64::new(0.0, 2.0 * PI) * z).exp();
        let [a, b, c, d] = &self.entries;
        Mat2::new(
            horner(&a.coeffs, a.max_mode(), w),
            horner(&b.coeffs, b.max_mode(), w),
            horner(&c.coeffs, c.max_mode(), w),
            horner(&d.coeffs, d.max_mode(), w),
        )
    }

    pub fn sample_line(&self, t: f64, n: usize) -> Vec<Mat2> {
        let [a, b, c, d] = &self.entries;
        let (sa, sb, sc, sd) = (
            a.sample_line(t, n),
            b.sample_line(t, n),
            c.sample_line(t, n),
            d.sample_line(t, n),
        );
        (0..n)
            .map(|j| Mat2::new(sa[j], sb[j], sc[j], sd[j]))
            .collect()
    }

    /// Grid estimate of `sup ‖M(z)‖` over the strip `|Im z| ≤ ε`.
    pub fn strip_norm(&self, eps: f64) -> Result<f64> {
        let r = self.strip_radius();
        if eps.abs() > r * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip {
                im: eps.abs(),
                radius: r,
            });
        }
        let n = norm_grid(self.max_mode());
        Ok(self
            .sample_line(eps, n)
            .iter()
            .chain(self.sample_line(-eps, n).iter())
            .map(|m| m.norm())
            .fold(0.0, f64::max))
    }

    pub fn reflect(&self) -> Self {
        MatrixMap {
            entries: self.entries.clone().map(|e| e.reflect()),
        }
    }

    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.is_real_symmetric(tol))
    }

    /// `z ↦ L · M(z)` for a constant matrix `L`.
    pub fn left_mul_const(&self, l: &Mat2) -> Self {
        let [a, b, c, d] = &self.entries;
        MatrixMap {
            entries: [
                a.scale(l.a).add(&c.scale(l.b)),
                b.scale(l.a).add(&d.scale(l.b)),
                a.scale(l.c).add(&c.scale(l.d)),
                b.scale(l.c).add(&d.scale(l.d)),
            ],
        }
    }

    /// Pointwise product `z ↦ M(z) N(z)`.
    pub fn mul(&self, other: &MatrixMap) -> Self {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &other.entries;
        MatrixMap {
            entries: [
                a.mul(e).add(&b.mul(g)),
                a.mul(f).add(&b.mul(h)),
                c.mul(e).add(&d.mul(g)),
                c.mul(f).add(&d.mul(h)),
            ],
        }
    }

    pub fn shift_imag(&self, t: f64) -> Self {
        MatrixMap {
            entries: self.entries.clone().map(|e| e.shift_imag(t)),
        }
    }

    pub fn shift_real(&self, s: f64) -> Self {
        MatrixMap {
            entries: self.entries.clone().map(|e| e.shift_real(s)),
        }
    }

    pub fn trim(&self, rel_tol: f64, cap: usize) -> Self {
        // One common truncation order for all entries.
        let scale = self
            .entries
            .iter()
            .flat_map(|e| e.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let mut keep = 0;
        for e in &self.entries {
            let kk = e.max_mode();
            for k in (0..=kk).rev() {
                let m = e.coeff(k as i64).norm().max(e.coeff(-(k as i64)).norm());
                if m > rel_tol * scale {
                    keep = keep.max(k);
                    break;
                }
            }
        }
        let keep = keep.min(cap);
        MatrixMap {
            entries: self.entries.clone().map(|e| e.truncate(keep).0),
        }
    }

    pub fn decay_ratio(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.decay_ratio())
            .fold(0.0, f64::max)
    }

    pub fn with_strip_radius(self, r: f64) -> Self {
        MatrixMap {
            entries: self.entries.map(|e| e.with_strip_radius(r)),
        }
    }
}
