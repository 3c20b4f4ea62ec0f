//! Holomorphic families in `K_{u(z), s(z)}`: straightening a pair of
//! direction fields, balancing it on the strip boundary, and removing the
//! rotation twist picked up across a period.

use super::minimizer::{cayley_unitary, dilation};
use crate::analytic::{FourierMap, MatrixMap};
use crate::cocycle::{rotation, sphere_distance, ProjPoint};
use crate::error::{Error, Result};
use crate::mat2::{Mat2, Vec2, C64, I, ONE};
use serde::Serialize;
use std::f64::consts::PI;

/// A holomorphic vector field `z ↦ (f₀(z), f₁(z))`.
pub type VectorMap = [FourierMap; 2];

pub fn eval_vector(v: &VectorMap, z: C64) -> Vec2 {
    Vec2(v[0].eval_unchecked(z), v[1].eval_unchecked(z))
}

pub fn sample_vector(v: &VectorMap, t: f64, n: usize) -> Vec<Vec2> {
    let a = v[0].sample_line(t, n);
    let b = v[1].sample_line(t, n);
    a.into_iter().zip(b).map(|(x, y)| Vec2(x, y)).collect()
}

pub fn reflect_vector(v: &VectorMap) -> VectorMap {
    [v[0].reflect(), v[1].reflect()]
}

/// Fit and trim at the noise floor.
pub(crate) fn fit_matrix(samples: &[Mat2], r: f64, trim: f64, cap: usize) -> Result<MatrixMap> {
    Ok(MatrixMap::fit(samples, r)?.trim(trim, cap))
}

pub(crate) fn fit_scalar(samples: &[C64], r: f64, trim: f64, cap: usize) -> Result<FourierMap> {
    Ok(FourierMap::fit(samples, r)?.trim(trim, cap))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitOptions {
    pub grid: usize,
    /// Relative noise floor for trimming fitted coefficients.
    pub trim: f64,
    pub mode_cap: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            grid: crate::analytic::DEFAULT_GRID,
            trim: 1e-14,
            mode_cap: crate::analytic::DEFAULT_MODE_CAP,
        }
    }
}

/// `B₀ = U_c · diag(g, W/g) · P⁻¹` where `P` has the lifts of `u`, `s` as
/// columns and `W = det P`. Then `B₀·u = i`, `B₀·s = −i`, `det B₀ = 1`, and
/// no square roots are taken. The gauge `g = e^h` continues
/// `½ ln(‖u‖·|W|/‖s‖)` from the real axis, which balances the two column
/// norms of `B₀⁻¹` there.
pub fn straighten(
    u: &VectorMap,
    s: &VectorMap,
    delta: f64,
    tol_angle: f64,
    opts: &FitOptions,
) -> Result<MatrixMap> {
    let n = opts.grid;
    let r = u[0].strip_radius().min(s[0].strip_radius()).max(delta);
    let mut min_angle = f64::INFINITY;
    for t in [-delta, 0.0, delta] {
        for (a, b) in sample_vector(u, t, n).iter().zip(sample_vector(s, t, n)) {
            min_angle = min_angle.min(sphere_distance(
                &ProjPoint::from_vec(*a),
                &ProjPoint::from_vec(b),
            ));
        }
    }
    if !(min_angle > tol_angle) {
        return Err(Error::WeakHyperbolicity {
            min_angle,
            tol: tol_angle,
        });
    }
    let us = sample_vector(u, 0.0, n);
    let ss = sample_vector(s, 0.0, n);
    let balance: Vec<C64> = us
        .iter()
        .zip(&ss)
        .map(|(a, b)| {
            let w = a.0 * b.1 - a.1 * b.0;
            C64::from(0.5 * (a.norm() * w.norm() / b.norm()).ln())
        })
        .collect();
    let h = fit_scalar(&balance, r, opts.trim, opts.mode_cap)?;
    let gs: Vec<C64> = h.sample_line(0.0, n).iter().map(|v| v.exp()).collect();
    let uc = cayley_unitary();
    let samples: Vec<Mat2> = (0..n)
        .map(|j| {
            let (a, b) = (us[j], ss[j]);
            let w = a.0 * b.1 - a.1 * b.0;
            let g = gs[j];
            // diag(g, W/g) · adj(P)/W
            let inner = Mat2::new(g * b.1 / w, -g * b.0 / w, -a.1 / g, a.0 / g);
            uc * inner
        })
        .collect();
    fit_matrix(&samples, r, opts.trim, opts.mode_cap)
}

/// `B₀⁻¹(i, 1)` and `B₀⁻¹(−i, 1)`.
pub fn preimages(b: &Mat2) -> (Vec2, Vec2) {
    let adj = b.adjugate();
    (adj.apply(&Vec2(I, ONE)), adj.apply(&Vec2(-I, ONE)))
}

/// `R_{μz} · P(z)` with `P` periodic.
#[derive(Clone, Debug, Serialize)]
pub struct TwistedMap {
    pub periodic: MatrixMap,
    pub twist: f64,
}

impl TwistedMap {
    pub fn eval(&self, z: C64) -> Mat2 {
        rotation(z * self.twist) * self.periodic.eval_unchecked(z)
    }
}

/// Boundary data and solution of the balancing problem.
#[derive(Clone, Debug, Serialize)]
pub struct HilbertSolution {
    pub map: TwistedMap,
    /// Periodic part `N` of `ν(z) = N(z) − ibz`.
    pub nu: FourierMap,
    pub b: f64,
    /// `max |‖B₁⁻¹(i,1)‖/‖B₁⁻¹(−i,1)‖ − 1|` on both boundary lines.
    pub boundary_imbalance: f64,
}

/// Solve for `ν` holomorphic on `|Im z| < δ` with `Re ν = f±` on `Im z = ±δ`,
/// with `ν(z) = N(z) − ibz`, `N` periodic. Modes `k` and `−k` of `N` are
/// coupled by a 2×2 system; mode 0 is real and the linear term carries the
/// mismatch of the means.
pub fn solve_boundary(f_plus: &FourierMap, f_minus: &FourierMap, delta: f64) -> (FourierMap, f64) {
    let kk = f_plus.max_mode().max(f_minus.max_mode());
    let mut modes = Vec::with_capacity(2 * kk + 1);
    let m0 = 0.5 * (f_plus.coeff(0).re + f_minus.coeff(0).re);
    let b = (f_plus.coeff(0).re - f_minus.coeff(0).re) / (2.0 * delta);
    modes.push((0i64, C64::from(m0)));
    for k in 1..=kk as i64 {
        let e = (2.0 * PI * k as f64 * delta).exp();
        let (ep, em) = (e.recip(), e);
        // n_k e^{−2πkδ} + conj(n_{−k}) e^{2πkδ} = 2F⁺_k
        // n_k e^{2πkδ} + conj(n_{−k}) e^{−2πkδ} = 2F⁻_k
        let (rp, rm) = (f_plus.coeff(k) * 2.0, f_minus.coeff(k) * 2.0);
        let det = ep * ep - em * em;
        let nk = (rp * ep - rm * em) / det;
        let nmk_conj = (rm * ep - rp * em) / det;
        modes.push((k, nk));
        modes.push((-k, nmk_conj.conj()));
    }
    (FourierMap::from_modes(&modes, f_plus.strip_radius()), b)
}

/// Balance `B₀` on the boundary lines: `B₁ = U_c D_{e^{ν/2}} U_c⁻¹ B₀` with
/// `Re ν = ln(‖B₀⁻¹(i,1)‖/‖B₀⁻¹(−i,1)‖)` on `Im z = ±δ`. The linear part of
/// `ν` becomes the twist `R_{μz}`, `μ = −b/(4π)`.
pub fn hilbert_minimize(b0: &MatrixMap, delta: f64, opts: &FitOptions) -> Result<HilbertSolution> {
    let n = opts.grid;
    let r = b0.strip_radius();
    let boundary = |t: f64| -> Result<Vec<C64>> {
        b0.sample_line(t, n)
            .iter()
            .map(|m| {
                let (u, s) = preimages(m);
                let (nu, ns) = (u.norm(), s.norm());
                if !(nu > 0.0 && ns > 0.0 && nu.is_finite() && ns.is_finite()) {
                    return Err(Error::DegenerateRadius(format!("at height {t}")));
                }
                Ok(C64::from((nu / ns).ln()))
            })
            .collect()
    };
    let fp = FourierMap::fit(&boundary(delta)?, r)?;
    let fm = FourierMap::fit(&boundary(-delta)?, r)?;
    let (nu, b) = solve_boundary(&fp, &fm, delta);
    let nu = nu.trim(opts.trim, opts.mode_cap);
    let uc = cayley_unitary();
    let uci = uc.adjoint();
    let b0s = b0.sample_line(0.0, n);
    let nus = nu.sample_line(0.0, n);
    let samples: Vec<Mat2> = b0s
        .iter()
        .zip(&nus)
        .map(|(m, v)| uc * dilation((v * 0.5).exp()) * uci * *m)
        .collect();
    let periodic = fit_matrix(&samples, r, opts.trim, opts.mode_cap)?;
    let map = TwistedMap {
        periodic,
        twist: -b / (4.0 * PI),
    };
    let mut imbalance: f64 = 0.0;
    for t in [-delta, delta] {
        for (j, m) in map.periodic.sample_line(t, n).iter().enumerate() {
            let z = C64::new(j as f64 / n as f64, t);
            let full = rotation(z * map.twist) * *m;
            let (u, s) = preimages(&full);
            imbalance = imbalance.max((u.norm() / s.norm() - 1.0).abs());
        }
    }
    Ok(HilbertSolution {
        map,
        nu,
        b,
        boundary_imbalance: imbalance,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Periodized {
    pub map: MatrixMap,
    /// `μ` with `B₁(x + 1) = R_μ B₁(x)`, real part in `[−1/2, 1/2)`.
    pub twist: C64,
    /// Spread of `B₁(x + 1)B₁(x)⁻¹` around its mean on the grid.
    pub mismatch: f64,
}

/// Measure `B₁(x + 1)B₁(x)⁻¹` on the grid, require it to be a constant
/// rotation `R_μ`, and return the periodic map `R_{−μz}B₁(z)`.
pub fn periodize<F>(b1: F, strip_radius: f64, tol: f64, opts: &FitOptions) -> Result<Periodized>
where
    F: Fn(C64) -> Mat2,
{
    let n = opts.grid;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let vals: Vec<Mat2> = xs.iter().map(|&x| b1(C64::from(x))).collect();
    let jumps: Vec<Mat2> = xs
        .iter()
        .zip(&vals)
        .map(|(&x, v)| match v.inverse() {
            Some(inv) => Ok(b1(C64::from(x + 1.0)) * inv),
            None => Err(Error::SingularMatrix),
        })
        .collect::<Result<_>>()?;
    let mut mean = Mat2::new(
        C64::from(0.0),
        C64::from(0.0),
        C64::from(0.0),
        C64::from(0.0),
    );
    for j in &jumps {
        mean = mean + *j;
    }
    mean = mean.scale_re(1.0 / n as f64);
    let spread = jumps.iter().map(|j| j.dist(&mean)).fold(0.0, f64::max);
    // A rotation has a = d and b = −c.
    let off = ((mean.a - mean.d).norm() + (mean.b + mean.c).norm()) + (mean.det() - ONE).norm();
    let mismatch = spread.max(off);
    if !(mismatch < tol) {
        return Err(Error::NonConstantTwist { mismatch });
    }
    let e = mean.a + I * mean.c;
    let mut mu = -I * e.ln() / (2.0 * PI);
    if mu.re >= 0.5 {
        mu -= 1.0;
    }
    if mu.re < -0.5 {
        mu += 1.0;
    }
    let samples: Vec<Mat2> = xs
        .iter()
        .zip(&vals)
        .map(|(&x, v)| rotation(-mu * x) * *v)
        .collect();
    Ok(Periodized {
        map: fit_matrix(&samples, strip_radius, opts.trim, opts.mode_cap)?,
        twist: mu,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::ZERO;

    fn opts() -> FitOptions {
        FitOptions {
            grid: 64,
            ..FitOptions::default()
        }
    }

    fn constant_vec(v: Vec2) -> VectorMap {
        [
            FourierMap::constant(v.0, 0.2),
            FourierMap::constant(v.1, 0.2),
        ]
    }

    #[test]
    fn straighten_fixed_points() {
        let u = constant_vec(Vec2(I, ONE));
        let s = constant_vec(Vec2(-I, ONE));
        let b = straighten(&u, &s, 0.1, 1e-9, &opts()).unwrap();
        let m = b.eval(C64::new(0.3, 0.05)).unwrap();
        assert!((m.det() - ONE).norm() < 1e-12);
        let img = m.apply(&Vec2(I, ONE));
        assert!((img.0 / img.1 - I).norm() < 1e-10);
        // equal-norm gauge makes B₀ unitary here
        assert!((m * m.adjoint()).dist(&Mat2::identity()) < 1e-10);

        let u = constant_vec(Vec2(ONE, ZERO));
        let s = constant_vec(Vec2(ZERO, ONE));
        let b = straighten(&u, &s, 0.1, 1e-9, &opts()).unwrap();
        for x in [0.0, 0.4] {
            let m = b.eval(C64::new(x, -0.1)).unwrap();
            let iu = m.apply(&Vec2(ONE, ZERO));
            let is = m.apply(&Vec2(ZERO, ONE));
            assert!((iu.0 / iu.1 - I).norm() < 1e-10);
            assert!((is.0 / is.1 + I).norm() < 1e-10);
        }
    }

    #[test]
    fn straighten_rejects_collapse() {
        let u = constant_vec(Vec2(I, ONE));
        assert!(matches!(
            straighten(&u, &u, 0.1, 1e-9, &opts()),
            Err(Error::WeakHyperbolicity { .. })
        ));
    }

    #[test]
    fn boundary_solve_constant_and_cosine() {
        let c = 0.7;
        let f = FourierMap::constant(C64::from(c), 0.2);
        let (nu, b) = solve_boundary(&f, &f, 0.1);
        assert_eq!(b, 0.0);
        assert!((nu.coeff(0) - c).norm() < 1e-15);
        let cos = FourierMap::real_trig(0.0, &[1.0], &[], 0.2);
        let (nu, b) = solve_boundary(&cos, &cos, 0.1);
        assert_eq!(b, 0.0);
        for t in [-0.1, 0.1] {
            let got = nu.sample_line(t, 32);
            let want = cos.sample_line(0.0, 32);
            for (g, w) in got.iter().zip(&want) {
                assert!((g.re - w.re).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hilbert_balances_constant_radius() {
        // B₀ = D_2: ‖B₀⁻¹(±i,1)‖ equal already; with an extra dilation along
        // the fixed points the ratio is constant and ν removes it.
        let uc = cayley_unitary();
        let m = uc * dilation(C64::from(1.7)) * uc.adjoint();
        let b0 = MatrixMap::constant(m, 0.2);
        let sol = hilbert_minimize(&b0, 0.1, &opts()).unwrap();
        assert!(sol.boundary_imbalance < 1e-10);
        assert!(sol.twist_is_zero());
        let expect = -2.0 * 1.7f64.ln();
        assert!(
            (sol.nu.coeff(0).re - expect).abs() < 1e-12,
            "{:?}",
            sol.nu.coeff(0)
        );
    }

    impl HilbertSolution {
        fn twist_is_zero(&self) -> bool {
            self.map.twist.abs() < 1e-12
        }
    }

    #[test]
    fn periodize_recovers_twist() {
        let p = MatrixMap::constant(Mat2::real(2.0, 1.0, 1.0, 1.0), 0.2);
        let out = periodize(|z| p.eval_unchecked(z), 0.2, 1e-8, &opts()).unwrap();
        assert!(out.twist.norm() < 1e-12);
        assert!(
            out.map
                .eval_unchecked(C64::from(0.3))
                .dist(&Mat2::real(2.0, 1.0, 1.0, 1.0))
                < 1e-12
        );
        let out = periodize(
            |z| rotation(z * 0.3) * p.eval_unchecked(z),
            0.2,
            1e-8,
            &opts(),
        )
        .unwrap();
        assert!((out.twist - 0.3).norm() < 1e-6);
        let bad = |z: C64| Mat2::new(ONE, z * z, ZERO, ONE);
        assert!(matches!(
            periodize(bad, 0.2, 1e-8, &opts()),
            Err(Error::NonConstantTwist { .. })
        ));
    }
}
