//! Invariant directions and uniform hyperbolicity.
//!
//! The unstable direction at `x` is the top left singular vector of
//! `A_n(x − nα)`; the stable direction is the least expanded input of
//! `A_n(x)`. Both are computed independently at every grid point, then a
//! holomorphic lift of each field is Fourier-fitted. Invariance is checked
//! against the fitted lift at `x + α`, which also tests continuity: fields of
//! non-uniformly hyperbolic cocycles are not resolved by the fit.

use crate::analytic::{FourierMap, DEFAULT_GRID};
use crate::arithmetic::select_scale;
use crate::cocycle::{act, disk_chart, product_from, sphere_distance, Cocycle, ProjPoint};
use crate::error::{Error, Result};
use crate::lyapunov::le_estimate;
use crate::mat2::{Mat2, Vec2, C64, ONE, ZERO};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UhConfig {
    pub grid: usize,
    /// Lagged-sweep agreement required of the directions.
    pub tol_dir: f64,
    pub n_max: u64,
    /// Bound on the invariance residuals.
    pub tol_inv: f64,
    /// Bound below which `min d(u, s)` is treated as a collapse.
    pub tol_angle: f64,
}

impl Default for UhConfig {
    fn default() -> Self {
        UhConfig {
            grid: DEFAULT_GRID,
            tol_dir: 1e-12,
            n_max: 1 << 14,
            tol_inv: 1e-6,
            tol_angle: 1e-6,
        }
    }
}

/// A direction field written as `v / ⟨m, v⟩` for a fixed covector `m`, so the
/// two components are single-valued analytic functions.
#[derive(Clone, Debug, Serialize)]
pub struct Lift {
    pub m: [f64; 4],
    pub components: [FourierMap; 2],
}

impl Lift {
    fn fit(points: &[ProjPoint], strip_radius: f64) -> Result<Lift> {
        let m = best_chart(points);
        let (mut a, mut b) = (
            Vec::with_capacity(points.len()),
            Vec::with_capacity(points.len()),
        );
        for p in points {
            let v = p.vector().normalized();
            let scale = m.dot(&v);
            a.push(v.0 / scale);
            b.push(v.1 / scale);
        }
        Ok(Lift {
            m: [m.0.re, m.0.im, m.1.re, m.1.im],
            components: [
                FourierMap::fit(&a, strip_radius)?,
                FourierMap::fit(&b, strip_radius)?,
            ],
        })
    }

    pub fn eval_unchecked(&self, z: C64) -> Vec2 {
        Vec2(
            self.components[0].eval_unchecked(z),
            self.components[1].eval_unchecked(z),
        )
    }

    pub fn sample_line(&self, t: f64, n: usize) -> Vec<Vec2> {
        let a = self.components[0].sample_line(t, n);
        let b = self.components[1].sample_line(t, n);
        a.into_iter().zip(b).map(|(x, y)| Vec2(x, y)).collect()
    }

    /// Re-express a lift fitted on the line `Im z = t` as a function of `z`.
    pub fn recentered(&self, t: f64) -> Lift {
        Lift {
            m: self.m,
            components: self.components.clone().map(|c| c.shift_imag(-t)),
        }
    }

    pub fn shift_real(&self, s: f64) -> Lift {
        Lift {
            m: self.m,
            components: self.components.clone().map(|c| c.shift_real(s)),
        }
    }

    pub fn decay_ratio(&self) -> f64 {
        self.components[0]
            .decay_ratio()
            .max(self.components[1].decay_ratio())
    }
}

// Pick the chart covector maximizing min |⟨m, v̂⟩| over the field.
fn best_chart(points: &[ProjPoint]) -> Vec2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut candidates = vec![
        Vec2(ONE, ZERO),
        Vec2(ZERO, ONE),
        Vec2(C64::new(h, 0.0), C64::new(0.0, h)),
        Vec2(C64::new(h, 0.0), C64::new(0.0, -h)),
        Vec2(C64::new(h, 0.0), C64::new(h, 0.0)),
        Vec2(C64::new(h, 0.0), C64::new(-h, 0.0)),
    ];
    // Mean direction, aligned to a common phase.
    let first = points[0].vector().normalized();
    let mut mean = Vec2(ZERO, ZERO);
    for p in points {
        let v = p.vector().normalized();
        let ph = first.dot(&v);
        let ph = if ph.norm() > 0.0 {
            ph.conj() / ph.norm()
        } else {
            ONE
        };
        mean = Vec2(mean.0 + v.0 * ph, mean.1 + v.1 * ph);
    }
    if mean.norm() > 0.0 {
        candidates.push(mean.normalized());
    }
    let score = |m: &Vec2| {
        points
            .iter()
            .map(|p| m.dot(&p.vector().normalized()).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = candidates[0];
    let mut best_score = score(&best);
    for m in &candidates[1..] {
        let sc = score(m);
        if sc > best_score + 1e-12 {
            best = *m;
            best_score = sc;
        }
    }
    best
}

/// Unstable and stable directions on the line `Im z = t`.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionField {
    pub t: f64,
    pub grid: usize,
    /// Scale at which the lagged sweeps agreed.
    pub n: u64,
    pub lag: u64,
    #[serde(skip)]
    pub u: Vec<ProjPoint>,
    #[serde(skip)]
    pub s: Vec<ProjPoint>,
    pub residual_u: f64,
    pub residual_s: f64,
    /// Largest move between the sweeps at `n` and `n + lag`.
    pub gap: f64,
    /// `min_x ln‖A_n‖` over both sweeps.
    pub min_growth: f64,
    pub min_angle: f64,
    pub u_lift: Lift,
    pub s_lift: Lift,
}

impl DirectionField {
    pub fn angles(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.s)
            .map(|(u, s)| sphere_distance(u, s))
            .collect()
    }

    pub fn disk_bound(&self) -> f64 {
        self.u
            .iter()
            .map(|u| disk_chart(u).norm())
            .fold(0.0, f64::max)
    }
}

struct Sweep {
    u: Vec<ProjPoint>,
    s: Vec<ProjPoint>,
    growth: f64,
}

fn sweep(c: &Cocycle, n: u64, t: f64, grid: usize) -> Sweep {
    let rows: Vec<(ProjPoint, ProjPoint, f64)> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let x = j as f64 / grid as f64;
            let back = product_from(c, n, x, t, -(n as i64));
            let fwd = product_from(c, n, x, t, 0);
            let u = ProjPoint::from_vec(back.matrix.top_left_singular());
            let s = ProjPoint::from_vec(fwd.matrix.bottom_right_singular());
            (u, s, back.ln_norm().min(fwd.ln_norm()))
        })
        .collect();
    let growth = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let (u, s) = rows.into_iter().map(|(u, s, _)| (u, s)).unzip();
    Sweep { u, s, growth }
}

/// Compute `u`, `s` on `Im z = t` by doubling `n` from a burn-in scale until
/// sweeps at `n` and `n + q` agree within `tol_dir` and `‖A_n‖² ≥ 1/tol_dir`
/// everywhere. `q` is the convergent denominator nearest below 100.
pub fn directions(c: &Cocycle, t: f64, cfg: &UhConfig) -> Result<DirectionField> {
    if t.abs() > c.strip_radius() * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::OutsideStrip {
            im: t.abs(),
            radius: c.strip_radius(),
        });
    }
    let (q, _) = select_scale(c.frequency(), 100);
    let lag = q.max(1);
    let mut n = lag.max(200);
    let need = 0.5 * (1.0 / cfg.tol_dir).ln();
    loop {
        let a = sweep(c, n, t, cfg.grid);
        let b = sweep(c, n + lag, t, cfg.grid);
        let gap =
            a.u.iter()
                .zip(&b.u)
                .map(|(x, y)| sphere_distance(x, y))
                .chain(a.s.iter().zip(&b.s).map(|(x, y)| sphere_distance(x, y)))
                .fold(0.0, f64::max);
        let growth = a.growth.min(b.growth);
        if gap < cfg.tol_dir && growth >= need {
            return finish(c, t, cfg, b, n + lag, lag, gap, growth);
        }
        if 2 * n > cfg.n_max {
            return Err(Error::NoConvergence(format!(
                "height {t}: lagged gap {gap:.3e}, min ln‖A_n‖ {growth:.3} at n = {n}"
            )));
        }
        n *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    c: &Cocycle,
    t: f64,
    cfg: &UhConfig,
    sw: Sweep,
    n: u64,
    lag: u64,
    gap: f64,
    growth: f64,
) -> Result<DirectionField> {
    let grid = cfg.grid;
    let r = c.strip_radius();
    let u_lift = Lift::fit(&sw.u, r)?;
    let s_lift = Lift::fit(&sw.s, r)?;
    let alpha = c.frequency().alpha();
    let u_next = u_lift.shift_real(alpha).sample_line(0.0, grid);
    let s_next = s_lift.shift_real(alpha).sample_line(0.0, grid);
    let mats = c.map().sample_line(t, grid);
    let residual = |field: &[ProjPoint], next: &[Vec2]| -> f64 {
        field
            .iter()
            .zip(next)
            .zip(&mats)
            .map(|((p, v), m)| match act(m, p) {
                Ok(img) => sphere_distance(&img, &ProjPoint::from_vec(*v)),
                Err(_) => 1.0,
            })
            .fold(0.0, |acc: f64, d| if d.is_nan() { 1.0 } else { acc.max(d) })
    };
    let residual_u = residual(&sw.u, &u_next);
    let residual_s = residual(&sw.s, &s_next);
    let min_angle =
        sw.u.iter()
            .zip(&sw.s)
            .map(|(u, s)| sphere_distance(u, s))
            .fold(f64::INFINITY, f64::min);
    Ok(DirectionField {
        t,
        grid,
        n,
        lag,
        u: sw.u,
        s: sw.s,
        residual_u,
        residual_s,
        gap,
        min_growth: growth,
        min_angle,
        u_lift,
        s_lift,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UhCertificate {
    pub verdict: bool,
    pub t: f64,
    /// `min_x d(u, s)`.
    pub margin: f64,
    pub residual_u: f64,
    pub residual_s: f64,
    /// `max_x |disk_chart(u(x))|`.
    pub disk_bound: f64,
    /// For perturbations `R_{−iθ}A`: whether `disk_bound ≤ e^{−4πθ} + tol_inv`.
    pub disk_bound_ok: Option<bool>,
    pub n: u64,
    pub reason: Option<String>,
}

pub fn uh_certificate(c: &Cocycle, t: f64) -> UhCertificate {
    uh_certificate_with(c, t, &UhConfig::default())
}

pub fn uh_certificate_with(c: &Cocycle, t: f64, cfg: &UhConfig) -> UhCertificate {
    match directions(c, t, cfg) {
        Ok(f) => certificate_from(&f, cfg),
        Err(e) => UhCertificate {
            verdict: false,
            t,
            margin: 0.0,
            residual_u: f64::INFINITY,
            residual_s: f64::INFINITY,
            disk_bound: f64::NAN,
            disk_bound_ok: None,
            n: 0,
            reason: Some(e.to_string()),
        },
    }
}

pub fn certificate_from(f: &DirectionField, cfg: &UhConfig) -> UhCertificate {
    let mut reason = None;
    if f.residual_u >= cfg.tol_inv || f.residual_s >= cfg.tol_inv {
        reason = Some(format!(
            "invariance residuals {:.3e}, {:.3e} above {:.1e}",
            f.residual_u, f.residual_s, cfg.tol_inv
        ));
    } else if f.min_angle <= cfg.tol_angle {
        reason = Some(format!(
            "min angle {:.3e} below {:.1e}",
            f.min_angle, cfg.tol_angle
        ));
    }
    UhCertificate {
        verdict: reason.is_none(),
        t: f.t,
        margin: f.min_angle,
        residual_u: f.residual_u,
        residual_s: f.residual_s,
        disk_bound: f.disk_bound(),
        disk_bound_ok: None,
        n: f.n,
        reason,
    }
}

/// Certificate for `R_{−iθ}A` at `t = 0`, including the disk bound
/// `|disk_chart(u)| ≤ e^{−4πθ}` expected for real-symmetric `A`.
pub fn perturbation_certificate(base: &Cocycle, theta: f64, cfg: &UhConfig) -> UhCertificate {
    let mut cert = uh_certificate_with(&base.perturbed(theta), 0.0, cfg);
    if cert.verdict && base.is_real_symmetric() {
        cert.disk_bound_ok = Some(cert.disk_bound <= (-4.0 * PI * theta).exp() + cfg.tol_inv);
    }
    cert
}

/// `L(α, R_{−iθ}A) = 2πθ + ½∫ ln[(1 − |u̇|²)/(1 − e^{8πθ}|u̇|²)]` with
/// `u̇ = disk_chart(u)`, for real-symmetric `A`.
pub fn herman_field_le(base: &Cocycle, theta: f64, cfg: &UhConfig) -> Result<f64> {
    if !base.is_real_symmetric() {
        return Err(Error::InvalidInput("cocycle is not real-symmetric".into()));
    }
    if !(theta > 0.0) {
        return Err(Error::DomainError(format!("θ = {theta} must be positive")));
    }
    let f = directions(&base.perturbed(theta), 0.0, cfg)?;
    let e8 = (8.0 * PI * theta).exp();
    let mut sum = 0.0;
    for u in &f.u {
        let r2 = disk_chart(u).norm_sqr();
        let den = 1.0 - e8 * r2;
        if !(den > 0.0) {
            return Err(Error::DomainError(format!(
                "|u̇|² = {r2:.3e} violates the disk bound"
            )));
        }
        sum += ((1.0 - r2) / den).ln();
    }
    Ok(2.0 * PI * theta + 0.5 * sum / f.u.len() as f64)
}

/// Angle data on one line: `d(u, s)` and `ρ = −ln d` on the grid.
#[derive(Clone, Debug, Serialize)]
pub struct AngleLine {
    pub t: f64,
    pub d: Vec<f64>,
    pub rho: Vec<f64>,
    pub min_d: f64,
    /// `log_θ(min d)` when `θ` is given.
    pub exponent: Option<f64>,
}

pub fn angle_profile(
    c: &Cocycle,
    heights: &[f64],
    theta: Option<f64>,
    cfg: &UhConfig,
) -> Result<Vec<AngleLine>> {
    heights
        .iter()
        .map(|&t| {
            let f = directions(c, t, cfg)?;
            let d = f.angles();
            let rho = d.iter().map(|v| -v.ln()).collect();
            let min_d = d.iter().copied().fold(f64::INFINITY, f64::min);
            let exponent = theta.map(|th| min_d.ln() / th.ln());
            Ok(AngleLine {
                t,
                d,
                rho,
                min_d,
                exponent,
            })
        })
        .collect()
}

/// CSV with columns `x,t,d,rho`.
pub fn angle_csv(lines: &[AngleLine]) -> String {
    let mut out = String::from("x,t,d,rho\n");
    for line in lines {
        let n = line.d.len();
        for j in 0..n {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e}\n",
                j as f64 / n as f64,
                line.t,
                line.d[j],
                line.rho[j]
            ));
        }
    }
    out
}

/// `Q₂ = −ab`, `Q₃ = cd` for a unit-determinant matrix with columns along
/// `μ`, `ν`, and `η = max(1, |Q₂|, |Q₃|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QPair {
    pub q2: C64,
    pub q3: C64,
    pub eta: f64,
}

pub fn q_pair(mu: &ProjPoint, nu: &ProjPoint) -> Result<QPair> {
    let m = mu.vector().normalized();
    let n = nu.vector().normalized();
    let det = m.0 * n.1 - m.1 * n.0;
    if det.norm() < 1e-14 {
        return Err(Error::CoincidentDirections);
    }
    let q2 = -m.0 * n.0 / det;
    let q3 = m.1 * n.1 / det;
    Ok(QPair {
        q2,
        q3,
        eta: 1f64.max(q2.norm()).max(q3.norm()),
    })
}

/// Which unipotent perturbation `A·E_j^{λw}` to differentiate along:
/// `E_2 = ((1, w), (0, 1))`, `E_3 = ((1, 0), (w, 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Unipotent {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub fd: f64,
    pub formula: f64,
    pub gap: f64,
    pub n: u64,
}

/// Sign relating the finite difference to `Re ∫ Q w`. With the columns
/// ordered `(u, s)` the derivative along the upper unipotent is `Re ∫ Q₃ w`
/// and along the lower one `Re ∫ Q₂ w`, both with sign `+1`.
pub const DERIVATIVE_SIGN: f64 = 1.0;

/// Central difference of `λ ↦ L(α, A·E^{λw})` at `λ = 0` against the
/// quadrature `Re ∫ Q w` at height 0. The exponent at each `λ` is the
/// telescoped `2L_{2N} − L_N`, which removes the `O(1/N)` boundary term.
pub fn derivative_check(
    c: &Cocycle,
    w: &FourierMap,
    which: Unipotent,
    h: f64,
    cfg: &UhConfig,
) -> Result<DerivativeCheck> {
    let f = directions(c, 0.0, cfg)?;
    let grid = cfg.grid;
    let ws = w.sample_line(0.0, grid);
    let mut acc = 0.0;
    for ((u, s), wj) in f.u.iter().zip(&f.s).zip(&ws) {
        let qp = q_pair(u, s)?;
        let q = match which {
            Unipotent::Upper => qp.q3,
            Unipotent::Lower => qp.q2,
        };
        acc += (q * wj).re;
    }
    let formula = acc / grid as f64;

    let base = le_estimate(c, 0.0, 1e-9, 1 << 14)?;
    let n = base.n.max(1 << 10);
    let le_at = |lam: f64| -> Result<f64> {
        let pert = unipotent_map(w, lam, which, c.strip_radius());
        let pc = c.with_map(c.map().mul(&pert))?;
        let l1 = crate::lyapunov::finite_le(&pc, n, 0.0, grid)?.value;
        let l2 = crate::lyapunov::finite_le(&pc, 2 * n, 0.0, grid)?.value;
        Ok(2.0 * l2 - l1)
    };
    let fd = (le_at(h)? - le_at(-h)?) / (2.0 * h);
    Ok(DerivativeCheck {
        fd,
        formula,
        gap: (fd - DERIVATIVE_SIGN * formula).abs(),
        n,
    })
}

fn unipotent_map(w: &FourierMap, lam: f64, which: Unipotent, r: f64) -> crate::analytic::MatrixMap {
    let one = FourierMap::constant(ONE, r);
    let zero = FourierMap::zero(r);
    let lw = w.scale(C64::from(lam));
    match which {
        Unipotent::Upper => crate::analytic::MatrixMap::from_entries(one.clone(), lw, zero, one),
        Unipotent::Lower => crate::analytic::MatrixMap::from_entries(one.clone(), zero, lw, one),
    }
}

/// The matrix with unit-determinant columns along `u`, `s`.
pub fn splitting_matrix(u: &ProjPoint, s: &ProjPoint) -> Result<Mat2> {
    let a = u.vector();
    let b = s.vector();
    let det = a.0 * b.1 - a.1 * b.0;
    if det.norm() == 0.0 {
        return Err(Error::CoincidentDirections);
    }
    let k = det.sqrt().inv();
    Ok(Mat2::from_columns(a.scale(k), b.scale(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use crate::cocycle::{amo_potential, rotation};
    use crate::mat2::I;

    fn golden() -> Frequency {
        Frequency::golden(40)
    }

    fn cfg() -> UhConfig {
        UhConfig {
            grid: 256,
            ..UhConfig::default()
        }
    }

    #[test]
    fn constant_diagonal_directions() {
        let c = Cocycle::constant(golden(), Mat2::real(2.0, 0.0, 0.0, 0.5), 0.1).unwrap();
        let f = directions(&c, 0.0, &cfg()).unwrap();
        assert!(f
            .u
            .iter()
            .all(|u| sphere_distance(u, &ProjPoint::infinity()) < 1e-12));
        assert!(f
            .s
            .iter()
            .all(|s| sphere_distance(s, &ProjPoint::from_chart(ZERO)) < 1e-12));
    }

    #[test]
    fn constant_rotation_directions() {
        let c = Cocycle::constant(golden(), rotation(C64::new(0.0, -0.05)), 0.1).unwrap();
        let f = directions(&c, 0.0, &cfg()).unwrap();
        for (u, s) in f.u.iter().zip(&f.s) {
            assert!((u.chart().unwrap() - I).norm() < 1e-9);
            assert!((s.chart().unwrap() + I).norm() < 1e-9);
        }
        let cert = certificate_from(&f, &cfg());
        assert!(cert.verdict);
        assert!(cert.disk_bound < 1e-9);
    }

    #[test]
    fn elliptic_has_no_directions() {
        let c = Cocycle::schrodinger(golden(), 1.0, &FourierMap::zero(0.1)).unwrap();
        assert!(matches!(
            directions(&c, 0.0, &cfg()),
            Err(Error::NoConvergence(_))
        ));
        assert!(!uh_certificate_with(&c, 0.0, &cfg()).verdict);
        let c = Cocycle::schrodinger(golden(), 3.0, &FourierMap::zero(0.1)).unwrap();
        assert!(uh_certificate_with(&c, 0.0, &cfg()).verdict);
    }

    #[test]
    fn supercritical_on_spectrum_is_not_uh() {
        let c = Cocycle::schrodinger(golden(), 0.0, &amo_potential(3.0, 0.5)).unwrap();
        let cert = uh_certificate(&c, 0.0);
        assert!(!cert.verdict, "{cert:?}");
    }

    #[test]
    fn gap_energy_is_uh() {
        let c = Cocycle::schrodinger(golden(), -4.0, &amo_potential(0.5, 0.5)).unwrap();
        assert!(uh_certificate(&c, 0.0).verdict);
    }

    #[test]
    fn herman_identity_case() {
        let c = Cocycle::constant(golden(), Mat2::identity(), 0.2).unwrap();
        let l = herman_field_le(&c, 0.07, &cfg()).unwrap();
        assert!((l - 2.0 * PI * 0.07).abs() < 1e-12);
    }

    #[test]
    fn q_pairs() {
        let q = q_pair(&ProjPoint::infinity(), &ProjPoint::from_chart(ZERO)).unwrap();
        assert_eq!((q.q2.norm(), q.q3.norm(), q.eta), (0.0, 0.0, 1.0));
        let e = 0.3;
        let q = q_pair(
            &ProjPoint::from_chart(C64::new(0.0, e)),
            &ProjPoint::from_chart(C64::new(0.0, -e)),
        )
        .unwrap();
        assert!((q.q2.norm() - e / 2.0).abs() < 1e-15);
        assert!((q.q3.norm() - 1.0 / (2.0 * e)).abs() < 1e-14);
        let p = ProjPoint::from_chart(C64::new(0.3, 0.2));
        assert_eq!(q_pair(&p, &p), Err(Error::CoincidentDirections));
    }

    #[test]
    fn triangular_derivatives_vanish() {
        let c = Cocycle::constant(golden(), Mat2::real(2.0, 0.0, 0.0, 0.5), 0.1).unwrap();
        let w = FourierMap::constant(ONE, 0.1);
        for which in [Unipotent::Upper, Unipotent::Lower] {
            let d = derivative_check(&c, &w, which, 1e-4, &cfg()).unwrap();
            assert!(d.fd.abs() < 1e-9 && d.formula.abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn free_derivative_matches_quadrature() {
        let c = Cocycle::schrodinger(golden(), 2.5, &FourierMap::zero(0.1)).unwrap();
        let cos = FourierMap::real_trig(0.0, &[1.0], &[], 0.1);
        let d = derivative_check(&c, &cos, Unipotent::Lower, 1e-4, &cfg()).unwrap();
        assert!(d.gap < 1e-3, "{d:?}");
        // w ≡ 1 along the lower unipotent lowers the trace: dL/dλ = −2/3
        let one = FourierMap::constant(ONE, 0.1);
        let d = derivative_check(&c, &one, Unipotent::Lower, 1e-4, &cfg()).unwrap();
        assert!((d.formula + 2.0 / 3.0).abs() < 1e-9, "{d:?}");
        assert!(d.gap < 1e-3, "{d:?}");
    }
}
