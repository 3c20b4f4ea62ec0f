//! End-to-end conjugacies: the complex one for `R_{−iθ}A` and the
//! real-symmetric one for `A`, together with the symmetry diagnostics that
//! connect them.

use super::cohomology::{cohom_solve, rotation_extract, CohomSolution};
use super::straighten::{
    hilbert_minimize, periodize, reflect_vector, sample_vector, straighten, FitOptions, VectorMap,
};
use crate::analytic::{FourierMap, MatrixMap};
use crate::cocycle::{rotation, sphere_distance, Cocycle, ProjPoint};
use crate::error::{Error, Result};
use crate::hyperbolicity::{certificate_from, directions, DirectionField, UhConfig};
use crate::lyapunov::{kappa_exponent, le_estimate, DEFAULT_MAX_SCALE};
use crate::mat2::{wedge, Mat2, Vec2, C64, I};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugacyConfig {
    pub grid: usize,
    pub uh: UhConfig,
    /// Relative noise floor for fitted maps. Must sit above the noise of the
    /// direction fields, since mode `k` is amplified by `e^{2π|k|ε}` off the
    /// axis.
    pub trim: f64,
    pub mode_cap: usize,
    pub delta_min: f64,
    pub tail_tol: f64,
    pub residual_tol: f64,
    pub real_residual_tol: f64,
    pub rotation_tol: f64,
    pub real_rotation_tol: f64,
    /// Number of horizontal lines across the band for residual checks.
    pub lines: usize,
    pub le_tol: f64,
    pub le_max: u64,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        ConjugacyConfig {
            grid: crate::analytic::DEFAULT_GRID,
            uh: UhConfig::default(),
            trim: 1e-11,
            mode_cap: crate::analytic::DEFAULT_MODE_CAP,
            delta_min: 1e-8,
            tail_tol: 1e-10,
            residual_tol: 1e-3,
            real_residual_tol: 1e-2,
            rotation_tol: 1e-6,
            real_rotation_tol: 1.0,
            lines: 5,
            le_tol: 1e-6,
            le_max: DEFAULT_MAX_SCALE,
        }
    }
}

impl ConjugacyConfig {
    fn fit(&self) -> FitOptions {
        FitOptions {
            grid: self.grid,
            trim: self.trim,
            mode_cap: self.mode_cap,
        }
    }
}

/// Which pair of directions the real conjugacy straightened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetricBranch {
    Unstable,
    Stable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyResult {
    pub b: MatrixMap,
    pub lambda: C64,
    pub winding: i64,
    pub theta: f64,
    pub eps: f64,
    /// `sup ‖B(z + α)M(z)B(z)⁻¹ − R_λ‖` over the band lines.
    pub residual: f64,
    pub ok: bool,
    /// `sup |det B − 1|` over the band lines.
    pub det_defect: f64,
    /// `sup |det(U, S) − 2i|` over the band lines.
    pub us_defect: f64,
    /// `sup ‖B‖²` over the band lines.
    pub norm_budget: f64,
    /// `log_θ ‖B‖²_ε`.
    pub norm_exponent: f64,
    pub l_theta: f64,
    pub kappa: f64,
    /// `|Im λ + L_θ/2π| ≤ 0.1·L_θ/2π`.
    pub im_lambda_ok: bool,
    /// `sup ‖B(z + α)A(z)B(z)⁻¹ − R_{Re λ}‖` over the band lines.
    pub unperturbed_distance: f64,
    pub unperturbed_exponent: f64,
    /// Largest distance between `B⁻¹(±i, 1)` and directions computed
    /// directly on the boundary lines.
    pub lift_check: f64,
    pub boundary_imbalance: f64,
    pub twist: C64,
    pub rotation_off_residual: f64,
    pub cohom_residual: f64,
    pub rejected_modes: usize,
    /// Set for real conjugacies: branch used.
    pub branch: Option<SymmetricBranch>,
    /// Set for real conjugacies: `sup |Im B_r|` on the real axis.
    pub real_axis_defect: Option<f64>,
}

impl ConjugacyResult {
    /// `U = B⁻¹(i, 1)` as a holomorphic vector field.
    pub fn u_field(&self) -> VectorMap {
        preimage_field(&self.b, I)
    }

    /// `S = B⁻¹(−i, 1)`.
    pub fn s_field(&self) -> VectorMap {
        preimage_field(&self.b, -I)
    }
}

// adj(B)·(w, 1) = (d w − b, a − c w).
fn preimage_field(b: &MatrixMap, w: C64) -> VectorMap {
    let [ba, bb, bc, bd] = &b.entries;
    [bd.scale(w).sub(bb), ba.sub(&bc.scale(w))]
}

fn heights(eps: f64, lines: usize) -> Vec<f64> {
    if lines < 2 || eps == 0.0 {
        return vec![0.0];
    }
    (0..lines)
        .map(|j| -eps + 2.0 * eps * j as f64 / (lines - 1) as f64)
        .collect()
}

fn axis_lift(f: &DirectionField, which: usize, cfg: &ConjugacyConfig) -> VectorMap {
    let lift = if which == 0 { &f.u_lift } else { &f.s_lift };
    lift.components
        .clone()
        .map(|c| c.trim(cfg.trim, cfg.mode_cap))
}

// Output of the straighten → balance → periodize → angle → cohomology chain.
struct Stages {
    b: MatrixMap,
    lambda: C64,
    boundary_imbalance: f64,
    twist: C64,
    off_residual: f64,
    cohom: CohomSolution,
}

fn run_stages(
    target: &Cocycle,
    u: &VectorMap,
    s: &VectorMap,
    delta: f64,
    real: bool,
    cfg: &ConjugacyConfig,
) -> Result<Stages> {
    let opts = cfg.fit();
    let n = cfg.grid;
    let r = target.strip_radius();
    let b0 = straighten(u, s, delta, cfg.uh.tol_angle, &opts)?;
    let hil = hilbert_minimize(&b0, delta, &opts)?;
    let per = periodize(|z| hil.map.eval(z), r, 1e-8, &opts)?;
    let p = per.map;
    let alpha = target.frequency().alpha();
    let p0 = p.sample_line(0.0, n);
    let p1 = p.shift_real(alpha).sample_line(0.0, n);
    let mats = target.map().sample_line(0.0, n);
    let a_prime: Vec<Mat2> = (0..n)
        .map(|j| {
            p0[j]
                .inverse()
                .map(|inv| p1[j] * mats[j] * inv)
                .ok_or(Error::SingularMatrix)
        })
        .collect::<Result<_>>()?;
    let tol = if real {
        cfg.real_rotation_tol
    } else {
        cfg.rotation_tol
    };
    let rot = rotation_extract(&a_prime, r, tol, real)?;
    if rot.winding != 0 {
        return Err(Error::WindingObstruction {
            winding: rot.winding,
        });
    }
    let phi = rot.phi.trim(cfg.trim, cfg.mode_cap);
    let cohom = cohom_solve(
        &phi,
        target.frequency(),
        cfg.mode_cap,
        cfg.delta_min,
        cfg.tail_tol,
    )?;
    let w = cohom.w.sample_line(0.0, n);
    let samples: Vec<Mat2> = (0..n).map(|j| rotation(-w[j]) * p0[j]).collect();
    let b = MatrixMap::fit(&samples, r)?.trim(cfg.trim, cfg.mode_cap);
    Ok(Stages {
        b,
        lambda: cohom.lambda,
        boundary_imbalance: hil.boundary_imbalance,
        twist: per.twist,
        off_residual: rot.off_residual,
        cohom,
    })
}

struct BandChecks {
    residual: f64,
    det_defect: f64,
    us_defect: f64,
    norm_budget: f64,
    unperturbed_distance: f64,
}

// Conjugation residuals of `target` (and of `other` against `R_{Re λ}`) on
// `lines` heights across `[−ε, ε]`.
fn band_checks(
    b: &MatrixMap,
    target: &Cocycle,
    other: Option<&Cocycle>,
    lambda: C64,
    eps: f64,
    cfg: &ConjugacyConfig,
) -> BandChecks {
    let n = cfg.grid;
    let alpha = target.frequency().alpha();
    let shifted = b.shift_real(alpha);
    let r_lambda = rotation(lambda);
    let r_real = rotation(C64::from(lambda.re));
    let mut out = BandChecks {
        residual: 0.0,
        det_defect: 0.0,
        us_defect: 0.0,
        norm_budget: 0.0,
        unperturbed_distance: 0.0,
    };
    let max_nan = |acc: f64, v: f64| {
        if v.is_nan() {
            f64::INFINITY
        } else {
            acc.max(v)
        }
    };
    for t in heights(eps, cfg.lines) {
        let b0 = b.sample_line(t, n);
        let b1 = shifted.sample_line(t, n);
        let m = target.map().sample_line(t, n);
        let a = other.map(|o| o.map().sample_line(t, n));
        for j in 0..n {
            let inv = b0[j].adjugate().scale(b0[j].det().inv());
            out.residual = max_nan(out.residual, (b1[j] * m[j] * inv).dist(&r_lambda));
            out.det_defect = max_nan(out.det_defect, (b0[j].det() - 1.0).norm());
            let adj = b0[j].adjugate();
            let (u, s) = (
                adj.apply(&Vec2(I, 1.0.into())),
                adj.apply(&Vec2(-I, 1.0.into())),
            );
            out.us_defect = max_nan(out.us_defect, (wedge(&u, &s) - 2.0 * I).norm());
            out.norm_budget = max_nan(out.norm_budget, b0[j].norm().powi(2));
            if let Some(a) = &a {
                out.unperturbed_distance =
                    max_nan(out.unperturbed_distance, (b1[j] * a[j] * inv).dist(&r_real));
            }
        }
    }
    out
}

fn require_inputs(c: &Cocycle) -> Result<()> {
    if !c.is_real_symmetric() {
        return Err(Error::InvalidInput("cocycle is not real-symmetric".into()));
    }
    if c.frequency().is_rational() {
        return Err(Error::RationalFrequency);
    }
    Ok(())
}

fn certified(m: &Cocycle, t: f64, cfg: &ConjugacyConfig) -> Result<DirectionField> {
    let uh = UhConfig {
        grid: cfg.grid,
        ..cfg.uh
    };
    match directions(m, t, &uh) {
        Ok(f) if certificate_from(&f, &uh).verdict => Ok(f),
        Ok(_) | Err(Error::NoConvergence(_)) => Err(Error::NotUniformlyHyperbolic { height: t }),
        Err(e) => Err(e),
    }
}

/// Conjugate `M = R_{−iθ}A` holomorphically on `|Im z| < ε` to a constant
/// complex rotation: `B(z + α)M(z)B(z)⁻¹ = R_λ`.
pub fn complex_conjugacy(
    c: &Cocycle,
    theta: f64,
    eps: f64,
    cfg: &ConjugacyConfig,
) -> Result<ConjugacyResult> {
    require_inputs(c)?;
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::DomainError(format!("θ = {theta} not in [0, 1)")));
    }
    if !(eps > 0.0 && eps <= c.strip_radius()) {
        return Err(Error::DomainError(format!(
            "ε = {eps} not in (0, {}]",
            c.strip_radius()
        )));
    }
    let m = c.perturbed(theta);
    let axis = certified(&m, 0.0, cfg)?;
    let top = certified(&m, eps, cfg)?;
    let bottom = certified(&m, -eps, cfg)?;
    let u = axis_lift(&axis, 0, cfg);
    let s = axis_lift(&axis, 1, cfg);
    let st = run_stages(&m, &u, &s, eps, false, cfg)?;
    let checks = band_checks(&st.b, &m, Some(c), st.lambda, eps, cfg);

    let le = le_estimate(&m, 0.0, cfg.le_tol, cfg.le_max)?;
    let l_theta = le.value;
    let kappa = kappa_exponent(theta, l_theta).unwrap_or(f64::NAN);
    let target = l_theta / (2.0 * PI);
    let im_lambda_ok = (st.lambda.im + target).abs() <= 0.1 * target;

    // The conjugacy's preimages of ±i must be the invariant directions off
    // the axis too.
    let mut lift_check: f64 = 0.0;
    for f in [&top, &bottom] {
        let uu = sample_vector(&preimage_field(&st.b, I), f.t, cfg.grid);
        let ss = sample_vector(&preimage_field(&st.b, -I), f.t, cfg.grid);
        for j in 0..cfg.grid {
            lift_check = lift_check
                .max(sphere_distance(&ProjPoint::from_vec(uu[j]), &f.u[j]))
                .max(sphere_distance(&ProjPoint::from_vec(ss[j]), &f.s[j]));
        }
    }

    Ok(ConjugacyResult {
        lambda: st.lambda,
        winding: 0,
        theta,
        eps,
        residual: checks.residual,
        ok: checks.residual < cfg.residual_tol,
        det_defect: checks.det_defect,
        us_defect: checks.us_defect,
        norm_budget: checks.norm_budget,
        norm_exponent: checks.norm_budget.ln() / theta.ln(),
        l_theta,
        kappa,
        im_lambda_ok,
        unperturbed_distance: checks.unperturbed_distance,
        unperturbed_exponent: checks.unperturbed_distance.ln() / theta.ln(),
        lift_check,
        boundary_imbalance: st.boundary_imbalance,
        twist: st.twist,
        rotation_off_residual: st.off_residual,
        cohom_residual: st.cohom.residual,
        rejected_modes: st.cohom.rejected.len(),
        branch: None,
        real_axis_defect: None,
        b: st.b,
    })
}

/// Profiles built from `U = B⁻¹(i, 1)` and its reflection `U'`.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryDiagnostics {
    /// `Δ = det(U, U')`.
    pub delta: FourierMap,
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub d_uu: Vec<f64>,
    pub abs_delta: Vec<f64>,
    /// `sup | |Δ|/ω − d(u, u') |` on the axis.
    pub identity_defect: f64,
    /// `sup |Im(iΔ)|` on the axis.
    pub real_defect: f64,
    /// `sup |det(U, S) − 2i|` on the axis.
    pub us_defect: f64,
    /// Smallest truncation of `Δ` with tail below `θ²`.
    pub truncation_order: usize,
    pub sup_u_sqr: f64,
    pub sup_s_sqr: f64,
}

impl SymmetryDiagnostics {
    /// CSV with columns `x,d_uu,abs_delta,omega`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,d_uu,abs_delta,omega\n");
        for j in 0..self.x.len() {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e}\n",
                self.x[j], self.d_uu[j], self.abs_delta[j], self.omega[j]
            ));
        }
        out
    }
}

pub fn symmetry_diagnostics(r: &ConjugacyResult, grid: usize) -> SymmetryDiagnostics {
    let u = r.u_field();
    let s = r.s_field();
    let up = reflect_vector(&u);
    let delta = u[0].mul(&up[1]).sub(&u[1].mul(&up[0]));
    let us = sample_vector(&u, 0.0, grid);
    let ups = sample_vector(&up, 0.0, grid);
    let ss = sample_vector(&s, 0.0, grid);
    let dv = delta.sample_line(0.0, grid);
    let mut out = SymmetryDiagnostics {
        truncation_order: delta.truncation_order(r.theta * r.theta),
        delta,
        x: crate::analytic::grid(grid),
        omega: Vec::with_capacity(grid),
        d_uu: Vec::with_capacity(grid),
        abs_delta: Vec::with_capacity(grid),
        identity_defect: 0.0,
        real_defect: 0.0,
        us_defect: 0.0,
        sup_u_sqr: 0.0,
        sup_s_sqr: 0.0,
    };
    for j in 0..grid {
        let omega = us[j].norm() * ups[j].norm();
        let d = sphere_distance(&ProjPoint::from_vec(us[j]), &ProjPoint::from_vec(ups[j]));
        out.identity_defect = out.identity_defect.max((dv[j].norm() / omega - d).abs());
        out.real_defect = out.real_defect.max((I * dv[j]).im.abs());
        out.us_defect = out.us_defect.max((wedge(&us[j], &ss[j]) - 2.0 * I).norm());
        out.sup_u_sqr = out.sup_u_sqr.max(us[j].norm_sqr());
        out.sup_s_sqr = out.sup_s_sqr.max(ss[j].norm_sqr());
        out.omega.push(omega);
        out.d_uu.push(d);
        out.abs_delta.push(dv[j].norm());
    }
    out
}

fn min_pair_angle(a: &VectorMap, b: &VectorMap, delta: f64, grid: usize) -> f64 {
    let mut m = f64::INFINITY;
    for t in [-delta, 0.0, delta] {
        for (x, y) in sample_vector(a, t, grid)
            .iter()
            .zip(sample_vector(b, t, grid))
        {
            m = m.min(sphere_distance(
                &ProjPoint::from_vec(*x),
                &ProjPoint::from_vec(y),
            ));
        }
    }
    m
}

/// Real-symmetric conjugacy of `A` itself, `B_r(z + α)A(z)B_r(z)⁻¹ ≈ R_λ`
/// with `λ` real, built by straightening a direction of `R_{−iθ}A` against
/// its own reflection.
pub fn real_conjugacy(
    c: &Cocycle,
    theta: f64,
    eps_prime: f64,
    eps: f64,
    cfg: &ConjugacyConfig,
) -> Result<ConjugacyResult> {
    let complex = complex_conjugacy(c, theta, eps, cfg)?;
    real_conjugacy_with(c, &complex, eps_prime, cfg)
}

/// As [`real_conjugacy`], from an already computed complex conjugacy.
pub fn real_conjugacy_with(
    c: &Cocycle,
    complex: &ConjugacyResult,
    eps_prime: f64,
    cfg: &ConjugacyConfig,
) -> Result<ConjugacyResult> {
    require_inputs(c)?;
    if !(eps_prime > 0.0 && eps_prime <= complex.eps) {
        return Err(Error::DomainError(format!(
            "ε' = {eps_prime} not in (0, {}]",
            complex.eps
        )));
    }
    let n = cfg.grid;
    let u = complex.u_field();
    let s = complex.s_field();
    let u_pair = (u.clone(), reflect_vector(&u));
    let s_pair = (reflect_vector(&s), s.clone());
    let sup_u = sample_vector(&u, 0.0, n)
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max);
    let angle_u = min_pair_angle(&u_pair.0, &u_pair.1, eps_prime, n);
    let angle_s = min_pair_angle(&s_pair.0, &s_pair.1, eps_prime, n);
    let tol = cfg.uh.tol_angle;
    let preferred = if sup_u >= 2.0 {
        SymmetricBranch::Unstable
    } else {
        SymmetricBranch::Stable
    };
    let angle_of = |b: SymmetricBranch| match b {
        SymmetricBranch::Unstable => angle_u,
        SymmetricBranch::Stable => angle_s,
    };
    let branch = if angle_of(preferred) > tol {
        preferred
    } else {
        let other = match preferred {
            SymmetricBranch::Unstable => SymmetricBranch::Stable,
            SymmetricBranch::Stable => SymmetricBranch::Unstable,
        };
        if angle_of(other) > tol {
            other
        } else {
            return Err(Error::WeakSymmetricAngle {
                u_pair: angle_u,
                s_pair: angle_s,
            });
        }
    };
    let (a, b) = match branch {
        SymmetricBranch::Unstable => u_pair,
        SymmetricBranch::Stable => s_pair,
    };
    let st = run_stages(c, &a, &b, eps_prime, true, cfg)?;
    let checks = band_checks(&st.b, c, None, st.lambda, eps_prime, cfg);
    let real_axis_defect =
        st.b.sample_line(0.0, n)
            .iter()
            .map(|m| {
                m.a.im
                    .abs()
                    .max(m.b.im.abs())
                    .max(m.c.im.abs())
                    .max(m.d.im.abs())
            })
            .fold(0.0, f64::max);
    Ok(ConjugacyResult {
        lambda: st.lambda,
        winding: 0,
        theta: complex.theta,
        eps: eps_prime,
        residual: checks.residual,
        ok: checks.residual < cfg.real_residual_tol && real_axis_defect < 1e-9,
        det_defect: checks.det_defect,
        us_defect: checks.us_defect,
        norm_budget: checks.norm_budget,
        norm_exponent: checks.norm_budget.ln() / complex.theta.ln(),
        l_theta: complex.l_theta,
        kappa: complex.kappa,
        im_lambda_ok: st.lambda.im.abs() < 1e-12,
        unperturbed_distance: checks.residual,
        unperturbed_exponent: checks.residual.ln() / complex.theta.ln(),
        lift_check: 0.0,
        boundary_imbalance: st.boundary_imbalance,
        twist: st.twist,
        rotation_off_residual: st.off_residual,
        cohom_residual: st.cohom.residual,
        rejected_modes: st.cohom.rejected.len(),
        branch: Some(branch),
        real_axis_defect: Some(real_axis_defect),
        b: st.b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use num_rational::BigRational;

    fn small() -> ConjugacyConfig {
        ConjugacyConfig {
            grid: 128,
            ..ConjugacyConfig::default()
        }
    }

    #[test]
    fn constant_rotation_is_its_own_normal_form() {
        let c = Cocycle::constant(Frequency::golden(60), rotation(C64::from(0.2)), 0.3).unwrap();
        let r = complex_conjugacy(&c, 0.1, 0.02, &small()).unwrap();
        assert!(
            (r.lambda - C64::new(0.2, -0.1)).norm() < 1e-12,
            "{}",
            r.lambda
        );
        assert!((r.l_theta - 2.0 * PI * 0.1).abs() < 1e-10);
        assert!(r.im_lambda_ok && r.ok);
        assert!(r.residual < 1e-12);
        assert!(r.det_defect < 1e-12 && r.us_defect < 1e-12);
        assert_eq!(r.b.max_mode(), 0);
    }

    #[test]
    fn guards() {
        let free =
            Cocycle::schrodinger(Frequency::golden(60), 1.0, &FourierMap::zero(0.3)).unwrap();
        assert_eq!(
            complex_conjugacy(&free, 0.0, 0.02, &small()).unwrap_err(),
            Error::NotUniformlyHyperbolic { height: 0.0 }
        );
        let q = Frequency::from_rational(BigRational::new(2.into(), 5.into()), 8, "2/5".into())
            .unwrap();
        let c = Cocycle::schrodinger(q, 1.0, &FourierMap::zero(0.3)).unwrap();
        assert_eq!(
            complex_conjugacy(&c, 0.05, 0.02, &small()).unwrap_err(),
            Error::RationalFrequency
        );
        let skew = Cocycle::constant(
            Frequency::golden(60),
            Mat2::new(
                C64::new(1.0, 1.0),
                C64::from(0.0),
                C64::from(0.0),
                C64::new(1.0, 1.0).inv(),
            ),
            0.3,
        )
        .unwrap();
        assert!(matches!(
            complex_conjugacy(&skew, 0.05, 0.02, &small()),
            Err(Error::InvalidInput(_))
        ));
    }
}
