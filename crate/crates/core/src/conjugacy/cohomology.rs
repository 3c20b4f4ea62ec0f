//! Rotation angles of maps near the rotation family, and the cohomological
//! equation `φ(x) = w(x + α) − w(x) + λ`.

use crate::analytic::{grid, FourierMap};
use crate::arithmetic::Frequency;
use crate::cocycle::rotation;
use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64, I};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize)]
pub struct RotationAngle {
    /// Total winding of `Re ψ` over one period.
    pub winding: i64,
    /// `ψ(x) − kx`.
    pub phi: FourierMap,
    /// `sup ‖A'(x) − R_{ψ(x)}‖` on the grid.
    pub off_residual: f64,
}

/// Write grid samples `A'(x_j)` as `R_{ψ(x_j)}` with `ψ = kx + φ(x)`.
///
/// The angle is read from `e^{2πiψ} = (a + d)/2 + i(c − b)/2`, which is exact
/// on the rotation family. With `real` set, `ψ` is taken real (the argument
/// of that number); otherwise it is the complex logarithm.
pub fn rotation_extract(
    samples: &[Mat2],
    strip_radius: f64,
    tol: f64,
    real: bool,
) -> Result<RotationAngle> {
    let n = samples.len();
    let mut psi: Vec<C64> = samples
        .iter()
        .map(|m| {
            let e = (m.a + m.d) * 0.5 + I * (m.c - m.b) * 0.5;
            if real {
                C64::from(e.arg() / (2.0 * PI))
            } else {
                -I * e.ln() / (2.0 * PI)
            }
        })
        .collect();
    let off_residual = samples
        .iter()
        .zip(&psi)
        .map(|(m, p)| m.dist(&rotation(*p)))
        .fold(0.0, |acc: f64, d| {
            if d.is_nan() {
                f64::INFINITY
            } else {
                acc.max(d)
            }
        });
    if !(off_residual <= tol) {
        return Err(Error::NotNearRotation { off_residual });
    }
    for j in 1..n {
        let step = psi[j].re - psi[j - 1].re;
        psi[j].re -= step.round();
    }
    let close = psi[0].re - psi[n - 1].re;
    let total = psi[n - 1].re - psi[0].re + (close - close.round());
    let winding = total.round() as i64;
    let xs = grid(n);
    let phi: Vec<C64> = psi
        .iter()
        .zip(&xs)
        .map(|(p, x)| p - winding as f64 * x)
        .collect();
    Ok(RotationAngle {
        winding,
        phi: FourierMap::fit(&phi, strip_radius)?,
        off_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RejectedMode {
    pub mode: i64,
    pub divisor: f64,
    pub coefficient: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomSolution {
    pub w: FourierMap,
    pub lambda: C64,
    pub truncation: usize,
    pub rejected: Vec<RejectedMode>,
    /// `sup |φ − (w(· + α) − w + λ)|` on the residual grid.
    pub residual: f64,
    /// Truncation tail plus rejected-mode mass; bounds `residual`.
    pub budget: f64,
    /// Some mode was rejected or truncated.
    pub partial: bool,
}

/// `e^{2πikα} − 1` as `2i sin(πf)e^{iπf}` with `f = {kα}` from the exact
/// orbit phase, so near-resonant divisors keep their relative accuracy.
pub fn divisor(freq: &Frequency, k: i64) -> C64 {
    let f = freq.phase_signed(0.0, k);
    C64::from_polar(2.0 * (PI * f).sin(), PI * f) * I
}

/// Solve by Fourier division for `0 < |k| ≤ K`; modes with
/// `|e^{2πikα} − 1| < δ_min` are left out, and an error is raised if one of
/// them carries more than `tail_tol`.
pub fn cohom_solve(
    phi: &FourierMap,
    freq: &Frequency,
    k_max: usize,
    delta_min: f64,
    tail_tol: f64,
) -> Result<CohomSolution> {
    let (head, tail) = phi.truncate(k_max);
    let kk = head.max_mode() as i64;
    let mut modes = Vec::with_capacity(head.coeffs().len());
    let mut rejected = Vec::new();
    for (k, c) in head.modes() {
        if k == 0 || c == C64::from(0.0) {
            continue;
        }
        let d = divisor(freq, k);
        if d.norm() < delta_min {
            rejected.push(RejectedMode {
                mode: k,
                divisor: d.norm(),
                coefficient: c.norm(),
            });
            continue;
        }
        modes.push((k, c / d));
    }
    if let Some(worst) = rejected
        .iter()
        .filter(|r| r.coefficient > tail_tol)
        .max_by(|a, b| a.coefficient.total_cmp(&b.coefficient))
    {
        return Err(Error::SmallDivisor {
            mode: worst.mode,
            divisor: worst.divisor,
            coefficient: worst.coefficient,
        });
    }
    let lambda = head.coeff(0);
    let w = FourierMap::from_modes(&modes, phi.strip_radius());
    let n = ((4 * (phi.max_mode() + 1)).next_power_of_two()).max(256);
    let alpha = freq.alpha();
    let lhs = phi.sample_line(0.0, n);
    let w0 = w.sample_line(0.0, n);
    let w1 = w.shift_real(alpha).sample_line(0.0, n);
    let residual = lhs
        .iter()
        .zip(w0.iter().zip(&w1))
        .map(|(p, (a, b))| (p - (b - a + lambda)).norm())
        .fold(0.0, f64::max);
    let budget = tail + rejected.iter().map(|r| r.coefficient).sum::<f64>();
    Ok(CohomSolution {
        w,
        lambda,
        truncation: kk as usize,
        partial: tail > 0.0 || !rejected.is_empty(),
        rejected,
        residual,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::cf_expand;
    use crate::mat2::ONE;

    fn rot_samples(f: impl Fn(f64) -> C64, n: usize) -> Vec<Mat2> {
        grid(n).into_iter().map(|x| rotation(f(x))).collect()
    }

    #[test]
    fn constant_and_winding_angles() {
        let r = rotation_extract(&rot_samples(|_| C64::from(0.3), 64), 0.1, 1e-9, false).unwrap();
        assert_eq!(r.winding, 0);
        assert!((r.phi.coeff(0) - 0.3).norm() < 1e-12);
        assert!(r
            .phi
            .modes()
            .filter(|(k, _)| *k != 0)
            .all(|(_, c)| c.norm() < 1e-12));
        let r =
            rotation_extract(&rot_samples(|x| C64::from(x + 0.1), 64), 0.1, 1e-9, true).unwrap();
        assert_eq!(r.winding, 1);
        assert!((r.phi.coeff(0) - 0.1).norm() < 1e-12);
        let r = rotation_extract(
            &rot_samples(|x| C64::new(0.2, 0.05) - 2.0 * x, 64),
            0.1,
            1e-9,
            false,
        )
        .unwrap();
        assert_eq!(r.winding, -2);
        assert!((r.phi.coeff(0) - C64::new(0.2, 0.05)).norm() < 1e-12);
    }

    #[test]
    fn off_family_is_rejected() {
        let mut s = rot_samples(|_| C64::from(0.3), 16);
        for m in &mut s {
            m.b += 0.5;
            m.c += 0.5;
        }
        assert!(matches!(
            rotation_extract(&s, 0.1, 1e-6, false),
            Err(Error::NotNearRotation { .. })
        ));
    }

    #[test]
    fn constant_and_cosine_data() {
        let g = Frequency::golden(60);
        let s = cohom_solve(
            &FourierMap::constant(C64::new(0.2, -0.1), 0.1),
            &g,
            32,
            1e-8,
            1e-10,
        )
        .unwrap();
        assert_eq!(s.lambda, C64::new(0.2, -0.1));
        assert!(s.w.coeffs().iter().all(|c| c.norm() == 0.0));
        let cos = FourierMap::real_trig(0.0, &[1.0], &[], 0.1);
        let s = cohom_solve(&cos, &g, 32, 1e-8, 1e-10).unwrap();
        let d = C64::from_polar(1.0, 2.0 * PI * g.alpha()) - ONE;
        assert!((s.w.coeff(1) - 0.5 / d).norm() < 1e-14);
        assert!((s.w.coeff(-1) - 0.5 / d.conj()).norm() < 1e-14);
        assert!(s.residual < 1e-12);
        assert!(!s.partial);
    }

    #[test]
    fn near_resonance_is_detected() {
        let f = cf_expand(0.50001, 20).unwrap();
        let phi = FourierMap::from_modes(&[(2, C64::from(1.0)), (-2, C64::from(1.0))], 0.1);
        match cohom_solve(&phi, &f, 8, 1e-3, 1e-10) {
            Err(Error::SmallDivisor { mode, divisor, .. }) => {
                assert_eq!(mode.abs(), 2);
                assert!(divisor < 1e-3);
            }
            other => panic!("{other:?}"),
        }
        // below the tail tolerance the mode is dropped and reported
        let phi = FourierMap::from_modes(&[(1, C64::from(1.0)), (2, C64::from(1e-12))], 0.1);
        let s = cohom_solve(&phi, &f, 8, 1e-3, 1e-10).unwrap();
        assert!(s.partial);
        assert_eq!(s.rejected.len(), 1);
        assert!((s.residual - s.budget).abs() < 1e-10);
    }
}
