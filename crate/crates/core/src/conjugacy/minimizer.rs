//! Minimizing elements of `K_{x,y} = {B ∈ SL(2,C) : B·x = i, B·y = −i}`.

use crate::cocycle::{sphere_distance, ProjPoint};
use crate::error::{Error, Result};
use crate::mat2::{Mat2, Vec2, C64, I, ONE};
use serde::Serialize;

/// The `SU(2)` element `e^{−iπ/4}/√2 · ((i, −i), (1, 1))`, sending ∞ to `i`
/// and 0 to `−i`.
pub fn cayley_unitary() -> Mat2 {
    let s = C64::from_polar(
        std::f64::consts::FRAC_1_SQRT_2,
        -std::f64::consts::FRAC_PI_4,
    );
    Mat2::new(I * s, -I * s, s, s)
}

/// `D_μ = diag(μ, 1/μ)`.
pub fn dilation(mu: C64) -> Mat2 {
    Mat2::diag(mu, mu.inv())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinimizerData {
    #[serde(skip)]
    pub x: ProjPoint,
    #[serde(skip)]
    pub y: ProjPoint,
    /// `k(x, y) = min ‖B‖²` over `K_{x,y}`.
    pub k: f64,
    #[serde(skip)]
    pub b: Mat2,
}

impl MinimizerData {
    /// `B⁻¹(i, 1)`.
    pub fn u_vector(&self) -> Vec2 {
        self.b.adjugate().apply(&Vec2(I, ONE))
    }

    /// `B⁻¹(−i, 1)`.
    pub fn s_vector(&self) -> Vec2 {
        self.b.adjugate().apply(&Vec2(-I, ONE))
    }
}

/// Move the pair to `(εi, −εi)` with `ε ≤ 1` by an `SU(2)` change of
/// coordinates `V`, then `B = D_{ε^{−1/2}} V` and `k = 1/ε`.
pub fn minimizer(x: &ProjPoint, y: &ProjPoint) -> Result<MinimizerData> {
    let d = sphere_distance(x, y);
    if !(d > 1e-14) {
        return Err(Error::CoincidentDirections);
    }
    let xv = x.vector().normalized();
    let mut yv = y.vector().normalized();
    // Align phases so the spherical midpoint is (x̂ + ŷ)/|x̂ + ŷ|.
    let ip = xv.dot(&yv);
    if ip.norm() > 0.0 {
        yv = yv.scale(ip.conj() / ip.norm());
    }
    let m = Vec2(xv.0 + yv.0, xv.1 + yv.1).normalized();
    // Unitary sending the midpoint to 0 = (0, 1).
    let mut v = Mat2::new(m.1, -m.0, m.0.conj(), m.1.conj());
    let xi = v.apply(&xv);
    // Rotate x onto the positive imaginary axis with a diagonal SU(2).
    let z = xi.0 / xi.1;
    let phase = C64::from_polar(1.0, 0.5 * (std::f64::consts::FRAC_PI_2 - z.arg()));
    v = Mat2::diag(phase, phase.conj()) * v;
    let mut eps = z.norm();
    if eps > 1.0 {
        v = Mat2::real(0.0, -1.0, 1.0, 0.0) * v;
        eps = 1.0 / eps;
    }
    let b = dilation(C64::from(eps.powf(-0.5))) * v;
    Ok(MinimizerData {
        x: *x,
        y: *y,
        k: 1.0 / eps,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::act;
    use crate::mat2::ZERO;

    fn check(data: &MinimizerData) {
        let bu = act(&data.b, &data.x).unwrap().chart().unwrap();
        let bs = act(&data.b, &data.y).unwrap().chart().unwrap();
        assert!((bu - I).norm() < 1e-9, "{bu}");
        assert!((bs + I).norm() < 1e-9, "{bs}");
        assert!((data.b.det() - ONE).norm() < 1e-12);
        let (nu, ns) = (data.u_vector().norm_sqr(), data.s_vector().norm_sqr());
        assert!((nu - ns).abs() < 1e-9 * nu);
        assert!((nu - (data.k + 1.0 / data.k)).abs() < 1e-9 * nu);
    }

    #[test]
    fn symmetric_pairs() {
        let m = minimizer(&ProjPoint::from_chart(I), &ProjPoint::from_chart(-I)).unwrap();
        assert!((m.k - 1.0).abs() < 1e-12);
        assert!((m.u_vector().norm_sqr() - 2.0).abs() < 1e-12);
        // unitary: B B* = 1
        assert!((m.b * m.b.adjoint()).dist(&Mat2::identity()) < 1e-12);
        check(&m);
        let m = minimizer(
            &ProjPoint::from_chart(C64::new(0.0, 0.2)),
            &ProjPoint::from_chart(C64::new(0.0, -0.2)),
        )
        .unwrap();
        assert!((m.k - 5.0).abs() < 1e-12);
        assert!((m.b.norm().powi(2) - 5.0).abs() < 1e-9);
        check(&m);
    }

    #[test]
    fn general_pairs() {
        let pts = [
            (C64::new(0.3, 2.0), C64::new(-1.0, 0.5)),
            (C64::new(5.0, 0.0), C64::new(0.0, 0.0)),
            (C64::new(0.01, 0.02), C64::new(0.011, 0.02)),
        ];
        for (a, b) in pts {
            let m = minimizer(&ProjPoint::from_chart(a), &ProjPoint::from_chart(b)).unwrap();
            check(&m);
            let d = sphere_distance(&m.x, &m.y);
            assert!(d * m.k >= 1.0 - 1e-12 && d * m.k <= 2.0 + 1e-12);
        }
        let m = minimizer(&ProjPoint::infinity(), &ProjPoint::from_chart(ZERO)).unwrap();
        check(&m);
        let p = ProjPoint::from_chart(C64::new(0.4, 0.1));
        assert_eq!(minimizer(&p, &p), Err(Error::CoincidentDirections));
    }
}
