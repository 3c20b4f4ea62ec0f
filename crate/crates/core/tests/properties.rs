use proptest::prelude::*;
use qpcocycle::analytic::FourierMap;
use qpcocycle::arithmetic::Frequency;
use qpcocycle::cocycle::{act, amo_potential, sphere_distance};
use qpcocycle::conjugacy::straighten::preimages;
use qpcocycle::conjugacy::{cohom_solve, minimizer, straighten, FitOptions};
use qpcocycle::hyperbolicity::q_pair;
use qpcocycle::schrodinger::{ids, IdsMethod};
use qpcocycle::{Mat2, ProjPoint, Vec2, C64};

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn point() -> impl Strategy<Value = ProjPoint> {
    (c64(), c64())
        .prop_filter("nonzero", |(a, b)| a.norm() + b.norm() > 1e-3)
        .prop_map(|(a, b)| ProjPoint::from_vec(Vec2(a, b)))
}

fn separated_pair() -> impl Strategy<Value = (ProjPoint, ProjPoint)> {
    (point(), point()).prop_filter("distinct", |(x, y)| sphere_distance(x, y) > 1e-6)
}

fn su2() -> impl Strategy<Value = Mat2> {
    (c64(), c64())
        .prop_filter("nonzero", |(a, b)| a.norm() + b.norm() > 1e-3)
        .prop_map(|(a, b)| {
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (a, b) = (a / r, b / r);
            Mat2::new(a, -b.conj(), b, a.conj())
        })
}

fn modes(k_max: i64) -> impl Strategy<Value = Vec<(i64, C64)>> {
    prop::collection::vec(c64(), (2 * k_max + 1) as usize)
        .prop_map(move |cs| (-k_max..=k_max).zip(cs).collect())
}

fn chart(m: &Mat2, p: &ProjPoint) -> C64 {
    act(m, p).unwrap().chart().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn minimizer_normal_form((x, y) in separated_pair()) {
        let m = minimizer(&x, &y).unwrap();
        let i = C64::new(0.0, 1.0);
        prop_assert!((chart(&m.b, &x) - i).norm() < 1e-6);
        prop_assert!((chart(&m.b, &y) + i).norm() < 1e-6);
        prop_assert!((m.b.det() - 1.0).norm() < 1e-10);
        let d = sphere_distance(&x, &y);
        let slack = 1e-14 / d;
        prop_assert!(m.k * d >= 1.0 - slack && m.k * d <= 2.0 * (1.0 + slack));
        let (nu, ns) = (m.u_vector().norm_sqr(), m.s_vector().norm_sqr());
        prop_assert!((nu - ns).abs() <= 1e-9 * nu);
        prop_assert!((nu - (m.k + 1.0 / m.k)).abs() <= 1e-9 * nu);
    }

    #[test]
    fn minimizer_is_symmetric_in_the_pair((x, y) in separated_pair()) {
        let a = minimizer(&x, &y).unwrap().k;
        let b = minimizer(&y, &x).unwrap().k;
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn sphere_distance_is_unitarily_invariant((x, y) in separated_pair(), v in su2()) {
        let d0 = sphere_distance(&x, &y);
        let d1 = sphere_distance(&act(&v, &x).unwrap(), &act(&v, &y).unwrap());
        prop_assert!((d0 - d1).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d0));
        prop_assert!((sphere_distance(&y, &x) - d0).abs() < 1e-15);
    }

    #[test]
    fn q_pair_sandwich((x, y) in separated_pair()) {
        let q = q_pair(&x, &y).unwrap();
        let inv_d = 1.0 / sphere_distance(&x, &y);
        prop_assert!(q.eta <= inv_d * (1.0 + 1e-9));
        prop_assert!(inv_d <= 5f64.sqrt() * q.eta * (1.0 + 1e-9));
    }

    #[test]
    fn fit_recovers_trigonometric_polynomials(ms in modes(8)) {
        let f = FourierMap::from_modes(&ms, 0.1);
        let g = FourierMap::fit(&f.sample_line(0.0, 64), 0.1).unwrap();
        for (k, c) in &ms {
            prop_assert!((g.coeff(*k) - c).norm() < 1e-12);
        }
        prop_assert!(g.modes().filter(|(k, _)| k.abs() > 8).all(|(_, c)| c.norm() < 1e-12));
    }

    #[test]
    fn reflect_is_an_involution(ms in modes(6), z in c64()) {
        let f = FourierMap::from_modes(&ms, 0.5);
        prop_assert_eq!(f.reflect().reflect(), f.clone());
        let z = C64::new(z.re, 0.3 * z.im);
        let lhs = f.reflect().eval(z).unwrap();
        let rhs = f.eval(z.conj()).unwrap().conj();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        let sym = f.add(&f.reflect());
        prop_assert!(sym.is_real_symmetric(1e-14));
    }

    #[test]
    fn cohomological_residual_within_budget(ms in modes(12), k_keep in 1usize..12) {
        let f = FourierMap::from_modes(&ms, 0.1);
        let s = cohom_solve(&f, &Frequency::golden(60), k_keep, 1e-8, 1e-10).unwrap();
        prop_assert!(s.residual <= s.budget + 1e-10, "{} > {}", s.residual, s.budget);
        prop_assert_eq!(s.lambda, f.coeff(0));
    }

    #[test]
    fn straighten_constant_fields((x, y) in separated_pair().prop_filter("angle", |(x, y)| sphere_distance(x, y) > 1e-3)) {
        let field = |p: &ProjPoint| {
            let v = p.vector();
            [FourierMap::constant(v.0, 0.1), FourierMap::constant(v.1, 0.1)]
        };
        let opts = FitOptions { grid: 16, ..FitOptions::default() };
        let b = straighten(&field(&x), &field(&y), 0.05, 1e-6, &opts).unwrap();
        let m = b.eval(C64::new(0.3, 0.02)).unwrap();
        let i = C64::new(0.0, 1.0);
        prop_assert!((m.det() - 1.0).norm() < 1e-9);
        prop_assert!((chart(&m, &x) - i).norm() < 1e-6);
        prop_assert!((chart(&m, &y) + i).norm() < 1e-6);
        // balanced gauge: the straightened matrix attains the minimal norm
        let (pu, ps) = preimages(&b.eval(C64::from(0.3)).unwrap());
        let k = minimizer(&x, &y).unwrap().k;
        prop_assert!((pu.norm_sqr() - ps.norm_sqr()).abs() <= 1e-8 * pu.norm_sqr());
        prop_assert!((pu.norm_sqr() - (k + 1.0 / k)).abs() <= 1e-8 * pu.norm_sqr());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ids_is_monotone(lambda in 0.2..3.0f64, e in -5.0..5.0f64, de in 0.01..0.5f64) {
        let g = Frequency::golden(60);
        let v = amo_potential(lambda, 0.5);
        for method in [IdsMethod::Eigencount, IdsMethod::Rotation] {
            let size = if method == IdsMethod::Eigencount { 500 } else { 20_000 };
            let a = ids(&g, &v, e, method, size).unwrap();
            let b = ids(&g, &v, e + de, method, size).unwrap();
            prop_assert!(b >= a - 1e-3, "{method:?}: N({e}) = {a}, N({}) = {b}", e + de);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
