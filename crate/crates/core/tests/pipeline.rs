//! End-to-end checks of the conjugacy pipeline on AMO λ = 0.3, E = 0.

use qpcocycle::cocycle::amo_potential;
use qpcocycle::conjugacy::{
    complex_conjugacy, real_conjugacy_with, symmetry_diagnostics, SymmetricBranch,
};
use qpcocycle::hyperbolicity::angle_profile;
use qpcocycle::*;
use std::sync::OnceLock;

const THETA: f64 = 0.05;
const EPS: f64 = 0.02;

fn amo03() -> Cocycle {
    Cocycle::schrodinger(Frequency::golden(64), 0.0, &amo_potential(0.3, 0.5)).unwrap()
}

fn conjugacy() -> &'static ConjugacyResult {
    static CELL: OnceLock<ConjugacyResult> = OnceLock::new();
    CELL.get_or_init(|| {
        complex_conjugacy(&amo03(), THETA, EPS, &ConjugacyConfig::default()).unwrap()
    })
}

#[test]
fn normal_form_and_determinants() {
    let r = conjugacy();
    assert!(r.ok);
    assert_eq!(r.winding, 0);
    assert!(r.residual < 1e-3, "{}", r.residual);
    assert!(r.det_defect < 1e-8, "{}", r.det_defect);
    assert!(r.us_defect < 1e-6, "{}", r.us_defect);
    assert!(r.im_lambda_ok);
    assert_eq!(r.rejected_modes, 0);
    // U, S agree with directions computed independently on the band edges
    assert!(r.lift_check < 1e-6, "{}", r.lift_check);
}

#[test]
fn boundary_norms_are_balanced() {
    let r = conjugacy();
    assert!(r.boundary_imbalance < 1e-4, "{}", r.boundary_imbalance);
}

#[test]
fn symmetry_identities_hold() {
    let r = conjugacy();
    let d = symmetry_diagnostics(r, 512);
    assert!(d.identity_defect < 1e-9, "{}", d.identity_defect);
    assert!(d.real_defect < 1e-9, "{}", d.real_defect);
    assert!(d.us_defect < 1e-6, "{}", d.us_defect);
    // |det(U, S)| = 2 forces ‖U‖‖S‖ ≥ 2
    assert!(d.sup_u_sqr * d.sup_s_sqr >= 4.0 - 1e-9);
    let csv = d.to_csv();
    assert!(csv.starts_with("x,d_uu,abs_delta,omega\n"));
    assert_eq!(csv.lines().count(), 513);
}

#[test]
fn angle_stays_above_theta_power() {
    let r = conjugacy();
    let cfg = UhConfig {
        grid: 256,
        ..UhConfig::default()
    };
    let lines = angle_profile(
        &amo03().perturbed(THETA),
        &[-EPS, 0.0, EPS],
        Some(THETA),
        &cfg,
    )
    .unwrap();
    let bound = THETA.powf(1.0 - r.kappa);
    for l in &lines {
        assert!(
            l.min_d >= bound,
            "t = {}: min d = {} < θ^(1−κ) = {bound}",
            l.t,
            l.min_d
        );
    }
}

#[test]
fn real_conjugacy_is_real_on_the_axis() {
    let r = real_conjugacy_with(&amo03(), conjugacy(), 0.015, &ConjugacyConfig::default()).unwrap();
    assert!(r.real_axis_defect.unwrap() < 1e-9);
    assert_eq!(r.lambda.im, 0.0);
    assert_eq!(r.branch, Some(SymmetricBranch::Unstable));
}

#[test]
fn small_unstable_field_selects_the_stable_branch() {
    // R_(iy)B also conjugates to a rotation and scales U by e^(2πy).
    let mut shrunk = conjugacy().clone();
    shrunk.b = shrunk
        .b
        .left_mul_const(&cocycle::rotation(C64::new(0.0, -0.05)));
    assert!(symmetry_diagnostics(&shrunk, 512).sup_u_sqr < 2.0);
    let r = real_conjugacy_with(&amo03(), &shrunk, 0.015, &ConjugacyConfig::default()).unwrap();
    assert_eq!(r.branch, Some(SymmetricBranch::Stable));
}
