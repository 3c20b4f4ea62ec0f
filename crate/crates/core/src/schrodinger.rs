//! Schrödinger operators `(Hu)_n = u_{n+1} + u_{n−1} + v(x + nα)u_n`:
//! rotation number, integrated density of states, and classification of
//! energies by the behaviour of the cocycle.

use crate::analytic::FourierMap;
use crate::arithmetic::Frequency;
use crate::cocycle::Cocycle;
use crate::error::{Error, Result};
use crate::hyperbolicity::{uh_certificate_with, UhConfig};
use crate::lyapunov::{finite_le, regularity_test, strip_profile_on, Regularity, StripProfile};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Phases used to average the eigenvalue count.
pub const EIGENCOUNT_PHASES: usize = 8;

fn potential_values(freq: &Frequency, v: &FourierMap, x0: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| v.eval_unchecked(freq.phase(x0, k as u64).into()).re)
        .collect()
}

fn check_potential(v: &FourierMap) -> Result<()> {
    if !v.is_real_symmetric(1e-12) {
        return Err(Error::InvalidInput(
            "potential is not real-symmetric".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationNumber {
    pub rho: f64,
    /// Spread of window means divided by the square root of the window count.
    pub err: f64,
    pub steps: usize,
}

/// Mean angle increment of the projective action on real directions.
///
/// Directions are kept as angles in `[−π/2, π/2)`. The image angle of
/// `(cos φ, sin φ)` under `((E − v, −1), (1, 0))` lies in `[0, π]` because
/// its second coordinate is `cos φ ≥ 0`, so each increment is measured
/// without branch ambiguity.
pub fn rotation_number(
    freq: &Frequency,
    v: &FourierMap,
    energy: f64,
    steps: usize,
) -> Result<RotationNumber> {
    check_potential(v)?;
    if steps < 16 {
        return Err(Error::InvalidInput("at least 16 steps are required".into()));
    }
    let vals = potential_values(freq, v, 0.0, steps);
    let mut phi: f64 = 0.0;
    let windows = 16;
    let per = steps / windows;
    let mut window_sums = vec![0.0; windows];
    let mut total = 0.0;
    for (k, vk) in vals.iter().enumerate() {
        let (s, c) = phi.sin_cos();
        let psi = c.atan2((energy - vk) * c - s);
        let inc = psi - phi;
        total += inc;
        if k / per < windows {
            window_sums[k / per] += inc;
        }
        phi = if psi >= PI / 2.0 { psi - PI } else { psi };
    }
    let rho = (total / steps as f64 / (2.0 * PI)).clamp(0.0, 0.5);
    let means: Vec<f64> = window_sums
        .iter()
        .map(|s| s / per as f64 / (2.0 * PI))
        .collect();
    let m = means.iter().sum::<f64>() / windows as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (windows - 1) as f64;
    Ok(RotationNumber {
        rho,
        err: (var / windows as f64).sqrt(),
        steps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdsMethod {
    Rotation,
    Eigencount,
}

/// `N(E)`: either `1 − 2ρ(E)` with `size` steps, or the fraction of
/// eigenvalues below `E` of the `size × size` Dirichlet truncation, averaged
/// over [`EIGENCOUNT_PHASES`] phases.
pub fn ids(
    freq: &Frequency,
    v: &FourierMap,
    energy: f64,
    method: IdsMethod,
    size: usize,
) -> Result<f64> {
    match method {
        IdsMethod::Rotation => Ok(1.0 - 2.0 * rotation_number(freq, v, energy, size)?.rho),
        IdsMethod::Eigencount => {
            check_potential(v)?;
            if size < 100 {
                return Err(Error::InvalidInput("eigencount needs size ≥ 100".into()));
            }
            let mut count = 0usize;
            for j in 0..EIGENCOUNT_PHASES {
                let vals = potential_values(freq, v, j as f64 / EIGENCOUNT_PHASES as f64, size);
                count += sturm_count(&vals, energy);
            }
            Ok(count as f64 / (size * EIGENCOUNT_PHASES) as f64)
        }
    }
}

/// Number of eigenvalues below `e` of the tridiagonal matrix with diagonal
/// `diag` and unit off-diagonals, from the signs of the LDLᵀ pivots.
pub fn sturm_count(diag: &[f64], e: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (k, v) in diag.iter().enumerate() {
        d = if k == 0 { v - e } else { (v - e) - 1.0 / d };
        if d == 0.0 {
            d = f64::EPSILON;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyClass {
    Gap,
    Subcritical,
    Critical,
    Supercritical,
    Unresolved,
}

impl EnergyClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyClass::Gap => "gap",
            EnergyClass::Subcritical => "subcritical",
            EnergyClass::Critical => "critical",
            EnergyClass::Supercritical => "supercritical",
            EnergyClass::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    /// Threshold separating positive from zero Lyapunov exponent.
    pub tol_l: f64,
    /// Width of the height window for the regularity test.
    pub delta: f64,
    /// Tolerance on slopes (units of 2π).
    pub slope_tol: f64,
    /// Heights in `[0, δ]` at which `L` is computed.
    pub profile_points: usize,
    pub le_tol: f64,
    pub le_max: u64,
    pub grid: usize,
    pub uh_grid: usize,
    pub uh_n_max: u64,
    pub rotation_steps: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tol_l: 1e-2,
            delta: 0.05,
            slope_tol: 0.05,
            profile_points: 3,
            le_tol: 1e-4,
            le_max: 1 << 13,
            grid: 256,
            uh_grid: 256,
            uh_n_max: 1 << 13,
            rotation_steps: 100_000,
        }
    }
}

impl ClassifyConfig {
    fn uh(&self) -> UhConfig {
        UhConfig {
            grid: self.uh_grid,
            n_max: self.uh_n_max,
            ..UhConfig::default()
        }
    }

    fn heights(&self) -> Vec<f64> {
        let m = self.profile_points.max(2);
        (0..m)
            .map(|j| self.delta * j as f64 / (m - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyRecord {
    #[serde(rename = "E")]
    pub energy: f64,
    pub class: EnergyClass,
    #[serde(rename = "L0")]
    pub l0: f64,
    /// Acceleration on `[0, δ]`; absent when the first certificate settled a gap.
    pub accel: Option<f64>,
    pub rho: f64,
    pub ids: f64,
    /// Error bar on `L0` (or on `ρ` for gap energies).
    pub err: f64,
    pub uh: bool,
    pub regularity: Option<Regularity>,
    #[serde(skip)]
    pub profile: Option<StripProfile>,
    /// Set when a stage failed; the class is then `unresolved`.
    pub error: Option<String>,
}

/// Gap if uniformly hyperbolic; otherwise supercritical when `L(0) > tol_L`
/// and `L` accelerates, subcritical when the strip profile is flat on
/// `[0, δ]`, critical when it is not, and unresolved when the test is
/// inconclusive.
pub fn classify_energy(
    freq: &Frequency,
    v: &FourierMap,
    energy: f64,
    cfg: &ClassifyConfig,
) -> Result<EnergyRecord> {
    check_potential(v)?;
    let c = Cocycle::schrodinger(freq.clone(), energy, v)?;
    let rot = rotation_number(freq, v, energy, cfg.rotation_steps)?;
    let cert = uh_certificate_with(&c, 0.0, &cfg.uh());
    if cert.verdict {
        let l0 = finite_le(&c, cfg.le_max, 0.0, cfg.grid)?.value;
        return Ok(EnergyRecord {
            energy,
            class: EnergyClass::Gap,
            l0,
            accel: None,
            rho: rot.rho,
            ids: 1.0 - 2.0 * rot.rho,
            err: rot.err,
            uh: true,
            regularity: None,
            profile: None,
            error: None,
        });
    }
    let profile = strip_profile_on(&c, &cfg.heights(), cfg.le_tol, cfg.le_max, cfg.grid)?;
    let l0 = profile.exponents[0].value;
    let reg = regularity_test(&profile, cfg.delta, cfg.tol_l);
    let accel = profile.acceleration(0.0, cfg.delta);
    // Positive L with zero acceleration means regular and hence uniformly
    // hyperbolic; near gap edges the default certificate is too coarse, so
    // retry with a finer grid and longer products before deciding.
    let flat = accel.is_some_and(|a| a.abs() < cfg.slope_tol);
    if l0 > cfg.tol_l && flat {
        let fine = UhConfig {
            grid: 4 * cfg.uh_grid,
            n_max: 4 * cfg.uh_n_max,
            ..UhConfig::default()
        };
        let cert = uh_certificate_with(&c, 0.0, &fine);
        return Ok(EnergyRecord {
            energy,
            class: if cert.verdict {
                EnergyClass::Gap
            } else {
                EnergyClass::Unresolved
            },
            l0,
            accel,
            rho: rot.rho,
            ids: 1.0 - 2.0 * rot.rho,
            err: profile.exponents[0].error,
            uh: cert.verdict,
            regularity: Some(reg),
            profile: Some(profile),
            error: None,
        });
    }
    let class = if l0 > cfg.tol_l {
        EnergyClass::Supercritical
    } else {
        match reg {
            Regularity::Regular => EnergyClass::Subcritical,
            Regularity::NonRegular => EnergyClass::Critical,
            Regularity::Inconclusive => EnergyClass::Unresolved,
        }
    };
    Ok(EnergyRecord {
        energy,
        class,
        l0,
        accel,
        rho: rot.rho,
        ids: 1.0 - 2.0 * rot.rho,
        err: profile.exponents[0].error,
        uh: false,
        regularity: Some(reg),
        profile: Some(profile),
        error: None,
    })
}

/// Energy of a grid with the smallest `L_N(0)`, and that value. Off the
/// spectrum `L` is larger than its on-spectrum value for the models of
/// interest, so the minimizer lands on the spectrum.
pub fn scan_min_energy(
    freq: &Frequency,
    v: &FourierMap,
    energies: &[f64],
    n: u64,
    grid: usize,
) -> Result<(f64, f64)> {
    if energies.is_empty() {
        return Err(Error::InvalidInput("empty energy grid".into()));
    }
    let values = energies
        .iter()
        .map(|&e| {
            let c = Cocycle::schrodinger(freq.clone(), e, v)?;
            Ok((e, finite_le(&c, n, 0.0, grid)?.value))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        }))
}

/// Maximal run of consecutive grid energies sharing a class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassRun {
    pub class: EnergyClass,
    pub e_min: f64,
    pub e_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub total: usize,
    pub gap: usize,
    pub subcritical: usize,
    pub critical: usize,
    pub supercritical: usize,
    pub unresolved: usize,
    pub failed: usize,
    pub runs: Vec<ClassRun>,
    /// Every non-gap record lies in exactly one of the subcritical,
    /// supercritical and critical/unresolved cells.
    pub partition_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub config: ClassifyConfig,
    pub records: Vec<EnergyRecord>,
    pub summary: ReportSummary,
}

impl DichotomyReport {
    /// CSV with columns `E,class,L0,accel,rho,ids,err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,class,L0,accel,rho,ids,err\n");
        for r in &self.records {
            let accel = r.accel.map(|a| format!("{a:.12e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{:.12e},{},{:.12e},{:.12e},{:.6e}\n",
                r.energy,
                r.class.as_str(),
                r.l0,
                accel,
                r.rho,
                r.ids,
                r.err
            ));
        }
        out
    }
}

/// Classify every energy of the grid (in parallel) and summarize the
/// classes in grid order. A failing energy is recorded as unresolved with
/// its error message.
pub fn dichotomy_report(
    freq: &Frequency,
    v: &FourierMap,
    energies: &[f64],
    cfg: &ClassifyConfig,
) -> Result<DichotomyReport> {
    check_potential(v)?;
    let mut es = energies.to_vec();
    if es.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("energy grid".into()));
    }
    es.sort_by(|a, b| a.total_cmp(b));
    let records: Vec<EnergyRecord> = es
        .par_iter()
        .map(|&e| {
            classify_energy(freq, v, e, cfg).unwrap_or_else(|err| EnergyRecord {
                energy: e,
                class: EnergyClass::Unresolved,
                l0: f64::NAN,
                accel: None,
                rho: f64::NAN,
                ids: f64::NAN,
                err: f64::NAN,
                uh: false,
                regularity: None,
                profile: None,
                error: Some(err.to_string()),
            })
        })
        .collect();
    let summary = summarize(&records);
    Ok(DichotomyReport {
        config: cfg.clone(),
        records,
        summary,
    })
}

pub fn summarize(records: &[EnergyRecord]) -> ReportSummary {
    let count = |c: EnergyClass| records.iter().filter(|r| r.class == c).count();
    let mut runs: Vec<ClassRun> = Vec::new();
    for r in records {
        match runs.last_mut() {
            Some(run) if run.class == r.class => {
                run.e_max = r.energy;
                run.count += 1;
            }
            _ => runs.push(ClassRun {
                class: r.class,
                e_min: r.energy,
                e_max: r.energy,
                count: 1,
            }),
        }
    }
    let non_gap = records
        .iter()
        .filter(|r| r.class != EnergyClass::Gap)
        .count();
    let minus = count(EnergyClass::Subcritical);
    let plus = count(EnergyClass::Supercritical);
    let rest = count(EnergyClass::Critical) + count(EnergyClass::Unresolved);
    let cells_disjoint = records.iter().all(|r| {
        let memberships = [
            r.class == EnergyClass::Subcritical,
            r.class == EnergyClass::Supercritical,
            matches!(r.class, EnergyClass::Critical | EnergyClass::Unresolved),
        ];
        let k = memberships.iter().filter(|m| **m).count();
        if r.class == EnergyClass::Gap {
            k == 0 && r.uh
        } else {
            k == 1 && !r.uh
        }
    });
    ReportSummary {
        total: records.len(),
        gap: count(EnergyClass::Gap),
        subcritical: minus,
        critical: count(EnergyClass::Critical),
        supercritical: plus,
        unresolved: count(EnergyClass::Unresolved),
        failed: records.iter().filter(|r| r.error.is_some()).count(),
        runs,
        partition_ok: cells_disjoint && minus + plus + rest == non_gap,
    }
}
