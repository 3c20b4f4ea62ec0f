//! Lyapunov exponents on horizontal lines and their dependence on the height.
//!
//! `L_N(t)` is the grid average of `ln‖A_N(x + it)‖ / N`. Limits are taken by
//! doubling `N`, continuing each grid product in place so the total work is
//! that of the final scale.

use crate::analytic::DEFAULT_GRID;
use crate::cocycle::{extend, line_products, Cocycle, ProductResult};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Starting scale for [`le_estimate`].
pub const START_SCALE: u64 = 64;
/// Default scale budget for [`le_estimate`].
pub const DEFAULT_MAX_SCALE: u64 = 1 << 16;

/// `L_N(t)` on an equispaced grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineExponent {
    pub n: u64,
    pub t: f64,
    pub value: f64,
    pub grid: usize,
}

pub fn finite_le(c: &Cocycle, n: u64, t: f64, grid: usize) -> Result<LineExponent> {
    if n == 0 {
        return Err(Error::InvalidInput("scale must be at least 1".into()));
    }
    let products = line_products(c, n, t, grid)?;
    Ok(LineExponent {
        n,
        t,
        value: grid_mean(&products, n),
        grid,
    })
}

// Sequential sum in grid order keeps results independent of thread count.
fn grid_mean(products: &[ProductResult], n: u64) -> f64 {
    let sum: f64 = products.iter().map(|p| p.ln_norm()).sum();
    sum / (products.len() as f64 * n as f64)
}

fn even_mean(products: &[ProductResult], n: u64) -> f64 {
    let (sum, count) = products
        .iter()
        .step_by(2)
        .fold((0.0, 0usize), |(s, k), p| (s + p.ln_norm(), k + 1));
    sum / (count as f64 * n as f64)
}

/// Limit estimate of the Lyapunov exponent on one line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeEstimate {
    pub t: f64,
    pub value: f64,
    /// Half the last doubling gap plus the grid-refinement delta.
    pub error: f64,
    /// `|L_{2N} − L_N|` at the last doubling.
    pub gap: f64,
    pub converged: bool,
    pub n: u64,
    pub grid: usize,
    /// `(N, L_N)` for every scale visited.
    pub sequence: Vec<(u64, f64)>,
}

/// Doubles `N` until `|L_{2N} − L_N| < tol` or `N` would exceed `n_max`.
pub fn le_estimate(c: &Cocycle, t: f64, tol: f64, n_max: u64) -> Result<LeEstimate> {
    le_estimate_on(c, t, tol, n_max, DEFAULT_GRID)
}

pub fn le_estimate_on(
    c: &Cocycle,
    t: f64,
    tol: f64,
    n_max: u64,
    grid: usize,
) -> Result<LeEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let mut n = START_SCALE.min(n_max.max(1));
    let mut products = line_products(c, n, t, grid)?;
    let mut value = grid_mean(&products, n);
    let mut sequence = vec![(n, value)];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while 2 * n <= n_max {
        products.par_iter_mut().enumerate().for_each(|(j, p)| {
            extend(c, p, n, j as f64 / grid as f64, t);
        });
        n *= 2;
        let next = grid_mean(&products, n);
        gap = (next - value).abs();
        value = next;
        sequence.push((n, value));
        if gap < tol {
            converged = true;
            break;
        }
    }
    let delta = (even_mean(&products, n) - value).abs();
    Ok(LeEstimate {
        t,
        value,
        error: 0.5 * gap.min(f64::MAX) + delta,
        gap,
        converged,
        n,
        grid,
        sequence,
    })
}

/// Lyapunov exponents across a list of heights.
#[derive(Clone, Debug, Serialize)]
pub struct StripProfile {
    pub heights: Vec<f64>,
    pub exponents: Vec<LeEstimate>,
    /// Slope between consecutive heights divided by 2π; entry `i` uses
    /// heights `i` and `i + 1`.
    pub slopes: Vec<f64>,
    /// `max |L(ε) − L(−ε)|` over the heights, for real-symmetric cocycles.
    pub evenness_defect: Option<f64>,
    pub even_ok: Option<bool>,
    pub convex_ok: bool,
}

impl StripProfile {
    pub fn values(&self) -> Vec<f64> {
        self.exponents.iter().map(|e| e.value).collect()
    }

    /// Least-squares slope of `L` against height over `[lo, hi]`, divided by
    /// 2π. Needs at least two heights in the window.
    pub fn acceleration(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .heights
            .iter()
            .zip(&self.exponents)
            .filter(|(h, _)| **h >= lo - 1e-12 && **h <= hi + 1e-12)
            .map(|(h, e)| (*h, e.value))
            .collect();
        ls_slope(&pts).map(|s| s / (2.0 * PI))
    }

    /// CSV with columns `epsilon,L,err,slope_over_2pi`. The slope column
    /// holds the slope to the next height and is empty on the last row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,L,err,slope_over_2pi\n");
        for (i, (h, e)) in self.heights.iter().zip(&self.exponents).enumerate() {
            let slope = self
                .slopes
                .get(i)
                .map(|s| format!("{s:.12e}"))
                .unwrap_or_default();
            out.push_str(&format!("{h},{:.12e},{:.6e},{slope}\n", e.value, e.error));
        }
        out
    }
}

/// Least-squares slope through `(x, y)` points.
pub fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// `le_estimate` at each height, with slopes and shape checks.
pub fn strip_profile(c: &Cocycle, heights: &[f64], tol: f64, n_max: u64) -> Result<StripProfile> {
    strip_profile_on(c, heights, tol, n_max, DEFAULT_GRID)
}

pub fn strip_profile_on(
    c: &Cocycle,
    heights: &[f64],
    tol: f64,
    n_max: u64,
    grid: usize,
) -> Result<StripProfile> {
    let mut hs = heights.to_vec();
    hs.sort_by(|a, b| a.total_cmp(b));
    for &h in &hs {
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("height {h}")));
        }
        if h.abs() > c.strip_radius() {
            return Err(Error::OutsideStrip {
                im: h.abs(),
                radius: c.strip_radius(),
            });
        }
    }
    let exponents = hs
        .iter()
        .map(|&h| le_estimate_on(c, h, tol, n_max, grid))
        .collect::<Result<Vec<_>>>()?;
    let slopes = hs
        .windows(2)
        .zip(exponents.windows(2))
        .map(|(h, e)| (e[1].value - e[0].value) / (h[1] - h[0]) / (2.0 * PI))
        .collect();

    let (evenness_defect, even_ok) = if c.is_real_symmetric() {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (h, e) in hs.iter().zip(&exponents) {
            if *h == 0.0 {
                continue;
            }
            let mirror = finite_le(c, e.n, -h, e.grid)?;
            let d = (mirror.value - e.value).abs();
            worst = worst.max(d);
            ok &= d <= 2.0 * e.error + 1e-12;
        }
        (Some(worst), Some(ok))
    } else {
        (None, None)
    };

    let mut convex_ok = true;
    for i in 0..hs.len().saturating_sub(2) {
        let (h1, h2, h3) = (hs[i], hs[i + 1], hs[i + 2]);
        let (l1, l2, l3) = (
            exponents[i].value,
            exponents[i + 1].value,
            exponents[i + 2].value,
        );
        let w = (h2 - h1) / (h3 - h1);
        let interp = (1.0 - w) * l1 + w * l3;
        let slack = exponents[i].error + exponents[i + 1].error + exponents[i + 2].error;
        convex_ok &= l2 <= interp + slack + 1e-12;
    }

    Ok(StripProfile {
        heights: hs,
        exponents,
        slopes,
        evenness_defect,
        even_ok,
        convex_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    NonRegular,
    Inconclusive,
}

/// Finite-window surrogate of regularity at `ε = 0`: regular when `L` stays
/// within `tol` of `L(0)` up to height `δ`, non-regular when some slope below
/// `δ` exceeds 1/2 (in units of 2π) by more than its error bar.
pub fn regularity_test(p: &StripProfile, delta: f64, tol: f64) -> Regularity {
    let Some(i0) = p.heights.iter().position(|h| *h == 0.0) else {
        return Regularity::Inconclusive;
    };
    let l0 = p.exponents[i0].value;
    let below: Vec<usize> = (0..p.heights.len())
        .filter(|&i| p.heights[i] >= 0.0 && p.heights[i] <= delta + 1e-12)
        .collect();
    if below.len() < 2 {
        return Regularity::Inconclusive;
    }
    let flat = below
        .iter()
        .all(|&i| (p.exponents[i].value - l0).abs() < tol);
    if flat {
        return Regularity::Regular;
    }
    for w in below.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j != i + 1 {
            continue;
        }
        let dh = p.heights[j] - p.heights[i];
        let err = (p.exponents[i].error + p.exponents[j].error) / dh / (2.0 * PI);
        if p.slopes[i] - 0.5 > err {
            return Regularity::NonRegular;
        }
    }
    Regularity::Inconclusive
}

/// `ln sup_x ‖A_n(x + it)‖` at increasing `n` and the least-squares slope of
/// that curve against `ln n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub t: f64,
    pub n: Vec<u64>,
    pub log_sup: Vec<f64>,
    pub slope: f64,
}

pub fn growth_slope(c: &Cocycle, t: f64, scales: &[u64], grid: usize) -> Result<GrowthFit> {
    if scales.len() < 2 || scales.windows(2).any(|w| w[0] >= w[1]) || scales[0] == 0 {
        return Err(Error::InvalidInput(
            "scales must be at least two increasing positive integers".into(),
        ));
    }
    // Validate the height once through a short product.
    line_products(c, 1, t, 1)?;
    let rows: Vec<Vec<f64>> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let x = j as f64 / grid as f64;
            let mut acc = ProductResult::identity();
            let mut out = Vec::with_capacity(scales.len());
            for &n in scales {
                let steps = n - acc.n;
                extend(c, &mut acc, steps, x, t);
                out.push(acc.ln_norm());
            }
            out
        })
        .collect();
    let log_sup: Vec<f64> = (0..scales.len())
        .map(|k| rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(&log_sup)
        .map(|(&n, &v)| ((n as f64).ln(), v))
        .collect();
    Ok(GrowthFit {
        t,
        n: scales.to_vec(),
        slope: ls_slope(&pts).unwrap_or(f64::NAN),
        log_sup,
    })
}

/// `κ = ln L_θ / ln θ`.
pub fn kappa_exponent(theta: f64, l_theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::DomainError(format!("θ = {theta} not in (0, 1)")));
    }
    if !(l_theta > 0.0) {
        return Err(Error::DomainError(format!(
            "L_θ = {l_theta} is not positive; κ = +∞"
        )));
    }
    Ok(l_theta.ln() / theta.ln())
}

/// The telescoping quantity `|L_{N'} + L_N − 2 L_{2N}|` with a report on the
/// size hypotheses `L_{2N} > (9/10) L_N` and `L_N > 100κ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BjDefect {
    pub defect: f64,
    pub l_n: f64,
    pub l_2n: f64,
    pub l_n_prime: f64,
    pub growth_ok: bool,
    pub size_ok: bool,
    /// `|α − p/q| < 1/q²` for the supplied `q`.
    pub q_ok: bool,
}

pub fn bj_defect(c: &Cocycle, n: u64, n_prime: u64, q: u64, kappa: f64) -> Result<BjDefect> {
    if n == 0 || !n_prime.is_multiple_of(n) {
        return Err(Error::NotMultiple {
            n: n as usize,
            n_prime: n_prime as usize,
        });
    }
    let l_n = finite_le(c, n, 0.0, DEFAULT_GRID)?.value;
    let l_2n = finite_le(c, 2 * n, 0.0, DEFAULT_GRID)?.value;
    let l_n_prime = finite_le(c, n_prime, 0.0, DEFAULT_GRID)?.value;
    let alpha = c.frequency().alpha();
    let qf = q as f64;
    let p = (alpha * qf).round();
    let q_ok = q > 0 && (alpha - p / qf).abs() < 1.0 / (qf * qf);
    Ok(BjDefect {
        defect: (l_n_prime + l_n - 2.0 * l_2n).abs(),
        l_n,
        l_2n,
        l_n_prime,
        growth_ok: l_2n > 0.9 * l_n,
        size_ok: l_n > 100.0 * kappa,
        q_ok,
    })
}
