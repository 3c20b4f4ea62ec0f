//! Continued fractions, convergents and frequency bookkeeping.
//!
//! Expansions run in exact rational arithmetic over a high-precision value of
//! the frequency, so convergent denominators are exact integers no matter how
//! large they grow. The same value feeds a double-double representation of α
//! used to place orbit points `x + kα` without accumulated rounding.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Number of terms used to pin down the value of a named quadratic irrational.
const NAMED_VALUE_TERMS: usize = 400;

/// An irrational (or flagged rational) rotation frequency with its
/// continued-fraction data.
#[derive(Clone, Debug)]
pub struct Frequency {
    value: BigRational,
    alpha_hi: f64,
    alpha_lo: f64,
    /// `a_0, a_1, …`; `a_0 = 0` for values in (0, 1).
    partial_quotients: Vec<BigInt>,
    /// `(p_n, q_n)` for `n = 0 .. depth`.
    convergents: Vec<(BigInt, BigInt)>,
    rational: bool,
    label: String,
}

/// Serializable description of a frequency, as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrequencySpec {
    Golden {
        #[serde(default)]
        depth: Option<usize>,
    },
    Sqrt2m1 {
        #[serde(default)]
        depth: Option<usize>,
    },
    Decimal {
        value: String,
        #[serde(default)]
        depth: Option<usize>,
    },
}

impl FrequencySpec {
    pub const DEFAULT_DEPTH: usize = 64;

    pub fn build(&self) -> Result<Frequency> {
        match self {
            FrequencySpec::Golden { depth } => {
                Ok(Frequency::golden(depth.unwrap_or(Self::DEFAULT_DEPTH)))
            }
            FrequencySpec::Sqrt2m1 { depth } => Ok(Frequency::sqrt2_minus_1(
                depth.unwrap_or(Self::DEFAULT_DEPTH),
            )),
            FrequencySpec::Decimal { value, depth } => {
                Frequency::from_decimal(value, depth.unwrap_or(Self::DEFAULT_DEPTH))
            }
        }
    }
}

impl Frequency {
    /// The golden mean `(√5 − 1)/2 = [0; 1, 1, 1, …]`.
    pub fn golden(depth: usize) -> Frequency {
        Self::periodic_tail(1, depth, "golden")
    }

    /// `√2 − 1 = [0; 2, 2, 2, …]`.
    pub fn sqrt2_minus_1(depth: usize) -> Frequency {
        Self::periodic_tail(2, depth, "sqrt2m1")
    }

    fn periodic_tail(a: u32, depth: usize, label: &str) -> Frequency {
        let depth = depth.max(1);
        let quotient = |n: usize| {
            if n == 0 {
                BigInt::zero()
            } else {
                BigInt::from(a)
            }
        };
        let all: Vec<BigInt> = (0..NAMED_VALUE_TERMS.max(depth + 1))
            .map(quotient)
            .collect();
        let full = convergents_of(&all);
        let (p, q) = full.last().unwrap().clone();
        let value = BigRational::new(p, q);
        let (alpha_hi, alpha_lo) = split_double_double(&value);
        Frequency {
            value,
            alpha_hi,
            alpha_lo,
            partial_quotients: all[..depth].to_vec(),
            convergents: full[..depth].to_vec(),
            rational: false,
            label: label.to_string(),
        }
    }

    /// Exact expansion of a decimal string such as `"0.7548776662"`.
    pub fn from_decimal(text: &str, depth: usize) -> Result<Frequency> {
        let value = parse_decimal(text)?;
        Self::from_rational(value, depth, text.to_string())
    }

    /// Expansion of an exact rational value in (0, 1).
    pub fn from_rational(value: BigRational, depth: usize, label: String) -> Result<Frequency> {
        if value <= BigRational::zero() || value >= BigRational::one() {
            return Err(Error::InvalidInput(format!(
                "frequency {label} must lie in (0, 1)"
            )));
        }
        let depth = depth.max(1);
        let mut quotients = Vec::with_capacity(depth);
        let mut rest = value.clone();
        let mut rational = false;
        while quotients.len() < depth {
            let a = rest.floor().to_integer();
            quotients.push(a.clone());
            let frac = &rest - BigRational::from_integer(a);
            if frac.is_zero() {
                rational = true;
                break;
            }
            rest = frac.recip();
        }
        let convergents = convergents_of(&quotients);
        let (alpha_hi, alpha_lo) = split_double_double(&value);
        Ok(Frequency {
            value,
            alpha_hi,
            alpha_lo,
            partial_quotients: quotients,
            convergents,
            rational,
            label,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// α rounded to double precision.
    pub fn alpha(&self) -> f64 {
        self.alpha_hi
    }

    /// Double-double representation `(hi, lo)` with `α ≈ hi + lo`.
    pub fn alpha_dd(&self) -> (f64, f64) {
        (self.alpha_hi, self.alpha_lo)
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    /// True when the expansion terminated before the requested depth.
    pub fn is_rational(&self) -> bool {
        self.rational
    }

    /// Number of computed convergents.
    pub fn depth(&self) -> usize {
        self.convergents.len()
    }

    pub fn partial_quotients(&self) -> &[BigInt] {
        &self.partial_quotients
    }

    pub fn convergents(&self) -> &[(BigInt, BigInt)] {
        &self.convergents
    }

    pub fn q(&self, n: usize) -> &BigInt {
        &self.convergents[n].1
    }

    pub fn p(&self, n: usize) -> &BigInt {
        &self.convergents[n].0
    }

    /// Denominators that fit in a `u64`, in order.
    pub fn denominators_u64(&self) -> Vec<u64> {
        self.convergents
            .iter()
            .map_while(|(_, q)| q.to_u64())
            .collect()
    }

    /// Fractional part of `x0 + k·α`, evaluated in double-double arithmetic so
    /// that orbit points stay accurate for `k` up to 2⁵³.
    pub fn phase(&self, x0: f64, k: u64) -> f64 {
        let kf = k as f64;
        let (ph, pl) = two_prod(kf, self.alpha_hi);
        let pl = pl + kf * self.alpha_lo;
        let ph = ph - ph.floor();
        let (s, e) = two_sum(ph, x0);
        let s = s - s.floor();
        let r = s + (e + pl);
        r - r.floor()
    }

    /// Fractional part of `x0 + k·α` for signed `k`.
    pub fn phase_signed(&self, x0: f64, k: i64) -> f64 {
        if k >= 0 {
            self.phase(x0, k as u64)
        } else {
            let r = self.phase(-x0, k.unsigned_abs());
            let v = 1.0 - r;
            if v >= 1.0 {
                0.0
            } else {
                v
            }
        }
    }

    /// Evaluate the continued fraction `[a_0; a_1, …, a_{n}]` exactly.
    pub fn reconstruct(&self, n: usize) -> BigRational {
        let (p, q) = &self.convergents[n.min(self.depth() - 1)];
        BigRational::new(p.clone(), q.clone())
    }

    /// `|value − p_n/q_n|` as an exact rational.
    pub fn approximation_error(&self, n: usize) -> BigRational {
        (&self.value - self.reconstruct(n)).abs()
    }
}

/// Continued-fraction expansion of a double. The double is an exact dyadic
/// rational, so long expansions terminate and are flagged rational.
pub fn cf_expand(x: f64, depth: usize) -> Result<Frequency> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{x}")));
    }
    let value = BigRational::from_float(x).ok_or_else(|| Error::NonFinite(format!("{x}")))?;
    Frequency::from_rational(value, depth, format!("{x}"))
}

/// Upper-envelope sample `max_{n ∈ window} ln(q_{n+1}) / q_n`.
///
/// This is a finite-depth surrogate of `limsup ln(q_{n+1}) / q_n`; it says
/// nothing about the limit beyond the computed terms.
pub fn beta_upper(f: &Frequency, window: std::ops::RangeInclusive<usize>) -> Result<f64> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo > hi || hi + 1 >= f.depth() {
        return Err(Error::InsufficientDepth(format!(
            "window {lo}..={hi} needs {} convergents, have {}{}",
            hi + 2,
            f.depth(),
            if f.is_rational() {
                " (expansion terminated)"
            } else {
                ""
            }
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for n in lo..=hi {
        let ratio = ln_big(f.q(n + 1)) / big_to_f64(f.q(n));
        best = best.max(ratio);
    }
    Ok(best)
}

/// Largest computed denominator `q_n ≤ target`, with its index. Falls back to
/// `q_0 = 1`.
pub fn select_scale(f: &Frequency, target: u64) -> (u64, usize) {
    let mut best = (1u64, 0usize);
    for (n, (_, q)) in f.convergents().iter().enumerate() {
        match q.to_u64() {
            Some(q) if q <= target => {
                if q >= best.0 {
                    best = (q, n);
                }
            }
            _ => break,
        }
    }
    best
}

fn convergents_of(quotients: &[BigInt]) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (quotients[0].clone(), BigInt::one());
    out.push((p.clone(), q.clone()));
    for a in &quotients[1..] {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        out.push((p.clone(), q.clone()));
    }
    out
}

fn parse_decimal(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("cannot parse decimal frequency {text:?}"));
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    Ok(BigRational::new(numer, denom))
}

fn split_double_double(value: &BigRational) -> (f64, f64) {
    let hi = ratio_to_f64(value);
    let hi_exact = BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
    let lo = ratio_to_f64(&(value - hi_exact));
    (hi, lo)
}

/// Correctly scaled conversion of a rational to `f64`.
pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    // Shift so the quotient carries ~64 significant bits before rounding.
    let n = r.numer();
    let d = r.denom();
    let shift = d.bits() as i64 - n.bits() as i64 + 64;
    let (num, den) = if shift >= 0 {
        (n << (shift as u64), d.clone())
    } else {
        (n.clone(), d << ((-shift) as u64))
    };
    let q = num.div_floor(&den);
    let qf = q.to_f64().unwrap_or(f64::NAN);
    qf * 2f64.powi(-(shift as i32))
}

pub(crate) fn big_to_f64(b: &BigInt) -> f64 {
    b.to_f64().unwrap_or(f64::INFINITY)
}

fn ln_big(b: &BigInt) -> f64 {
    let bits = b.bits();
    if bits < 1000 {
        return big_to_f64(b).ln();
    }
    let shift = bits - 60;
    let top: BigInt = b >> shift;
    big_to_f64(&top).ln() + shift as f64 * std::f64::consts::LN_2
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qs(f: &Frequency) -> Vec<u64> {
        f.denominators_u64()
    }

    #[test]
    fn golden_fibonacci_denominators() {
        let f = cf_expand((5f64.sqrt() - 1.0) / 2.0, 6).unwrap();
        assert_eq!(qs(&f), vec![1, 1, 2, 3, 5, 8]);
        assert!(f.partial_quotients()[1..]
            .iter()
            .all(|a| *a == BigInt::one()));
        assert!(!f.is_rational());
    }

    #[test]
    fn sqrt2_pell_denominators() {
        let f = cf_expand(2f64.sqrt() - 1.0, 5).unwrap();
        assert_eq!(qs(&f), vec![1, 2, 5, 12, 29]);
        assert!(f.partial_quotients()[1..]
            .iter()
            .all(|a| *a == BigInt::from(2)));
    }

    #[test]
    fn half_is_flagged_rational() {
        let f = cf_expand(0.5, 10).unwrap();
        assert!(f.is_rational());
        assert_eq!(qs(&f), vec![1, 2]);
        assert_eq!(f.partial_quotients(), &[BigInt::zero(), BigInt::from(2)]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(cf_expand(f64::NAN, 3), Err(Error::NonFinite(_))));
        assert!(matches!(
            cf_expand(f64::INFINITY, 3),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn beta_envelope_golden() {
        let f = Frequency::golden(40);
        let b = beta_upper(&f, 3..=10).unwrap();
        assert!((b - 5f64.ln() / 3.0).abs() < 1e-15);
        assert!(beta_upper(&f, 15..=25).unwrap() < 0.01);
        let r = cf_expand(0.5, 10).unwrap();
        assert!(matches!(
            beta_upper(&r, 0..=3),
            Err(Error::InsufficientDepth(_))
        ));
    }

    #[test]
    fn scale_selection() {
        let g = Frequency::golden(40);
        assert_eq!(select_scale(&g, 35).0, 34);
        assert_eq!(select_scale(&g, 1).0, 1);
        let s = Frequency::sqrt2_minus_1(40);
        assert_eq!(select_scale(&s, 12), (12, 3));
    }

    #[test]
    fn named_values_match_doubles() {
        let g = Frequency::golden(10);
        assert!((g.alpha() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        let (hi, lo) = g.alpha_dd();
        assert!(lo.abs() < 1e-16 && lo != 0.0);
        assert_eq!(hi, g.alpha());
    }

    #[test]
    fn phase_is_accurate_far_along_orbit() {
        let g = Frequency::golden(10);
        // k α mod 1 for k = F_40 is within 1/F_40 of an integer.
        let k = 102_334_155u64;
        let ph = g.phase(0.0, k);
        let dist = ph.min(1.0 - ph);
        assert!(dist < 1.0 / k as f64);
        // Compare with an exact rational evaluation.
        let exact = BigRational::from_integer(BigInt::from(k)) * g.value();
        let frac = &exact - BigRational::from_integer(exact.floor().to_integer());
        assert!((ratio_to_f64(&frac) - ph).abs() < 1e-15);
    }

    #[test]
    fn decimal_parsing() {
        let f = Frequency::from_decimal("0.25", 10).unwrap();
        assert!(f.is_rational());
        assert_eq!(qs(&f), vec![1, 4]);
        assert!(Frequency::from_decimal("1.5", 10).is_err());
        assert!(Frequency::from_decimal("abc", 10).is_err());
        let f = Frequency::from_decimal("0.7548776662", 8).unwrap();
        assert!(!f.is_rational());
        assert_eq!(f.depth(), 8);
    }
}
