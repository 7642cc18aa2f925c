//! Exact arithmetic substrate.
//!
//! Rationals and big integers come from GMP via `rug`; big floats from MPFR,
//! whose conversions are correctly rounded at the requested precision. On top
//! of that this module provides rising factorials, Gamma at integer and
//! half-integer arguments kept as `rational * pi^(k/2)`, and exact summation of
//! terminating hypergeometric series.

use std::fmt;
use std::ops::{Div, Mul};

use rug::ops::Pow;
use rug::Complete;
pub use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Arbitrary precision binary float (MPFR).
pub type BigFloat = rug::Float;

/// Correctly rounded (to nearest) conversion of an exact rational.
pub fn to_bigfloat(value: &Rational, prec_bits: u32) -> BigFloat {
    BigFloat::with_val(prec_bits, value)
}

/// Rising factorial `x (x+1) ... (x+n-1)`; 1 for `n = 0`.
pub fn pochhammer(x: &Rational, n: u32) -> Rational {
    if n == 0 {
        return Rational::from(1);
    }
    let (p, q) = (x.numer(), x.denom());
    let mut num = Integer::from(1);
    let mut factor = p.clone();
    for _ in 0..n {
        num *= &factor;
        if num.is_zero() {
            return Rational::new();
        }
        factor += q;
    }
    let den = q.clone().pow(n);
    Rational::from((num, den))
}

/// `true` when `2 x` is an integer.
pub fn is_half_integral(x: &Rational) -> bool {
    let d = x.denom();
    *d == 1 || *d == 2
}

/// Parses `"3"`, `"-1/16"`, or a plain decimal such as `"0.25"` / `"1e-3"`
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse(s.to_string()));
    }
    if s.contains('/') {
        return Rational::parse(s).map(|r| r.complete()).map_err(|_| Error::Parse(s.to_string()));
    }
    parse_decimal(s)
}

/// Exact value of a decimal literal (optional sign, fraction and exponent).
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(s.to_string());
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(Integer::from_str_radix(&all_digits, 10).map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Integer::from(10).pow(scale.unsigned_abs());
    if scale >= 0 {
        value *= ten;
    } else {
        value /= ten;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Number of digits after the decimal point in a decimal literal (ignoring
/// any exponent), i.e. the trusted places of a reported estimate.
pub fn decimal_places(s: &str) -> usize {
    let mantissa = s.trim().split(['e', 'E']).next().unwrap_or("");
    mantissa.split_once('.').map_or(0, |(_, f)| f.len())
}

/// `coefficient * pi^(pi_half_power / 2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaValue {
    pub coefficient: Rational,
    pub pi_half_power: i32,
}

impl GammaValue {
    pub fn rational(value: Rational) -> Self {
        GammaValue { coefficient: value, pi_half_power: 0 }
    }

    /// The exact rational value, when no power of pi survives.
    pub fn to_rational(&self) -> Option<Rational> {
        (self.pi_half_power == 0).then(|| self.coefficient.clone())
    }

    pub fn to_bigfloat(&self, prec_bits: u32) -> BigFloat {
        let pi = BigFloat::with_val(prec_bits, rug::float::Constant::Pi);
        let sqrt_pi = pi.sqrt();
        let scale = sqrt_pi.pow(self.pi_half_power);
        to_bigfloat(&self.coefficient, prec_bits) * scale
    }

    pub fn pow(&self, e: u32) -> Self {
        GammaValue { coefficient: self.coefficient.clone().pow(e), pi_half_power: self.pi_half_power * e as i32 }
    }
}

impl Mul for &GammaValue {
    type Output = GammaValue;
    fn mul(self, rhs: &GammaValue) -> GammaValue {
        GammaValue {
            coefficient: (&self.coefficient * &rhs.coefficient).complete(),
            pi_half_power: self.pi_half_power + rhs.pi_half_power,
        }
    }
}

impl Mul for GammaValue {
    type Output = GammaValue;
    fn mul(self, rhs: GammaValue) -> GammaValue {
        &self * &rhs
    }
}

impl Div for &GammaValue {
    type Output = GammaValue;
    fn div(self, rhs: &GammaValue) -> GammaValue {
        GammaValue {
            coefficient: (&self.coefficient / &rhs.coefficient).complete(),
            pi_half_power: self.pi_half_power - rhs.pi_half_power,
        }
    }
}

impl Div for GammaValue {
    type Output = GammaValue;
    fn div(self, rhs: GammaValue) -> GammaValue {
        &self / &rhs
    }
}

impl fmt::Display for GammaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pi_half_power {
            0 => write!(f, "{}", self.coefficient),
            p => write!(f, "{} * pi^({}/2)", self.coefficient, p),
        }
    }
}

/// Gamma at a positive integer or half-integer, exactly.
pub fn gamma_half(x: &Rational) -> Result<GammaValue> {
    let bad = || Error::GammaArgument(x.to_string());
    if *x <= 0 || !is_half_integral(x) {
        return Err(bad());
    }
    if *x.denom() == 1 {
        let m = x.numer().to_u32().ok_or_else(bad)?;
        let fact = Integer::factorial(m - 1).complete();
        return Ok(GammaValue::rational(Rational::from(fact)));
    }
    // x = m + 1/2
    let m = (x.numer().clone() - 1u32) / 2u32;
    let m = m.to_u32().ok_or_else(bad)?;
    let num = Integer::factorial(2 * m).complete();
    let den = Integer::from(4u32).pow(m) * Integer::factorial(m).complete();
    Ok(GammaValue { coefficient: Rational::from((num, den)), pi_half_power: 1 })
}

/// If `x` is an integer `<= 0`, returns `-x`.
fn nonpositive_integer(x: &Rational) -> Option<usize> {
    if *x.denom() == 1 && *x <= 0 {
        (-x.numer().clone()).to_usize()
    } else {
        None
    }
}

/// Exact value of `pFq(upper; lower; 1)` truncated where it terminates.
///
/// The last term index is `m` for the smallest nonpositive-integer upper
/// parameter `-m`, further capped at `max_terms - 1` when a cap is given.
/// A zero upper parameter therefore yields exactly 1 whatever the lower
/// parameters are. A lower parameter `-m` is only an error when the
/// truncated range reaches past term `m`.
pub fn hyp_terminating(upper: &[Rational], lower: &[Rational], max_terms: Option<usize>) -> Result<Rational> {
    let natural = upper.iter().filter_map(nonpositive_integer).min();
    let last = match (natural, max_terms) {
        (Some(m), Some(cap)) => m.min(cap.saturating_sub(1)),
        (Some(m), None) => m,
        (None, Some(cap)) => cap.saturating_sub(1),
        (None, None) => return Err(Error::NonTerminating),
    };
    if max_terms == Some(0) {
        return Ok(Rational::new());
    }
    for b in lower {
        if let Some(m) = nonpositive_integer(b) {
            if last > m {
                return Err(Error::HypergeometricPole { param: b.to_string(), index: m + 1 });
            }
        }
    }

    // Horner from the innermost term: S_k = 1 + r_k S_{k+1}, with r_k the
    // ratio of term k+1 to term k. Kept as an unreduced integer fraction.
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for k in (0..last).rev() {
        let kk = Rational::from(k as u64);
        let mut ratio = Rational::from(1);
        for a in upper {
            ratio *= (a + &kk).complete();
        }
        for b in lower {
            ratio /= (b + &kk).complete();
        }
        ratio /= k as u64 + 1;
        let (rn, rd) = ratio.into_numer_denom();
        num = &den * &rd + rn * num;
        den *= rd;
    }
    Ok(Rational::from((num, den)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(&q(7, 3), 0), 1);
        assert_eq!(pochhammer(&q(1, 2), 3), q(15, 8));
        assert_eq!(pochhammer(&q(17, 2), 2), q(323, 4));
        assert_eq!(pochhammer(&q(-2, 1), 5), 0);
        assert_eq!(pochhammer(&q(1, 1), 6), 720);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half(&q(4, 1)).unwrap(), GammaValue::rational(q(6, 1)));
        assert_eq!(gamma_half(&q(9, 2)).unwrap(), GammaValue { coefficient: q(105, 16), pi_half_power: 1 });
        assert_eq!(gamma_half(&q(1, 2)).unwrap(), GammaValue { coefficient: q(1, 1), pi_half_power: 1 });
        assert!(gamma_half(&q(0, 1)).is_err());
        assert!(gamma_half(&q(-1, 2)).is_err());
        assert!(gamma_half(&q(1, 3)).is_err());
    }

    #[test]
    fn gamma_recurrence() {
        for twice in 1..40 {
            let x = q(twice, 2);
            let lhs = gamma_half(&(x.clone() + 1u32)).unwrap();
            let rhs = &GammaValue::rational(x.clone()) * &gamma_half(&x).unwrap();
            assert_eq!(lhs, rhs, "x = {x}");
        }
    }

    #[test]
    fn gamma_float_value() {
        let g = gamma_half(&q(9, 2)).unwrap().to_bigfloat(128);
        assert!((g.to_f64() - 11.631_728_396_567_448).abs() < 1e-12);
    }

    #[test]
    fn hyp_zero_upper_is_one() {
        // Lower parameter 0 would be a pole at k = 1, but the series stops at k = 0.
        let v = hyp_terminating(&[q(0, 1), q(3, 1)], &[q(0, 1)], None).unwrap();
        assert_eq!(v, 1);
    }

    #[test]
    fn hyp_chu_vandermonde() {
        // 2F1(-n, b; c; 1) = (c-b)_n / (c)_n
        for n in 0..12u32 {
            let b = q(5, 3);
            let c = q(7, 2);
            let lhs = hyp_terminating(&[q(-(n as i64), 1), b.clone()], std::slice::from_ref(&c), None).unwrap();
            let rhs = pochhammer(&(c.clone() - &b), n) / pochhammer(&c, n);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn hyp_term_by_term() {
        // two terms: 1 + a1 a2 / b1
        let v = hyp_terminating(&[q(-1, 1), q(3, 2)], &[q(5, 4)], None).unwrap();
        assert_eq!(v, Rational::from(1) + q(-1, 1) * q(3, 2) / q(5, 4));
    }

    #[test]
    fn hyp_pole_inside_range() {
        let err = hyp_terminating(&[q(-3, 1)], &[q(-1, 1)], None).unwrap_err();
        assert!(matches!(err, Error::HypergeometricPole { index: 2, .. }));
        assert!(hyp_terminating(&[q(-1, 1)], &[q(-1, 1)], None).is_ok());
    }

    #[test]
    fn hyp_needs_cap_when_not_terminating() {
        assert!(matches!(hyp_terminating(&[q(1, 2)], &[q(3, 2)], None), Err(Error::NonTerminating)));
        // sum_k (1)_k/(k! ) * ... with cap: 1F0(1;;1) partial sums are k+1
        assert_eq!(hyp_terminating(&[q(1, 1)], &[], Some(5)).unwrap(), 5);
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1/16").unwrap(), q(-1, 16));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), 250);
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
        assert_eq!(decimal_places("218.3823524"), 7);
        assert_eq!(decimal_places("42"), 0);
    }

    #[test]
    fn bigfloat_is_correctly_rounded() {
        let third = q(1, 3);
        let f = to_bigfloat(&third, 64);
        let wider = to_bigfloat(&third, 200);
        let diff = (f - &wider).abs();
        // half an ulp at 64 bits for a value in [1/4, 1/2)
        assert!(diff <= BigFloat::with_val(200, 1) >> 66u32);
    }
}
