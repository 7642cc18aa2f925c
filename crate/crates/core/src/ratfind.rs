//! Exact rational candidates for high-precision decimal estimates.
//!
//! [`cf_candidates`] walks the continued fraction of the decimal and keeps
//! every convergent and semiconvergent below a denominator bound, which
//! contains the best approximation for that bound. [`smooth_search`]
//! instead fixes the shape of the denominator: products of a user-supplied
//! set of primes.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complete, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_arith::{decimal_places, parse_decimal};

/// Largest denominator [`smooth_search`] enumerates.
pub const SMOOTH_DENOMINATOR_CAP: u64 = 1_000_000_000_000;

/// Trial-division bound used for the stored factorizations.
pub const FACTOR_BOUND: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factorization {
    /// `(prime, exponent)`, primes ascending.
    pub factors: Vec<(u64, u32)>,
    /// Part left after removing every prime up to the bound.
    #[serde(serialize_with = "ser_integer")]
    pub cofactor: Integer,
}

fn ser_integer<S: serde::Serializer>(n: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

impl Factorization {
    /// Product of all factors and the cofactor.
    pub fn product(&self) -> Integer {
        self.factors.iter().fold(self.cofactor.clone(), |acc, &(p, e)| acc * Integer::from(p).pow(e))
    }
}

impl std::fmt::Display for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> =
            self.factors.iter().map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") }).collect();
        if self.cofactor != 1 || parts.is_empty() {
            parts.push(self.cofactor.to_string());
        }
        f.write_str(&parts.join("*"))
    }
}

/// Strips every prime `<= bound` from `|n|` by trial division.
pub fn factorize_small(n: &Integer, bound: u64) -> Result<Factorization> {
    if *n == 0 {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    let bound = bound.min(u64::from(u32::MAX));
    let mut rest = n.clone().abs();
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p <= bound && Integer::from(p) * p <= rest {
        let mut e = 0;
        while rest.is_divisible_u(p as u32) {
            rest /= p as u32;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // a remainder with no factor up to the bound is prime when at most bound^2
    if rest > 1 && Integer::from(bound) * bound >= rest {
        factors.push((rest.to_u64().expect("below bound squared"), 1));
        rest = Integer::from(1);
    }
    Ok(Factorization { factors, cofactor: rest })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ContinuedFraction,
    SmoothSearch,
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalCandidate {
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub value: Rational,
    /// `|value - input|`, exact.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub abs_error: Rational,
    pub numerator_factorization: Factorization,
    pub denominator_factorization: Factorization,
    pub method: Method,
}

impl RationalCandidate {
    fn new(value: Rational, target: &Rational, method: Method) -> Self {
        let abs_error = Rational::from(&value - target).abs();
        let numerator_factorization = if *value.numer() == 0 {
            Factorization { factors: Vec::new(), cofactor: Integer::new() }
        } else {
            factorize_small(value.numer(), FACTOR_BOUND).expect("nonzero")
        };
        let denominator_factorization = factorize_small(value.denom(), FACTOR_BOUND).expect("nonzero");
        RationalCandidate { value, abs_error, numerator_factorization, denominator_factorization, method }
    }
}

fn sort_candidates(c: &mut [RationalCandidate]) {
    c.sort_by(|x, y| x.abs_error.cmp(&y.abs_error).then_with(|| x.value.denom().cmp(y.value.denom())));
}

/// Default matching tolerance: 5 units in the last given decimal place.
pub fn default_tolerance(decimal: &str) -> Rational {
    Rational::from((5, Integer::from(10).pow(decimal_places(decimal) as u32)))
}

/// Convergents and semiconvergents of `decimal` with denominator at most
/// `max_denominator`, closest first (ties: smaller denominator first).
pub fn cf_candidates(decimal: &str, max_denominator: &Integer, max_results: usize) -> Result<Vec<RationalCandidate>> {
    if *max_denominator < 1 {
        return Err(Error::InvalidArgument(format!("max denominator {max_denominator} < 1")));
    }
    let x = parse_decimal(decimal)?;
    let mut found: Vec<Rational> = Vec::new();
    // p_{k-2}/q_{k-2} = 0/1, p_{k-1}/q_{k-1} = 1/0
    let (mut p0, mut q0) = (Integer::from(0), Integer::from(1));
    let (mut p1, mut q1) = (Integer::from(1), Integer::from(0));
    let mut rest = x.clone();
    loop {
        let a = rest.clone().floor().into_numer_denom().0;
        // semiconvergents (p0 + j p1) / (q0 + j q1), j = 1..=a, the last being the convergent
        let j_max = if q1 == 0 {
            a.clone()
        } else {
            let room = Integer::from(max_denominator - &q0) / &q1;
            room.min(a.clone())
        };
        let j_min = if q1 == 0 { a.clone() } else { Integer::from(1) };
        let mut j = j_min;
        while j <= j_max {
            let num = &p0 + (&j * &p1).complete();
            let den = &q0 + (&j * &q1).complete();
            if den >= 1 && den <= *max_denominator {
                found.push(Rational::from((num, den)));
            }
            j += 1;
        }
        if j_max < a {
            break;
        }
        let p2 = Integer::from(&a * &p1) + &p0;
        let q2 = Integer::from(&a * &q1) + &q0;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = &rest - Rational::from(a);
        if frac == 0 {
            break;
        }
        rest = frac.recip();
    }
    found.sort();
    found.dedup();
    let mut out: Vec<RationalCandidate> =
        found.into_iter().map(|v| RationalCandidate::new(v, &x, Method::ContinuedFraction)).collect();
    sort_candidates(&mut out);
    out.truncate(max_results);
    Ok(out)
}

/// The rational with the smallest denominator in the closed interval
/// `[lo, hi]` (smallest numerator magnitude among those).
pub fn simplest_in_interval(lo: &Rational, hi: &Rational) -> Result<Rational> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    if *lo <= 0 && *hi >= 0 {
        return Ok(Rational::new());
    }
    if *hi < 0 {
        return simplest_in_interval(&Rational::from(-hi), &Rational::from(-lo)).map(|r| -r);
    }
    Ok(simplest_positive(lo.clone(), hi.clone()))
}

/// Continued-fraction descent for `0 < lo <= hi`.
fn simplest_positive(lo: Rational, hi: Rational) -> Rational {
    let fl = lo.clone().floor();
    if fl == lo {
        return lo;
    }
    if fl < hi.clone().floor() {
        return fl + 1u32;
    }
    let inner = simplest_positive(Rational::from(&hi - &fl).recip(), Rational::from(&lo - &fl).recip());
    fl + inner.recip()
}

/// All products of `primes` with each exponent at most `max_exponent`, up to
/// [`SMOOTH_DENOMINATOR_CAP`], ascending.
pub fn smooth_numbers(primes: &[u64], max_exponent: u32) -> Vec<u64> {
    let mut out = vec![1u64];
    for &p in primes {
        let mut next = Vec::new();
        for &base in &out {
            let mut v = base;
            for _ in 0..=max_exponent {
                next.push(v);
                match v.checked_mul(p) {
                    Some(w) if w <= SMOOTH_DENOMINATOR_CAP => v = w,
                    _ => break,
                }
            }
        }
        out = next;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Rationals `round(x d) / d` within `tol` of `decimal`, for every smooth
/// denominator `d`. Equal values found through several denominators are
/// reported once.
pub fn smooth_search(
    decimal: &str,
    primes: &[u64],
    max_exponent: u32,
    tol: &Rational,
) -> Result<Vec<RationalCandidate>> {
    if primes.is_empty() {
        return Err(Error::InvalidArgument("empty prime set".into()));
    }
    if let Some(p) = primes.iter().find(|&&p| p < 2) {
        return Err(Error::InvalidArgument(format!("{p} is not a prime")));
    }
    if *tol < 0 {
        return Err(Error::InvalidArgument(format!("negative tolerance {tol}")));
    }
    let x = parse_decimal(decimal)?;
    let dens = smooth_numbers(primes, max_exponent);
    let mut hits: Vec<Rational> = dens
        .par_iter()
        .filter_map(|&d| {
            let num = Rational::from(&x * d).round().into_numer_denom().0;
            let v = Rational::from((num, Integer::from(d)));
            (Rational::from(&v - &x).abs() <= *tol).then_some(v)
        })
        .collect();
    hits.sort();
    hits.dedup();
    let mut out: Vec<RationalCandidate> =
        hits.into_iter().map(|v| RationalCandidate::new(v, &x, Method::SmoothSearch)).collect();
    sort_candidates(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn factorizations() {
        let f = factorize_small(&Integer::from(266_104), 1000).unwrap();
        assert_eq!(f.factors, vec![(2, 3), (29, 1), (31, 1), (37, 1)]);
        assert_eq!(f.cofactor, 1);
        assert_eq!(factorize_small(&Integer::from(3876), 100).unwrap().factors, vec![(2, 2), (3, 1), (17, 1), (19, 1)]);
        assert!(factorize_small(&Integer::from(1), 10).unwrap().factors.is_empty());
        assert!(factorize_small(&Integer::new(), 10).is_err());
        // 3463 is prime and above the bound; 3463^2 is not below 10^2 squared
        let f = factorize_small(&Integer::from(5 * 49 * 17 * 3463), 20).unwrap();
        assert_eq!(f.factors, vec![(5, 1), (7, 2), (17, 1)]);
        assert_eq!(f.cofactor, 3463);
        assert_eq!(f.product(), 14_423_395);
        assert_eq!(f.to_string(), "5*7^2*17*3463");
    }

    #[test]
    fn continued_fraction_examples() {
        let c = cf_candidates("0.242424242424", &Integer::from(100), 5).unwrap();
        assert_eq!(c[0].value, q(8, 33));
        let c = cf_candidates("218.3823524", &Integer::from(1000), 5).unwrap();
        assert_eq!(c[0].value, q(7425, 34));
        let c = cf_candidates("111.5362318840579", &Integer::from(1000), 5).unwrap();
        assert_eq!(c[0].value, q(7696, 69));
        assert!(c.windows(2).all(|w| w[0].abs_error <= w[1].abs_error));
    }

    #[test]
    fn exact_input_is_its_own_best() {
        let c = cf_candidates("0.375", &Integer::from(10), 3).unwrap();
        assert_eq!(c[0].value, q(3, 8));
        assert_eq!(c[0].abs_error, 0);
        assert!(cf_candidates("0.5", &Integer::new(), 3).is_err());
        assert!(cf_candidates("x", &Integer::from(3), 3).is_err());
    }

    #[test]
    fn smooth_examples() {
        let c = smooth_search("0.0804954", &[17, 19], 2, &q(1, 1_000_000)).unwrap();
        assert!(c.iter().any(|c| c.value == q(26, 323)));
        let c = smooth_search("54.202097676095", &[2, 29, 31, 37], 3, &default_tolerance("54.202097676095")).unwrap();
        assert!(c.iter().any(|c| c.value == q(14_423_395, 266_104)));
        let c = smooth_search("0.3", &[2, 5], 3, &q(0, 1)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].value, q(3, 10));
        assert!(smooth_search("0.3", &[], 3, &q(0, 1)).is_err());
    }

    #[test]
    fn simplest_rationals() {
        assert_eq!(simplest_in_interval(&q(24, 100), &q(25, 100)).unwrap(), q(1, 4));
        assert_eq!(simplest_in_interval(&q(3, 10), &q(4, 10)).unwrap(), q(1, 3));
        assert_eq!(simplest_in_interval(&q(-1, 2), &q(3, 1)).unwrap(), q(0, 1));
        assert_eq!(simplest_in_interval(&q(-7, 10), &q(-6, 10)).unwrap(), q(-2, 3));
        assert_eq!(simplest_in_interval(&q(5, 2), &q(5, 2)).unwrap(), q(5, 2));
        let eight_33 = q(8, 33);
        let lo = &eight_33 - q(1, 1_000_000_000_000);
        assert_eq!(simplest_in_interval(&lo, &eight_33).unwrap(), eight_33);
        assert!(simplest_in_interval(&q(1, 1), &q(0, 1)).is_err());
    }

    #[test]
    fn smooth_numbers_enumerated() {
        assert_eq!(smooth_numbers(&[2, 3], 2), vec![1, 2, 3, 4, 6, 9, 12, 18, 36]);
        let big = smooth_numbers(&[2], 80);
        assert_eq!(*big.last().unwrap(), 1 << 39);
    }

    #[test]
    fn default_tolerance_tracks_places() {
        assert_eq!(default_tolerance("218.3823524"), q(5, 10_000_000));
        assert_eq!(default_tolerance("390"), q(5, 1));
    }
}
