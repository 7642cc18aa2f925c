//! Hilbert-Schmidt separability probability `P(alpha) = sum_i f(alpha + i)`.

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_arith::{gamma_half, is_half_integral, to_bigfloat, BigFloat, GammaValue};

/// Fixed ratio bound used to dominate the tail by a geometric series.
pub fn ratio_bound() -> Rational {
    Rational::from((1, 2))
}

pub const MAX_TERMS: usize = 10_000;

/// Degree-5 polynomial numerator factor of the series term, expanded form.
pub fn r_poly(alpha: &Rational) -> Rational {
    const COEFFS: [i64; 6] = [185_000, 779_750, 1_289_125, 1_042_015, 410_694, 63_000];
    COEFFS.iter().fold(Rational::new(), |acc, c| acc * alpha + *c)
}

/// Same polynomial in its nested factored form.
pub fn r_poly_nested(alpha: &Rational) -> Rational {
    let a = alpha;
    let inner = Rational::from(2) * a * (Rational::from(740) * a + 3119) + 10_313;
    let mid = Rational::from(25) * a * inner + 208_403;
    let outer = Rational::from(5) * a * mid + 410_694;
    a.clone() * outer + 63_000
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if *alpha <= 0 {
        return Err(Error::NonPositiveAlpha(alpha.to_string()));
    }
    if !is_half_integral(alpha) {
        return Err(Error::AlphaNotHalfInteger(alpha.to_string()));
    }
    Ok(())
}

/// `2^e` for an integer exponent `e`.
fn two_pow(e: &Rational) -> Rational {
    let e = e.numer().to_i64().expect("small exponent");
    let p = Integer::from(1) << e.unsigned_abs() as u32;
    if e >= 0 {
        Rational::from(p)
    } else {
        Rational::from((Integer::from(1), p))
    }
}

/// `f(alpha) = P(alpha) - P(alpha + 1)`, exact for half-integral `alpha`.
pub fn f_term(alpha: &Rational) -> Result<Rational> {
    check_alpha(alpha)?;
    let a = alpha;
    let aff = |k: i64, num: i64, den: i64| Rational::from(a * k) + Rational::from((num, den));
    let g = |x: Rational| gamma_half(&x);
    let num = GammaValue::rational(r_poly(a) * two_pow(&aff(-4, -6, 1))) * g(aff(3, 5, 2))? * g(aff(5, 2, 1))?;
    let den = GammaValue::rational(Rational::from(3)) * g(aff(1, 1, 1))? * g(aff(2, 3, 1))? * g(aff(5, 13, 2))?;
    let value = num / den;
    Ok(value.to_rational().expect("pi powers cancel for half-integral alpha"))
}

/// Polynomial with rational coefficients, constant term first.
type Poly = Vec<Rational>;

fn poly_mul_linear(p: &Poly, slope: &Rational, intercept: &Rational) -> Poly {
    let mut out = vec![Rational::new(); p.len() + 1];
    for (i, c) in p.iter().enumerate() {
        out[i] += Rational::from(c * intercept);
        out[i + 1] += Rational::from(c * slope);
    }
    out
}

fn poly_eval(p: &Poly, x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::new(), |acc, c| acc * x + c)
}

/// Coefficients of `p(x + shift)`.
fn poly_shift(p: &Poly, shift: &Rational) -> Poly {
    let mut c = p.clone();
    let n = c.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let add = Rational::from(&c[j + 1] * shift);
            c[j] += add;
        }
    }
    c
}

fn r_poly_coeffs() -> Poly {
    [63_000, 410_694, 1_042_015, 1_289_125, 779_750, 185_000].iter().map(|&c| Rational::from(c)).collect()
}

/// `(N, D)` with `f(b+1)/f(b) = N(b)/D(b)`, both positive for `b > 0`.
pub fn term_ratio_polys() -> (Vec<Rational>, Vec<Rational>) {
    let q = |n: i64, d: i64| Rational::from((n, d));
    let r = r_poly_coeffs();
    // r(b + 1)
    let mut num = poly_shift(&r, &q(1, 1));
    for c in [q(5, 2), q(7, 2), q(9, 2)] {
        num = poly_mul_linear(&num, &q(3, 1), &c);
    }
    for c in 2..=6 {
        num = poly_mul_linear(&num, &q(5, 1), &q(c, 1));
    }
    let mut den: Poly = r.iter().map(|c| Rational::from(c * 16u32)).collect();
    den = poly_mul_linear(&den, &q(1, 1), &q(1, 1));
    den = poly_mul_linear(&den, &q(2, 1), &q(3, 1));
    den = poly_mul_linear(&den, &q(2, 1), &q(4, 1));
    for c in [13, 15, 17, 19, 21] {
        den = poly_mul_linear(&den, &q(5, 1), &q(c, 2));
    }
    (num, den)
}

/// Exact term ratio `f(b+1)/f(b)` from the rational-function form.
pub fn term_ratio(b: &Rational) -> Rational {
    let (num, den) = term_ratio_polys();
    poly_eval(&num, b) / poly_eval(&den, b)
}

/// `true` when `f(b+1)/f(b) <= bound` for every `b >= from`: the polynomial
/// `bound * D - N`, re-expanded around `from`, has no negative coefficient.
pub fn ratio_certified(from: &Rational, bound: &Rational) -> bool {
    let (num, den) = term_ratio_polys();
    let len = num.len().max(den.len());
    let diff: Poly = (0..len)
        .map(|i| {
            let d = den.get(i).map(|c| Rational::from(c * bound)).unwrap_or_default();
            d - num.get(i).cloned().unwrap_or_default()
        })
        .collect();
    poly_shift(&diff, from).iter().all(|c| *c >= 0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesResult {
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub partial_sum: Rational,
    pub terms_used: usize,
    /// Upper bound on the omitted tail.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub tail_bound: Rational,
    #[serde(serialize_with = "crate::io::ser_bigfloat")]
    pub decimal: BigFloat,
}

impl SeriesResult {
    /// `true` when `value` lies in `[partial_sum, partial_sum + tail_bound]`.
    pub fn brackets(&self, value: &Rational) -> bool {
        let hi = Rational::from(&self.partial_sum + &self.tail_bound);
        self.partial_sum <= *value && *value <= hi
    }
}

/// Sums terms `f(alpha + i)` until the tail is certified below `tol`.
///
/// Once the term ratio is proven to stay below [`ratio_bound`] for every
/// later index (see [`ratio_certified`]), the tail after term `f_i` is at
/// most `f_i * rho / (1 - rho)`.
pub fn sep_prob(alpha: &Rational, tol: &Rational) -> Result<SeriesResult> {
    sep_prob_with_precision(alpha, tol, 128)
}

pub fn sep_prob_with_precision(alpha: &Rational, tol: &Rational, prec_bits: u32) -> Result<SeriesResult> {
    check_alpha(alpha)?;
    if *tol <= 0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let rho = ratio_bound();
    let geometric = &rho / (Rational::from(1) - &rho);
    let mut partial = Rational::new();
    let mut shift = alpha.clone();
    let mut term = f_term(&shift)?;
    let mut certified = false;
    for used in 1..=MAX_TERMS {
        partial += &term;
        certified = certified || ratio_certified(&shift, &rho);
        let tail_bound = Rational::from(&term * &geometric);
        if certified && tail_bound <= *tol {
            let decimal = to_bigfloat(&partial, prec_bits);
            return Ok(SeriesResult {
                alpha: alpha.clone(),
                partial_sum: partial,
                terms_used: used,
                tail_bound,
                decimal,
            });
        }
        shift += 1u32;
        term = f_term(&shift)?;
    }
    Err(Error::Certification { bound: rho.to_string(), cap: MAX_TERMS })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn polynomial_forms() {
        assert_eq!(r_poly(&q(0, 1)), 63_000);
        assert_eq!(r_poly(&q(1, 1)), 3_769_584);
        for x in [q(-1, 1), q(1, 2), q(7, 3), q(-5, 4)] {
            assert_eq!(r_poly(&x), r_poly_nested(&x));
        }
    }

    #[test]
    fn terms_positive_and_bounded() {
        assert!(f_term(&q(1, 2)).unwrap() > 0);
        let f1 = f_term(&q(1, 1)).unwrap();
        assert!(f1 > 0 && f1 < q(8, 33));
        assert!(f_term(&q(1, 3)).is_err());
        assert!(f_term(&q(0, 1)).is_err());
    }

    #[test]
    fn ratio_tends_to_limit() {
        let r = |a: i64| (f_term(&q(a + 1, 1)).unwrap() / f_term(&q(a, 1)).unwrap()).to_f64();
        assert!((r(400) - 27.0 / 64.0).abs() < 1e-2);
        assert!(r(50) < 0.5);
    }

    #[test]
    fn ratio_polynomials_match_gamma_form() {
        for b in [q(1, 2), q(1, 1), q(5, 2), q(7, 1), q(20, 1)] {
            let direct = f_term(&(b.clone() + 1u32)).unwrap() / f_term(&b).unwrap();
            assert_eq!(term_ratio(&b), direct, "b = {b}");
        }
    }

    #[test]
    fn certificate() {
        assert!(ratio_certified(&q(1, 2), &q(1, 2)));
        // ratios approach 27/64 from below
        assert!(ratio_certified(&q(100, 1), &q(27, 64)));
        assert!(!ratio_certified(&q(100, 1), &q(2, 5)));
        assert!(!ratio_certified(&q(1, 2), &q(3, 10)));
        let shifted = poly_shift(&vec![q(1, 1), q(2, 1), q(3, 1)], &q(2, 1));
        assert_eq!(shifted, vec![q(17, 1), q(14, 1), q(3, 1)]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(sep_prob(&q(1, 1), &q(0, 1)).is_err());
    }

    #[test]
    fn known_values() {
        let tol = q(1, 1_000_000_000_000);
        for (alpha, expected) in [(q(1, 2), q(29, 64)), (q(1, 1), q(8, 33)), (q(2, 1), q(26, 323))] {
            let res = sep_prob(&alpha, &tol).unwrap();
            assert!(res.tail_bound <= tol);
            assert!(res.brackets(&expected), "alpha {alpha}: {}", res.decimal);
        }
    }
}
