//! Density reconstruction from power moments on a finite interval.
//!
//! The support `[a, b]` is mapped affinely onto `u in [-1, 1]` and the density
//! is expanded as
//!
//! ```text
//! p(x) = sum_k (2k+1)/(b-a) * lambda_k * P_k(u(x)),   lambda_k = E[P_k(u(X))]
//! ```
//!
//! The `lambda_k` are computed exactly. Turning power moments into Legendre
//! moments cancels exponentially many digits, so nothing is rounded until a
//! finished series is evaluated.

use rayon::prelude::*;
use rug::ops::{CompleteRound, Pow};
use rug::{Complete, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_arith::{to_bigfloat, BigFloat};
use crate::moments::MomentTable;

/// Row length above which the recurrence sweeps a row in parallel.
const PAR_ROW: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportInterval {
    a: Rational,
    b: Rational,
}

impl SupportInterval {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidInterval(format!("[{a}, {b}] is empty")));
        }
        Ok(SupportInterval { a, b })
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn width(&self) -> Rational {
        (&self.b - &self.a).complete()
    }

    /// `2 / (b - a)`
    pub fn scale(&self) -> Rational {
        Rational::from(2) / self.width()
    }

    /// `-(a + b) / (b - a)`
    pub fn offset(&self) -> Rational {
        -(&self.a + &self.b).complete() / self.width()
    }

    /// Image of `x` in `[-1, 1]`.
    pub fn to_unit(&self, x: &Rational) -> Rational {
        self.scale() * x + self.offset()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.a <= *x && *x <= self.b
    }

    pub fn check(&self, x: &Rational) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfSupport { x: x.to_string(), a: self.a.to_string(), b: self.b.to_string() })
        }
    }
}

/// Exact Legendre moments `lambda_0..=lambda_N` on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct LegendreSeries {
    pub interval: SupportInterval,
    pub lambda: Vec<Rational>,
}

impl LegendreSeries {
    /// Highest Legendre degree `N`.
    pub fn order(&self) -> usize {
        self.lambda.len() - 1
    }

    /// The series keeping degrees `0..=n` only.
    pub fn truncated(&self, n: usize) -> LegendreSeries {
        LegendreSeries { interval: self.interval.clone(), lambda: self.lambda[..=n.min(self.order())].to_vec() }
    }
}

pub fn legendre_coeffs(moments: &MomentTable, n: usize) -> Result<LegendreSeries> {
    legendre_coeffs_from_moments(&moments.family.support(), &moments.values, n)
}

/// Legendre moments from power moments `mu_j = E[X^j]`, `j = 0..=n`.
///
/// Works on the mixed moments `m_{k,i} = E[X^i P_k(u(X))]`, which obey
///
/// ```text
/// (k+1) m_{k+1,i} = (2k+1) (s m_{k,i+1} + t m_{k,i}) - k m_{k-1,i}
/// ```
///
/// with `u = s x + t`. With `s = s'/c`, `t = t'/c` and the common moment
/// denominator `D`, the scaled values `M_{k,i} = D c^k k! m_{k,i}` are
/// integers and the update only multiplies by small integers:
///
/// ```text
/// M_{k+1,i} = (2k+1) (s' M_{k,i+1} + t' M_{k,i}) - c^2 k^2 M_{k-1,i}
/// ```
///
/// and `lambda_k = m_{k,0}`.
pub fn legendre_coeffs_from_moments(
    interval: &SupportInterval,
    moments: &[Rational],
    n: usize,
) -> Result<LegendreSeries> {
    if moments.len() <= n {
        return Err(Error::InsufficientMoments { requested: n, available: moments.len().saturating_sub(1) });
    }
    let s = interval.scale();
    let t = interval.offset();
    let c = s.denom().clone().lcm(t.denom());
    let s_int = (s * &c).into_numer_denom().0;
    let t_int = (t * &c).into_numer_denom().0;
    let c_sq = c.clone().square();

    let common = moments[..=n].iter().fold(Integer::from(1), |acc, m| acc.lcm(m.denom()));
    let mut cur: Vec<Integer> = moments[..=n].iter().map(|m| (m * &common).complete().into_numer_denom().0).collect();
    let mut prev: Vec<Integer> = Vec::new();
    let mut scale = common;

    let mut lambda = Vec::with_capacity(n + 1);
    lambda.push(Rational::from((cur[0].clone(), scale.clone())));
    for k in 0..n {
        let step = |i: usize| {
            let mut v = (&s_int * &cur[i + 1]).complete();
            v += &t_int * &cur[i];
            v *= 2 * k as u64 + 1;
            if k > 0 {
                let kk = (k as u64) * (k as u64);
                v -= (&c_sq * &prev[i]).complete() * kk;
            }
            v
        };
        let len = n - k;
        let next: Vec<Integer> =
            if len >= PAR_ROW { (0..len).into_par_iter().map(step).collect() } else { (0..len).map(step).collect() };
        scale *= &c;
        scale *= k as u64 + 1;
        lambda.push(Rational::from((next[0].clone(), scale.clone())));
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(LegendreSeries { interval: interval.clone(), lambda })
}

/// Power-basis coefficients of `P_0..=P_n`, built from the polynomial
/// recurrence.
pub fn legendre_polynomials(n: usize) -> Vec<Vec<Rational>> {
    let mut polys: Vec<Vec<Rational>> = vec![vec![Rational::from(1)]];
    if n >= 1 {
        polys.push(vec![Rational::new(), Rational::from(1)]);
    }
    for k in 1..n {
        let mut next = vec![Rational::new(); k + 2];
        for (j, c) in polys[k].iter().enumerate() {
            next[j + 1] += Rational::from(2 * k as u64 + 1) * c;
        }
        for (j, c) in polys[k - 1].iter().enumerate() {
            next[j] -= Rational::from(k as u64) * c;
        }
        for c in next.iter_mut() {
            *c /= k as u64 + 1;
        }
        polys.push(next);
    }
    polys
}

/// Power moments `E[X^j]`, `j = 0..=series.order()`, implied by a series;
/// obtained by expanding every `P_k` back to powers of `u`. Inverse of
/// [`legendre_coeffs_from_moments`].
pub fn power_moments_from_series(series: &LegendreSeries) -> Vec<Rational> {
    let n = series.order();
    let polys = legendre_polynomials(n);
    // w_i = sum_k (2k+1)/2 lambda_k int_{-1}^{1} u^i P_k(u) du
    let w: Vec<Rational> = (0..=n)
        .map(|i| {
            let mut acc = Rational::new();
            for (k, poly) in polys.iter().enumerate() {
                let mut integral = Rational::new();
                for (l, c) in poly.iter().enumerate() {
                    if (i + l) % 2 == 0 {
                        integral += Rational::from((2, (i + l + 1) as u64)) * c;
                    }
                }
                acc += Rational::from((2 * k as u64 + 1, 2u64)) * &series.lambda[k] * integral;
            }
            acc
        })
        .collect();
    let s = series.interval.scale();
    let t = series.interval.offset();
    let neg_t = (-&t).complete();
    (0..=n)
        .map(|j| {
            // x^j = s^-j (u - t)^j
            let mut acc = Rational::new();
            for (i, wi) in w.iter().enumerate().take(j + 1) {
                let binom = Integer::from(Integer::binomial_u(j as u32, i as u32));
                acc += Rational::from(binom) * neg_t.clone().pow((j - i) as u32) * wi;
            }
            acc / s.clone().pow(j as u32)
        })
        .collect()
}

/// A series together with the working precision used to evaluate it.
#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub series: LegendreSeries,
    pub eval_precision_bits: u32,
}

/// Precision used when none is given: `8 N + 256` bits.
pub fn default_precision(order: usize) -> u32 {
    8 * order as u32 + 256
}

impl DensityEstimate {
    pub fn new(series: LegendreSeries) -> Self {
        let bits = default_precision(series.order());
        DensityEstimate { series, eval_precision_bits: bits }
    }

    pub fn with_precision(series: LegendreSeries, bits: u32) -> Self {
        DensityEstimate { series, eval_precision_bits: bits }
    }

    fn prec(&self) -> u32 {
        self.eval_precision_bits
    }

    fn lambda_floats(&self) -> Vec<BigFloat> {
        self.series.lambda.iter().map(|l| to_bigfloat(l, self.prec())).collect()
    }

    /// Density at `x` (not clamped; truncated series may dip below zero).
    pub fn density(&self, x: &Rational) -> Result<BigFloat> {
        let iv = &self.series.interval;
        iv.check(x)?;
        let p = legendre_values(&to_bigfloat(&iv.to_unit(x), self.prec()), self.series.order());
        let mut acc = BigFloat::new(self.prec());
        for (k, (lam, pk)) in self.lambda_floats().iter().zip(&p).enumerate() {
            acc += (lam * pk).complete(self.prec()) * (2 * k as u32 + 1);
        }
        Ok(acc / to_bigfloat(&iv.width(), self.prec()))
    }

    pub fn density_exact(&self, x: &Rational) -> Result<Rational> {
        let iv = &self.series.interval;
        iv.check(x)?;
        let p = legendre_values_exact(&iv.to_unit(x), self.series.order());
        let mut acc = Rational::new();
        for (k, (lam, pk)) in self.series.lambda.iter().zip(&p).enumerate() {
            acc += (lam * pk).complete() * (2 * k as u32 + 1);
        }
        Ok(acc / iv.width())
    }

    /// First derivative in `x`, termwise.
    pub fn derivative(&self, x: &Rational) -> Result<BigFloat> {
        let iv = &self.series.interval;
        iv.check(x)?;
        let n = self.series.order();
        let u = to_bigfloat(&iv.to_unit(x), self.prec());
        let p = legendre_values(&u, n);
        let dp = legendre_derivatives(&p, self.prec());
        let mut acc = BigFloat::new(self.prec());
        for (k, (lam, d)) in self.lambda_floats().iter().zip(&dp).enumerate() {
            acc += (lam * d).complete(self.prec()) * (2 * k as u32 + 1);
        }
        let factor = iv.scale() / iv.width();
        Ok(acc * to_bigfloat(&factor, self.prec()))
    }

    pub fn derivative_exact(&self, x: &Rational) -> Result<Rational> {
        let iv = &self.series.interval;
        iv.check(x)?;
        let n = self.series.order();
        let p = legendre_values_exact(&iv.to_unit(x), n);
        let mut acc = Rational::new();
        let (mut d_prev, mut d_cur) = (Rational::new(), Rational::new());
        for (k, (lam, pk)) in self.series.lambda.iter().zip(&p).enumerate().take(n + 1) {
            acc += (lam * &d_cur).complete() * (2 * k as u32 + 1);
            let d_next = Rational::from(pk * (2 * k as u32 + 1)) + &d_prev;
            d_prev = std::mem::replace(&mut d_cur, d_next);
        }
        Ok(acc * iv.scale() / iv.width())
    }

    /// Probability mass on `[x1, x2]`, integrating each term exactly.
    pub fn cdf(&self, x1: &Rational, x2: &Rational) -> Result<BigFloat> {
        let iv = &self.series.interval;
        check_bounds(iv, x1, x2)?;
        let n = self.series.order();
        let prec = self.prec();
        let p1 = legendre_values(&to_bigfloat(&iv.to_unit(x1), prec), n + 1);
        let p2 = legendre_values(&to_bigfloat(&iv.to_unit(x2), prec), n + 1);
        let lam = self.lambda_floats();
        let mut acc = (&p2[1] - &p1[1]).complete(prec) * &lam[0];
        for k in 1..=n {
            let diff = (&p2[k + 1] - &p2[k - 1]).complete(prec) - &p1[k + 1] + &p1[k - 1];
            acc += diff * &lam[k];
        }
        Ok(acc / 2u32)
    }

    pub fn cdf_exact(&self, x1: &Rational, x2: &Rational) -> Result<Rational> {
        let iv = &self.series.interval;
        check_bounds(iv, x1, x2)?;
        let n = self.series.order();
        let p1 = legendre_values_exact(&iv.to_unit(x1), n + 1);
        let p2 = legendre_values_exact(&iv.to_unit(x2), n + 1);
        let mut acc = (&p2[1] - &p1[1]).complete() * &self.series.lambda[0];
        for k in 1..=n {
            let diff = (&p2[k + 1] - &p2[k - 1]).complete() - &p1[k + 1] + &p1[k - 1];
            acc += diff * &self.series.lambda[k];
        }
        Ok(acc / 2u32)
    }

    /// Double-precision evaluator for bulk use (quadrature, plotting).
    pub fn to_f64(&self) -> F64Density {
        let iv = &self.series.interval;
        F64Density {
            weights: self.series.lambda.iter().enumerate().map(|(k, l)| l.to_f64() * (2 * k + 1) as f64).collect(),
            a: iv.a().to_f64(),
            b: iv.b().to_f64(),
            scale: iv.scale().to_f64(),
            offset: iv.offset().to_f64(),
            inv_width: iv.width().recip().to_f64(),
        }
    }

    /// `(x, p(x))` at `points` equally spaced abscissae including both ends.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        let fast = self.to_f64();
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let x = fast.a + (fast.b - fast.a) * i as f64 / (points - 1) as f64;
                (x, fast.density(x))
            })
            .collect()
    }
}

fn check_bounds(iv: &SupportInterval, x1: &Rational, x2: &Rational) -> Result<()> {
    iv.check(x1)?;
    iv.check(x2)?;
    if x1 > x2 {
        return Err(Error::InvalidArgument(format!("disordered bounds {x1} > {x2}")));
    }
    Ok(())
}

/// Double-precision copy of a series.
#[derive(Clone, Debug)]
pub struct F64Density {
    /// `(2k+1) lambda_k`
    weights: Vec<f64>,
    a: f64,
    b: f64,
    scale: f64,
    offset: f64,
    inv_width: f64,
}

impl F64Density {
    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn density(&self, x: f64) -> f64 {
        let u = self.scale * x + self.offset;
        let (mut p_prev, mut p_cur) = (0.0, 1.0);
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w * p_cur;
            let kf = k as f64;
            let p_next = ((2.0 * kf + 1.0) * u * p_cur - kf * p_prev) / (kf + 1.0);
            p_prev = p_cur;
            p_cur = p_next;
        }
        acc * self.inv_width
    }
}

/// `P_0(u)..=P_n(u)` by the forward recurrence.
pub fn legendre_values(u: &BigFloat, n: usize) -> Vec<BigFloat> {
    let prec = u.prec();
    let mut p = Vec::with_capacity(n + 1);
    p.push(BigFloat::with_val(prec, 1));
    if n >= 1 {
        p.push(u.clone());
    }
    for k in 1..n {
        let a = (u * &p[k]).complete(prec) * (2 * k as u32 + 1);
        let b = (&p[k - 1] * k as u32).complete(prec);
        p.push((a - b) / (k as u32 + 1));
    }
    p
}

pub fn legendre_values_exact(u: &Rational, n: usize) -> Vec<Rational> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(Rational::from(1));
    if n >= 1 {
        p.push(u.clone());
    }
    for k in 1..n {
        let a = (u * &p[k]).complete() * (2 * k as u32 + 1);
        let b = (&p[k - 1] * k as u32).complete();
        p.push((a - b) / (k as u32 + 1));
    }
    p
}

/// `P'_k` from `P'_{k+1} = P'_{k-1} + (2k+1) P_k`.
fn legendre_derivatives(p: &[BigFloat], prec: u32) -> Vec<BigFloat> {
    let mut d = Vec::with_capacity(p.len());
    d.push(BigFloat::new(prec));
    if p.len() > 1 {
        d.push(BigFloat::with_val(prec, 1));
    }
    for k in 1..p.len().saturating_sub(1) {
        let next = (&p[k] * (2 * k as u32 + 1)).complete(prec) + &d[k - 1];
        d.push(next);
    }
    d
}

/// Number of decimal places on which two estimates agree (`None` when even
/// the integer parts differ). Used to report digits that survive the last
/// batch of moments.
pub fn stable_decimal_places(current: &BigFloat, previous: &BigFloat) -> Option<usize> {
    const MAX_PLACES: u32 = 60;
    let scale = Integer::from(10).pow(MAX_PLACES);
    let digits = |f: &BigFloat| {
        let r = f.to_rational().unwrap_or_default();
        let neg = r < 0;
        let scaled = (r.abs() * &scale).floor().into_numer_denom().0;
        (neg, scaled.to_string())
    };
    let (neg_a, a) = digits(current);
    let (neg_b, b) = digits(previous);
    if neg_a != neg_b || a.len() != b.len() {
        return None;
    }
    let int_len = a.len().saturating_sub(MAX_PLACES as usize);
    if a[..int_len] != b[..int_len] {
        return None;
    }
    let common = a[int_len..].chars().zip(b[int_len..].chars()).take_while(|(x, y)| x == y).count();
    Some(common)
}

/// Decimal places of the density at `x` unchanged between the series and its
/// truncation `back` degrees lower.
pub fn stability_digits(series: &LegendreSeries, back: usize, x: &Rational) -> Result<Option<usize>> {
    let full = DensityEstimate::new(series.clone());
    let lower = DensityEstimate::with_precision(
        series.truncated(series.order().saturating_sub(back)),
        full.eval_precision_bits,
    );
    Ok(stable_decimal_places(&full.density(x)?, &lower.density(x)?))
}

/// Serialized form of a series: exact numerator/denominator strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesFile {
    pub schema_version: u32,
    pub a: String,
    pub b: String,
    pub order: usize,
    pub lambda: Vec<[String; 2]>,
}

pub const SERIES_SCHEMA_VERSION: u32 = 1;

impl From<&LegendreSeries> for SeriesFile {
    fn from(s: &LegendreSeries) -> Self {
        SeriesFile {
            schema_version: SERIES_SCHEMA_VERSION,
            a: s.interval.a().to_string(),
            b: s.interval.b().to_string(),
            order: s.order(),
            lambda: s.lambda.iter().map(|l| [l.numer().to_string(), l.denom().to_string()]).collect(),
        }
    }
}

impl TryFrom<&SeriesFile> for LegendreSeries {
    type Error = Error;
    fn try_from(f: &SeriesFile) -> Result<Self> {
        if f.schema_version != SERIES_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported series schema {}", f.schema_version)));
        }
        let parse = |s: &str| crate::exact_arith::parse_rational(s);
        let interval = SupportInterval::new(parse(&f.a)?, parse(&f.b)?)?;
        let lambda = f
            .lambda
            .iter()
            .map(|[n, d]| {
                let n = Integer::from_str_radix(n, 10).map_err(|_| Error::Parse(n.clone()))?;
                let d = Integer::from_str_radix(d, 10).map_err(|_| Error::Parse(d.clone()))?;
                if d <= 0 {
                    return Err(Error::Parse(format!("{n}/{d}")));
                }
                Ok(Rational::from((n, d)))
            })
            .collect::<Result<Vec<_>>>()?;
        if lambda.len() != f.order + 1 {
            return Err(Error::InvalidArgument("order does not match coefficient count".into()));
        }
        Ok(LegendreSeries { interval, lambda })
    }
}

impl LegendreSeries {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SeriesFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: SeriesFile = serde_json::from_str(s)?;
        LegendreSeries::try_from(&file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn pt_interval() -> SupportInterval {
        SupportInterval::new(q(-1, 16), q(1, 256)).unwrap()
    }

    fn uniform_moments(iv: &SupportInterval, n: usize) -> Vec<Rational> {
        (0..=n as u32)
            .map(|j| {
                let hi = iv.b().clone().pow(j + 1);
                let lo = iv.a().clone().pow(j + 1);
                (hi - lo) / (Rational::from(j + 1) * iv.width())
            })
            .collect()
    }

    #[test]
    fn boundary_maps_to_fifteen_seventeenths() {
        assert_eq!(pt_interval().to_unit(&q(0, 1)), q(15, 17));
        assert_eq!(pt_interval().to_unit(&q(-1, 16)), -1);
        assert_eq!(pt_interval().to_unit(&q(1, 256)), 1);
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(SupportInterval::new(q(1, 2), q(1, 2)).is_err());
        assert!(SupportInterval::new(q(1, 2), q(1, 3)).is_err());
    }

    #[test]
    fn uniform_moments_give_unit_lambda() {
        let iv = pt_interval();
        let s = legendre_coeffs_from_moments(&iv, &uniform_moments(&iv, 30), 30).unwrap();
        assert_eq!(s.lambda[0], 1);
        assert!(s.lambda[1..].iter().all(|l| *l == 0));
        let est = DensityEstimate::new(s);
        assert_eq!(est.density_exact(&q(0, 1)).unwrap(), q(256, 17));
        assert_eq!(est.derivative_exact(&q(-1, 32)).unwrap(), 0);
        assert_eq!(est.cdf_exact(&q(-1, 16), &q(1, 256)).unwrap(), 1);
        assert!(est.derivative(&q(1, 512)).unwrap().to_f64().abs() < 1e-30);
    }

    #[test]
    fn too_few_moments() {
        let iv = pt_interval();
        let err = legendre_coeffs_from_moments(&iv, &uniform_moments(&iv, 3), 4).unwrap_err();
        assert!(matches!(err, Error::InsufficientMoments { requested: 4, available: 3 }));
    }

    #[test]
    fn point_mass_lambda_matches_legendre() {
        // delta at x0: mu_j = x0^j, lambda_k = P_k(u(x0))
        let iv = pt_interval();
        let x0 = q(-3, 100);
        let mu: Vec<Rational> = (0..=12u32).map(|j| x0.clone().pow(j)).collect();
        let s = legendre_coeffs_from_moments(&iv, &mu, 12).unwrap();
        assert_eq!(s.lambda, legendre_values_exact(&iv.to_unit(&x0), 12));
    }

    #[test]
    fn round_trip_small() {
        let iv = SupportInterval::new(q(0, 1), q(1, 256)).unwrap();
        let mu: Vec<Rational> = (0..=10u32).map(|j| q(1, 256).pow(j) / (j + 2)).collect();
        let s = legendre_coeffs_from_moments(&iv, &mu, 10).unwrap();
        assert_eq!(power_moments_from_series(&s), mu);
    }

    #[test]
    fn out_of_support_and_bounds() {
        let iv = pt_interval();
        let est = DensityEstimate::new(legendre_coeffs_from_moments(&iv, &uniform_moments(&iv, 2), 2).unwrap());
        assert!(matches!(est.density(&q(1, 100)), Err(Error::OutOfSupport { .. })));
        assert!(matches!(est.derivative(&q(-1, 8)), Err(Error::OutOfSupport { .. })));
        assert!(matches!(est.cdf(&q(0, 1), &q(-1, 32)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn float_and_exact_paths_agree() {
        let iv = pt_interval();
        let mu: Vec<Rational> = (0..=40u32).map(|j| q(-1, 40).pow(j) / 2 + q(1, 300).pow(j) / 2).collect();
        let est = DensityEstimate::with_precision(legendre_coeffs_from_moments(&iv, &mu, 40).unwrap(), 300);
        for x in [q(-1, 16), q(-1, 50), q(0, 1), q(1, 1000), q(1, 256)] {
            let exact = est.density_exact(&x).unwrap();
            let float = est.density(&x).unwrap();
            let err = (float - to_bigfloat(&exact, 600)).abs();
            let bound = to_bigfloat(&exact.abs(), 600) * BigFloat::with_val(600, 1) / (Integer::from(1) << 290u32);
            assert!(err <= bound.max(&BigFloat::with_val(600, 1e-80)), "x={x}");
            let dx = est.derivative_exact(&x).unwrap().to_f64();
            let df = est.derivative(&x).unwrap().to_f64();
            assert!((dx - df).abs() <= 1e-9 * dx.abs().max(1.0));
        }
        let c_exact = est.cdf_exact(&q(0, 1), &q(1, 256)).unwrap().to_f64();
        let c_float = est.cdf(&q(0, 1), &q(1, 256)).unwrap().to_f64();
        assert!((c_exact - c_float).abs() < 1e-15);
    }

    #[test]
    fn f64_evaluator_matches() {
        let iv = pt_interval();
        let mu: Vec<Rational> = (0..=20u32).map(|j| q(-1, 40).pow(j) / 2 + q(1, 300).pow(j) / 2).collect();
        let est = DensityEstimate::new(legendre_coeffs_from_moments(&iv, &mu, 20).unwrap());
        let fast = est.to_f64();
        let x = q(-1, 100);
        let slow = est.density(&x).unwrap().to_f64();
        assert!((fast.density(x.to_f64()) - slow).abs() < 1e-10 * slow.abs());
    }

    #[test]
    fn stable_places() {
        let f = |v: f64| BigFloat::with_val(200, v);
        assert_eq!(stable_decimal_places(&f(218.3823524), &f(218.3823519)), Some(5));
        assert_eq!(stable_decimal_places(&f(218.5), &f(217.5)), None);
        assert_eq!(stable_decimal_places(&f(-1.25), &f(1.25)), None);
    }

    #[test]
    fn json_round_trip() {
        let iv = pt_interval();
        let s = legendre_coeffs_from_moments(&iv, &uniform_moments(&iv, 5), 5).unwrap();
        let back = LegendreSeries::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(LegendreSeries::from_json("{\"schema_version\":9}").is_err());
    }
}
