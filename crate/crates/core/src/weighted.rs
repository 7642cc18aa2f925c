//! Endpoint-weighted reconstruction for densities with known edge behaviour.
//!
//! When `p(x) ~ (x - a)^beta` near `a` and `~ (b - x)^alpha` near `b`, a plain
//! Legendre series converges slowly or not at all (e.g. `beta = -1/2`). Here
//! the weight is factored out and the remainder is expanded in the Jacobi
//! polynomials orthogonal for it:
//!
//! ```text
//! p(x) = s (1-u)^alpha (1+u)^beta sum_k E[J_k(U)] / h_k * J_k(u)
//! ```
//!
//! with `u = s x + t` and `h_k = integral (1-u)^alpha (1+u)^beta J_k^2 du`.
//! `alpha = beta = 0` is the Legendre expansion. The `E[J_k(U)]` are exact
//! rationals; only the norms involve Gamma values.

use rayon::prelude::*;
use rug::ops::{CompleteRound, Pow};
use rug::Rational;

use crate::error::{Error, Result};
use crate::exact_arith::{to_bigfloat, BigFloat};
use crate::moments::MomentTable;
use crate::reconstruct::{default_precision, SupportInterval};

const PAR_ROW: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSeries {
    pub interval: SupportInterval,
    /// Exponent at the right end `b`.
    pub right_exponent: Rational,
    /// Exponent at the left end `a`.
    pub left_exponent: Rational,
    /// `E[J_k(U)]`, `k = 0..=N`.
    pub jacobi_moments: Vec<Rational>,
}

impl WeightedSeries {
    pub fn order(&self) -> usize {
        self.jacobi_moments.len() - 1
    }
}

/// `J_{k+1} = (p_k u + q_k) J_k - r_k J_{k-1}`.
fn recurrence(k: usize, a: &Rational, b: &Rational) -> (Rational, Rational, Rational) {
    let sum = Rational::from(a + b);
    if k == 0 {
        let p = Rational::from(&sum + 2u32) / 2u32;
        let q = Rational::from(a - b) / 2u32;
        return (p, q, Rational::new());
    }
    let k = Rational::from(k as u64);
    let two_k_sum = Rational::from(&k * 2u32) + &sum;
    let c1 = Rational::from(&k + 1u32) * (Rational::from(&k + &sum) + 1u32) * &two_k_sum * 2u32;
    let c2 = Rational::from(&two_k_sum + 1u32) * Rational::from(&two_k_sum + 2u32) * &two_k_sum;
    let c3 = Rational::from(&two_k_sum + 1u32) * (Rational::from(a * a) - Rational::from(b * b));
    let c4 = Rational::from(&k + a) * Rational::from(&k + b) * Rational::from(&two_k_sum + 2u32) * 2u32;
    (c2 / &c1, c3 / &c1, c4 / c1)
}

fn check_exponents(right: &Rational, left: &Rational) -> Result<()> {
    if *right <= -1 || *left <= -1 || Rational::from(right + left) <= -1 {
        return Err(Error::InvalidArgument(format!(
            "endpoint exponents ({left}, {right}) must exceed -1 with sum above -1"
        )));
    }
    Ok(())
}

pub fn weighted_coeffs(
    moments: &MomentTable,
    n: usize,
    left_exponent: Rational,
    right_exponent: Rational,
) -> Result<WeightedSeries> {
    weighted_coeffs_from_moments(&moments.family.support(), &moments.values, n, left_exponent, right_exponent)
}

/// Jacobi moments from power moments by the mixed-moment recurrence
/// `m_{k+1,i} = p_k (s m_{k,i+1} + t m_{k,i}) + q_k m_{k,i} - r_k m_{k-1,i}`
/// on `m_{k,i} = E[X^i J_k(U)]`.
pub fn weighted_coeffs_from_moments(
    interval: &SupportInterval,
    moments: &[Rational],
    n: usize,
    left_exponent: Rational,
    right_exponent: Rational,
) -> Result<WeightedSeries> {
    check_exponents(&right_exponent, &left_exponent)?;
    if moments.len() <= n {
        return Err(Error::InsufficientMoments { requested: n, available: moments.len().saturating_sub(1) });
    }
    let s = interval.scale();
    let t = interval.offset();
    let mut cur: Vec<Rational> = moments[..=n].to_vec();
    let mut prev: Vec<Rational> = Vec::new();
    let mut out = Vec::with_capacity(n + 1);
    out.push(cur[0].clone());
    for k in 0..n {
        let (p, q, r) = recurrence(k, &right_exponent, &left_exponent);
        let step = |i: usize| {
            let mut v = Rational::from(&s * &cur[i + 1]) + Rational::from(&t * &cur[i]);
            v *= &p;
            v += Rational::from(&q * &cur[i]);
            if k > 0 {
                v -= Rational::from(&r * &prev[i]);
            }
            v
        };
        let len = n - k;
        let next: Vec<Rational> =
            if len >= PAR_ROW { (0..len).into_par_iter().map(step).collect() } else { (0..len).map(step).collect() };
        out.push(next[0].clone());
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(WeightedSeries { interval: interval.clone(), right_exponent, left_exponent, jacobi_moments: out })
}

#[derive(Clone, Debug)]
pub struct WeightedEstimate {
    pub series: WeightedSeries,
    pub eval_precision_bits: u32,
    /// `E[J_k] / h_k` at the working precision.
    coeffs: Vec<BigFloat>,
    /// `(p_k, q_k, r_k)` at the working precision.
    steps: Vec<[BigFloat; 3]>,
}

/// `h_k` for `k = 0..=n`.
fn jacobi_norms(a: &Rational, b: &Rational, n: usize, prec: u32) -> Vec<BigFloat> {
    let fa = to_bigfloat(a, prec);
    let fb = to_bigfloat(b, prec);
    let sum = (&fa + &fb).complete(prec);
    let g = |x: BigFloat| x.gamma();
    let two_pow = BigFloat::with_val(prec, 2).pow((&sum + 1u32).complete(prec));
    let h0 = two_pow.clone() * g(fa.clone() + 1u32) * g(fb.clone() + 1u32) / g(sum.clone() + 2u32);
    let mut h = Vec::with_capacity(n + 1);
    h.push(h0);
    // ratio_k = Gamma(k+a+1) Gamma(k+b+1) / (Gamma(k+a+b+1) k!), built up from k = 1
    let mut ratio =
        if n >= 1 { g(fa.clone() + 2u32) * g(fb.clone() + 2u32) / g(sum.clone() + 2u32) } else { BigFloat::new(prec) };
    for k in 1..=n {
        if k > 1 {
            let kf = k as u32;
            ratio *= (fa.clone() + kf) * (fb.clone() + kf) / ((sum.clone() + kf) * kf);
        }
        let denom = sum.clone() + (2 * k as u32 + 1);
        h.push((&two_pow * &ratio).complete(prec) / denom);
    }
    h
}

impl WeightedEstimate {
    pub fn new(series: WeightedSeries) -> Self {
        let bits = default_precision(series.order());
        Self::with_precision(series, bits)
    }

    pub fn with_precision(series: WeightedSeries, bits: u32) -> Self {
        let norms = jacobi_norms(&series.right_exponent, &series.left_exponent, series.order(), bits);
        let coeffs = series.jacobi_moments.iter().zip(&norms).map(|(m, h)| to_bigfloat(m, bits) / h).collect();
        let (a, b) = (&series.right_exponent, &series.left_exponent);
        let steps = (0..series.order())
            .map(|k| {
                let (p, q, r) = recurrence(k, a, b);
                [to_bigfloat(&p, bits), to_bigfloat(&q, bits), to_bigfloat(&r, bits)]
            })
            .collect();
        WeightedEstimate { series, eval_precision_bits: bits, coeffs, steps }
    }

    /// Density at `x`; infinite at an endpoint with a negative exponent.
    pub fn density(&self, x: &Rational) -> Result<BigFloat> {
        let iv = &self.series.interval;
        iv.check(x)?;
        let prec = self.eval_precision_bits;
        let u = to_bigfloat(&iv.to_unit(x), prec);
        let (a, b) = (&self.series.right_exponent, &self.series.left_exponent);
        let mut j_prev = BigFloat::new(prec);
        let mut j_cur = BigFloat::with_val(prec, 1);
        let mut acc = BigFloat::new(prec);
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += (c * &j_cur).complete(prec);
            if let Some([p, q, r]) = self.steps.get(k) {
                let next = ((p * &u).complete(prec) + q) * &j_cur - (r * &j_prev).complete(prec);
                j_prev = std::mem::replace(&mut j_cur, next);
            }
        }
        let one_minus = (1u32 - &u).complete(prec);
        let one_plus = (1u32 + &u).complete(prec);
        let weight = one_minus.pow(to_bigfloat(a, prec)) * one_plus.pow(to_bigfloat(b, prec));
        Ok(acc * weight * to_bigfloat(&iv.scale(), prec))
    }
}
