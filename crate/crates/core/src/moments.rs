//! Exact moments of the four determinantal families, for rational `alpha > 0`.
//!
//! * [`moment_pt`]: `<|rho^PT|^n>` under Hilbert-Schmidt measure.
//! * [`moment_balanced`]: `<|rho|^n |rho^PT|^n>`.
//! * [`moment_det`]: `<|rho|^n>` under Hilbert-Schmidt measure.
//! * [`moment_bures`]: `<|rho|^n>` under Bures measure.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complete, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_arith::{gamma_half, hyp_terminating, is_half_integral, pochhammer, GammaValue};
use crate::reconstruct::SupportInterval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentFamily {
    /// det of the partial transpose, Hilbert-Schmidt.
    PtHs,
    /// det(rho) * det(rho^PT), Hilbert-Schmidt.
    BalancedHs,
    /// det(rho), Hilbert-Schmidt.
    DetHs,
    /// det(rho), Bures.
    DetBures,
}

impl MomentFamily {
    pub const ALL: [MomentFamily; 4] =
        [MomentFamily::PtHs, MomentFamily::BalancedHs, MomentFamily::DetHs, MomentFamily::DetBures];

    pub fn support(self) -> SupportInterval {
        let q = |n: i64, d: i64| Rational::from((n, d));
        let (a, b) = match self {
            MomentFamily::PtHs => (q(-1, 16), q(1, 256)),
            // -2^-12 3^-3 and 2^-16
            MomentFamily::BalancedHs => (q(-1, 110_592), q(1, 65_536)),
            MomentFamily::DetHs | MomentFamily::DetBures => (q(0, 1), q(1, 256)),
        };
        SupportInterval::new(a, b).expect("family supports are valid")
    }

    pub fn moment(self, alpha: &Rational, n: u32) -> Result<Rational> {
        match self {
            MomentFamily::PtHs => moment_pt(alpha, n),
            MomentFamily::BalancedHs => moment_balanced(alpha, n),
            MomentFamily::DetHs => moment_det(alpha, n),
            MomentFamily::DetBures => moment_bures(alpha, n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MomentFamily::PtHs => "pt-hs",
            MomentFamily::BalancedHs => "balanced-hs",
            MomentFamily::DetHs => "det-hs",
            MomentFamily::DetBures => "det-bures",
        }
    }

    /// `(left, right)` exponents `e` with `p(x) ~ |x - endpoint|^e` at the two
    /// ends of the support, up to logarithmic factors. Known for the
    /// determinant families, whose moments are those of a scaled product of
    /// independent Beta variables `B(a_i, b_i - a_i)`: the left exponent is
    /// `min a_i - 1`, the right one `sum b_i - sum a_i - 1`.
    pub fn endpoint_exponents(self, alpha: &Rational) -> Option<(Rational, Rational)> {
        let right = Rational::from(alpha * 6u32) + q(1, 2);
        match self {
            MomentFamily::DetHs => Some((Rational::new(), right)),
            MomentFamily::DetBures => Some((q(-1, 2), right)),
            MomentFamily::PtHs | MomentFamily::BalancedHs => None,
        }
    }

    /// Whether the family has an interior separability boundary at 0.
    pub fn has_interior_boundary(self) -> bool {
        matches!(self, MomentFamily::PtHs | MomentFamily::BalancedHs)
    }
}

impl fmt::Display for MomentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MomentFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MomentFamily::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown family {s:?}")))
    }
}

/// Exact moments of one family at one `alpha`, orders `0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub family: MomentFamily,
    pub alpha: Rational,
    pub values: Vec<Rational>,
}

impl MomentTable {
    pub fn max_order(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if *alpha <= 0 {
        return Err(Error::NonPositiveAlpha(alpha.to_string()));
    }
    Ok(())
}

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// `k a + c`
fn aff(a: &Rational, k: i64, c: Rational) -> Rational {
    Rational::from(a * k) + c
}

fn pow2(e: u32) -> Rational {
    Rational::from(Integer::from(1) << e)
}

/// First additive term of the partial-transpose moment formula.
pub fn moment_pt_leading(alpha: &Rational, n: u32) -> Rational {
    let a = alpha;
    let num = Rational::from(Integer::factorial(n).complete())
        * pochhammer(&aff(a, 1, q(1, 1)), n)
        * pochhammer(&aff(a, 2, q(1, 1)), n);
    let den = pow2(6 * n) * pochhammer(&aff(a, 3, q(3, 2)), n) * pochhammer(&aff(a, 6, q(5, 2)), 2 * n);
    num / den
}

/// Second additive term, including its 5F4 factor.
pub fn moment_pt_hypergeometric(alpha: &Rational, n: u32) -> Result<Rational> {
    let a = alpha;
    let num =
        pochhammer(&aff(a, -5, q(-2 * n as i64 - 1, 1)), n) * pochhammer(a, n) * pochhammer(&aff(a, 1, q(1, 2)), n);
    let den = pow2(4 * n) * pochhammer(&aff(a, 3, q(3, 2)), n) * pochhammer(&aff(a, 6, q(5, 2)), 2 * n);
    let upper = [q(2 - n as i64, 2), q(1 - n as i64, 2), q(-(n as i64), 1), aff(a, 1, q(1, 1)), aff(a, 2, q(1, 1))];
    let lower = [
        q(1 - n as i64, 1),
        aff(a, 5, q(n as i64 + 2, 1)),
        aff(a, -1, q(1 - n as i64, 1)),
        aff(a, -1, q(1 - 2 * n as i64, 2)),
    ];
    let series = hyp_terminating(&upper, &lower, None)?;
    Ok(num / den * series)
}

/// `<|rho^PT|^n>`; order 0 is 1 by normalization, the closed form is used
/// for `n >= 1` only (at `n = 0` it would give 2).
pub fn moment_pt(alpha: &Rational, n: u32) -> Result<Rational> {
    check_alpha(alpha)?;
    if n == 0 {
        return Ok(Rational::from(1));
    }
    Ok(moment_pt_leading(alpha, n) + moment_pt_hypergeometric(alpha, n)?)
}

/// `<|rho|^n |rho^PT|^n>`.
pub fn moment_balanced(alpha: &Rational, n: u32) -> Result<Rational> {
    check_alpha(alpha)?;
    if n == 0 {
        return Ok(Rational::from(1));
    }
    let a = alpha;
    let num = Rational::from(Integer::factorial(2 * n).complete())
        * pochhammer(&aff(a, 1, q(1, 1)), 2 * n)
        * pochhammer(&aff(a, 2, q(1, 1)), 2 * n);
    let den = pow2(12 * n) * pochhammer(&aff(a, 3, q(3, 2)), 2 * n) * pochhammer(&aff(a, 6, q(5, 2)), 4 * n);
    let upper = [q(-(n as i64), 1), a.clone(), aff(a, 1, q(1, 2)), aff(a, -5, q(-4 * n as i64 - 1, 1))];
    let lower = [aff(a, -1, q(-2 * n as i64, 1)), aff(a, -2, q(-2 * n as i64, 1)), q(1 - 2 * n as i64, 2)];
    let series = hyp_terminating(&upper, &lower, None)?;
    Ok(num / den * series)
}

/// `<|rho|^n>` under Hilbert-Schmidt measure.
pub fn moment_det(alpha: &Rational, n: u32) -> Result<Rational> {
    check_alpha(alpha)?;
    let a = alpha;
    let num = pochhammer(&q(1, 1), n) * pochhammer(&aff(a, 1, q(1, 1)), n) * pochhammer(&aff(a, 2, q(1, 1)), n);
    let den = Rational::from(Integer::from(256u32).pow(n))
        * pochhammer(&aff(a, 3, q(5, 4)), n)
        * pochhammer(&aff(a, 3, q(3, 2)), n)
        * pochhammer(&aff(a, 3, q(7, 4)), n);
    Ok(num / den)
}

/// `<|rho|^n>` under Bures measure.
///
/// Evaluated as the ratio form
/// `2^(-8n) (1/2)_n (a+1/2)_n (a+1)_{2n} / ((2a+1)_n (3a+1)_n (3a+3/2)_{2n})`,
/// which is exact for every rational `alpha`. The Gamma-function form is
/// available as [`moment_bures_gamma`] for half-integral `alpha`.
pub fn moment_bures(alpha: &Rational, n: u32) -> Result<Rational> {
    check_alpha(alpha)?;
    let a = alpha;
    let num = pochhammer(&q(1, 2), n) * pochhammer(&aff(a, 1, q(1, 2)), n) * pochhammer(&aff(a, 1, q(1, 1)), 2 * n);
    let den = pow2(8 * n)
        * pochhammer(&aff(a, 2, q(1, 1)), n)
        * pochhammer(&aff(a, 3, q(1, 1)), n)
        * pochhammer(&aff(a, 3, q(3, 2)), 2 * n);
    Ok(num / den)
}

/// Bures moment evaluated directly from its Gamma-function expression.
/// Only defined when `2 alpha` is an integer, so every Gamma argument is an
/// integer or half-integer and the powers of pi cancel.
pub fn moment_bures_gamma(alpha: &Rational, n: u32) -> Result<Rational> {
    check_alpha(alpha)?;
    if !is_half_integral(alpha) {
        return Err(Error::AlphaNotHalfInteger(alpha.to_string()));
    }
    let a = alpha;
    let n = n as i64;
    let g = |x: Rational| gamma_half(&x);
    // 2^(-4a-8n-1); 4a is an integer here.
    let exp2 = aff(a, -4, q(-8 * n - 1, 1));
    let exp2 = exp2.numer().to_i32().expect("small exponent");
    let two_pow = if exp2 >= 0 {
        Rational::from(Integer::from(1) << exp2 as u32)
    } else {
        Rational::from((Integer::from(1), Integer::from(1) << (-exp2) as u32))
    };
    let num = g(aff(a, 6, q(2, 1)))?
        * GammaValue::rational(two_pow)
        * g(q(2 * n + 1, 2))?
        * g(aff(a, 1, q(2 * n + 1, 2)))?
        * g(aff(a, 1, q(2 * n + 1, 1)))?;
    let den = GammaValue { coefficient: Rational::from(1), pi_half_power: 1 }
        * g(aff(a, 2, q(n + 1, 1)))?
        * g(aff(a, 3, q(n + 1, 1)))?
        * g(aff(a, 3, q(4 * n + 3, 2)))?;
    let value = num / den;
    Ok(value.to_rational().expect("pi powers cancel for half-integral alpha"))
}

/// Orders `0..=max_order` of one family.
///
/// The Pochhammer prefactors are advanced incrementally; the terminating
/// series (the only super-linear part) run in parallel. The result is
/// identical to calling the per-order functions.
pub fn moment_table(family: MomentFamily, alpha: &Rational, max_order: usize) -> Result<MomentTable> {
    check_alpha(alpha)?;
    let n_max = u32::try_from(max_order).map_err(|_| Error::InvalidArgument(format!("order {max_order} too large")))?;
    let values = match family {
        MomentFamily::DetHs => incremental_det(alpha, n_max),
        MomentFamily::DetBures => incremental_bures(alpha, n_max),
        MomentFamily::PtHs => {
            let leading = incremental_pt_leading(alpha, n_max);
            let rest: Vec<Rational> =
                (1..=n_max).into_par_iter().map(|n| moment_pt_hypergeometric(alpha, n)).collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(max_order + 1);
            values.push(Rational::from(1));
            values.extend(leading.into_iter().skip(1).zip(rest).map(|(l, r)| l + r));
            values
        }
        MomentFamily::BalancedHs => {
            (0..=n_max).into_par_iter().map(|n| moment_balanced(alpha, n)).collect::<Result<_>>()?
        }
    };
    Ok(MomentTable { family, alpha: alpha.clone(), values })
}

/// Running product `prod_{m<n} ratio(m)` for n = 0..=n_max.
fn running_product(n_max: u32, ratio: impl Fn(&Rational) -> Rational) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut acc = Rational::from(1);
    out.push(acc.clone());
    for m in 0..n_max {
        acc *= ratio(&Rational::from(m));
        out.push(acc.clone());
    }
    out
}

fn incremental_det(a: &Rational, n_max: u32) -> Vec<Rational> {
    let c1 = aff(a, 1, q(1, 1));
    let c2 = aff(a, 2, q(1, 1));
    let d1 = aff(a, 3, q(5, 4));
    let d2 = aff(a, 3, q(3, 2));
    let d3 = aff(a, 3, q(7, 4));
    running_product(n_max, |m| {
        let num = Rational::from(m + 1u32) * (&c1 + m).complete() * (&c2 + m).complete();
        let den = Rational::from(256u32) * (&d1 + m).complete() * (&d2 + m).complete() * (&d3 + m).complete();
        num / den
    })
}

fn incremental_bures(a: &Rational, n_max: u32) -> Vec<Rational> {
    let c1 = aff(a, 1, q(1, 2));
    let c2 = aff(a, 1, q(1, 1));
    let d1 = aff(a, 2, q(1, 1));
    let d2 = aff(a, 3, q(1, 1));
    let d3 = aff(a, 3, q(3, 2));
    let half = q(1, 2);
    running_product(n_max, |m| {
        let two_m = Rational::from(2u32 * m);
        let c2m = (&c2 + &two_m).complete();
        let d3m = (&d3 + &two_m).complete();
        let num = (m + &half).complete() * (&c1 + m).complete() * (&c2m + 1u32).complete() * c2m;
        let den = Rational::from(256u32) * (&d1 + m).complete() * (&d2 + m).complete() * (&d3m + 1u32).complete() * d3m;
        num / den
    })
}

fn incremental_pt_leading(a: &Rational, n_max: u32) -> Vec<Rational> {
    let c1 = aff(a, 1, q(1, 1));
    let c2 = aff(a, 2, q(1, 1));
    let d1 = aff(a, 3, q(3, 2));
    let d2 = aff(a, 6, q(5, 2));
    running_product(n_max, |m| {
        let d2m = &d2 + Rational::from(2u32 * m);
        let num = Rational::from(m + 1u32) * (&c1 + m).complete() * (&c2 + m).complete();
        let den = Rational::from(64u32) * (&d1 + m).complete() * (&d2m + 1u32).complete() * d2m;
        num / den
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Beta parameters `(a_i, b_i)` with `mu_n = 256^-n prod (a_i)_n / (b_i)_n`.
    fn beta_params(family: MomentFamily, a: &Rational) -> (Vec<Rational>, Vec<Rational>) {
        let l = |k: i64, c: Rational| aff(a, k, c);
        match family {
            MomentFamily::DetHs => {
                (vec![q(1, 1), l(1, q(1, 1)), l(2, q(1, 1))], vec![l(3, q(5, 4)), l(3, q(3, 2)), l(3, q(7, 4))])
            }
            MomentFamily::DetBures => {
                let half = |x: Rational| x / 2u32;
                (
                    vec![q(1, 2), l(1, q(1, 2)), half(l(1, q(1, 1))), half(l(1, q(2, 1)))],
                    vec![l(2, q(1, 1)), l(3, q(1, 1)), half(l(3, q(3, 2))), half(l(3, q(5, 2)))],
                )
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn endpoint_exponents_follow_beta_parameters() {
        for family in [MomentFamily::DetHs, MomentFamily::DetBures] {
            for alpha in [q(1, 4), q(1, 2), q(1, 1), q(7, 3)] {
                let (a, b) = beta_params(family, &alpha);
                for n in 0..6u32 {
                    let prod = a
                        .iter()
                        .zip(&b)
                        .fold(Rational::from(1), |acc, (ai, bi)| acc * pochhammer(ai, n) / pochhammer(bi, n));
                    let expected = prod / pow2(8 * n);
                    assert_eq!(family.moment(&alpha, n).unwrap(), expected, "{family} {alpha} {n}");
                }
                let min_a = a.iter().min().unwrap().clone();
                let excess = b.iter().sum::<Rational>() - a.iter().sum::<Rational>() - 1u32;
                assert_eq!(family.endpoint_exponents(&alpha), Some((min_a - 1u32, excess)));
            }
        }
        assert_eq!(MomentFamily::PtHs.endpoint_exponents(&q(1, 1)), None);
    }

    #[test]
    fn normalization_all_families() {
        for alpha in [q(1, 2), q(1, 1), q(2, 1), q(1, 4), q(7, 3)] {
            for fam in MomentFamily::ALL {
                assert_eq!(fam.moment(&alpha, 0).unwrap(), 1, "{fam} at {alpha}");
            }
        }
        assert_eq!(moment_bures_gamma(&q(1, 1), 0).unwrap(), 1);
        assert_eq!(moment_bures_gamma(&q(1, 2), 0).unwrap(), 1);
    }

    #[test]
    fn pt_first_moment_qubits() {
        assert_eq!(moment_pt_leading(&q(1, 1), 1), q(1, 3876));
        assert_eq!(moment_pt(&q(1, 1), 1).unwrap(), q(-7, 3876));
    }

    #[test]
    fn det_first_moments() {
        assert_eq!(moment_det(&q(1, 1), 1).unwrap(), q(1, 3876));
        assert_eq!(moment_det(&q(1, 2), 1).unwrap(), q(1, 2288));
    }

    #[test]
    fn bures_routes_agree() {
        for twice in 1..=8 {
            let alpha = q(twice, 2);
            for n in 0..12 {
                assert_eq!(moment_bures(&alpha, n).unwrap(), moment_bures_gamma(&alpha, n).unwrap());
            }
        }
        assert!(moment_bures(&q(1, 1), 1).unwrap() < 1);
        assert!(moment_bures(&q(1, 1), 1).unwrap() > 0);
        assert!(matches!(moment_bures_gamma(&q(1, 3), 1), Err(Error::AlphaNotHalfInteger(_))));
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        for fam in MomentFamily::ALL {
            assert!(matches!(fam.moment(&q(0, 1), 1), Err(Error::NonPositiveAlpha(_))));
            assert!(matches!(fam.moment(&q(-1, 2), 3), Err(Error::NonPositiveAlpha(_))));
        }
    }

    #[test]
    fn leading_term_equals_det_moment() {
        for alpha in [q(1, 2), q(1, 1), q(2, 1)] {
            for n in 0..=20 {
                assert_eq!(moment_pt_leading(&alpha, n), moment_det(&alpha, n).unwrap());
            }
        }
    }

    #[test]
    fn balanced_first_moment_vanishes_for_rebits() {
        // the single nonconstant 4F3 term is exactly -1
        assert_eq!(moment_balanced(&q(1, 2), 1).unwrap(), 0);
        assert!(moment_balanced(&q(1, 1), 1).unwrap() < 0);
    }

    #[test]
    fn table_matches_per_order() {
        for fam in MomentFamily::ALL {
            for alpha in [q(1, 2), q(3, 1), q(26, 100)] {
                let t = moment_table(fam, &alpha, 15).unwrap();
                assert_eq!(t.values.len(), 16);
                for (n, v) in t.values.iter().enumerate() {
                    assert_eq!(*v, fam.moment(&alpha, n as u32).unwrap(), "{fam} {alpha} {n}");
                }
            }
        }
        let t = moment_table(MomentFamily::DetHs, &q(1, 1), 3).unwrap();
        assert_eq!(t.values[1], q(1, 3876));
    }

    #[test]
    fn balanced_table_decreasing() {
        let t = moment_table(MomentFamily::BalancedHs, &q(1, 1), 100).unwrap();
        for w in t.values.windows(2) {
            assert!(w[1].clone().abs() < w[0].clone().abs());
        }
    }

    #[test]
    fn family_names_round_trip() {
        for fam in MomentFamily::ALL {
            assert_eq!(fam.name().parse::<MomentFamily>().unwrap(), fam);
        }
        assert!("nope".parse::<MomentFamily>().is_err());
    }
}
