//! Scans over `alpha`: boundary intercepts, Fisher information, and the
//! comparison between the partial-transpose and determinant families.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;
use rug::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_arith::{to_bigfloat, BigFloat};
use crate::moments::{moment_table, MomentFamily};
use crate::reconstruct::{legendre_coeffs, DensityEstimate};
use crate::weighted::{weighted_coeffs, WeightedEstimate};

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub family: MomentFamily,
    #[serde(serialize_with = "crate::io::ser_rationals")]
    pub alphas: Vec<Rational>,
    pub n_moments: usize,
    /// Abscissa at which intercepts and derivatives are taken.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub point: Rational,
    #[serde(serialize_with = "crate::io::ser_bigfloats")]
    pub intercepts: Vec<BigFloat>,
    #[serde(serialize_with = "crate::io::ser_bigfloats")]
    pub derivatives: Vec<BigFloat>,
    /// Mass on `[point, b]`.
    #[serde(serialize_with = "crate::io::ser_opt_bigfloats")]
    pub cumulatives: Option<Vec<BigFloat>>,
    /// `ln p(point)`, absent where the intercept is not positive.
    pub log_intercepts: Vec<Option<f64>>,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    /// Defaults to 0: the separability boundary for the partial-transpose
    /// families and the left endpoint for the determinant families.
    pub point: Rational,
    pub cumulative: bool,
    /// `None` selects the reconstruction default.
    pub precision_bits: Option<u32>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { point: Rational::new(), cumulative: false, precision_bits: None }
    }
}

fn check_alphas(alphas: &[Rational]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid".into()));
    }
    match alphas.iter().find(|a| **a <= 0) {
        Some(a) => Err(Error::NonPositiveAlpha(a.to_string())),
        None => Ok(()),
    }
}

fn estimate(family: MomentFamily, alpha: &Rational, n: usize, bits: Option<u32>) -> Result<DensityEstimate> {
    let series = legendre_coeffs(&moment_table(family, alpha, n)?, n)?;
    Ok(match bits {
        Some(b) => DensityEstimate::with_precision(series, b),
        None => DensityEstimate::new(series),
    })
}

/// Density and slope at `opts.point` for every `alpha`, in grid order.
pub fn intercept_scan(
    family: MomentFamily,
    alphas: &[Rational],
    n_moments: usize,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    check_alphas(alphas)?;
    family.support().check(&opts.point)?;
    let b = family.support().b().clone();
    let rows = alphas
        .par_iter()
        .map(|alpha| {
            let est = estimate(family, alpha, n_moments, opts.precision_bits)?;
            let p = est.density(&opts.point)?;
            let d = est.derivative(&opts.point)?;
            let c = if opts.cumulative { Some(est.cdf(&opts.point, &b)?) } else { None };
            Ok((p, d, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let log_intercepts = rows.iter().map(|(p, _, _)| if *p > 0 { Some(p.to_f64().ln()) } else { None }).collect();
    let mut intercepts = Vec::with_capacity(rows.len());
    let mut derivatives = Vec::with_capacity(rows.len());
    let mut cumulatives = Vec::with_capacity(rows.len());
    for (p, d, c) in rows {
        intercepts.push(p);
        derivatives.push(d);
        cumulatives.extend(c);
    }
    Ok(ScanResult {
        family,
        alphas: alphas.to_vec(),
        n_moments,
        point: opts.point.clone(),
        intercepts,
        derivatives,
        cumulatives: opts.cumulative.then_some(cumulatives),
        log_intercepts,
    })
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Pearson correlation of the data.
    pub r: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit { intercept: my - slope * mx, slope, r: sxy / (sxx * syy).sqrt() })
}

/// Pearson correlation; `None` for fewer than two points or constant data.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    linear_fit(xs, ys).map(|f| f.r)
}

impl ScanResult {
    /// Fit of `ln p(point)` against `alpha` over the points with a positive intercept.
    pub fn log_intercept_fit(&self) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.alphas.iter().zip(&self.log_intercepts).filter_map(|(a, l)| l.map(|l| (a.to_f64(), l))).unzip();
        linear_fit(&xs, &ys)
    }
}

/// Expansion used for the densities inside the Fisher estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Weighted for [`MomentFamily::DetBures`], Legendre otherwise.
    #[default]
    Auto,
    Legendre,
    /// Jacobi weight matched to the family's endpoint exponents.
    Weighted,
}

impl std::str::FromStr for Basis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Basis::Auto),
            "legendre" => Ok(Basis::Legendre),
            "weighted" => Ok(Basis::Weighted),
            _ => Err(Error::InvalidArgument(format!("unknown basis {s:?}"))),
        }
    }
}

impl Basis {
    /// The concrete basis for `family`; `None` if the weighted basis is
    /// requested for a family without known endpoint exponents.
    pub fn resolve(self, family: MomentFamily) -> Result<Basis> {
        match (self, family) {
            (Basis::Auto, MomentFamily::DetBures) => Ok(Basis::Weighted),
            (Basis::Auto, _) => Ok(Basis::Legendre),
            (Basis::Weighted, f) if f.endpoint_exponents(&Rational::from(1)).is_none() => {
                Err(Error::InvalidArgument(format!("no endpoint exponents known for {f}")))
            }
            (b, _) => Ok(b),
        }
    }
}

/// A reconstructed density in either basis.
#[derive(Clone, Debug)]
pub enum Reconstruction {
    Legendre(DensityEstimate),
    Weighted(WeightedEstimate),
}

impl Reconstruction {
    pub fn build(family: MomentFamily, alpha: &Rational, n: usize, basis: Basis, bits: u32) -> Result<Self> {
        let table = moment_table(family, alpha, n)?;
        match basis.resolve(family)? {
            Basis::Weighted => {
                let (left, right) = family.endpoint_exponents(alpha).expect("checked by resolve");
                let series = weighted_coeffs(&table, n, left, right)?;
                Ok(Reconstruction::Weighted(WeightedEstimate::with_precision(series, bits)))
            }
            _ => Ok(Reconstruction::Legendre(DensityEstimate::with_precision(legendre_coeffs(&table, n)?, bits))),
        }
    }

    pub fn density(&self, x: &Rational) -> Result<BigFloat> {
        match self {
            Reconstruction::Legendre(e) => e.density(x),
            Reconstruction::Weighted(e) => e.density(x),
        }
    }
}

/// Knobs of the Fisher-information estimator.
#[derive(Clone, Debug, Serialize)]
pub struct FisherConfig {
    /// Central-difference step in `alpha`.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub h: Rational,
    pub n_moments: usize,
    pub quadrature_nodes: usize,
    /// Fraction of the support width trimmed from each end.
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub edge_margin: Rational,
    pub clamp_epsilon: f64,
    /// Largest tolerated fraction of nodes with a nonpositive density.
    pub max_nonpositive_fraction: f64,
    pub precision_bits: u32,
    pub basis: Basis,
}

impl Default for FisherConfig {
    fn default() -> Self {
        FisherConfig {
            h: Rational::from((1, 100)),
            n_moments: 100,
            quadrature_nodes: 200,
            edge_margin: Rational::new(),
            clamp_epsilon: 1e-12,
            max_nonpositive_fraction: 0.5,
            precision_bits: 128,
            basis: Basis::Auto,
        }
    }
}

impl FisherConfig {
    pub fn with_moments(n_moments: usize) -> Self {
        FisherConfig { n_moments, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.h <= 0 {
            return Err(Error::InvalidArgument(format!("step h must be positive, got {}", self.h)));
        }
        if self.quadrature_nodes == 0 {
            return Err(Error::InvalidArgument("need at least one quadrature node".into()));
        }
        if self.edge_margin < 0 || self.edge_margin >= Rational::from((1, 2)) {
            return Err(Error::InvalidArgument(format!("edge margin {} not in [0, 1/2)", self.edge_margin)));
        }
        if self.clamp_epsilon.is_nan() || self.clamp_epsilon <= 0.0 {
            return Err(Error::InvalidArgument("clamp epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherEstimate {
    pub family: MomentFamily,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub h: Rational,
    pub n_moments: usize,
    pub quadrature_nodes: usize,
    pub clamp_epsilon: f64,
    /// Nodes where the central density was not positive.
    pub nonpositive_nodes: usize,
    #[serde(serialize_with = "crate::io::ser_bigfloat")]
    pub value: BigFloat,
}

/// Gauss-Legendre rule mapped onto the trimmed support, nodes as exact
/// rationals so the density evaluator can take them directly.
fn quadrature(family: MomentFamily, cfg: &FisherConfig) -> Vec<(Rational, BigFloat)> {
    let iv = family.support();
    let trim = Rational::from(&cfg.edge_margin * &iv.width());
    let lo = Rational::from(iv.a() + &trim);
    let hi = Rational::from(iv.b() - &trim);
    let half = Rational::from(&hi - &lo) / 2u32;
    let mid = Rational::from(&hi + &lo) / 2u32;
    let rule = GaussLegendre::new(NonZeroUsize::new(cfg.quadrature_nodes).expect("validated"));
    rule.iter()
        .map(|(t, w)| {
            let t = Rational::from_f64(*t).expect("finite node");
            let x = Rational::from(&half * &t) + &mid;
            let w = to_bigfloat(&Rational::from_f64(*w).expect("finite weight"), cfg.precision_bits)
                * to_bigfloat(&half, cfg.precision_bits);
            (x, w)
        })
        .collect()
}

/// `I = sum_j w_j p(x_j) s(x_j)^2` with the score `s` from ln-densities at
/// `alpha - h` and `alpha + h`. Densities are clamped at `clamp_epsilon`.
fn fisher_from_estimates(
    family: MomentFamily,
    estimates: [&Reconstruction; 3],
    cfg: &FisherConfig,
) -> Result<(BigFloat, usize)> {
    let prec = cfg.precision_bits;
    let nodes = quadrature(family, cfg);
    let eps = BigFloat::with_val(prec, cfg.clamp_epsilon);
    let two_h = to_bigfloat(&Rational::from(&cfg.h * 2u32), prec);
    let mut total = BigFloat::new(prec);
    let mut bad = 0;
    for (x, w) in &nodes {
        let [lo, mid, hi] = estimates.map(|e| e.density(x));
        let (lo, mid, hi) = (lo?, mid?, hi?);
        if mid <= 0 {
            bad += 1;
        }
        let clamp = |v: BigFloat| if v < eps { eps.clone() } else { v };
        let (lo, mid, hi) = (clamp(lo), clamp(mid), clamp(hi));
        let score = (hi.ln() - lo.ln()) / &two_h;
        total += w * mid * score.square();
    }
    if bad as f64 > cfg.max_nonpositive_fraction * nodes.len() as f64 {
        return Err(Error::NonPositiveDensity { bad, total: nodes.len() });
    }
    Ok((total, bad))
}

/// Fisher information of `family` in `alpha`:
/// `I(alpha) = integral p_alpha (d/dalpha ln p_alpha)^2 dx`.
pub fn fisher_info(family: MomentFamily, alpha: &Rational, cfg: &FisherConfig) -> Result<FisherEstimate> {
    cfg.validate()?;
    let lo_alpha = Rational::from(alpha - &cfg.h);
    if lo_alpha <= 0 {
        return Err(Error::NonPositiveAlpha(format!("{alpha} - h = {lo_alpha}")));
    }
    let hi_alpha = Rational::from(alpha + &cfg.h);
    let est = [&lo_alpha, alpha, &hi_alpha]
        .par_iter()
        .map(|a| Reconstruction::build(family, a, cfg.n_moments, cfg.basis, cfg.precision_bits))
        .collect::<Result<Vec<_>>>()?;
    let (value, bad) = fisher_from_estimates(family, [&est[0], &est[1], &est[2]], cfg)?;
    Ok(fisher_estimate(family, alpha, cfg, bad, value))
}

fn fisher_estimate(
    family: MomentFamily,
    alpha: &Rational,
    cfg: &FisherConfig,
    nonpositive_nodes: usize,
    value: BigFloat,
) -> FisherEstimate {
    FisherEstimate {
        family,
        alpha: alpha.clone(),
        h: cfg.h.clone(),
        n_moments: cfg.n_moments,
        quadrature_nodes: cfg.quadrature_nodes,
        clamp_epsilon: cfg.clamp_epsilon,
        nonpositive_nodes,
        value,
    }
}

/// Fisher estimate from three caller-supplied series at `alpha - h`, `alpha`, `alpha + h`.
pub fn fisher_from_series(
    family: MomentFamily,
    alpha: &Rational,
    series: [&Reconstruction; 3],
    cfg: &FisherConfig,
) -> Result<FisherEstimate> {
    cfg.validate()?;
    let (value, bad) = fisher_from_estimates(family, series, cfg)?;
    Ok(fisher_estimate(family, alpha, cfg, bad, value))
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherRow {
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub alpha: Rational,
    /// Partial-transpose family.
    pub p: f64,
    /// Determinant family.
    pub q: f64,
    pub p_nonpositive_nodes: usize,
    pub q_nonpositive_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherComparison {
    pub n_p: usize,
    pub n_q: usize,
    pub rows: Vec<FisherRow>,
    /// Absent for a single-point grid.
    pub correlation: Option<f64>,
}

/// Fisher information of the Hilbert-Schmidt partial-transpose family with
/// `n_p` moments and the determinant family with `n_q` moments, per `alpha`.
pub fn fisher_compare(alphas: &[Rational], n_p: usize, n_q: usize, cfg: &FisherConfig) -> Result<FisherComparison> {
    check_alphas(alphas)?;
    let cfg_p = FisherConfig { n_moments: n_p, ..cfg.clone() };
    let cfg_q = FisherConfig { n_moments: n_q, ..cfg.clone() };
    let rows = alphas
        .par_iter()
        .map(|a| {
            let p = fisher_info(MomentFamily::PtHs, a, &cfg_p)?;
            let q = fisher_info(MomentFamily::DetHs, a, &cfg_q)?;
            Ok(FisherRow {
                alpha: a.clone(),
                p: p.value.to_f64(),
                q: q.value.to_f64(),
                p_nonpositive_nodes: p.nonpositive_nodes,
                q_nonpositive_nodes: q.nonpositive_nodes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    let qs: Vec<f64> = rows.iter().map(|r| r.q).collect();
    Ok(FisherComparison { n_p, n_q, correlation: correlation(&ps, &qs), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12 && (fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r + 1.0).abs() < 1e-12);
        assert_eq!(correlation(&[1.0], &[2.0]), None);
    }

    #[test]
    fn identical_tables_give_zero() {
        let est = Reconstruction::build(MomentFamily::DetHs, &q(1, 1), 30, Basis::Legendre, 128).unwrap();
        let cfg = FisherConfig::with_moments(30);
        let f = fisher_from_series(MomentFamily::DetHs, &q(1, 1), [&est, &est, &est], &cfg).unwrap();
        assert_eq!(f.value, 0);
    }

    #[test]
    fn rejects_small_alpha() {
        let cfg = FisherConfig::default();
        assert!(fisher_info(MomentFamily::DetHs, &q(1, 200), &cfg).is_err());
        let bad = FisherConfig { h: q(0, 1), ..FisherConfig::default() };
        assert!(fisher_info(MomentFamily::DetHs, &q(1, 1), &bad).is_err());
    }

    #[test]
    fn single_alpha_has_no_correlation() {
        let cfg = FisherConfig { quadrature_nodes: 40, ..FisherConfig::default() };
        let cmp = fisher_compare(&[q(1, 1)], 40, 40, &cfg).unwrap();
        assert_eq!(cmp.rows.len(), 1);
        assert!(cmp.correlation.is_none());
    }

    #[test]
    fn scan_lengths_and_logs() {
        let opts = ScanOptions { cumulative: true, ..ScanOptions::default() };
        let scan = intercept_scan(MomentFamily::PtHs, &[q(1, 1), q(2, 1)], 60, &opts).unwrap();
        assert_eq!(scan.intercepts.len(), 2);
        assert_eq!(scan.derivatives.len(), 2);
        assert_eq!(scan.cumulatives.as_ref().unwrap().len(), 2);
        for (p, l) in scan.intercepts.iter().zip(&scan.log_intercepts) {
            assert_eq!(l.is_some(), *p > 0);
        }
        assert!(intercept_scan(MomentFamily::PtHs, &[q(-1, 1)], 10, &opts).is_err());
    }
}
