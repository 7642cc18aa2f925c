//! Monte Carlo ground truth for the determinantal moments.
//!
//! Density matrices are drawn from the Hilbert-Schmidt measure as
//! `rho = G G^dagger / tr(G G^dagger)` with Gaussian `G`. For complex entries
//! `G` is square (4x4); for real entries the flat measure needs a 4x5 `G`
//! (the real Wishart density carries `det(W)^((K-N-1)/2)`).
//!
//! Samples are generated in fixed-size blocks. Block `i` draws from the
//! ChaCha stream `i` of the run seed, and block partial sums are combined
//! in a fixed pairwise order, so results depend only on `(seed, n_samples)`
//! and not on how many threads did the work.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, Matrix4, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Samples per RNG stream.
pub const BLOCK_SIZE: u64 = 4096;

/// Trace / Hermiticity / positivity tolerance.
pub const MATRIX_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// two-rebit states, alpha = 1/2
    Real,
    /// two-qubit states, alpha = 1
    Complex,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }

    /// Dyson-like index of the field as `(numerator, denominator)`.
    pub fn alpha(self) -> (i64, i64) {
        match self {
            Field::Real => (1, 2),
            Field::Complex => (1, 1),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            "quaternion" => Err(Error::InvalidArgument("quaternionic sampling is not supported".into())),
            other => Err(Error::InvalidArgument(format!("unknown field {other:?}"))),
        }
    }
}

/// A 4x4 two-qubit density matrix. Real states are stored with zero
/// imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub entries: Matrix4<C64>,
    pub field: Field,
}

impl DensityMatrix {
    pub fn new(entries: Matrix4<C64>, field: Field) -> Result<Self> {
        let rho = DensityMatrix { entries, field };
        rho.validate()?;
        Ok(rho)
    }

    /// Checks Hermiticity, unit trace and positivity within [`MATRIX_TOL`].
    pub fn validate(&self) -> Result<()> {
        let m = &self.entries;
        if (m - m.adjoint()).iter().any(|z| z.norm() > MATRIX_TOL) {
            return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
        }
        if self.field == Field::Real && m.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument("real state with complex entries".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > MATRIX_TOL || tr.im.abs() > MATRIX_TOL {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -MATRIX_TOL {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {min_eig}")));
        }
        Ok(())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn det(&self) -> f64 {
        hermitian_det(&self.entries)
    }

    /// Partial transpose on the second qubit.
    pub fn partial_transpose(&self) -> Matrix4<C64> {
        partial_transpose(&self.entries)
    }
}

/// Transpose of the second tensor factor: `((i,j),(k,l)) -> ((i,l),(k,j))`.
pub fn partial_transpose(m: &Matrix4<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        m[(2 * i + l, 2 * k + j)]
    })
}

/// Transpose of the first tensor factor.
pub fn partial_transpose_first(m: &Matrix4<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| {
        let (i, j) = (r / 2, r % 2);
        let (k, l) = (c / 2, c % 2);
        m[(2 * k + j, 2 * i + l)]
    })
}

/// Determinant of a Hermitian matrix (real up to rounding).
pub fn hermitian_det(m: &Matrix4<C64>) -> f64 {
    m.determinant().re
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One Hilbert-Schmidt distributed density matrix.
pub fn sample_hs<R: Rng>(field: Field, rng: &mut R) -> DensityMatrix {
    let w: Matrix4<C64> = match field {
        Field::Complex => {
            let g = Matrix4::<C64>::from_fn(|_, _| C64::new(normal(rng), normal(rng)));
            g * g.adjoint()
        }
        Field::Real => {
            let g = SMatrix::<f64, 4, 5>::from_fn(|_, _| normal(rng));
            (g * g.transpose()).map(|x| C64::new(x, 0.0))
        }
    };
    let tr = w.trace().re;
    let mut entries = w / C64::new(tr, 0.0);
    // remove rounding asymmetry so the state is exactly Hermitian
    entries = (entries + entries.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix { entries, field }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub field: Field,
    pub n_samples: u64,
    pub seed: u64,
    /// Moments of orders `1..=max_order` are accumulated.
    pub max_order: usize,
    pub bins: usize,
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(field: Field, n_samples: u64, seed: u64) -> Self {
        McConfig { field, n_samples, seed, max_order: 3, bins: 2000, workers: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoment {
    pub order: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl EmpiricalMoment {
    /// `|mean - expected|` in units of the standard error.
    pub fn z_score(&self, expected: f64) -> f64 {
        (self.mean - expected).abs() / self.std_error
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Histogram { lo, hi, counts: vec![0; bins.max(1)] }
    }

    fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let pos = ((x - self.lo) / (self.hi - self.lo) * bins as f64).floor();
        let idx = (pos.max(0.0) as usize).min(bins - 1);
        self.counts[idx] += 1;
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins).map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64).collect()
    }

    /// Empirical CDF at each right bin edge.
    pub fn cumulative(&self) -> Vec<f64> {
        let total = self.total() as f64;
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub config: McConfig,
    pub n_samples: u64,
    pub seed: u64,
    pub moments_pt: Vec<EmpiricalMoment>,
    pub moments_det: Vec<EmpiricalMoment>,
    pub moments_balanced: Vec<EmpiricalMoment>,
    pub sep_fraction: f64,
    pub sep_std_error: f64,
    /// det(rho^PT) over [-1/16, 1/256]
    pub histogram: Histogram,
    pub min_det_pt: f64,
    pub max_det_pt: f64,
    pub min_det: f64,
    pub max_det: f64,
}

/// Per-block partial sums.
#[derive(Clone, Debug)]
struct Accum {
    n: u64,
    /// `sum x^k` for k = 1..=2*max_order, per observable
    pt: Vec<f64>,
    det: Vec<f64>,
    bal: Vec<f64>,
    separable: u64,
    hist: Histogram,
    min_pt: f64,
    max_pt: f64,
    min_det: f64,
    max_det: f64,
}

impl Accum {
    fn new(powers: usize, bins: usize) -> Self {
        Accum {
            n: 0,
            pt: vec![0.0; powers],
            det: vec![0.0; powers],
            bal: vec![0.0; powers],
            separable: 0,
            hist: Histogram::new(-1.0 / 16.0, 1.0 / 256.0, bins),
            min_pt: f64::INFINITY,
            max_pt: f64::NEG_INFINITY,
            min_det: f64::INFINITY,
            max_det: f64::NEG_INFINITY,
        }
    }

    fn add(&mut self, det_pt: f64, det: f64) {
        self.n += 1;
        let bal = det * det_pt;
        let (mut p, mut d, mut b) = (1.0, 1.0, 1.0);
        for k in 0..self.pt.len() {
            p *= det_pt;
            d *= det;
            b *= bal;
            self.pt[k] += p;
            self.det[k] += d;
            self.bal[k] += b;
        }
        if det_pt >= 0.0 {
            self.separable += 1;
        }
        self.hist.add(det_pt);
        self.min_pt = self.min_pt.min(det_pt);
        self.max_pt = self.max_pt.max(det_pt);
        self.min_det = self.min_det.min(det);
        self.max_det = self.max_det.max(det);
    }

    fn merge(mut self, other: &Accum) -> Accum {
        self.n += other.n;
        for (a, b) in self.pt.iter_mut().zip(&other.pt) {
            *a += b;
        }
        for (a, b) in self.det.iter_mut().zip(&other.det) {
            *a += b;
        }
        for (a, b) in self.bal.iter_mut().zip(&other.bal) {
            *a += b;
        }
        self.separable += other.separable;
        self.hist.merge(&other.hist);
        self.min_pt = self.min_pt.min(other.min_pt);
        self.max_pt = self.max_pt.max(other.max_pt);
        self.min_det = self.min_det.min(other.min_det);
        self.max_det = self.max_det.max(other.max_det);
        self
    }
}

fn run_block(cfg: &McConfig, block: u64) -> Accum {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(block);
    let start = block * BLOCK_SIZE;
    let count = BLOCK_SIZE.min(cfg.n_samples - start);
    let mut acc = Accum::new(2 * cfg.max_order, cfg.bins);
    for _ in 0..count {
        let rho = sample_hs(cfg.field, &mut rng);
        let det = rho.det();
        let det_pt = hermitian_det(&rho.partial_transpose());
        acc.add(det_pt, det);
    }
    acc
}

/// Adjacent pairs are merged level by level.
fn pairwise_merge(mut parts: Vec<Accum>) -> Accum {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(&b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().expect("at least one block")
}

fn moments_from_sums(sums: &[f64], n: u64, max_order: usize) -> Vec<EmpiricalMoment> {
    let nf = n as f64;
    (1..=max_order)
        .map(|k| {
            let mean = sums[k - 1] / nf;
            let second = sums[2 * k - 1] / nf;
            let var = (second - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
            EmpiricalMoment { order: k, mean, std_error: (var / nf).sqrt() }
        })
        .collect()
}

pub fn run_mc(cfg: &McConfig) -> Result<SampleStats> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if cfg.max_order == 0 {
        return Err(Error::InvalidArgument("max_order must be at least 1".into()));
    }
    let blocks = cfg.n_samples.div_ceil(BLOCK_SIZE);
    let work = || (0..blocks).into_par_iter().map(|b| run_block(cfg, b)).collect::<Vec<_>>();
    let parts = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work),
        None => work(),
    };
    let total = pairwise_merge(parts);
    let n = total.n;
    let p = total.separable as f64 / n as f64;
    Ok(SampleStats {
        config: cfg.clone(),
        n_samples: n,
        seed: cfg.seed,
        moments_pt: moments_from_sums(&total.pt, n, cfg.max_order),
        moments_det: moments_from_sums(&total.det, n, cfg.max_order),
        moments_balanced: moments_from_sums(&total.bal, n, cfg.max_order),
        sep_fraction: p,
        sep_std_error: (p * (1.0 - p) / n as f64).sqrt(),
        histogram: total.hist,
        min_det_pt: total.min_pt,
        max_det_pt: total.max_pt,
        min_det: total.min_det,
        max_det: total.max_det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> Matrix4<C64> {
        let mut m = Matrix4::zeros();
        for (r, cc) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, cc)] = c(0.5);
        }
        m
    }

    #[test]
    fn samples_are_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for field in [Field::Real, Field::Complex] {
            for _ in 0..200 {
                let rho = sample_hs(field, &mut rng);
                rho.validate().unwrap();
            }
        }
    }

    #[test]
    fn product_state_is_pt_invariant() {
        let (p, q) = (0.3, 0.8);
        let d = [p * q, p * (1.0 - q), (1.0 - p) * q, (1.0 - p) * (1.0 - q)];
        let m = Matrix4::from_fn(|r, cc| if r == cc { c(d[r]) } else { c(0.0) });
        assert_eq!(partial_transpose(&m), m);
    }

    #[test]
    fn bell_state_reaches_left_endpoint() {
        let rho = DensityMatrix::new(bell(), Field::Real).unwrap();
        assert!((rho.det()).abs() < 1e-15);
        let det_pt = hermitian_det(&rho.partial_transpose());
        assert!((det_pt + 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn both_partial_transposes_share_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let rho = sample_hs(Field::Complex, &mut rng);
            let a = hermitian_det(&partial_transpose(&rho.entries));
            let b = hermitian_det(&partial_transpose_first(&rho.entries));
            assert!((a - b).abs() < 1e-15);
            assert!(partial_transpose(&rho.entries).trace().re - 1.0 < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        let mut m = bell();
        m[(0, 0)] = c(0.6);
        assert!(DensityMatrix::new(m, Field::Complex).is_err());
        let mut m = bell();
        m[(0, 3)] = C64::new(0.5, 0.1);
        assert!(DensityMatrix::new(m, Field::Complex).is_err());
        let diag = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(1.2), c(-0.2), c(0.0), c(0.0)));
        assert!(DensityMatrix::new(diag, Field::Complex).is_err());
        assert!("quaternion".parse::<Field>().is_err());
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut cfg = McConfig::new(Field::Complex, 10_000, 11);
        cfg.workers = Some(1);
        let a = run_mc(&cfg).unwrap();
        cfg.workers = Some(4);
        let b = run_mc(&cfg).unwrap();
        assert_eq!(a.moments_pt, b.moments_pt);
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.sep_fraction, b.sep_fraction);
        assert_eq!(a.histogram.total(), 10_000);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(run_mc(&McConfig::new(Field::Real, 0, 1)).is_err());
    }
}
