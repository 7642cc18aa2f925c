//! Command-line front end.
//!
//! Every subcommand computes its full result before touching the file system,
//! then writes one primary output (JSON or CSV) atomically and prints a short
//! summary. Settings come from, in increasing priority: built-in defaults, a
//! `key=value` file given by `--config`, and command-line flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Integer, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, FisherConfig, Reconstruction, ScanOptions};
use crate::error::{Error, Result};
use crate::exact_arith::{parse_decimal, parse_rational, to_bigfloat};
use crate::io::{self, bigfloat_string, csv_with_comments, decimal_digits, rational_string, write_atomic};
use crate::mc_oracle::{run_mc, Field, McConfig};
use crate::moments::{moment_table, MomentFamily};
use crate::ratfind;
use crate::reconstruct::{default_precision, legendre_coeffs, stability_digits, DensityEstimate, SeriesFile};
use crate::sepprob;

#[derive(Parser, Debug)]
#[command(
    name = "detmoments",
    version,
    about = "Exact determinantal moments, density reconstruction and Monte Carlo checks for generalized two-qubit states",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact moments of one family. CSV columns: order,numerator,denominator,decimal
    Moments(MomentsArgs),
    /// Separability probability as a certified partial sum.
    /// CSV columns: alpha,partial_sum,tail_bound,terms_used,decimal,identified
    Sepprob(SepprobArgs),
    /// Legendre reconstruction of a family's density.
    /// CSV columns: x,density,derivative
    Reconstruct(ReconstructArgs),
    /// Boundary intercepts over an alpha grid.
    /// CSV columns: alpha,intercept,derivative,log_intercept[,cumulative]
    InterceptScan(ScanArgs),
    /// Fisher information of one family at one alpha.
    /// CSV columns: family,alpha,value,nonpositive_nodes
    Fisher(FisherArgs),
    /// Fisher information of pt-hs against det-hs over an alpha grid.
    /// CSV columns: alpha,p,q,p_nonpositive_nodes,q_nonpositive_nodes
    FisherCompare(FisherCompareArgs),
    /// Rational candidates for a decimal estimate.
    /// CSV columns: value,abs_error,method,numerator_factors,denominator_factors
    Ratfind(RatfindArgs),
    /// Monte Carlo sampling of Hilbert-Schmidt states.
    /// CSV columns: bin_lo,bin_hi,count (statistics in the comment header)
    Mc(McArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// key=value settings file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primary output file (default: <subcommand>.<format>)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Leave the generation timestamp out of the output
    #[arg(long)]
    pub no_timestamp: bool,
    /// Also write x,y pairs for plotting to this CSV file
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MomentsArgs {
    #[arg(long, default_value = "pt-hs")]
    pub family: String,
    #[arg(long, default_value = "1")]
    pub alpha: String,
    /// Highest moment order
    #[arg(long, default_value_t = 20)]
    pub n_moments: usize,
    /// Digits for the decimal column
    #[arg(long, default_value_t = 30)]
    pub digits: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SepprobArgs {
    /// Half-integral alpha
    #[arg(long, default_value = "1")]
    pub alpha: String,
    /// Certified bound on the omitted tail
    #[arg(long, default_value = "1e-12")]
    pub tol: String,
    #[arg(long, default_value_t = 128)]
    pub precision: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ReconstructArgs {
    #[arg(long, default_value = "pt-hs")]
    pub family: String,
    #[arg(long, default_value = "1")]
    pub alpha: String,
    #[arg(long, default_value_t = 500)]
    pub n_moments: usize,
    /// Working precision in bits (default 8N+256)
    #[arg(long)]
    pub precision: Option<u32>,
    /// Points at which to report density and slope, comma separated
    #[arg(long, default_value = "0")]
    pub at: String,
    /// Intervals for probability mass, e.g. "0:1/256,-1/256:1/256"
    #[arg(long)]
    pub cdf: Option<String>,
    /// Report decimal places at each point unchanged by the last K moments
    #[arg(long, default_value_t = 0)]
    pub stability_back: usize,
    /// Curve points for --plot-data
    #[arg(long, default_value_t = 513)]
    pub points: usize,
    /// Include the exact Legendre moments in JSON output
    #[arg(long)]
    pub with_series: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value = "pt-hs")]
    pub family: String,
    /// Comma list ("2,3") or inclusive range ("1/2:35:1/2")
    #[arg(long, default_value = "1/2:5:1/2")]
    pub alphas: String,
    #[arg(long, default_value_t = 500)]
    pub n_moments: usize,
    /// Evaluation point
    #[arg(long, default_value = "0")]
    pub point: String,
    /// Also report the mass on [point, b]
    #[arg(long)]
    pub cumulative: bool,
    #[arg(long)]
    pub precision: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FisherKnobs {
    /// Central-difference step in alpha
    #[arg(long, default_value = "1/100")]
    pub h: String,
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    /// Density floor applied before taking logarithms
    #[arg(long, default_value_t = 1e-12)]
    pub clamp: f64,
    /// Fraction of the support trimmed at each end
    #[arg(long, default_value = "0")]
    pub edge_margin: String,
    /// Largest tolerated fraction of nodes with nonpositive density
    #[arg(long, default_value_t = 0.5)]
    pub max_nonpositive: f64,
    #[arg(long, default_value = "auto")]
    pub basis: String,
    #[arg(long, default_value_t = 128)]
    pub precision: u32,
}

impl FisherKnobs {
    fn to_config(&self, n_moments: usize) -> Result<FisherConfig> {
        Ok(FisherConfig {
            h: parse_rational(&self.h)?,
            n_moments,
            quadrature_nodes: self.nodes,
            edge_margin: parse_rational(&self.edge_margin)?,
            clamp_epsilon: self.clamp,
            max_nonpositive_fraction: self.max_nonpositive,
            precision_bits: self.precision,
            basis: self.basis.parse()?,
        })
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FisherArgs {
    #[arg(long, default_value = "det-hs")]
    pub family: String,
    #[arg(long, default_value = "1/2")]
    pub alpha: String,
    #[arg(long, default_value_t = 100)]
    pub n_moments: usize,
    /// Curve points for --plot-data (density at alpha)
    #[arg(long, default_value_t = 513)]
    pub points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: FisherKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FisherCompareArgs {
    #[arg(long, default_value = "1/4:8:1/4")]
    pub alphas: String,
    /// Moments for the partial-transpose family
    #[arg(long, default_value_t = 245)]
    pub n_p: usize,
    /// Moments for the determinant family
    #[arg(long, default_value_t = 100)]
    pub n_q: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub knobs: FisherKnobs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RatMethod {
    Cf,
    Smooth,
    Both,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RatfindArgs {
    /// Decimal estimate; its trailing digits set the default tolerance
    #[arg(long)]
    pub decimal: String,
    #[arg(long, value_enum, default_value = "cf")]
    pub method: RatMethod,
    #[arg(long, default_value = "1000")]
    pub max_denominator: String,
    #[arg(long, default_value_t = 5)]
    pub max_results: usize,
    /// Denominator primes for the smooth search, comma separated
    #[arg(long)]
    pub primes: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub max_exponent: u32,
    /// Matching tolerance (default: 5 units in the last given place)
    #[arg(long)]
    pub tol: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct McArgs {
    #[arg(long, default_value = "complex")]
    pub field: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub max_order: usize,
    #[arg(long, default_value_t = 2000)]
    pub bins: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

/// Result of one subcommand, ready to be written.
struct Report {
    name: &'static str,
    default_format: Format,
    json: Value,
    csv_header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
    csv_notes: Vec<String>,
    plot: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    summary: Vec<String>,
}

impl Report {
    fn new(name: &'static str, default_format: Format) -> Self {
        Report {
            name,
            default_format,
            json: Value::Null,
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
            csv_notes: Vec::new(),
            plot: None,
            summary: Vec::new(),
        }
    }
}

/// Turns `key=value` lines into `--key value` arguments.
pub fn config_file_args(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value, got {line:?}", no + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::Parse(format!("config line {}: invalid key {key:?}", no + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Inserts the settings of a `--config` file right after the subcommand so
/// that explicit flags, which come later, override them.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        }
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", Path::new(&path).display())))?;
    let extra = config_file_args(&text)?;
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// `"2,3"` or an inclusive range `"start:stop:step"`.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<Rational>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("range must be start:stop:step, got {s:?}")));
        }
        let (start, stop, step) = (parse_rational(parts[0])?, parse_rational(parts[1])?, parse_rational(parts[2])?);
        if step <= 0 {
            return Err(Error::InvalidArgument(format!("range step must be positive, got {step}")));
        }
        let count = Rational::from(&stop - &start) / &step;
        if !(0..=100_000).contains(&count) {
            return Err(Error::InvalidArgument(format!("range {s:?} is empty or too long")));
        }
        let mut out = Vec::new();
        let mut a = start;
        while a <= stop {
            out.push(a.clone());
            a += &step;
        }
        return Ok(out);
    }
    s.split(',').map(parse_rational).collect()
}

fn parse_points(s: &str) -> Result<Vec<Rational>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_rational).collect()
}

fn parse_intervals(s: &str) -> Result<Vec<(Rational, Rational)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (lo, hi) =
                p.split_once(':').ok_or_else(|| Error::Parse(format!("interval must be lo:hi, got {p:?}")))?;
            Ok((parse_rational(lo)?, parse_rational(hi)?))
        })
        .collect()
}

fn parse_primes(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|p| p.trim().parse::<u64>().map_err(|_| Error::Parse(p.to_string()))).collect()
}

fn digits_of(bits: u32) -> usize {
    decimal_digits(bits).min(40)
}

fn run_moments(a: &MomentsArgs) -> Result<Report> {
    let family: MomentFamily = a.family.parse()?;
    let alpha = parse_rational(&a.alpha)?;
    let table = moment_table(family, &alpha, a.n_moments)?;
    let bits = (a.digits as f64 / std::f64::consts::LOG10_2).ceil() as u32 + 16;
    let decimals: Vec<String> = table.values.iter().map(|m| bigfloat_string(&to_bigfloat(m, bits), a.digits)).collect();
    let mut r = Report::new("moments", Format::Csv);
    r.csv_header = vec!["order", "numerator", "denominator", "decimal"];
    r.csv_rows = table
        .values
        .iter()
        .zip(&decimals)
        .enumerate()
        .map(|(n, (m, d))| vec![n.to_string(), m.numer().to_string(), m.denom().to_string(), d.clone()])
        .collect();
    r.json = json!({
        "family": family,
        "alpha": rational_string(&alpha),
        "moments": table.values.iter().zip(&decimals).enumerate().map(|(n, (m, d))| json!({
            "order": n,
            "value": rational_string(m),
            "decimal": d,
        })).collect::<Vec<_>>(),
    });
    r.plot = Some((vec!["x", "y"], decimals.iter().enumerate().map(|(n, d)| vec![n.to_string(), d.clone()]).collect()));
    let last = table.values.last().expect("order 0 always present");
    r.summary.push(format!("{family} alpha={alpha}: moments 0..={}", a.n_moments));
    r.summary.push(format!("order {}: {}", a.n_moments, rational_string(last)));
    Ok(r)
}

fn run_sepprob(a: &SepprobArgs) -> Result<Report> {
    let alpha = parse_rational(&a.alpha)?;
    let tol = parse_rational(&a.tol)?;
    let res = sepprob::sep_prob_with_precision(&alpha, &tol, a.precision)?;
    let hi = Rational::from(&res.partial_sum + &res.tail_bound);
    let identified = ratfind::simplest_in_interval(&res.partial_sum, &hi)?;
    let digits = digits_of(a.precision);
    let decimal = bigfloat_string(&res.decimal, digits);
    let mut r = Report::new("sepprob", Format::Json);
    r.json = json!({
        "alpha": rational_string(&alpha),
        "partial_sum": rational_string(&res.partial_sum),
        "tail_bound": rational_string(&res.tail_bound),
        "terms_used": res.terms_used,
        "decimal": decimal,
        "simplest_rational_in_bracket": rational_string(&identified),
    });
    r.csv_header = vec!["alpha", "partial_sum", "tail_bound", "terms_used", "decimal", "identified"];
    r.csv_rows = vec![vec![
        rational_string(&alpha),
        rational_string(&res.partial_sum),
        rational_string(&res.tail_bound),
        res.terms_used.to_string(),
        decimal.clone(),
        rational_string(&identified),
    ]];
    let mut partial = Rational::new();
    let mut rows = Vec::with_capacity(res.terms_used);
    for i in 0..res.terms_used {
        partial += sepprob::f_term(&(alpha.clone() + i as u32))?;
        rows.push(vec![(i + 1).to_string(), format!("{:.17e}", partial.to_f64())]);
    }
    r.plot = Some((vec!["x", "y"], rows));
    r.summary.push(format!("P({alpha}) = {identified}"));
    r.summary.push(format!("decimal {decimal}"));
    r.summary.push(format!("{} terms, tail bound {:.3e}", res.terms_used, res.tail_bound.to_f64()));
    Ok(r)
}

fn run_reconstruct(a: &ReconstructArgs) -> Result<Report> {
    let family: MomentFamily = a.family.parse()?;
    let alpha = parse_rational(&a.alpha)?;
    let points = parse_points(&a.at)?;
    let intervals = a.cdf.as_deref().map(parse_intervals).transpose()?.unwrap_or_default();
    let iv = family.support();
    for x in &points {
        iv.check(x)?;
    }
    let series = legendre_coeffs(&moment_table(family, &alpha, a.n_moments)?, a.n_moments)?;
    let bits = a.precision.unwrap_or_else(|| default_precision(a.n_moments));
    let est = DensityEstimate::with_precision(series.clone(), bits);
    let digits = digits_of(bits);
    let mut evals = Vec::new();
    let mut rows = Vec::new();
    for x in &points {
        let p = bigfloat_string(&est.density(x)?, digits);
        let d = bigfloat_string(&est.derivative(x)?, digits);
        let stable = if a.stability_back > 0 { stability_digits(&series, a.stability_back, x)? } else { None };
        rows.push(vec![rational_string(x), p.clone(), d.clone()]);
        evals.push(json!({ "x": rational_string(x), "density": p, "derivative": d, "stable_places": stable }));
    }
    let mut masses = Vec::new();
    for (lo, hi) in &intervals {
        let m = bigfloat_string(&est.cdf(lo, hi)?, digits);
        masses.push(json!({ "lo": rational_string(lo), "hi": rational_string(hi), "mass": m }));
    }
    let mut r = Report::new("reconstruct", Format::Json);
    r.json = json!({
        "family": family,
        "alpha": rational_string(&alpha),
        "n_moments": a.n_moments,
        "precision_bits": bits,
        "points": evals,
        "cdf": masses,
        "series": if a.with_series { serde_json::to_value(SeriesFile::from(&series))? } else { Value::Null },
    });
    r.csv_header = vec!["x", "density", "derivative"];
    r.csv_rows = rows.clone();
    r.csv_notes = masses.iter().map(|m| format!("cdf {m}")).collect();
    r.plot = Some((
        vec!["x", "y"],
        est.curve(a.points).into_iter().map(|(x, y)| vec![format!("{x:.17e}"), format!("{y:.17e}")]).collect(),
    ));
    r.summary.push(format!("{family} alpha={alpha} N={}", a.n_moments));
    for row in &rows {
        r.summary.push(format!("p({}) = {}   p'({}) = {}", row[0], row[1], row[0], row[2]));
    }
    for m in &masses {
        r.summary.push(format!(
            "mass [{}, {}] = {}",
            m["lo"].as_str().unwrap_or(""),
            m["hi"].as_str().unwrap_or(""),
            m["mass"].as_str().unwrap_or("")
        ));
    }
    Ok(r)
}

fn run_scan(a: &ScanArgs) -> Result<Report> {
    let family: MomentFamily = a.family.parse()?;
    let alphas = parse_alpha_grid(&a.alphas)?;
    let opts = ScanOptions { point: parse_rational(&a.point)?, cumulative: a.cumulative, precision_bits: a.precision };
    let scan = analysis::intercept_scan(family, &alphas, a.n_moments, &opts)?;
    let digits = digits_of(a.precision.unwrap_or_else(|| default_precision(a.n_moments)));
    let fmt = |f: &rug::Float| bigfloat_string(f, digits);
    let mut header = vec!["alpha", "intercept", "derivative", "log_intercept"];
    if a.cumulative {
        header.push("cumulative");
    }
    let mut rows = Vec::new();
    for i in 0..alphas.len() {
        let mut row = vec![
            rational_string(&alphas[i]),
            fmt(&scan.intercepts[i]),
            fmt(&scan.derivatives[i]),
            scan.log_intercepts[i].map(|l| format!("{l:.15}")).unwrap_or_default(),
        ];
        if let Some(c) = &scan.cumulatives {
            row.push(fmt(&c[i]));
        }
        rows.push(row);
    }
    let fit = scan.log_intercept_fit();
    let mut r = Report::new("intercept-scan", Format::Csv);
    r.json = json!({ "scan": serde_json::to_value(&scan)?, "log_intercept_fit": fit });
    r.csv_header = header;
    r.csv_rows = rows.clone();
    if let Some(f) = fit {
        r.csv_notes.push(format!("log_intercept_fit intercept={} slope={} r={}", f.intercept, f.slope, f.r));
    }
    r.plot = Some((
        vec!["x", "y"],
        rows.iter().filter(|row| !row[3].is_empty()).map(|row| vec![row[0].clone(), row[3].clone()]).collect(),
    ));
    r.summary.push(format!("{family} N={} at x={}", a.n_moments, a.point));
    for row in &rows {
        r.summary.push(format!("alpha={}: p={} p'={}", row[0], row[1], row[2]));
    }
    if let Some(f) = fit {
        r.summary.push(format!("ln p fit: {:.6} + ({:.6}) alpha, r = {:.6}", f.intercept, f.slope, f.r));
    }
    Ok(r)
}

fn run_fisher(a: &FisherArgs) -> Result<Report> {
    let family: MomentFamily = a.family.parse()?;
    let alpha = parse_rational(&a.alpha)?;
    let cfg = a.knobs.to_config(a.n_moments)?;
    let est = analysis::fisher_info(family, &alpha, &cfg)?;
    let value = bigfloat_string(&est.value, 20);
    let recon = Reconstruction::build(family, &alpha, a.n_moments, cfg.basis, cfg.precision_bits)?;
    let iv = family.support();
    let n = a.points.max(2);
    let mut curve = Vec::with_capacity(n);
    for i in 1..n - 1 {
        let x = iv.a() + iv.width() * Rational::from((i as u64, (n - 1) as u64));
        curve.push(vec![format!("{:.17e}", x.to_f64()), format!("{:.17e}", recon.density(&x)?.to_f64())]);
    }
    let mut r = Report::new("fisher", Format::Json);
    r.json = json!({
        "estimate": serde_json::to_value(&est)?,
        "basis": cfg.basis.resolve(family)?,
    });
    r.csv_header = vec!["family", "alpha", "value", "nonpositive_nodes"];
    r.csv_rows =
        vec![vec![family.to_string(), rational_string(&alpha), value.clone(), est.nonpositive_nodes.to_string()]];
    r.plot = Some((vec!["x", "y"], curve));
    r.summary.push(format!("I({alpha}) = {value} for {family}, N={}", a.n_moments));
    r.summary.push(format!("{} of {} nodes had nonpositive density", est.nonpositive_nodes, est.quadrature_nodes));
    Ok(r)
}

fn run_fisher_compare(a: &FisherCompareArgs) -> Result<Report> {
    let alphas = parse_alpha_grid(&a.alphas)?;
    let cfg = a.knobs.to_config(a.n_q)?;
    let cmp = analysis::fisher_compare(&alphas, a.n_p, a.n_q, &cfg)?;
    let mut r = Report::new("fisher-compare", Format::Json);
    r.json = serde_json::to_value(&cmp)?;
    r.csv_header = vec!["alpha", "p", "q", "p_nonpositive_nodes", "q_nonpositive_nodes"];
    r.csv_rows = cmp
        .rows
        .iter()
        .map(|row| {
            vec![
                rational_string(&row.alpha),
                format!("{:.15e}", row.p),
                format!("{:.15e}", row.q),
                row.p_nonpositive_nodes.to_string(),
                row.q_nonpositive_nodes.to_string(),
            ]
        })
        .collect();
    let corr = cmp.correlation.map(|c| format!("{c:.6}")).unwrap_or_else(|| "undefined".into());
    r.csv_notes.push(format!("correlation={corr}"));
    r.plot = Some((
        vec!["x", "y"],
        cmp.rows.iter().map(|row| vec![format!("{:.15e}", row.p), format!("{:.15e}", row.q)]).collect(),
    ));
    r.summary.push(format!("{} alphas, N_p={} N_q={}", alphas.len(), a.n_p, a.n_q));
    r.summary.push(format!("correlation {corr}"));
    Ok(r)
}

fn run_ratfind(a: &RatfindArgs) -> Result<Report> {
    let x = parse_decimal(&a.decimal)?;
    let mut cands = Vec::new();
    if matches!(a.method, RatMethod::Cf | RatMethod::Both) {
        let d = Integer::from_str_radix(a.max_denominator.trim(), 10)
            .map_err(|_| Error::Parse(a.max_denominator.clone()))?;
        cands.extend(ratfind::cf_candidates(&a.decimal, &d, a.max_results)?);
    }
    if matches!(a.method, RatMethod::Smooth | RatMethod::Both) {
        let primes = parse_primes(
            a.primes.as_deref().ok_or_else(|| Error::InvalidArgument("smooth search needs --primes".into()))?,
        )?;
        let tol = match &a.tol {
            Some(t) => parse_rational(t)?,
            None => ratfind::default_tolerance(&a.decimal),
        };
        let mut found = ratfind::smooth_search(&a.decimal, &primes, a.max_exponent, &tol)?;
        found.truncate(a.max_results);
        cands.extend(found);
    }
    let mut r = Report::new("ratfind", Format::Json);
    r.json =
        json!({ "input": a.decimal, "input_exact": rational_string(&x), "candidates": serde_json::to_value(&cands)? });
    r.csv_header = vec!["value", "abs_error", "method", "numerator_factors", "denominator_factors"];
    r.csv_rows = cands
        .iter()
        .map(|c| {
            vec![
                rational_string(&c.value),
                rational_string(&c.abs_error),
                serde_json::to_value(c.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                c.numerator_factorization.to_string(),
                c.denominator_factorization.to_string(),
            ]
        })
        .collect();
    r.plot = Some((
        vec!["x", "y"],
        cands.iter().map(|c| vec![c.value.denom().to_string(), format!("{:.6e}", c.abs_error.to_f64())]).collect(),
    ));
    for c in &cands {
        r.summary.push(format!(
            "{} = ({}) / ({})  |error| {:.3e}",
            rational_string(&c.value),
            c.numerator_factorization,
            c.denominator_factorization,
            c.abs_error.to_f64()
        ));
    }
    if cands.is_empty() {
        r.summary.push("no candidates".into());
    }
    Ok(r)
}

fn run_mc_command(a: &McArgs) -> Result<Report> {
    let field: Field = a.field.parse()?;
    let cfg = McConfig {
        field,
        n_samples: a.samples,
        seed: a.seed,
        max_order: a.max_order,
        bins: a.bins,
        workers: a.common.workers,
    };
    let stats = run_mc(&cfg)?;
    let mut r = Report::new("mc", Format::Json);
    r.json = serde_json::to_value(&stats)?;
    let edges = stats.histogram.edges();
    r.csv_header = vec!["bin_lo", "bin_hi", "count"];
    r.csv_rows = stats
        .histogram
        .counts
        .iter()
        .enumerate()
        .map(|(i, c)| vec![format!("{:.17e}", edges[i]), format!("{:.17e}", edges[i + 1]), c.to_string()])
        .collect();
    r.csv_notes.push(format!("sep_fraction={} std_error={}", stats.sep_fraction, stats.sep_std_error));
    for (name, ms) in [("pt", &stats.moments_pt), ("det", &stats.moments_det), ("balanced", &stats.moments_balanced)] {
        for m in ms.iter() {
            r.csv_notes.push(format!("moment_{name}_{} mean={} std_error={}", m.order, m.mean, m.std_error));
        }
    }
    let n = stats.n_samples as f64;
    r.plot = Some((
        vec!["x", "y"],
        stats
            .histogram
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = edges[i + 1] - edges[i];
                vec![format!("{:.17e}", 0.5 * (edges[i] + edges[i + 1])), format!("{:.17e}", *c as f64 / (n * w))]
            })
            .collect(),
    ));
    r.summary.push(format!("{field} field, {} samples, seed {}", stats.n_samples, stats.seed));
    r.summary.push(format!("separable fraction {:.6} +/- {:.6}", stats.sep_fraction, stats.sep_std_error));
    if let Some(m) = stats.moments_pt.first() {
        r.summary.push(format!("mean det(rho^PT) {:.6e} +/- {:.2e}", m.mean, m.std_error));
    }
    if let Some(m) = stats.moments_det.first() {
        r.summary.push(format!("mean det(rho) {:.6e} +/- {:.2e}", m.mean, m.std_error));
    }
    Ok(r)
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::Moments(a) => &a.common,
        Command::Sepprob(a) => &a.common,
        Command::Reconstruct(a) => &a.common,
        Command::InterceptScan(a) => &a.common,
        Command::Fisher(a) => &a.common,
        Command::FisherCompare(a) => &a.common,
        Command::Ratfind(a) => &a.common,
        Command::Mc(a) => &a.common,
    }
}

fn config_echo(cmd: &Command) -> Result<Value> {
    Ok(match cmd {
        Command::Moments(a) => serde_json::to_value(a)?,
        Command::Sepprob(a) => serde_json::to_value(a)?,
        Command::Reconstruct(a) => serde_json::to_value(a)?,
        Command::InterceptScan(a) => serde_json::to_value(a)?,
        Command::Fisher(a) => serde_json::to_value(a)?,
        Command::FisherCompare(a) => serde_json::to_value(a)?,
        Command::Ratfind(a) => serde_json::to_value(a)?,
        Command::Mc(a) => serde_json::to_value(a)?,
    })
}

fn compute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Moments(a) => run_moments(a),
        Command::Sepprob(a) => run_sepprob(a),
        Command::Reconstruct(a) => run_reconstruct(a),
        Command::InterceptScan(a) => run_scan(a),
        Command::Fisher(a) => run_fisher(a),
        Command::FisherCompare(a) => run_fisher_compare(a),
        Command::Ratfind(a) => run_ratfind(a),
        Command::Mc(a) => run_mc_command(a),
    }
}

fn config_lines(echo: &Value) -> Vec<String> {
    match echo {
        Value::Object(map) => map
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| match v {
                Value::String(s) => format!("config {k}={s}"),
                other => format!("config {k}={other}"),
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Paths written by a successful run.
#[derive(Debug, Clone)]
pub struct Written {
    pub output: PathBuf,
    pub plot_data: Option<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs a parsed command: computes, then writes the outputs.
pub fn execute(cli: &Cli) -> Result<Written> {
    let common = common_of(&cli.command);
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        // a second build in the same process fails harmlessly; the pool size stays as first set
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let echo = config_echo(&cli.command)?;
    let report = compute(&cli.command)?;
    let format = common.format.unwrap_or(report.default_format);
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    let output = common.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", report.name)));
    let timestamp = if common.no_timestamp {
        None
    } else {
        Some(SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
    };
    let primary = match format {
        Format::Json => {
            let mut doc = json!({
                "schema_version": io::SCHEMA_VERSION,
                "command": report.name,
                "config": echo,
                "result": report.json,
            });
            if let Some(t) = timestamp {
                doc["generated_at_unix"] = json!(t);
            }
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            text.into_bytes()
        }
        Format::Csv => {
            let mut notes = vec![format!("schema_version={}", io::SCHEMA_VERSION), format!("command={}", report.name)];
            notes.extend(config_lines(&echo));
            if let Some(t) = timestamp {
                notes.push(format!("generated_at_unix={t}"));
            }
            notes.extend(report.csv_notes.iter().cloned());
            csv_with_comments(&notes, &report.csv_header, &report.csv_rows)?
        }
    };
    let plot_bytes = match (&common.plot_data, &report.plot) {
        (Some(_), Some((header, rows))) => {
            let notes = vec![format!("command={}", report.name)];
            Some(csv_with_comments(&notes, header, rows)?)
        }
        _ => None,
    };
    write_atomic(&output, &primary)?;
    if let (Some(path), Some(bytes)) = (&common.plot_data, plot_bytes) {
        write_atomic(path, &bytes)?;
    }
    Ok(Written { output, plot_data: common.plot_data.clone(), summary: report.summary })
}

/// Entry point shared by the binary: parses `args`, runs, prints the summary.
/// Returns the process exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(w) => {
            for line in &w.summary {
                println!("{line}");
            }
            println!("wrote {}", w.output.display());
            if let Some(p) = &w.plot_data {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
