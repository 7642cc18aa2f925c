//! Boundary intercepts p(0) of the partial-transpose density over a grid of
//! alpha, and the straight-line fit of their logarithms.

use detmoments::analysis::{intercept_scan, ScanOptions};
use detmoments::moments::MomentFamily;
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    let alphas: Vec<Rational> = (1..=8).map(|k| Rational::from((k, 2))).collect();
    let opts = ScanOptions { cumulative: true, ..ScanOptions::default() };
    let scan = intercept_scan(MomentFamily::PtHs, &alphas, 400, &opts)?;
    for (i, a) in alphas.iter().enumerate() {
        let mass = scan.cumulatives.as_ref().map(|c| c[i].to_f64()).unwrap_or(f64::NAN);
        println!(
            "alpha {a:>3}: p(0) = {:.8e}  ln p(0) = {:>10.5}  mass above 0 = {mass:.8}",
            scan.intercepts[i].to_f64(),
            scan.log_intercepts[i].unwrap_or(f64::NAN)
        );
    }
    if let Some(fit) = scan.log_intercept_fit() {
        println!("ln p(0) ~ {:.4} + {:.4} alpha  (r = {:.6})", fit.intercept, fit.slope, fit.r);
    }
    Ok(())
}
