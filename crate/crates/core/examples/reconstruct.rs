//! Legendre reconstruction of the partial-transpose density at alpha = 1:
//! the boundary value p(0), its slope, the separable mass and the stable
//! decimal places as the number of moments grows.

use detmoments::moments::{moment_table, MomentFamily};
use detmoments::reconstruct::{legendre_coeffs, stability_digits, DensityEstimate};
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    let family = MomentFamily::PtHs;
    let alpha = Rational::from(1);
    let zero = Rational::new();
    let top = family.support().b().clone();
    let table = moment_table(family, &alpha, 800)?;
    for n in [200, 400, 800] {
        let series = legendre_coeffs(&table, n)?;
        let stable = stability_digits(&series, 50, &zero)?;
        let est = DensityEstimate::new(series);
        println!(
            "N = {n:>3}: p(0) = {:.12e}  p'(0) = {:.6e}  mass(0, 1/256) = {:.10}  stable places {:?}",
            est.density(&zero)?.to_f64(),
            est.derivative(&zero)?.to_f64(),
            est.cdf(&zero, &top)?.to_f64(),
            stable
        );
    }
    Ok(())
}
