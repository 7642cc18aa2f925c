//! Fisher information in alpha from reconstructed densities: the
//! Hilbert-Schmidt determinant family with the Legendre basis and the Bures
//! family with the Jacobi-weighted basis.

use detmoments::analysis::{fisher_compare, fisher_info, FisherConfig};
use detmoments::moments::MomentFamily;
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    let half = Rational::from((1, 2));
    let hs = fisher_info(MomentFamily::DetHs, &half, &FisherConfig::default())?;
    println!("det-hs    alpha = 1/2, N = 100: I = {:.6}", hs.value.to_f64());

    let bures = fisher_info(MomentFamily::DetBures, &Rational::from(1), &FisherConfig::with_moments(150))?;
    println!(
        "det-bures alpha = 1,   N = 150: I = {:.6}  ({} nonpositive nodes)",
        bures.value.to_f64(),
        bures.nonpositive_nodes
    );

    let alphas: Vec<Rational> = (1..=8).map(Rational::from).collect();
    let cmp = fisher_compare(&alphas, 120, 100, &FisherConfig::default())?;
    for row in &cmp.rows {
        println!("alpha {:>2}: pt-hs {:.5e}  det-hs {:.5e}", row.alpha, row.p, row.q);
    }
    println!("correlation {:.5}", cmp.correlation.unwrap_or(f64::NAN));
    Ok(())
}
