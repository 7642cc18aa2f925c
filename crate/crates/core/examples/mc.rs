//! Monte Carlo check of the exact moments and the separability probability
//! for random two-qubit states, real and complex.

use detmoments::mc_oracle::{run_mc, Field, McConfig};
use detmoments::moments::{moment_det, moment_pt};
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    for (field, exact_p) in [(Field::Complex, 8.0 / 33.0), (Field::Real, 29.0 / 64.0)] {
        let stats = run_mc(&McConfig::new(field, 500_000, 1))?;
        let (n, d) = field.alpha();
        let alpha = Rational::from((n, d));
        println!(
            "{field}: separable fraction {:.4} +/- {:.4} (exact {exact_p:.4})",
            stats.sep_fraction, stats.sep_std_error
        );
        for (k, m) in stats.moments_pt.iter().enumerate() {
            let exact = moment_pt(&alpha, k as u32 + 1)?.to_f64();
            println!("  E[det(rho^PT)^{}] {:+.4e} vs {exact:+.4e}  z = {:.2}", m.order, m.mean, m.z_score(exact));
        }
        let exact = moment_det(&alpha, 1)?.to_f64();
        let m = &stats.moments_det[0];
        println!("  E[det(rho)]      {:+.4e} vs {exact:+.4e}  z = {:.2}", m.mean, m.z_score(exact));
    }
    Ok(())
}
