//! Rational identification of decimal estimates by continued fractions and
//! by a search over denominators built from a few primes.

use detmoments::ratfind::{cf_candidates, default_tolerance, smooth_search};
use detmoments::Result;
use rug::Integer;

fn main() -> Result<()> {
    for (decimal, max_den) in [("0.242424242424", 100), ("218.3823524", 1000), ("111.536231884", 100)] {
        let best = cf_candidates(decimal, &Integer::from(max_den), 3)?;
        for c in &best {
            println!(
                "{decimal}: {} = ({}) / ({})  error {:.2e}",
                c.value,
                c.numerator_factorization,
                c.denominator_factorization,
                c.abs_error.to_f64()
            );
        }
    }

    let decimal = "0.08049535603";
    let found = smooth_search(decimal, &[17, 19], 2, &default_tolerance(decimal))?;
    for c in &found {
        println!("{decimal}: {} = ({}) / ({})", c.value, c.numerator_factorization, c.denominator_factorization);
    }
    Ok(())
}
