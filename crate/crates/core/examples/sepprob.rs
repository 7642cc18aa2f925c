//! Separability probabilities from the certified series, identified as
//! the simplest rational inside the certified bracket.

use detmoments::ratfind::simplest_in_interval;
use detmoments::sepprob::sep_prob;
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    let tol = Rational::from((1, 10u64.pow(15)));
    for (n, d) in [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (4, 1)] {
        let alpha = Rational::from((n, d));
        let res = sep_prob(&alpha, &tol)?;
        let hi = Rational::from(&res.partial_sum + &res.tail_bound);
        let p = simplest_in_interval(&res.partial_sum, &hi)?;
        println!("P({alpha}) = {p:<14} {:.15}  ({} terms)", res.decimal.to_f64(), res.terms_used);
    }
    Ok(())
}
