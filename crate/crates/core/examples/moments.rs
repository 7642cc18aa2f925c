//! Exact moments of the four determinant families, and the split of the
//! partial-transpose moment into the determinant moment plus a 5F4 term.

use detmoments::moments::{moment_det, moment_pt, moment_pt_hypergeometric, moment_table, MomentFamily};
use detmoments::Result;
use rug::Rational;

fn main() -> Result<()> {
    let alpha = Rational::from(1);
    for family in MomentFamily::ALL {
        let table = moment_table(family, &alpha, 4)?;
        println!("{family} (alpha = 1)");
        for (n, m) in table.values.iter().enumerate().skip(1) {
            println!("  E[x^{n}] = {m}  ~ {:.6e}", m.to_f64());
        }
    }

    for n in [1u32, 5, 20] {
        let pt = moment_pt(&alpha, n)?;
        let rest = moment_pt_hypergeometric(&alpha, n)?;
        let split_holds = pt == moment_det(&alpha, n)? + &rest;
        println!("pt-hs order {n}: det moment + 5F4 term = pt moment: {split_holds}, 5F4 term ~ {:.4e}", rest.to_f64());
    }
    Ok(())
}
