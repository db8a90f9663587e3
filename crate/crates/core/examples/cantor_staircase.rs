//! Prints the Cantor function at a few rationals and the first gaps of the
//! middle-thirds construction.

use bm_extension::cantor::{cantor, cantor_integral, cantor_rational, unit_gaps};

fn main() -> bm_extension::Result<()> {
    for (p, q) in [(1, 3), (1, 4), (3, 4), (1, 10), (2, 9), (7, 9)] {
        println!("c({p}/{q}) = {}", cantor_rational(p, q)?);
    }
    println!("c(0.5) = {}  (plateau)", cantor(0.5));
    println!("∫_0^1 c = {}", cantor_integral(1.0));

    for g in unit_gaps(2)? {
        println!("gap {:?}", g);
    }
    Ok(())
}
