//! Splits the scale function into its absolutely continuous part and the
//! part orthogonal to it.

use bm_extension::forms::{bilinear, orthogonal_decompose, scale_fn};
use bm_extension::presets::preset;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex215", 10)?;
    let f = scale_fn(&config)?;
    let d = orthogonal_decompose(&config, &f)?;
    for c in &d.constants {
        println!("interval {}: m = {:.6}, c1 = {:.6}, c2 = {:.6}", c.interval, c.m, c.c1, c.c2);
    }
    for x in [-0.5, 0.0, 0.25, 0.5, 1.0] {
        println!(
            "x = {x:5}: f = {:.6}, f1 = {:.6}, f2 = {:.6}",
            f.eval(&config, x)?,
            d.f1.eval(&config, x)?,
            d.f2.eval(&config, x)?
        );
    }
    println!("E(f1, f2) = {:.3e}", bilinear(&config, &d.f1, &d.f2)?);
    Ok(())
}
