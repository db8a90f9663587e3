//! Builds the small-energy correctors used to close jumps at an open
//! boundary point and at a Cantor plateau.

use bm_extension::forms::{compensator, CompensatorCase, CompensatorParams};
use bm_extension::presets::preset;

fn main() -> bm_extension::Result<()> {
    let open = preset("ex216", 8)?;
    let plateau = preset("ex218", 10)?;
    for n in [1, 4, 16] {
        let params = CompensatorParams { h: 1.0, eps: 0.1, n, beta: None };
        let a = compensator(&open, CompensatorCase::OpenBoundary, 0.0, params)?;
        let b = compensator(&plateau, CompensatorCase::CantorPlateau, 0.0, params)?;
        println!("n = {n:2}: open boundary E1 ≤ {:.3e}, plateau E1 ≤ {:.3e}, budget {:.3e}", a.e1, b.e1, a.budget);
    }
    Ok(())
}
