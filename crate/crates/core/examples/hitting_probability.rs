//! Monte Carlo exit probabilities for the ex215 extension, compared with
//! the scale-function formula.

use bm_extension::presets::preset;
use bm_extension::sim::{build_chain, hitting_probability, GridSpec, DEFAULT_BUDGET};
use bm_extension::DEFAULT_SEED;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex215", 8)?;
    let chain = build_chain(&config, 0, &GridSpec::uniform(-1.0, 1.0, 64))?;
    for x0 in [-0.5, 0.0, 0.5] {
        let h = hitting_probability(&chain, x0, -1.0, 1.0, 20_000, DEFAULT_SEED, DEFAULT_BUDGET)?;
        println!(
            "x0 = {x0:4}: P(hit -1 first) ≈ {:.4} ± {:.4}, scale formula {:.4}",
            h.estimate.estimate, h.estimate.std_error, h.target
        );
    }
    Ok(())
}
