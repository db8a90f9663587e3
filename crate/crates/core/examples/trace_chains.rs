//! Runs the extension process and Brownian motion observed on the Cantor
//! set, and compares where each spends its time.

use bm_extension::presets::preset;
use bm_extension::sim::{simulate_trace_chain, GridSpec, TraceMode};
use bm_extension::DEFAULT_SEED;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex218", 5)?;
    let grid = GridSpec::uniform(0.0, 1.0, 243);
    for (mode, x0) in [(TraceMode::Extension, 1.0 / 3.0), (TraceMode::Brownian, 0.0)] {
        let table = simulate_trace_chain(&config, &grid, 5, x0, 200_000, DEFAULT_SEED, mode)?;
        let support = table.support();
        println!(
            "{mode:?}: {} sites visited, support [{:.4}, {:.4}]",
            support.len(),
            support.first().copied().unwrap_or(f64::NAN),
            support.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
