//! Trace energies on the Cantor set: the Brownian jump sum, the extension
//! energy, and the membership test for a few traces.

use bm_extension::presets::preset;
use bm_extension::trace::{trace_energy_bm, trace_energy_ext, trace_membership, TraceFn};

type Sample = fn(f64) -> f64;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex218", 8)?;
    let traces: [(&str, Sample); 3] = [("x", |x| x), ("x^2", |x| x * x), ("cantor", bm_extension::cantor::cantor)];
    for (name, f) in traces {
        let phi = TraceFn::from_fn(&config, 8, f)?;
        let bm = trace_energy_bm(&config, &phi)?;
        let ext = trace_energy_ext(&config, &phi)?;
        let report = trace_membership(&config, &phi, (0.0, 1.0), 1e-9);
        println!("{name:>7}: bm {bm:.6}, ext {ext:.6}, {:?}", report.membership);
    }
    Ok(())
}
