//! Dirichlet energies of the builtin functions under the ex215 extension.

use bm_extension::forms::{builtin, energy, BUILTINS};
use bm_extension::presets::preset;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex215", 12)?;
    for name in BUILTINS {
        let f = builtin(&config, name)?;
        match energy(&config, &f) {
            Ok(e) => println!("{name:>20}: E(f, f) = {e:.6}"),
            Err(err) => println!("{name:>20}: {err}"),
        }
    }
    Ok(())
}
