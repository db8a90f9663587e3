//! Collapses the singular blocks of an invariant interval and lists the atoms of the
//! resulting speed measure.

use bm_extension::darning::{darn, darning_map};
use bm_extension::presets::preset;

fn main() -> bm_extension::Result<()> {
    let config = preset("ex215", 8)?;
    let spec = darn(&config, 0, 6)?;
    println!("J = {:?}", spec.source);
    println!("J* = {:?}", spec.image);
    for a in spec.atoms.iter().filter(|a| a.mass > 1e-2) {
        println!("atom at {:.6} with mass {:.6}", a.location, a.mass);
    }
    println!("total mass {:.12} ({} atoms)", spec.total_mass(), spec.atoms.len());
    for x in [0.0, 0.2, 0.5, 0.9] {
        println!("j({x}) = {:.6}", darning_map(&config, 0, x)?);
    }
    Ok(())
}
