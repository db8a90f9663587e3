//! Evaluates the scale function of each preset on a small grid.

use bm_extension::presets::{preset, PRESETS};

fn main() -> bm_extension::Result<()> {
    for name in PRESETS {
        let config = preset(name, 8)?;
        println!("{name}: {} invariant interval(s)", config.len());
        for (n, iv) in config.intervals().iter().enumerate() {
            let s = &iv.scale;
            let (lo, hi) = (s.interval().lo.max(-1.0), s.interval().hi.min(2.0));
            let xs: Vec<f64> = (0..=6).map(|i| lo + (hi - lo) * i as f64 / 6.0).collect();
            let ts: Vec<String> =
                xs.iter().map(|&x| s.eval(x).map(|t| format!("{t:.4}")).unwrap_or_else(|_| "-".into())).collect();
            println!("  I_{n} anchor {:.3}: t = [{}]", s.anchor(), ts.join(", "));
        }
    }
    Ok(())
}
