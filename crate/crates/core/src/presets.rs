//! Bundled configurations.

use crate::cantor::{unit_gaps, CantorBlock};
use crate::config::{Complement, ConfigSpec, ExtensionConfig, IntervalDef};
use crate::error::{Error, Result};
use crate::scale::ScaleSpec;

pub const PRESETS: &[&str] = &["ex215", "ex216", "ex217", "ex218", "darning-sojourn"];

/// Depth used when a preset is requested without one.
pub const PRESET_DEPTH: u32 = 8;

const NEG_INF: f64 = f64::NEG_INFINITY;
const INF: f64 = f64::INFINITY;

fn natural(lo: f64, hi: f64, include_lo: bool, include_hi: bool) -> IntervalDef {
    IntervalDef { lo, hi, include_lo, include_hi, scale: None }
}

/// The unvalidated spec of a preset. `depth` controls how far infinite
/// families are materialised (Cantor gap levels for `ex218`, number of
/// interval pairs for `ex217`); the other presets ignore it.
pub fn preset_spec(name: &str, depth: u32) -> Result<ConfigSpec> {
    let spec = match name {
        "ex215" => ConfigSpec {
            intervals: vec![IntervalDef {
                scale: Some(ScaleSpec { blocks: vec![CantorBlock::new(0.0, 1.0, 1.0)?], ..Default::default() }),
                ..natural(NEG_INF, INF, false, false)
            }],
            complement: Complement::default(),
        },
        "ex216" => ConfigSpec {
            intervals: vec![natural(NEG_INF, 0.0, false, false), natural(0.0, INF, false, false)],
            complement: Complement::Points { points: vec![0.0] },
        },
        "ex217" => {
            let k_max = depth.max(1);
            let mut intervals = vec![natural(NEG_INF, -1.0, false, true), natural(1.0, INF, true, false)];
            for k in 1..=k_max {
                let (outer, inner) = (1.0 / k as f64, 1.0 / (k + 1) as f64);
                intervals.push(natural(-outer, -inner, false, true));
                intervals.push(natural(inner, outer, true, false));
            }
            let tail = 1.0 / (k_max + 1) as f64;
            intervals.push(natural(-tail, 0.0, false, false));
            intervals.push(natural(0.0, tail, false, false));
            ConfigSpec { intervals, complement: Complement::Points { points: vec![0.0] } }
        }
        "ex218" => {
            let mut intervals = vec![natural(NEG_INF, 0.0, false, true), natural(1.0, INF, true, false)];
            intervals.extend(unit_gaps(depth)?.into_iter().map(|g| natural(g.lo, g.hi, true, true)));
            ConfigSpec { intervals, complement: Complement::Cantor { lo: 0.0, hi: 1.0, depth } }
        }
        "darning-sojourn" => ConfigSpec {
            intervals: vec![
                natural(NEG_INF, -1.0, false, false),
                IntervalDef {
                    scale: Some(ScaleSpec { blocks: vec![CantorBlock::new(0.0, 1.0, 1.0)?], ..Default::default() }),
                    ..natural(-1.0, INF, true, false)
                },
            ],
            complement: Complement::default(),
        },
        other => {
            return Err(Error::Domain(format!("unknown preset {other:?} (known: {})", PRESETS.join(", "))));
        }
    };
    Ok(spec)
}

pub fn preset(name: &str, depth: u32) -> Result<ExtensionConfig> {
    ExtensionConfig::new(preset_spec(name, depth)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PointClass;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            for depth in [1, 4, 8] {
                preset(name, depth).unwrap_or_else(|e| panic!("{name} at depth {depth}: {e}"));
            }
        }
        assert!(preset("ex999", 8).is_err());
    }

    #[test]
    fn ex216_zero_is_a_trap() {
        let cfg = preset("ex216", 8).unwrap();
        assert_eq!(cfg.classify_point(0.0), PointClass::Trap);
        assert_eq!(cfg.classify_point(-0.5), PointClass::Regular);
    }

    #[test]
    fn ex218_classes() {
        let cfg = preset("ex218", 6).unwrap();
        assert_eq!(cfg.classify_point(0.0), PointClass::LeftShunt);
        assert_eq!(cfg.classify_point(1.0), PointClass::RightShunt);
        assert_eq!(cfg.classify_point(1.0 / 3.0), PointClass::RightShunt);
        assert_eq!(cfg.classify_point(2.0 / 3.0), PointClass::LeftShunt);
        assert_eq!(cfg.classify_point(0.5), PointClass::Regular);
        // 1/4 is a Cantor point that is never a gap endpoint
        assert_eq!(cfg.classify_point(0.25), PointClass::Trap);
    }

    #[test]
    fn ex217_only_zero_is_trapped() {
        let cfg = preset("ex217", 5).unwrap();
        assert_eq!(cfg.classify_point(0.0), PointClass::Trap);
        assert_eq!(cfg.classify_point(-0.5), PointClass::LeftShunt);
        assert_eq!(cfg.classify_point(0.5), PointClass::RightShunt);
        assert_eq!(cfg.classify_point(1.0), PointClass::RightShunt);
    }
}
