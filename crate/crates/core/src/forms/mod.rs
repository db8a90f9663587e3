//! Dirichlet energies, the orthogonal decomposition, and the auxiliary
//! functions used in the regularity argument.

mod compensator;
mod decompose;
mod piecewise;

pub use compensator::{cantor_interpolant, compensator, Compensator, CompensatorCase, CompensatorParams, Interpolant};
pub use decompose::{in_extended_space, is_in_complement, orthogonal_decompose, Decomposition, IntervalConstants};
pub use piecewise::{bilinear, Anchoring, PiecewiseFn, Poly, Segment, SegmentAnchor};

use crate::cantor::cantor;
use crate::config::ExtensionConfig;
use crate::error::{Error, Result};

/// `½ Σ_n ∫ (df/dt_n)² dt_n`.
pub fn energy(config: &ExtensionConfig, f: &PiecewiseFn) -> Result<f64> {
    f.energy(config)
}

/// Names accepted by [`builtin`].
pub const BUILTINS: &[&str] = &["identity", "tent", "cantor", "scale", "indicator-smoothed", "zero"];

/// `x ↦ x`.
pub fn identity() -> PiecewiseFn {
    PiecewiseFn::from_derivative(vec![(f64::NEG_INFINITY, f64::INFINITY, Poly::constant(1.0))], 0.0, 0.0)
}

/// `max(0, 1 - |x|)`.
pub fn tent() -> PiecewiseFn {
    PiecewiseFn::from_derivative(vec![(-1.0, 0.0, Poly::constant(1.0)), (0.0, 1.0, Poly::constant(-1.0))], -1.0, 0.0)
}

/// A `C¹` plateau: `0` left of `-1/2`, quadratic rise to `1` at `0`, `1` on
/// `[0, 1]`, quadratic fall to `0` at `3/2`.
pub fn indicator_smoothed() -> PiecewiseFn {
    // rise: 8(x + 1/2)^2 on [-1/2, -1/4], then 1 - 8x^2 on [-1/4, 0]
    let pieces = vec![
        (-0.5, -0.25, Poly::new(vec![8.0, 16.0])),
        (-0.25, 0.0, Poly::new(vec![0.0, -16.0])),
        (1.0, 1.25, Poly::new(vec![16.0, -16.0])),
        (1.25, 1.5, Poly::new(vec![-24.0, 16.0])),
    ];
    PiecewiseFn::from_derivative(pieces, -0.5, 0.0)
}

/// `A (1 - ((x - m)/r)²)²` on `[m - r, m + r]`, zero elsewhere.
pub fn bump(center: f64, radius: f64, amplitude: f64) -> PiecewiseFn {
    // d/dx of A(1-s^2)^2 with s = (x-m)/r is -4A s (1 - s^2) / r
    let s = Poly::centred(vec![0.0, 1.0 / radius], center);
    let one_minus = Poly::constant(1.0).add(&s.mul(&s).scale(-1.0));
    let d = s.mul(&one_minus).scale(-4.0 * amplitude / radius);
    PiecewiseFn::from_derivative(vec![(center - radius, center + radius, d)], center - radius, 0.0)
}

/// The scale function of an irreducible configuration: density `1` on both parts.
pub fn scale_fn(config: &ExtensionConfig) -> Result<PiecewiseFn> {
    if config.len() != 1 {
        return Err(Error::Domain("the scale builtin needs a single invariant interval".into()));
    }
    let s = &config.intervals()[0];
    if s.scale.stack(crate::scale::Side::Lo).is_some() || s.scale.stack(crate::scale::Side::Hi).is_some() {
        return Err(Error::Domain("the scale builtin is not available with boundary stacks".into()));
    }
    Ok(PiecewiseFn::new(
        vec![Segment::split(s.interval.lo, s.interval.hi, Poly::constant(1.0), 1.0)],
        Anchoring::Global { at: s.scale.anchor(), value: 0.0 },
    ))
}

/// The standard Cantor function `c`, expressed against `config`.
///
/// On an interval where `c` is constant the function is anchored at that
/// constant; on an interval carrying the block `[0, 1]` it has W-density
/// `1/λ` and no U-density. Anything else is not absolutely continuous with
/// respect to the scale.
pub fn cantor_fn(config: &ExtensionConfig) -> Result<PiecewiseFn> {
    let mut segments = Vec::new();
    let mut ranges = Vec::new();
    for s in config.intervals() {
        let iv = &s.interval;
        let (lo, hi) = (iv.lo.max(0.0), iv.hi.min(1.0));
        let at = s.scale.anchor();
        if lo >= hi || cantor(lo) == cantor(hi) {
            ranges.push(SegmentAnchor { lo: iv.lo, hi: iv.hi, at, value: cantor(at.clamp(0.0, 1.0)) });
        } else if let Some(b) = s.scale.blocks().iter().find(|b| b.lo == 0.0 && b.hi == 1.0) {
            segments.push(Segment::split(0.0, 1.0, Poly::zero(), 1.0 / b.weight));
            ranges.push(SegmentAnchor { lo: iv.lo, hi: iv.hi, at, value: cantor(at.clamp(0.0, 1.0)) });
        } else {
            return Err(Error::Domain(format!(
                "the Cantor function is not absolutely continuous with respect to the scale on {iv}"
            )));
        }
    }
    Ok(PiecewiseFn::new(segments, Anchoring::Ranges { ranges }))
}

/// Looks up a named function.
pub fn builtin(config: &ExtensionConfig, name: &str) -> Result<PiecewiseFn> {
    match name {
        "identity" => Ok(identity()),
        "tent" => Ok(tent()),
        "cantor" => cantor_fn(config),
        "scale" => scale_fn(config),
        "indicator-smoothed" => Ok(indicator_smoothed()),
        "zero" => Ok(PiecewiseFn::zero()),
        other => Err(Error::Domain(format!("unknown function {other:?} (known: {})", BUILTINS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn poly_arithmetic() {
        let p = Poly::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative(), Poly::new(vec![2.0, 6.0]));
        assert_eq!(p.integral(0.0, 1.0), 3.0);
        let q = p.compose_affine(2.0, 1.0);
        assert_eq!(q.eval(0.5), p.eval(2.0));
    }

    #[test]
    fn narrow_bumps_far_from_zero_keep_their_energy() {
        let cfg = preset("ex215", 8).unwrap();
        let (r, a) = (0.0677, 1.7);
        let e = energy(&cfg, &bump(1.4339, r, a)).unwrap();
        let want = 128.0 * a * a / (105.0 * r);
        assert!((e - want).abs() / want < 1e-13);
        let p = Poly::centred(vec![1.0, -2.0, 0.5], 3.0);
        assert!((p.recentred(-1.0).eval(2.5) - p.eval(2.5)).abs() < 1e-13);
    }

    #[test]
    fn smoothed_indicator_is_continuous() {
        let cfg = preset("ex215", 8).unwrap();
        let f = indicator_smoothed();
        for (x, v) in [(-0.5, 0.0), (-0.25, 0.5), (0.0, 1.0), (0.5, 1.0), (1.25, 0.5), (1.5, 0.0), (2.0, 0.0)] {
            assert!((f.eval(&cfg, x).unwrap() - v).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn bump_vanishes_at_its_ends() {
        let cfg = preset("ex215", 8).unwrap();
        let f = bump(0.3, 0.7, 2.0);
        assert!(f.eval(&cfg, 1.0).unwrap().abs() < 1e-14);
        assert!((f.eval(&cfg, 0.3).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tent_and_cantor_energies() {
        let cfg = preset("ex215", 8).unwrap();
        assert_eq!(energy(&cfg, &tent()).unwrap(), 1.0);
        assert_eq!(energy(&cfg, &cantor_fn(&cfg).unwrap()).unwrap(), 0.5);
        assert_eq!(energy(&cfg, &PiecewiseFn::constant(3.0)).unwrap(), 0.0);
        assert!(energy(&cfg, &scale_fn(&cfg).unwrap()).is_err());
    }

    #[test]
    fn cantor_on_ex218_is_piecewise_constant() {
        let cfg = preset("ex218", 4).unwrap();
        let c = cantor_fn(&cfg).unwrap();
        assert_eq!(energy(&cfg, &c).unwrap(), 0.0);
        assert_eq!(c.eval(&cfg, 0.5).unwrap(), 0.5);
        assert_eq!(c.eval(&cfg, 2.0).unwrap(), 1.0);
        assert!(is_in_complement(&cfg, &c));
    }
}
