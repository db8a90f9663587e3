//! Trace forms on the closed set `K = F`: the jump sum of the Brownian trace,
//! the extension trace with its W-integral, harmonic extensions, and the
//! telescoping membership test.

use serde::Serialize;

use crate::cantor::MAX_ENUM_DEPTH;
use crate::config::ExtensionConfig;
use crate::darning::neumaier;
use crate::error::{Error, Result};
use crate::forms::{Anchoring, PiecewiseFn, Poly, Segment, SegmentAnchor};
use crate::scale::ScaleFunction;

/// A finite component of some `U_n`, enumerated to a working depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub interval: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

type Components = (Vec<(f64, f64)>, Vec<f64>);

/// Components of `U_n` for one scale function; the unbounded ones are
/// returned separately as their finite endpoint.
fn components(t: &ScaleFunction, depth: u32) -> Result<Components> {
    let iv = t.interval();
    let carriers = t.all_blocks(depth);
    let mut finite = Vec::new();
    let mut rays = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if lo < hi {
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => finite.push((lo, hi)),
                (true, false) => rays.push(lo),
                (false, true) => rays.push(hi),
                (false, false) => {}
            }
        }
    };
    match (carriers.first(), carriers.last()) {
        (Some(first), Some(last)) => {
            if t.stack(crate::scale::Side::Lo).is_none() {
                push(iv.lo, first.lo);
            }
            for w in carriers.windows(2) {
                push(w[0].hi, w[1].lo);
            }
            if t.stack(crate::scale::Side::Hi).is_none() {
                push(last.hi, iv.hi);
            }
        }
        _ => push(iv.lo, iv.hi),
    }
    for b in &carriers {
        for g in b.gaps(depth)? {
            finite.push((g.lo, g.hi));
        }
    }
    Ok((finite, rays))
}

/// All finite `U`-components of the configuration at `depth`, sorted.
pub fn gaps(config: &ExtensionConfig, depth: u32) -> Result<Vec<Gap>> {
    check_depth(depth)?;
    let mut out = Vec::new();
    for (n, s) in config.intervals().iter().enumerate() {
        let (finite, _) = components(&s.scale, depth)?;
        out.extend(finite.into_iter().map(|(lo, hi)| Gap { interval: n, lo, hi }));
    }
    out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(out)
}

/// Points of `K` where a trace function must be specified at `depth`: gap
/// endpoints, finite ends of unbounded components, and included endpoints.
pub fn sites(config: &ExtensionConfig, depth: u32) -> Result<Vec<f64>> {
    check_depth(depth)?;
    let mut out = Vec::new();
    for s in config.intervals() {
        let (finite, rays) = components(&s.scale, depth)?;
        for (lo, hi) in finite {
            out.push(lo);
            out.push(hi);
        }
        out.extend(rays);
        let iv = &s.interval;
        if iv.include_lo && iv.lo.is_finite() {
            out.push(iv.lo);
        }
        if iv.include_hi && iv.hi.is_finite() {
            out.push(iv.hi);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::Domain(format!("trace depth {depth} exceeds {MAX_ENUM_DEPTH}")));
    }
    Ok(())
}

/// A function on `K` known at the sites of a working depth, plus a constant
/// W-density `dφ/dt_n` on each `W_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceFn {
    pub depth: u32,
    /// `(x, φ(x))`, sorted by `x`.
    pub values: Vec<(f64, f64)>,
    pub w_density: Vec<f64>,
}

impl TraceFn {
    pub fn new(depth: u32, mut values: Vec<(f64, f64)>, w_density: Vec<f64>) -> Result<Self> {
        if values.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) || w_density.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("trace function values must be finite".into()));
        }
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        if values.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("trace function has two values at one site".into()));
        }
        Ok(TraceFn { depth, values, w_density })
    }

    /// Restriction of `f` to the sites of `depth`, with zero W-density.
    pub fn from_fn(config: &ExtensionConfig, depth: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = sites(config, depth)?.into_iter().map(|x| (x, f(x))).collect();
        TraceFn::new(depth, values, vec![0.0; config.len()])
    }

    /// Restriction of a piecewise function. The W-density on each interval
    /// is read from its split segments and must be constant there.
    pub fn from_piecewise(config: &ExtensionConfig, depth: u32, f: &PiecewiseFn) -> Result<Self> {
        let values =
            sites(config, depth)?.into_iter().map(|x| Ok((x, f.eval(config, x)?))).collect::<Result<Vec<_>>>()?;
        let mut w_density = vec![0.0; config.len()];
        for (n, s) in config.intervals().iter().enumerate() {
            let mut seen: Option<f64> = None;
            for seg in &f.segments {
                if let Segment::Split { lo, hi, w, .. } = seg {
                    if *w == 0.0 || !(*hi > s.interval.lo && *lo < s.interval.hi) {
                        continue;
                    }
                    if seen.is_some_and(|v| v != *w) {
                        return Err(Error::Domain(format!("W-density is not constant on {}", s.interval)));
                    }
                    seen = Some(*w);
                }
            }
            w_density[n] = seen.unwrap_or(0.0);
        }
        TraceFn::new(depth, values, w_density)
    }

    pub fn with_w_density(mut self, n: usize, w: f64) -> Self {
        if n < self.w_density.len() {
            self.w_density[n] = w;
        }
        self
    }

    pub fn get(&self, x: f64) -> Option<f64> {
        self.values.binary_search_by(|(s, _)| s.total_cmp(&x)).ok().map(|i| self.values[i].1)
    }

    fn at(&self, x: f64) -> Result<f64> {
        self.get(x).ok_or_else(|| Error::Invalid(format!("trace function has no value at {x}")))
    }

    pub fn shift(&self, c: f64) -> Self {
        TraceFn { values: self.values.iter().map(|&(x, v)| (x, v + c)).collect(), ..self.clone() }
    }

    pub fn scale(&self, k: f64) -> Self {
        TraceFn {
            depth: self.depth,
            values: self.values.iter().map(|&(x, v)| (x, k * v)).collect(),
            w_density: self.w_density.iter().map(|w| k * w).collect(),
        }
    }
}

/// Per-gap term of the jump sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapContribution {
    pub a: f64,
    pub b: f64,
    pub contribution: f64,
}

/// `½ (φ(a) - φ(b))² / |a - b|` for every gap at the depth of `φ`.
pub fn jump_contributions(config: &ExtensionConfig, phi: &TraceFn) -> Result<Vec<GapContribution>> {
    gaps(config, phi.depth)?
        .into_iter()
        .map(|g| {
            let d = phi.at(g.hi)? - phi.at(g.lo)?;
            Ok(GapContribution { a: g.lo, b: g.hi, contribution: 0.5 * d * d / g.len() })
        })
        .collect()
}

/// Energy of the Brownian trace: the jump sum alone. At finite depth this is
/// a lower bound that increases with depth.
pub fn trace_energy_bm(config: &ExtensionConfig, phi: &TraceFn) -> Result<f64> {
    let e = neumaier(jump_contributions(config, phi)?.into_iter().map(|g| g.contribution));
    if !e.is_finite() {
        return Err(Error::Divergent("jump sum diverges".into()));
    }
    Ok(e)
}

/// `½ Σ_n ∫_{W_n} (dφ/dt_n)² dt_n` with the constant densities of `φ`.
pub fn w_term(config: &ExtensionConfig, phi: &TraceFn) -> Result<f64> {
    let mut acc = 0.0;
    for (s, &w) in config.intervals().iter().zip(&phi.w_density) {
        if w == 0.0 {
            continue;
        }
        let mass = s.scale.w_mass();
        if !mass.is_finite() {
            return Err(Error::Divergent(format!("non-zero W-density on {} has infinite dt-mass", s.interval)));
        }
        acc += w * w * mass;
    }
    Ok(0.5 * acc)
}

/// Energy of the extension trace: W-integral plus jump sum.
pub fn trace_energy_ext(config: &ExtensionConfig, phi: &TraceFn) -> Result<f64> {
    Ok(w_term(config, phi)? + trace_energy_bm(config, phi)?)
}

/// Brownian harmonic extension of `φ`: affine across every gap, constant
/// beyond the extreme sites.
pub fn harmonic_extension(config: &ExtensionConfig, phi: &TraceFn) -> Result<PiecewiseFn> {
    let (first, last) = match (phi.values.first(), phi.values.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Invalid("trace function has no values".into())),
    };
    let mut segments = Vec::new();
    let mut ranges = Vec::new();
    for g in gaps(config, phi.depth)? {
        let (va, vb) = (phi.at(g.lo)?, phi.at(g.hi)?);
        let slope = (vb - va) / g.len();
        if slope != 0.0 {
            segments.push(Segment::split(g.lo, g.hi, Poly::constant(slope), 0.0));
        }
        ranges.push(SegmentAnchor { lo: g.lo, hi: g.hi, at: g.lo, value: va });
    }
    ranges.push(SegmentAnchor { lo: f64::NEG_INFINITY, hi: first.0, at: first.0, value: first.1 });
    ranges.push(SegmentAnchor { lo: last.0, hi: f64::INFINITY, at: last.0, value: last.1 });
    for &(x, v) in &phi.values {
        ranges.push(SegmentAnchor { lo: x, hi: x, at: x, value: v });
    }
    Ok(PiecewiseFn::new(segments, Anchoring::Ranges { ranges }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    BrownianTrace,
    ExtensionTraceOnly,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub membership: Membership,
    /// `φ(hi) - φ(lo)` over the sites closest to the window ends.
    pub increment: f64,
    /// Sum of `φ(b) - φ(a)` over gaps inside the window.
    pub gap_sum: f64,
    pub residual: f64,
    /// Largest residual an absolutely continuous extension could leave at
    /// this depth: twice the steepest gap slope times the unresolved length.
    pub allowance: f64,
    /// Window length not covered by enumerated gaps.
    pub unresolved: f64,
    pub depth: u32,
    pub note: Option<String>,
}

/// Telescoping test: an absolutely continuous extension cannot increase on
/// the null set `K`, so window increment and gap increments must agree.
pub fn trace_membership(config: &ExtensionConfig, phi: &TraceFn, window: (f64, f64), tol: f64) -> MembershipReport {
    let (lo, hi) = window;
    let inside: Vec<&(f64, f64)> = phi.values.iter().filter(|(x, _)| *x >= lo && *x <= hi).collect();
    let ext_finite = matches!(trace_energy_ext(config, phi), Ok(e) if e.is_finite());
    let bm_finite = matches!(trace_energy_bm(config, phi), Ok(e) if e.is_finite());
    let window_gaps: Vec<Gap> =
        gaps(config, phi.depth).unwrap_or_default().into_iter().filter(|g| g.lo >= lo && g.hi <= hi).collect();
    let (Some(&&(x0, v0)), Some(&&(x1, v1))) = (inside.first(), inside.last()) else {
        let membership = if ext_finite { Membership::ExtensionTraceOnly } else { Membership::Neither };
        return MembershipReport {
            membership,
            increment: 0.0,
            gap_sum: 0.0,
            residual: 0.0,
            allowance: 0.0,
            unresolved: 0.0,
            depth: phi.depth,
            note: Some("no sites inside the window".into()),
        };
    };
    let mut increments = Vec::with_capacity(window_gaps.len());
    let mut steepest = 0.0f64;
    let mut covered = Vec::with_capacity(window_gaps.len());
    for g in &window_gaps {
        if let (Some(a), Some(b)) = (phi.get(g.lo), phi.get(g.hi)) {
            increments.push(b - a);
            steepest = steepest.max(((b - a) / g.len()).abs());
            covered.push(g.len());
        }
    }
    let increment = v1 - v0;
    let gap_sum = neumaier(increments);
    let residual = increment - gap_sum;
    let unresolved = ((x1 - x0) - neumaier(covered)).max(0.0);
    let allowance = 2.0 * steepest * unresolved;
    let telescopes = residual.abs() <= tol + allowance;
    let membership = if telescopes && bm_finite {
        Membership::BrownianTrace
    } else if ext_finite {
        Membership::ExtensionTraceOnly
    } else {
        Membership::Neither
    };
    let note = (membership == Membership::BrownianTrace && residual.abs() > tol).then(|| {
        format!(
            "residual {residual:.3e} is within the depth-{} allowance {allowance:.3e}; it must vanish as depth grows",
            phi.depth
        )
    });
    MembershipReport { membership, increment, gap_sum, residual, allowance, unresolved, depth: phi.depth, note }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::cantor;
    use crate::forms::energy;
    use crate::presets::preset;

    #[test]
    fn identity_on_cantor_set() {
        for d in [1, 4, 8] {
            let cfg = preset("ex218", d).unwrap();
            let phi = TraceFn::from_fn(&cfg, d, |x| x.clamp(0.0, 1.0)).unwrap();
            let want = 0.5 * (1.0 - (2.0f64 / 3.0).powi(d as i32));
            assert!((trace_energy_bm(&cfg, &phi).unwrap() - want).abs() < 1e-14);
            assert_eq!(trace_energy_ext(&cfg, &phi).unwrap(), trace_energy_bm(&cfg, &phi).unwrap());
        }
    }

    #[test]
    fn cantor_restriction_energies() {
        let cfg = preset("ex215", 8).unwrap();
        let c = TraceFn::from_fn(&cfg, 8, |x| cantor(x.clamp(0.0, 1.0))).unwrap().with_w_density(0, 1.0);
        assert_eq!(trace_energy_bm(&cfg, &c).unwrap(), 0.0);
        assert_eq!(trace_energy_ext(&cfg, &c).unwrap(), 0.5);
        let m = trace_membership(&cfg, &c, (0.0, 1.0), 1e-9);
        assert_eq!(m.membership, Membership::ExtensionTraceOnly);
        assert_eq!(m.increment, 1.0);
    }

    #[test]
    fn harmonic_extension_matches_jump_sum() {
        let cfg = preset("ex218", 6).unwrap();
        let phi = TraceFn::from_fn(&cfg, 6, |x| (3.0 * x).sin()).unwrap();
        let h = harmonic_extension(&cfg, &phi).unwrap();
        let e = energy(&cfg, &h).unwrap();
        let j = trace_energy_bm(&cfg, &phi).unwrap();
        assert!((e - j).abs() <= 1e-12 * j);
        for &(x, v) in &phi.values {
            assert!((h.eval(&cfg, x).unwrap() - v).abs() < 1e-14);
        }
        assert_eq!(h.eval(&cfg, -5.0).unwrap(), phi.values[0].1);
    }

    #[test]
    fn smooth_restriction_telescopes() {
        let cfg = preset("ex218", 8).unwrap();
        let phi = TraceFn::from_fn(&cfg, 8, |x| x * x).unwrap();
        let m = trace_membership(&cfg, &phi, (0.0, 1.0), 1e-9);
        assert_eq!(m.membership, Membership::BrownianTrace);
        assert!(m.note.is_some());
    }
}
