//! The darning transform: each component of `U_n` collapses to a point, and
//! the diffusion on `I_n` restricted to the orthogonal complement becomes a
//! time-changed Brownian motion on the image interval `J*_n`.

use serde::Serialize;

use crate::cantor::{unit_pieces, CantorBlock, MAX_ENUM_DEPTH};
use crate::config::{Atom, ExtensionConfig};
use crate::error::{Error, Result};
use crate::forms::{PiecewiseFn, Segment};
use crate::scale::{Interval, ScaleFunction, Side};

/// Collapsed interval with its purely atomic speed measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarnedSpec {
    pub interval: usize,
    /// `J_n = <r⁻, r⁺>`.
    pub source: Interval,
    /// `J*_n = j_n(J_n)`.
    pub image: Interval,
    /// One atom per collapsed `U`-component (to the working depth), sorted by location.
    pub atoms: Vec<Atom>,
    /// Lebesgue mass of the level-`depth` Cantor pieces and of the truncated
    /// part of each boundary stack, placed at the image of the piece.
    pub residual: Vec<Atom>,
    pub slow_lo: bool,
    pub slow_hi: bool,
    pub depth: u32,
}

impl DarnedSpec {
    /// Total mass of the image measure at this depth (atoms plus residual).
    pub fn total_mass(&self) -> f64 {
        neumaier(self.atoms.iter().chain(&self.residual).map(|a| a.mass))
    }

    /// `m*` of the closed image interval `[u, v]`.
    pub fn mass(&self, u: f64, v: f64) -> f64 {
        neumaier(self.atoms.iter().chain(&self.residual).filter(|a| a.location >= u && a.location <= v).map(|a| a.mass))
    }

    /// Atoms and residual merged by location.
    pub fn measure(&self) -> Vec<Atom> {
        let mut all: Vec<Atom> = self.atoms.iter().chain(&self.residual).copied().collect();
        all.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut out: Vec<Atom> = Vec::with_capacity(all.len());
        for a in all {
            match out.last_mut() {
                Some(last) if last.location == a.location => last.mass += a.mass,
                _ => out.push(a),
            }
        }
        out
    }
}

/// Compensated summation.
pub fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `r⁻_n` and `r⁺_n`, the extreme points of `W_n`.
fn w_extremes(t: &ScaleFunction) -> Option<(f64, f64)> {
    let iv = t.interval();
    let carriers = t.all_blocks(1);
    let lo = if iv.lo.is_finite() { iv.lo } else { carriers.first()?.lo };
    let hi = if iv.hi.is_finite() { iv.hi } else { carriers.last()?.hi };
    Some((lo, hi))
}

fn source_interval(config: &ExtensionConfig, n: usize) -> Result<(Interval, &ScaleFunction)> {
    let t = &config.get(n)?.scale;
    if t.blocks().is_empty() && t.stack(Side::Lo).is_none() && t.stack(Side::Hi).is_none() {
        return Err(Error::Precondition(format!("interval {n} {} has dt(W) = 0; darning is degenerate", t.interval())));
    }
    let (lo, hi) = w_extremes(t).expect("W is non-empty");
    let iv = t.interval();
    Ok((Interval { lo, hi, include_lo: iv.include_lo, include_hi: iv.include_hi }, t))
}

/// `j_n(x) = ∫_{e_n}^x 1_{W_n} dt_n`.
pub fn darning_map(config: &ExtensionConfig, n: usize, x: f64) -> Result<f64> {
    let (j, t) = source_interval(config, n)?;
    if !(x >= j.lo && x <= j.hi && x.is_finite()) {
        return Err(Error::Domain(format!("{x} is outside the closure of J = {j}")));
    }
    Ok(signed_singular(t, x, None))
}

/// As [`darning_map`] with blocks truncated at `depth`.
pub fn darning_map_at_depth(config: &ExtensionConfig, n: usize, x: f64, depth: u32) -> Result<f64> {
    let (j, t) = source_interval(config, n)?;
    if !(x >= j.lo && x <= j.hi && x.is_finite()) {
        return Err(Error::Domain(format!("{x} is outside the closure of J = {j}")));
    }
    Ok(signed_singular(t, x, Some(depth)))
}

fn signed_singular(t: &ScaleFunction, x: f64, depth: Option<u32>) -> f64 {
    let e = t.anchor();
    let iv = t.interval();
    let clip = |y: f64| y.clamp(iv.lo, iv.hi);
    let (u, v, sign) = if x >= e { (e, x, 1.0) } else { (x, e, -1.0) };
    let m = match depth {
        None => t.singular_mass_clipped(clip(u), clip(v)),
        Some(d) => t.uw_split(clip(u), clip(v), d).map(|(_, s)| s).unwrap_or(f64::INFINITY),
    };
    sign * m
}

/// Collapses the `U`-components of interval `n`, enumerating block gaps to
/// `depth` levels and the first `depth` blocks of each boundary stack.
pub fn darn(config: &ExtensionConfig, n: usize, depth: u32) -> Result<DarnedSpec> {
    if depth > MAX_ENUM_DEPTH {
        return Err(Error::Domain(format!("darning depth {depth} exceeds {MAX_ENUM_DEPTH}")));
    }
    let (source, t) = source_interval(config, n)?;
    let iv = *t.interval();
    let j = |x: f64| signed_singular(t, x, None);
    let image_lo = if source.include_lo {
        j(source.lo)
    } else if iv.lo.is_finite() {
        f64::NEG_INFINITY
    } else {
        j(source.lo)
    };
    let image_hi = if source.include_hi {
        j(source.hi)
    } else if iv.hi.is_finite() {
        f64::INFINITY
    } else {
        j(source.hi)
    };
    let image = Interval { lo: image_lo, hi: image_hi, include_lo: source.include_lo, include_hi: source.include_hi };

    let carriers: Vec<CantorBlock> = t.all_blocks(depth);
    let pieces = unit_pieces(depth)?;
    let piece_len = 3f64.powi(-(depth as i32));
    let mut atoms = Vec::new();
    let mut residual = Vec::new();

    // components between consecutive carriers, and at an included endpoint
    if iv.include_lo {
        let first = carriers[0].lo;
        if first > iv.lo {
            atoms.push(Atom { location: j(first), mass: first - iv.lo });
        }
    }
    for w in carriers.windows(2) {
        if w[1].lo > w[0].hi {
            atoms.push(Atom { location: j(w[0].hi), mass: w[1].lo - w[0].hi });
        }
    }
    if iv.include_hi {
        let last = carriers[carriers.len() - 1].hi;
        if last < iv.hi {
            atoms.push(Atom { location: j(last), mass: iv.hi - last });
        }
    }
    for b in &carriers {
        let base = j(b.lo);
        for g in b.gaps(depth)? {
            atoms.push(Atom { location: base + g.image, mass: g.hi - g.lo });
        }
        for &(_, img) in &pieces {
            residual.push(Atom { location: base + b.weight * img, mass: piece_len * b.len() });
        }
    }
    // the untruncated tail of each stack
    if let Some(st) = t.stack(Side::Lo) {
        let inner = carriers[0].lo;
        residual.push(Atom { location: j(inner), mass: inner - st.base });
    }
    if let Some(st) = t.stack(Side::Hi) {
        let inner = carriers[carriers.len() - 1].hi;
        residual.push(Atom { location: j(inner), mass: st.base - inner });
    }
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    residual.sort_by(|a, b| a.location.total_cmp(&b.location));
    let at_end = |y: f64| atoms.iter().any(|a| a.location == y && a.mass > 0.0);
    let slow_lo = image.include_lo && at_end(image.lo);
    let slow_hi = image.include_hi && at_end(image.hi);
    Ok(DarnedSpec { interval: n, source, image, atoms, residual, slow_lo, slow_hi, depth })
}

/// A piecewise-linear function on `J*` given by its knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Knots(pub Vec<(f64, f64)>);

impl Knots {
    pub fn eval(&self, y: f64) -> f64 {
        let k = &self.0;
        if k.is_empty() {
            return 0.0;
        }
        if y <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((y0, v0), (y1, v1)) = (w[0], w[1]);
            if y <= y1 {
                return if y1 == y0 { v1 } else { v0 + (v1 - v0) * (y - y0) / (y1 - y0) };
            }
        }
        k[k.len() - 1].1
    }
}

/// Boundary tolerance for the vanishing condition at excluded image endpoints.
const BOUNDARY_TOL: f64 = 1e-12;

/// `½ ∫_{J*} f̂'²` for a piecewise-linear `f̂` (constant beyond its outer knots).
pub fn darned_energy(spec: &DarnedSpec, f_hat: &Knots) -> Result<f64> {
    let k = &f_hat.0;
    if k.windows(2).any(|w| !(w[0].0 <= w[1].0)) {
        return Err(Error::Domain("knots must be sorted by location".into()));
    }
    let img = &spec.image;
    if let (Some(first), Some(last)) = (k.first(), k.last()) {
        if first.0 < img.lo || last.0 > img.hi {
            return Err(Error::Domain(format!("knots leave the image interval {img}")));
        }
        if img.lo.is_finite() && !img.include_lo && first.1.abs() > BOUNDARY_TOL {
            return Err(Error::Invalid(format!("f̂({}+) = {} but the excluded endpoint requires 0", img.lo, first.1)));
        }
        if img.hi.is_finite() && !img.include_hi && last.1.abs() > BOUNDARY_TOL {
            return Err(Error::Invalid(format!("f̂({}-) = {} but the excluded endpoint requires 0", img.hi, last.1)));
        }
    }
    let mut acc = 0.0;
    for w in k.windows(2) {
        let ((y0, v0), (y1, v1)) = (w[0], w[1]);
        if y1 == y0 {
            if v1 != v0 {
                return Err(Error::Divergent(format!("f̂ jumps at {y0}")));
            }
            continue;
        }
        acc += (v1 - v0).powi(2) / (y1 - y0);
    }
    Ok(0.5 * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyComparison {
    pub source: f64,
    pub image: f64,
    pub relative_gap: f64,
}

/// Computes `E^n(f, f)` on `I_n` and `E^{n*}(f̂, f̂)` on `J*_n` independently.
///
/// The source side integrates `w²` against block masses truncated at
/// `depth`; the image side pushes the breakpoints of `f` through the
/// depth-`depth` darning map and sums `(Δf)² / Δj`.
pub fn energy_equivalence_check(
    config: &ExtensionConfig,
    n: usize,
    f: &PiecewiseFn,
    depth: u32,
) -> Result<EnergyComparison> {
    let (source_iv, t) = source_interval(config, n)?;
    let iv = *t.interval();
    let mut breaks = Vec::new();
    let mut source = 0.0;
    for seg in &f.segments {
        let Segment::Split { lo, hi, u, w } = seg else {
            return Err(Error::Domain("energy comparison needs split segments".into()));
        };
        let (s, e) = (lo.max(source_iv.lo), hi.min(source_iv.hi));
        if s >= e {
            continue;
        }
        if !u.is_zero() {
            return Err(Error::Invalid(format!("f has U-density on [{s}, {e}], so it is not in the complement")));
        }
        if *w != 0.0 {
            let (_, m) = t.uw_split(s.max(iv.lo), e.min(iv.hi), depth)?;
            source += w * w * m;
            breaks.push(s);
            breaks.push(e);
        }
    }
    if breaks.is_empty() {
        return Ok(EnergyComparison { source: 0.0, image: 0.0, relative_gap: 0.0 });
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut image = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dy = signed_singular(t, b, Some(depth)) - signed_singular(t, a, Some(depth));
        let dv = f.eval(config, b)? - f.eval(config, a)?;
        if dy > 0.0 {
            image += dv * dv / dy;
        }
    }
    let source = 0.5 * source;
    let image = 0.5 * image;
    let scale = source.abs().max(image.abs());
    let relative_gap = if scale == 0.0 { 0.0 } else { (source - image).abs() / scale };
    Ok(EnergyComparison { source, image, relative_gap })
}
