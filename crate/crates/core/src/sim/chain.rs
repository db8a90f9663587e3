use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::config::ExtensionConfig;
use crate::error::{Error, Result};
use crate::scale::ScaleFunction;

/// How a site hands the walk on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteKind {
    Walk,
    /// Always steps right (left end of the chain).
    ReflectRight,
    /// Always steps left (right end of the chain).
    ReflectLeft,
    Absorb,
}

/// Treatment of grid ends that are not endpoints of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndMode {
    #[default]
    Absorb,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    /// Sites inside a block gap of level at most this depth move to the
    /// nearer gap endpoint (the left one on ties).
    #[serde(default)]
    pub snap_depth: Option<u32>,
    #[serde(default)]
    pub ends: EndMode,
}

/// Upper bound on the number of grid cells.
pub const MAX_CELLS: usize = 10_000_000;

impl GridSpec {
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Self {
        GridSpec { lo, hi, cells, snap_depth: None, ends: EndMode::Absorb }
    }

    pub fn snapped(self, depth: u32) -> Self {
        GridSpec { snap_depth: Some(depth), ..self }
    }

    pub fn reflecting(self) -> Self {
        GridSpec { ends: EndMode::Reflect, ..self }
    }

    pub fn sites(&self, config: &ExtensionConfig) -> Result<Vec<f64>> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Domain(format!("grid [{}, {}] is not a finite interval", self.lo, self.hi)));
        }
        if self.cells == 0 || self.cells > MAX_CELLS {
            return Err(Error::Domain(format!("grid needs between 1 and {MAX_CELLS} cells")));
        }
        let c = self.cells as f64;
        let mut sites: Vec<f64> = (0..=self.cells)
            .map(|k| {
                let k = k as f64;
                (self.lo * (c - k) + self.hi * k) / c
            })
            .collect();
        if let Some(d) = self.snap_depth {
            let mut gaps = Vec::new();
            for s in config.intervals() {
                gaps.extend(s.scale.block_gaps(d, d)?.into_iter().map(|g| (g.lo, g.hi)));
            }
            gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
            for x in sites.iter_mut() {
                let k = gaps.partition_point(|g| g.0 < *x);
                if k > 0 {
                    let (a, b) = gaps[k - 1];
                    if *x > a && *x < b {
                        *x = if *x - a <= b - *x { a } else { b };
                    }
                }
            }
            sites.dedup();
        }
        Ok(sites)
    }
}

/// Birth-death chain on a grid. Transitions go to adjacent sites only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridChain {
    pub sites: Vec<f64>,
    /// Invariant interval of each site, `None` at traps.
    pub interval: Vec<Option<usize>>,
    pub kind: Vec<SiteKind>,
    pub p_right: Vec<f64>,
    pub mean_holding: Vec<f64>,
    /// Scale value of each site (zero at traps).
    pub scale: Vec<f64>,
    /// Speed mass attributed to each site.
    pub speed: Vec<f64>,
}

impl GridChain {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index_of(&self, x: f64) -> Result<usize> {
        self.sites.binary_search_by(|s| s.total_cmp(&x)).map_err(|_| Error::Domain(format!("{x} is not a grid site")))
    }

    pub(crate) fn step<R: Rng>(&self, i: usize, rng: &mut R) -> usize {
        match self.kind[i] {
            SiteKind::Walk => {
                if rng.random::<f64>() < self.p_right[i] {
                    i + 1
                } else {
                    i - 1
                }
            }
            SiteKind::ReflectRight => i + 1,
            SiteKind::ReflectLeft => i - 1,
            SiteKind::Absorb => i,
        }
    }
}

/// `2 ∫_l^r G(x, y) dy` for the process killed at `l` and `r`.
fn interior_holding(t: &ScaleFunction, l: f64, x: f64, r: f64) -> Result<f64> {
    let (tl, tx, tr) = (t.eval(l)?, t.eval(x)?, t.eval(r)?);
    let left = t.integral(l, x)? - tl * (x - l);
    let right = tr * (r - x) - t.integral(x, r)?;
    Ok(2.0 * ((tr - tx) * left + (tx - tl) * right) / (tr - tl))
}

/// Expected time to reach `y` from `x` when the walk reflects at `x`.
fn reflecting_holding(t: &ScaleFunction, x: f64, y: f64) -> Result<f64> {
    if y > x {
        Ok(2.0 * (t.eval(y)? * (y - x) - t.integral(x, y)?))
    } else {
        Ok(2.0 * (t.integral(y, x)? - t.eval(y)? * (x - y)))
    }
}

/// Chain over arbitrary grid sites. Sites in an invariant interval only
/// communicate with neighbours in the same interval; sites outside every
/// interval are absorbing.
pub fn build_global_chain(config: &ExtensionConfig, grid: &GridSpec) -> Result<GridChain> {
    let sites = grid.sites(config)?;
    chain_on_sites(config, sites, grid.ends)
}

/// Chain on a grid that must lie inside `I_n`.
pub fn build_chain(config: &ExtensionConfig, n: usize, grid: &GridSpec) -> Result<GridChain> {
    let iv = config.get(n)?.interval;
    let sites = grid.sites(config)?;
    if let Some(x) = sites.iter().find(|&&x| !iv.contains(x)) {
        return Err(Error::Domain(format!("grid site {x} is outside {iv}; the grid straddles invariant intervals")));
    }
    chain_on_sites(config, sites, grid.ends)
}

pub(crate) fn chain_on_sites(config: &ExtensionConfig, sites: Vec<f64>, ends: EndMode) -> Result<GridChain> {
    if sites.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    if sites.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("grid sites must be strictly increasing".into()));
    }
    let m = sites.len();
    let interval: Vec<Option<usize>> = sites.iter().map(|&x| config.locate(x)).collect();
    let mut kind = vec![SiteKind::Absorb; m];
    let mut p_right = vec![0.0; m];
    let mut mean_holding = vec![0.0; m];
    let mut scale = vec![0.0; m];
    let mut speed = vec![0.0; m];
    for i in 0..m {
        let Some(n) = interval[i] else { continue };
        let spec = &config.intervals()[n];
        let t = &spec.scale;
        let iv = &spec.interval;
        let x = sites[i];
        scale[i] = t.eval(x)?;
        let left = (i > 0 && interval[i - 1] == Some(n)).then(|| sites[i - 1]);
        let right = (i + 1 < m && interval[i + 1] == Some(n)).then(|| sites[i + 1]);
        let reflect_at_lo = (iv.include_lo && x == iv.lo) || ends == EndMode::Reflect;
        let reflect_at_hi = (iv.include_hi && x == iv.hi) || ends == EndMode::Reflect;
        match (left, right) {
            (Some(l), Some(r)) => {
                kind[i] = SiteKind::Walk;
                p_right[i] = (scale[i] - t.eval(l)?) / (t.eval(r)? - t.eval(l)?);
                mean_holding[i] = interior_holding(t, l, x, r)?;
                speed[i] = 0.5 * (r - l);
            }
            (None, Some(r)) if reflect_at_lo => {
                kind[i] = SiteKind::ReflectRight;
                p_right[i] = 1.0;
                mean_holding[i] = reflecting_holding(t, x, r)?;
                speed[i] = 0.5 * (r - x);
            }
            (Some(l), None) if reflect_at_hi => {
                kind[i] = SiteKind::ReflectLeft;
                mean_holding[i] = reflecting_holding(t, x, l)?;
                speed[i] = 0.5 * (x - l);
            }
            _ => {}
        }
    }
    Ok(GridChain { sites, interval, kind, p_right, mean_holding, scale, speed })
}

/// Natural-scale chain with point speed masses, reflecting at both ends.
pub fn natural_chain(sites: Vec<f64>, masses: Vec<f64>, interval: Option<usize>) -> Result<GridChain> {
    if sites.is_empty() || sites.len() != masses.len() {
        return Err(Error::Domain("natural chain needs one mass per site".into()));
    }
    if sites.windows(2).any(|w| !(w[0] < w[1])) || sites.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("grid sites must be finite and strictly increasing".into()));
    }
    let m = sites.len();
    let mut kind = vec![SiteKind::Walk; m];
    let mut p_right = vec![0.5; m];
    let mut mean_holding = vec![0.0; m];
    for i in 0..m {
        let x = sites[i];
        let g = match (i.checked_sub(1).map(|j| sites[j]), sites.get(i + 1).copied()) {
            (Some(l), Some(r)) => {
                p_right[i] = (x - l) / (r - l);
                (x - l) * (r - x) / (r - l)
            }
            (None, Some(r)) => {
                kind[i] = SiteKind::ReflectRight;
                p_right[i] = 1.0;
                r - x
            }
            (Some(l), None) => {
                kind[i] = SiteKind::ReflectLeft;
                p_right[i] = 0.0;
                x - l
            }
            (None, None) => {
                kind[i] = SiteKind::Absorb;
                p_right[i] = 0.0;
                0.0
            }
        };
        mean_holding[i] = 2.0 * masses[i] * g;
    }
    Ok(GridChain {
        interval: vec![interval; m],
        scale: sites.clone(),
        sites,
        kind,
        p_right,
        mean_holding,
        speed: masses,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    #[default]
    Mean,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStep {
    pub step: u64,
    pub site: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub steps: Vec<PathStep>,
    pub absorbed: bool,
    /// The step budget ran out before absorption.
    pub exhausted: bool,
    pub seed: u64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Runs the chain from `x0` for at most `budget` transitions.
pub fn simulate_path(chain: &GridChain, x0: f64, budget: u64, seed: u64, time: TimeMode) -> Result<Path> {
    let mut i = chain.index_of(x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = 0.0;
    let mut steps = vec![PathStep { step: 0, site: x0, time: 0.0 }];
    if chain.kind[i] == SiteKind::Absorb {
        return Ok(Path { steps, absorbed: true, exhausted: false, seed });
    }
    for k in 1..=budget {
        let hold = chain.mean_holding[i];
        clock += match time {
            TimeMode::Mean => hold,
            TimeMode::Exponential if hold > 0.0 => {
                Exp::new(1.0 / hold).map_err(|e| Error::Domain(format!("holding time {hold}: {e}")))?.sample(&mut rng)
            }
            TimeMode::Exponential => 0.0,
        };
        i = chain.step(i, &mut rng);
        steps.push(PathStep { step: k, site: chain.sites[i], time: clock });
        if chain.kind[i] == SiteKind::Absorb {
            return Ok(Path { steps, absorbed: true, exhausted: false, seed });
        }
    }
    Ok(Path { steps, absorbed: false, exhausted: true, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    #[test]
    fn identity_scale_is_symmetric() {
        let cfg = ExtensionConfig::irreducible(Vec::new()).unwrap();
        let ch = build_chain(&cfg, 0, &GridSpec::uniform(0.0, 1.0, 8)).unwrap();
        for i in 1..8 {
            assert!((ch.p_right[i] - 0.5).abs() < 1e-15);
            // exit time from (x - h, x + h) is h²
            assert!((ch.mean_holding[i] - 1.0 / 64.0).abs() < 1e-15);
        }
        assert_eq!(ch.kind[0], SiteKind::Absorb);
    }

    #[test]
    fn straddling_cell_leans_to_lighter_side() {
        let cfg = preset("ex215", 8).unwrap();
        let ch = build_chain(&cfg, 0, &GridSpec::uniform(-1.0, 1.0, 2)).unwrap();
        // t(-1) = -1, t(0) = 0, t(1) = 2: the right cell carries the Cantor mass
        assert!((ch.p_right[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn snapping_moves_sites_out_of_gaps() {
        let cfg = preset("ex215", 8).unwrap();
        let sites = GridSpec::uniform(0.0, 1.0, 27).snapped(10).sites(&cfg).unwrap();
        assert!(sites.contains(&(1.0 / 3.0)));
        assert!(!sites.contains(&(13.0 / 27.0)));
    }

    #[test]
    fn trap_start_is_absorbed() {
        let cfg = preset("ex218", 3).unwrap();
        let ch = build_global_chain(&cfg, &GridSpec::uniform(-0.5, 1.5, 8)).unwrap();
        let trap = 0.25;
        assert_eq!(cfg.classify_point(trap), crate::config::PointClass::Trap);
        let p = simulate_path(&ch, ch.sites[ch.index_of(trap).unwrap()], 100, 1, TimeMode::Mean).unwrap();
        assert_eq!(p.len(), 1);
    }
}
