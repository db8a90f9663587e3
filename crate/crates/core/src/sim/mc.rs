use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{chain_on_sites, natural_chain, EndMode, GridChain, GridSpec, SiteKind};
use crate::config::ExtensionConfig;
use crate::darning::DarnedSpec;
use crate::error::{Error, Result};
use crate::trace;

/// Walks per Monte Carlo batch. Batch `b` draws from stream `b` of the base seed.
pub const BATCH: u64 = 1024;

/// Default per-walk step budget for hitting-probability runs.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Bernoulli estimate; the error is the sample standard deviation over `√N`.
    pub fn from_counts(hits: u64, samples: u64, seed: u64) -> Self {
        if samples == 0 {
            return McEstimate { estimate: f64::NAN, std_error: f64::NAN, samples, seed };
        }
        let n = samples as f64;
        let p = hits as f64 / n;
        let var = if samples > 1 { n / (n - 1.0) * p * (1.0 - p) } else { 0.0 };
        McEstimate { estimate: p, std_error: (var / n).sqrt(), samples, seed }
    }

    /// Distance from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.estimate - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub estimate: McEstimate,
    /// `(t(r) - t(x0)) / (t(r) - t(l))`.
    pub target: f64,
    /// Walks that used up their budget; excluded from the estimate.
    pub nonconvergent: u64,
    pub budget: u64,
}

/// Estimates `P_{x0}(hit l before r)` from `samples` independent walks.
pub fn hitting_probability(
    chain: &GridChain,
    x0: f64,
    l: f64,
    r: f64,
    samples: u64,
    seed: u64,
    budget: u64,
) -> Result<HittingEstimate> {
    let (li, xi, ri) = (chain.index_of(l)?, chain.index_of(x0)?, chain.index_of(r)?);
    if !(li <= xi && xi <= ri && li < ri) {
        return Err(Error::Domain(format!("need l <= x0 <= r with l < r (got {l}, {x0}, {r})")));
    }
    let n = chain.interval[li];
    if n.is_none() || (li..=ri).any(|i| chain.interval[i] != n) {
        return Err(Error::Domain(format!("[{l}, {r}] is not inside a single invariant interval")));
    }
    let target = (chain.scale[ri] - chain.scale[xi]) / (chain.scale[ri] - chain.scale[li]);
    if xi == li || xi == ri {
        let hits = if xi == li { samples } else { 0 };
        return Ok(HittingEstimate {
            estimate: McEstimate::from_counts(hits, samples, seed),
            target,
            nonconvergent: 0,
            budget,
        });
    }
    let batches = samples.div_ceil(BATCH);
    let (hits, done, stuck) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b);
            let count = BATCH.min(samples - b * BATCH);
            let (mut hits, mut done, mut stuck) = (0u64, 0u64, 0u64);
            for _ in 0..count {
                let mut i = xi;
                let mut finished = false;
                for _ in 0..budget {
                    if i == li || i == ri || chain.kind[i] == SiteKind::Absorb {
                        break;
                    }
                    i = chain.step(i, &mut rng);
                }
                if i == li {
                    hits += 1;
                    finished = true;
                } else if i == ri {
                    finished = true;
                }
                if finished {
                    done += 1;
                } else {
                    stuck += 1;
                }
            }
            (hits, done, stuck)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(HittingEstimate { estimate: McEstimate::from_counts(hits, done, seed), target, nonconvergent: stuck, budget })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// The extension process, confined to the invariant interval of `x0`.
    #[default]
    Extension,
    /// Brownian motion observed on the `K`-sites of the window.
    Brownian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitTable {
    pub sites: Vec<f64>,
    pub visits: Vec<u64>,
    pub frequency: Vec<f64>,
    /// Visits weighted by the `μ`-mass of each site's cell, normalised.
    pub occupation: Vec<f64>,
    pub steps: u64,
    pub seed: u64,
}

impl VisitTable {
    /// Sites with at least one visit.
    pub fn support(&self) -> Vec<f64> {
        self.sites.iter().zip(&self.visits).filter(|(_, &v)| v > 0).map(|(&x, _)| x).collect()
    }
}

fn normalise(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Visit frequencies on the `K`-sites (at `depth`) inside the grid window.
pub fn simulate_trace_chain(
    config: &ExtensionConfig,
    grid: &GridSpec,
    depth: u32,
    x0: f64,
    steps: u64,
    seed: u64,
    mode: TraceMode,
) -> Result<VisitTable> {
    let k_sites: Vec<f64> =
        trace::sites(config, depth)?.into_iter().filter(|&x| x >= grid.lo && x <= grid.hi).collect();
    if k_sites.is_empty() {
        return Err(Error::Domain(format!("no K-sites in [{}, {}] at depth {depth}", grid.lo, grid.hi)));
    }
    if k_sites.binary_search_by(|s| s.total_cmp(&x0)).is_err() {
        return Err(Error::Domain(format!("{x0} is not a K-site at depth {depth}")));
    }
    let mu = config.build_trace_measure(depth);
    let cell_mass: Vec<f64> = (0..k_sites.len())
        .map(|i| {
            let lo = if i == 0 { grid.lo } else { 0.5 * (k_sites[i - 1] + k_sites[i]) };
            let hi = if i + 1 == k_sites.len() { grid.hi } else { 0.5 * (k_sites[i] + k_sites[i + 1]) };
            mu.mass(lo, hi)
        })
        .collect();
    let mut visits = vec![0u64; k_sites.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        TraceMode::Extension => {
            let mut sites: Vec<f64> = grid.sites(config)?;
            sites.extend(&k_sites);
            sites.sort_by(f64::total_cmp);
            sites.dedup();
            let n = config.locate(x0);
            let sites: Vec<f64> =
                sites.into_iter().filter(|&x| config.locate(x) == n && (n.is_some() || x == x0)).collect();
            let chain = chain_on_sites(config, sites, EndMode::Reflect)?;
            let mut i = chain.index_of(x0)?;
            for _ in 0..steps {
                if let Ok(k) = k_sites.binary_search_by(|s| s.total_cmp(&chain.sites[i])) {
                    visits[k] += 1;
                }
                i = chain.step(i, &mut rng);
            }
        }
        TraceMode::Brownian => {
            let chain = natural_chain(k_sites.clone(), vec![0.0; k_sites.len()], None)?;
            let mut i = chain.index_of(x0)?;
            for _ in 0..steps {
                visits[i] += 1;
                i = chain.step(i, &mut rng);
            }
        }
    }
    let counts: Vec<f64> = visits.iter().map(|&v| v as f64).collect();
    let weighted: Vec<f64> = counts.iter().zip(&cell_mass).map(|(v, m)| v * m).collect();
    Ok(VisitTable {
        frequency: normalise(&counts),
        occupation: normalise(&weighted),
        sites: k_sites,
        visits,
        steps,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupation {
    pub sites: Vec<f64>,
    /// Atom mass of `m*` assigned to each site.
    pub mass: Vec<f64>,
    pub visits: Vec<u64>,
    pub time: Vec<f64>,
    /// Share of total time spent at each site.
    pub fraction: Vec<f64>,
    /// Normalised site masses, the limit of `fraction`.
    pub target: Vec<f64>,
    pub steps: u64,
    pub seed: u64,
}

/// Atoms of `m*` inside `[sites[0], sites[last]]`, each moved to the
/// nearest site (the left one on ties).
pub fn assign_atoms(spec: &DarnedSpec, sites: &[f64]) -> Vec<f64> {
    let mut mass = vec![0.0; sites.len()];
    let (Some(&lo), Some(&hi)) = (sites.first(), sites.last()) else { return mass };
    for a in spec.atoms.iter().filter(|a| a.location >= lo && a.location <= hi) {
        let k = sites.partition_point(|&s| s < a.location);
        let i = if k == 0 {
            0
        } else if k == sites.len() || a.location - sites[k - 1] <= sites[k] - a.location {
            k - 1
        } else {
            k
        };
        mass[i] += a.mass;
    }
    mass
}

/// Time-changed Brownian motion on a grid in `J*`: a natural-scale walk,
/// reflected at the window ends, holding at each site for a time set by its
/// assigned atom mass.
pub fn simulate_darned(spec: &DarnedSpec, sites: &[f64], x0: f64, steps: u64, seed: u64) -> Result<Occupation> {
    let img = &spec.image;
    for &x in sites {
        let inside = x.is_finite() && x >= img.lo && x <= img.hi && img.contains(x);
        if !inside {
            return Err(Error::Domain(format!("grid site {x} is not in J* = {img}")));
        }
    }
    let mass = assign_atoms(spec, sites);
    if mass.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Domain("no atom mass in the grid window".into()));
    }
    let chain = natural_chain(sites.to_vec(), mass.clone(), Some(spec.interval))?;
    let mut i = chain.index_of(x0)?;
    let mut visits = vec![0u64; sites.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..steps.max(1) {
        visits[i] += 1;
        i = chain.step(i, &mut rng);
    }
    let time: Vec<f64> = visits.iter().zip(&chain.mean_holding).map(|(&v, h)| v as f64 * h).collect();
    let fraction = if chain.len() == 1 { vec![1.0] } else { normalise(&time) };
    Ok(Occupation { sites: sites.to_vec(), target: normalise(&mass), mass, visits, time, fraction, steps, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darning::darn;
    use crate::presets::preset;
    use crate::sim::build_chain;

    #[test]
    fn start_at_target_is_certain() {
        let cfg = preset("ex215", 8).unwrap();
        let ch = build_chain(&cfg, 0, &GridSpec::uniform(0.0, 1.0, 27)).unwrap();
        let h = hitting_probability(&ch, 0.0, 0.0, 1.0, 100, 3, 1000).unwrap();
        assert_eq!(h.estimate.estimate, 1.0);
    }

    #[test]
    fn ex215_target_is_seven_twelfths() {
        let cfg = preset("ex215", 8).unwrap();
        let ch = build_chain(&cfg, 0, &GridSpec::uniform(0.0, 1.0, 27).snapped(10)).unwrap();
        let h = hitting_probability(&ch, 1.0 / 3.0, 0.0, 1.0, 2000, 5, DEFAULT_BUDGET).unwrap();
        assert!((h.target - 7.0 / 12.0).abs() < 1e-15);
        assert!(h.estimate.z_score(h.target) < 4.0);
    }

    #[test]
    fn extension_trace_stays_on_one_pair() {
        let cfg = preset("ex218", 4).unwrap();
        let t =
            simulate_trace_chain(&cfg, &GridSpec::uniform(0.0, 1.0, 81), 4, 1.0 / 3.0, 10_000, 9, TraceMode::Extension)
                .unwrap();
        assert_eq!(t.support(), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn single_site_window_holds_all_time() {
        let cfg = preset("ex215", 8).unwrap();
        let d = darn(&cfg, 0, 4).unwrap();
        let o = simulate_darned(&d, &[0.5], 0.5, 100, 1).unwrap();
        assert_eq!(o.fraction, vec![1.0]);
    }
}
