//! The `bmext` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::cantor::{DEFAULT_DEPTH, MAX_ENUM_DEPTH};
use crate::config::{validate, ExtensionConfig};
use crate::darning::darn;
use crate::error::{Error, Result};
use crate::forms::{energy, in_extended_space, is_in_complement, orthogonal_decompose};
use crate::presets::{PRESETS, PRESET_DEPTH};
use crate::scenario::ScenarioFile;
use crate::sim::{
    build_chain, build_global_chain, hitting_probability, simulate_darned, simulate_path, simulate_trace_chain,
    GridSpec, TimeMode, TraceMode, DEFAULT_BUDGET,
};
use crate::trace::{jump_contributions, sites, trace_energy_bm, trace_energy_ext, trace_membership, TraceFn};
use crate::verify::{run_criterion, run_suite, VerifyParams, VerifyReport, DEFAULT_SAMPLES};
use crate::DEFAULT_SEED;

/// Working depth of enumerative commands.
pub const ENUM_DEPTH: u32 = 8;

#[derive(Debug, Parser)]
#[command(name = "bmext", version, about = "Regular Dirichlet extensions of one-dimensional Brownian motion")]
pub struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Bundled scenario: ex215, ex216, ex217, ex218 or darning-sojourn.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Working depth (24 for energy and decompose, 8 otherwise).
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit timestamps so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration against the structural invariants.
    Validate { path: Option<PathBuf> },
    /// Dirichlet energy of a named function.
    Energy {
        #[arg(long, default_value = "tent")]
        function: String,
    },
    /// Orthogonal decomposition of a named function, sampled on a window.
    Decompose {
        #[arg(long, default_value = "tent")]
        function: String,
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
    /// Collapse the U-components of one invariant interval.
    Darn {
        #[arg(long, default_value_t = 0)]
        interval: usize,
    },
    /// Trace energies and membership of a function restricted to K.
    Trace {
        #[arg(long, default_value = "identity")]
        function: String,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
    },
    /// Grid-chain simulations.
    Simulate {
        #[command(subcommand)]
        kind: SimulateKind,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        criterion: Option<u32>,
    },
    /// List bundled scenarios.
    Presets,
    /// Print the scenario as JSON.
    Export,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceModeArg {
    Extension,
    Brownian,
}

#[derive(Debug, Subcommand)]
pub enum SimulateKind {
    /// Probability of reaching LO before HI.
    Hitting {
        #[arg(long, default_value_t = 0)]
        interval: usize,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 27)]
        cells: usize,
    },
    /// A single path, written as CSV.
    Path {
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 100)]
        cells: usize,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long)]
        reflect: bool,
        #[arg(long)]
        exponential: bool,
    },
    /// Visit frequencies of a trace process on the K-sites of a window.
    Trace {
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 243)]
        cells: usize,
        #[arg(long, value_enum, default_value_t = TraceModeArg::Extension)]
        mode: TraceModeArg,
    },
    /// Occupation times of the darned process on a grid in J*.
    Darned {
        #[arg(long, default_value_t = 0)]
        interval: usize,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 16)]
        cells: usize,
    },
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    scenario_hash: &'a str,
    depth: u32,
    seed: u64,
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    result: T,
}

struct Context {
    scenario: ScenarioFile,
    config: ExtensionConfig,
    hash: String,
    depth: u32,
    seed: u64,
    tol: f64,
    timestamp: Option<u64>,
    out: Option<PathBuf>,
}

impl Context {
    fn emit<T: Serialize>(&self, w: &mut dyn Write, command: &str, result: T) -> Result<()> {
        let env = Envelope {
            command,
            scenario_hash: &self.hash,
            depth: self.depth,
            seed: self.seed,
            tol: self.tol,
            timestamp: self.timestamp,
            result,
        };
        writeln!(w, "{}", serde_json::to_string_pretty(&env)?)?;
        Ok(())
    }

    /// Writes a CSV file into `--out` with a provenance comment line.
    fn csv<R: Serialize>(&self, name: &str, extra: &str, rows: &[R]) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.out else { return Ok(None) };
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# scenario={} depth={} seed={}{extra}", self.hash, self.depth, self.seed)?;
        let mut w = csv::Writer::from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(Some(path))
    }
}

fn timestamp(deterministic: bool) -> Option<u64> {
    (!deterministic).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

fn load_scenario(cli: &Cli, path: Option<&Path>) -> Result<ScenarioFile> {
    if let Some(p) = path.or(cli.scenario.as_deref()) {
        return ScenarioFile::load(p);
    }
    let name = cli.preset.as_deref().ok_or_else(|| Error::Parse("give --scenario PATH or --preset NAME".into()))?;
    let depth = match cli.depth {
        Some(d) if d <= MAX_ENUM_DEPTH => d,
        _ => PRESET_DEPTH,
    };
    ScenarioFile::from_preset(name, depth)
}

fn context(cli: &Cli, default_depth: u32) -> Result<Context> {
    let scenario = load_scenario(cli, None)?;
    let config = ExtensionConfig::new(scenario.config.clone())?;
    Ok(Context {
        hash: scenario.hash()?,
        scenario,
        config,
        depth: cli.depth.unwrap_or(default_depth),
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        tol: cli.tol,
        timestamp: timestamp(cli.deterministic),
        out: cli.out.clone(),
    })
}

fn window_or(window: &Option<Vec<f64>>, lo: f64, hi: f64) -> (f64, f64) {
    match window.as_deref() {
        Some([a, b]) => (*a, *b),
        _ => (lo, hi),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Invalid(_) => 1,
        _ => 3,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if e.use_stderr() {
                eprint!("{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let obj = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&obj).unwrap_or_default());
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Validate { path } => cmd_validate(cli, path.as_deref(), out),
        Command::Energy { function } => cmd_energy(cli, function, out),
        Command::Decompose { function, points, window } => cmd_decompose(cli, function, *points, window, out),
        Command::Darn { interval } => cmd_darn(cli, *interval, out),
        Command::Trace { function, window } => cmd_trace(cli, function, window, out),
        Command::Simulate { kind } => cmd_simulate(cli, kind, out),
        Command::Verify { criterion } => cmd_verify(cli, *criterion, out),
        Command::Presets => {
            for p in PRESETS {
                writeln!(out, "{p}")?;
            }
            Ok(0)
        }
        Command::Export => {
            writeln!(out, "{}", load_scenario(cli, None)?.to_json()?)?;
            Ok(0)
        }
    }
}

pub fn cmd_validate(cli: &Cli, path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let scenario = load_scenario(cli, path)?;
    let report = validate(&scenario.config);
    let env = Envelope {
        command: "validate",
        scenario_hash: &scenario.hash()?,
        depth: cli.depth.unwrap_or(PRESET_DEPTH),
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        tol: cli.tol,
        timestamp: timestamp(cli.deterministic),
        result: json!({ "valid": report.is_valid(), "violations": report.violations, "report": report.to_string() }),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&env)?)?;
    Ok(if report.is_valid() { 0 } else { 1 })
}

pub fn cmd_energy(cli: &Cli, function: &str, out: &mut dyn Write) -> Result<i32> {
    let ctx = context(cli, DEFAULT_DEPTH)?;
    let f = ctx.scenario.function(&ctx.config, function)?;
    let e = energy(&ctx.config, &f)?;
    ctx.emit(
        out,
        "energy",
        json!({
            "function": function,
            "energy": e,
            "in_extended_space": in_extended_space(&ctx.config, &f),
            "in_complement": is_in_complement(&ctx.config, &f),
        }),
    )?;
    Ok(0)
}

pub fn cmd_decompose(
    cli: &Cli,
    function: &str,
    points: usize,
    window: &Option<Vec<f64>>,
    out: &mut dyn Write,
) -> Result<i32> {
    let ctx = context(cli, DEFAULT_DEPTH)?;
    let f = ctx.scenario.function(&ctx.config, function)?;
    let d = orthogonal_decompose(&ctx.config, &f)?;
    let (lo, hi) = window_or(window, -1.0, 2.0);
    let mut samples = Vec::new();
    for i in 0..points.max(2) {
        let x = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
        samples.push(json!({
            "x": x,
            "f": f.eval(&ctx.config, x)?,
            "f1": d.f1.eval(&ctx.config, x)?,
            "f2": d.f2.eval(&ctx.config, x)?,
        }));
    }
    ctx.emit(
        out,
        "decompose",
        json!({
            "function": function,
            "constants": d.constants,
            "energy_f1": energy(&ctx.config, &d.f1).ok(),
            "energy_f2": energy(&ctx.config, &d.f2).ok(),
            "samples": samples,
        }),
    )?;
    Ok(0)
}

pub fn cmd_darn(cli: &Cli, interval: usize, out: &mut dyn Write) -> Result<i32> {
    let ctx = context(cli, ENUM_DEPTH)?;
    let spec = darn(&ctx.config, interval, ctx.depth)?;
    let csv = ctx.csv("atoms.csv", "", &spec.atoms)?;
    let residual: f64 = spec.residual.iter().map(|a| a.mass).sum();
    ctx.emit(
        out,
        "darn",
        json!({
            "interval": interval,
            "source": spec.source,
            "image": spec.image,
            "slow_lo": spec.slow_lo,
            "slow_hi": spec.slow_hi,
            "atoms": spec.atoms.len(),
            "atom_mass": spec.atoms.iter().map(|a| a.mass).sum::<f64>(),
            "residual_mass": residual,
            "total_mass": spec.total_mass(),
            "source_length": spec.source.length(),
            "largest_atoms": largest(&spec.atoms, 8),
            "atoms_csv": csv,
        }),
    )?;
    Ok(0)
}

fn largest(atoms: &[crate::config::Atom], k: usize) -> Vec<crate::config::Atom> {
    let mut v = atoms.to_vec();
    v.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.location.total_cmp(&b.location)));
    v.truncate(k);
    v
}

pub fn cmd_trace(cli: &Cli, function: &str, window: &Option<Vec<f64>>, out: &mut dyn Write) -> Result<i32> {
    let ctx = context(cli, ENUM_DEPTH)?;
    let f = ctx.scenario.function(&ctx.config, function)?;
    let phi = TraceFn::from_piecewise(&ctx.config, ctx.depth, &f)?;
    let k = sites(&ctx.config, ctx.depth)?;
    let (first, last) = (k.first().copied().unwrap_or(0.0), k.last().copied().unwrap_or(0.0));
    let (lo, hi) = window_or(window, first, last);
    let bm = trace_energy_bm(&ctx.config, &phi)?;
    let ext = trace_energy_ext(&ctx.config, &phi);
    let membership = trace_membership(&ctx.config, &phi, (lo, hi), ctx.tol);
    let gaps = jump_contributions(&ctx.config, &phi)?;
    let csv = ctx.csv("gaps.csv", "", &gaps)?;
    ctx.emit(
        out,
        "trace",
        json!({
            "function": function,
            "energy_bm": bm,
            "energy_ext": ext.as_ref().ok(),
            "energy_ext_error": ext.as_ref().err().map(|e| e.to_string()),
            "lower_bound": true,
            "gaps": gaps.len(),
            "membership": membership,
            "gaps_csv": csv,
        }),
    )?;
    Ok(0)
}

pub fn cmd_simulate(cli: &Cli, kind: &SimulateKind, out: &mut dyn Write) -> Result<i32> {
    let ctx = context(cli, ENUM_DEPTH)?;
    match kind {
        SimulateKind::Hitting { interval, x0, lo, hi, cells } => {
            let grid = GridSpec::uniform(*lo, *hi, *cells).snapped(ctx.depth);
            let chain = build_chain(&ctx.config, *interval, &grid)?;
            let samples = cli.samples.unwrap_or(DEFAULT_SAMPLES);
            let h = hitting_probability(&chain, *x0, *lo, *hi, samples, ctx.seed, DEFAULT_BUDGET)?;
            ctx.emit(out, "simulate-hitting", json!({ "grid": grid, "sites": chain.len(), "hitting": h }))?;
        }
        SimulateKind::Path { x0, lo, hi, cells, steps, reflect, exponential } => {
            let mut grid = GridSpec::uniform(*lo, *hi, *cells);
            if *reflect {
                grid = grid.reflecting();
            }
            let chain = build_global_chain(&ctx.config, &grid)?;
            let mode = if *exponential { TimeMode::Exponential } else { TimeMode::Mean };
            let path = simulate_path(&chain, *x0, *steps, ctx.seed, mode)?;
            let extra = format!(" grid=[{lo},{hi}]/{cells}");
            let csv = ctx.csv("path.csv", &extra, &path.steps)?;
            let last = path.steps.last().copied();
            ctx.emit(
                out,
                "simulate-path",
                json!({
                    "grid": grid,
                    "length": path.len(),
                    "absorbed": path.absorbed,
                    "exhausted": path.exhausted,
                    "final": last,
                    "path_csv": csv,
                }),
            )?;
        }
        SimulateKind::Trace { x0, lo, hi, cells, mode } => {
            let grid = GridSpec::uniform(*lo, *hi, *cells);
            let mode = match mode {
                TraceModeArg::Extension => TraceMode::Extension,
                TraceModeArg::Brownian => TraceMode::Brownian,
            };
            let steps = cli.samples.unwrap_or(DEFAULT_SAMPLES);
            let table = simulate_trace_chain(&ctx.config, &grid, ctx.depth, *x0, steps, ctx.seed, mode)?;
            let rows: Vec<VisitRow> = (0..table.sites.len())
                .map(|i| VisitRow { site: table.sites[i], visits: table.visits[i], frequency: table.frequency[i] })
                .collect();
            let csv = ctx.csv("visits.csv", &format!(" grid=[{lo},{hi}]/{cells}"), &rows)?;
            ctx.emit(
                out,
                "simulate-trace",
                json!({ "mode": mode, "steps": steps, "sites": table.sites.len(), "support": table.support(), "visits_csv": csv }),
            )?;
        }
        SimulateKind::Darned { interval, x0, lo, hi, cells } => {
            let spec = darn(&ctx.config, *interval, ctx.depth)?;
            let lo = lo.unwrap_or(spec.image.lo);
            let hi = hi.unwrap_or(spec.image.hi);
            if !lo.is_finite() || !hi.is_finite() || !(lo <= hi) {
                return Err(Error::Domain(format!("give a finite window inside J* = {}", spec.image)));
            }
            let c = (*cells).max(1) as f64;
            let grid: Vec<f64> = (0..=*cells)
                .map(|k| (lo * (c - k as f64) + hi * k as f64) / c)
                .filter(|&y| spec.image.contains(y))
                .collect();
            let steps = cli.samples.unwrap_or(DEFAULT_SAMPLES);
            let occ = simulate_darned(&spec, &grid, *x0, steps, ctx.seed)?;
            #[derive(Serialize)]
            struct Row {
                site: f64,
                mass: f64,
                visits: u64,
                fraction: f64,
                target: f64,
            }
            let rows: Vec<Row> = (0..occ.sites.len())
                .map(|i| Row {
                    site: occ.sites[i],
                    mass: occ.mass[i],
                    visits: occ.visits[i],
                    fraction: occ.fraction[i],
                    target: occ.target[i],
                })
                .collect();
            let csv = ctx.csv("occupation.csv", &format!(" grid=[{lo},{hi}]/{cells}"), &rows)?;
            ctx.emit(
                out,
                "simulate-darned",
                json!({ "image": spec.image, "steps": steps, "occupation": rows, "occupation_csv": csv }),
            )?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct VisitRow {
    site: f64,
    visits: u64,
    frequency: f64,
}

pub fn cmd_verify(cli: &Cli, criterion: Option<u32>, out: &mut dyn Write) -> Result<i32> {
    let params = VerifyParams {
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        samples: cli.samples.unwrap_or(DEFAULT_SAMPLES),
        deterministic: cli.deterministic,
    };
    let report = match criterion {
        Some(id) => {
            VerifyReport { seed: params.seed, samples: params.samples, criteria: vec![run_criterion(id, &params)] }
        }
        None => run_suite(&params),
    };
    write!(out, "# bmext verify seed={} samples={}", params.seed, params.samples)?;
    if let Some(t) = timestamp(cli.deterministic) {
        write!(out, " timestamp={t}")?;
    }
    writeln!(out)?;
    write!(out, "{report}")?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}
