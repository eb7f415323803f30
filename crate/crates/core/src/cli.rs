//! Command-line front end: `run`, `synth` and `visibility`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::alloc::{
    self, iterate_phase2, lp_format, BaselineObjective, Budget, PairAllocation, PairSet, SolveStatus,
};
use crate::channel::{build_channel_table, ChannelEstimate, ChannelTable};
use crate::metrics::{self, RunMetadata, RunReport};
use crate::num::Real;
use crate::orbit::build_visibility;
use crate::scenario::{load_scenario, Scenario, TimeGrid};
use crate::sched::{
    accumulate_pools, derive_min_rates, run_greedy, run_opportunistic, run_rr, KeyPools, OpportunisticConfig,
    RateSource, Schedule,
};
use crate::weather::{apply_filter, CloudField, CloudTable};

/// Name of the environment variable that turns on progress messages
/// (`info` or `debug`) on stderr.
pub const LOG_ENV: &str = "SATQKD_LOG";

#[derive(Debug, Parser)]
#[command(name = "satqkd", version, about = "Satellite QKD scheduling and pairwise key allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schedule a day and allocate pairwise keys.
    Run(RunArgs),
    /// Write a seeded synthetic channel table.
    Synth(SynthArgs),
    /// Dump geometric visibility and choice histograms of a scenario.
    Visibility(VisibilityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum SchedulerKind {
    Rr,
    Greedy,
    OpRr,
    OpGreedy,
    Maxmin,
    Maxsum,
}

impl SchedulerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::Rr => "rr",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::OpRr => "op-rr",
            SchedulerKind::OpGreedy => "op-greedy",
            SchedulerKind::Maxmin => "maxmin",
            SchedulerKind::Maxsum => "maxsum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

/// `off` or a cloud-factor threshold in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterThreshold {
    Off,
    At(f64),
}

impl FromStr for FilterThreshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("off") {
            return Ok(FilterThreshold::Off);
        }
        let v: f64 = s.parse().map_err(|_| format!("`{s}` is neither `off` nor a number"))?;
        if (0.0..=1.0).contains(&v) {
            Ok(FilterThreshold::At(v))
        } else {
            Err(format!("threshold {v} outside [0, 1]"))
        }
    }
}

/// `SxGxT`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub satellites: usize,
    pub stations: usize,
    pub slots: u32,
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('x').collect();
        let bad = || format!("`{s}` is not SATELLITESxSTATIONSxSLOTS");
        if parts.len() != 3 {
            return Err(bad());
        }
        let satellites: usize = parts[0].parse().map_err(|_| bad())?;
        let stations: usize = parts[1].parse().map_err(|_| bad())?;
        let slots: u32 = parts[2].parse().map_err(|_| bad())?;
        if satellites == 0 || stations == 0 || slots == 0 {
            return Err("every dimension must be >= 1".into());
        }
        Ok(Shape {
            satellites,
            stations,
            slots,
        })
    }
}

/// Per-link key-bit distribution of synthetic tables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BitsDistribution {
    /// Every row has zero key bits.
    Zero,
    /// Uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
}

impl FromStr for BitsDistribution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "zero" {
            return Ok(BitsDistribution::Zero);
        }
        let bad = || format!("`{s}` is neither `zero` nor `uniform:LO:HI`");
        let rest = s.strip_prefix("uniform:").ok_or_else(bad)?;
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(format!("need 0 <= LO <= HI, got {lo}:{hi}"));
        }
        Ok(BitsDistribution::Uniform { lo, hi })
    }
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with_all = ["channels", "synthetic"])]
    pub scenario: Option<PathBuf>,
    /// Precomputed channel table (CSV as written by `--write-channels`).
    #[arg(long, conflicts_with = "synthetic")]
    pub channels: Option<PathBuf>,
    /// Generate a synthetic table of this shape (SATSxSTATIONSxSLOTS) from `--seed`.
    #[arg(long)]
    pub synthetic: Option<Shape>,
    /// Hourly cloud CSV, or `clear-sky`.
    #[arg(long, default_value = "clear-sky")]
    pub clouds: String,
    /// Drop links whose cloud factor exceeds this value, or `off`.
    #[arg(long, default_value = "0.8")]
    pub filter_threshold: FilterThreshold,
    /// Comma-separated schedulers to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "rr,greedy,op-rr,op-greedy")]
    pub schedulers: Vec<SchedulerKind>,
    /// Multiplier step size of the opportunistic schedulers.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Maximum passes over the day for the opportunistic schedulers.
    #[arg(long, default_value_t = 50)]
    pub max_passes: u32,
    /// Convergence tolerance on the largest multiplier change of a pass.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Branch-and-bound node limit per solve.
    #[arg(long, default_value_t = 20_000)]
    pub solver_nodes: u64,
    /// Wall-clock limit per solve in seconds (none by default; results then depend on timing).
    #[arg(long)]
    pub solver_time_limit: Option<f64>,
    /// Write the baseline programs as LP files.
    #[arg(long)]
    pub export_lp: bool,
    /// With `--export-lp`, write the baseline programs without solving them.
    #[arg(long, requires = "export_lp")]
    pub export_only: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed of the synthetic generator.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Key-bit distribution of `--synthetic` tables.
    #[arg(long, default_value = "uniform:0:1000")]
    pub synthetic_bits: BitsDistribution,
    /// Visibility probability of `--synthetic` links.
    #[arg(long, default_value_t = 1.0)]
    pub synthetic_visibility: f64,
    /// Override the scenario slot count (the scenario default day is 86400 slots).
    #[arg(long)]
    pub slots: Option<u32>,
    /// Override the scenario minimum elevation in degrees (scenario default 20).
    #[arg(long)]
    pub min_elevation: Option<f64>,
    /// Floating-point precision of geometry, channel and scheduling.
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
    /// Also write the channel table used for scheduling.
    #[arg(long)]
    pub write_channels: bool,
    /// Record wall-clock runtimes in the reports (makes them non-reproducible).
    #[arg(long)]
    pub report_runtime: bool,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    /// Shape SATSxSTATIONSxSLOTS.
    #[arg(long, default_value = "1x2x10")]
    pub shape: Shape,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// `zero` or `uniform:LO:HI`.
    #[arg(long, default_value = "uniform:0:1000")]
    pub bits: BitsDistribution,
    /// Probability that a link is visible in a slot.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    /// Output CSV, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct VisibilityArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Visibility CSV, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Also write choice histograms here.
    #[arg(long)]
    pub histograms: Option<PathBuf>,
    /// Override the scenario slot count.
    #[arg(long)]
    pub slots: Option<u32>,
}

/// Failure of one stage; printed as a single JSON line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(stage: &'static str, message: impl fmt::Display) -> Self {
        Self {
            stage,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = serde_json::json!({ "error": { "stage": self.stage, "message": self.message } });
        write!(f, "{line}")
    }
}

impl std::error::Error for CliError {}

fn log(level: &str, msg: impl FnOnce() -> String) {
    let Ok(v) = std::env::var(LOG_ENV) else { return };
    let on = match level {
        "info" => v == "info" || v == "debug",
        _ => v == "debug",
    };
    if on {
        eprintln!("[{level}] {}", msg());
    }
}

/// Synthetic channel table.
///
/// A `ChaCha8Rng` seeded with `seed_from_u64(seed)` is consumed in the order
/// slot, satellite, station (all ascending). Each link draws one `u64` `a`
/// and is visible when `unit(a) < visibility`; a visible link then draws `b`
/// and gets `key_bits = lo + (hi - lo) * unit(b)` (no draw for `zero`).
/// `unit(x) = (x >> 11) / 2^53`. Ids are indices, capacities 1; every other
/// column is filled so that `photon_successes = key_bits`, `key_rate = 1`
/// and the cloud factor is 0.
pub fn generate_synthetic(shape: Shape, seed: u64, bits: BitsDistribution, visibility: f64) -> ChannelTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |x: u64| (x >> 11) as f64 / (1u64 << 53) as f64;
    let mut rows = Vec::new();
    for t in 0..shape.slots {
        for s in 0..shape.satellites as u32 {
            for g in 0..shape.stations as u32 {
                if unit(rng.next_u64()) >= visibility {
                    continue;
                }
                let key_bits = match bits {
                    BitsDistribution::Zero => 0.0,
                    BitsDistribution::Uniform { lo, hi } => lo + (hi - lo) * unit(rng.next_u64()),
                };
                rows.push(ChannelEstimate {
                    satellite: s,
                    station: g,
                    slot: t,
                    transmissivity: 0.0,
                    photon_successes: key_bits,
                    qber: 0.0,
                    key_rate: 1.0,
                    cloud_factor: 0.0,
                    key_bits,
                });
            }
        }
    }
    ChannelTable::new(
        (0..shape.satellites as u32).collect(),
        (0..shape.stations as u32).collect(),
        vec![1; shape.satellites],
        vec![1; shape.stations],
        shape.slots,
        rows,
    )
    .expect("generated rows are in range")
}

fn open_out(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        let f = fs::File::create(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        Ok(Box::new(f))
    }
}

fn load_scenario_with(path: &Path, slots: Option<u32>, min_elevation: Option<f64>) -> Result<Scenario, CliError> {
    let mut sc = load_scenario(path).map_err(|e| CliError::new("scenario", e))?;
    if let Some(n) = slots {
        let g = &sc.time_grid;
        sc.time_grid = TimeGrid::new(g.epoch, g.slot_duration_s, n);
    }
    if let Some(e) = min_elevation {
        sc.min_elevation_deg = e;
    }
    sc.validate().map_err(|e| CliError::new("scenario", e))?;
    Ok(sc)
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.visibility) {
        return Err(CliError::new("synth", "visibility must be in [0, 1]"));
    }
    let table = generate_synthetic(args.shape, args.seed, args.bits, args.visibility);
    let out = open_out(&args.out)?;
    table.write_csv(out).map_err(|e| CliError::new("io", e))
}

pub fn visibility(args: &VisibilityArgs) -> Result<(), CliError> {
    let sc = load_scenario_with(&args.scenario, args.slots, None)?;
    let vis = build_visibility::<f64>(&sc);
    log("info", || format!("mean active slots per satellite {:.1}", vis.mean_active_slots()));
    vis.write_csv(&sc, open_out(&args.out)?).map_err(|e| CliError::new("io", e))?;
    if let Some(p) = &args.histograms {
        metrics::choice_histograms(&vis).write_csv(open_out(p)?).map_err(|e| CliError::new("io", e))?;
    }
    Ok(())
}

/// Writes into a hidden sibling directory that replaces `out` on success
/// and is removed on failure.
struct Staging {
    dir: PathBuf,
    out: PathBuf,
    done: bool,
}

impl Staging {
    fn new(out: &Path) -> Result<Self, CliError> {
        let io = |e: std::io::Error| CliError::new("io", format!("{}: {e}", out.display()));
        if out.exists() {
            let previous = out.join("comparison.csv").exists() || fs::read_dir(out).map_err(io)?.next().is_none();
            if !out.is_dir() || !previous {
                return Err(CliError::new(
                    "io",
                    format!("{} exists and is not an earlier output directory", out.display()),
                ));
            }
        }
        let name = out.file_name().map_or("out".into(), |n| n.to_string_lossy().into_owned());
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(io)?;
        let dir = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io)?;
        }
        fs::create_dir_all(&dir).map_err(io)?;
        Ok(Self {
            dir,
            out: out.to_path_buf(),
            done: false,
        })
    }

    fn file(&self, rel: &str) -> Result<fs::File, CliError> {
        let p = self.dir.join(rel);
        if let Some(d) = p.parent() {
            fs::create_dir_all(d).map_err(|e| CliError::new("io", format!("{}: {e}", d.display())))?;
        }
        fs::File::create(&p).map_err(|e| CliError::new("io", format!("{}: {e}", p.display())))
    }

    fn commit(mut self) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::new("io", e);
        if self.out.exists() {
            fs::remove_dir_all(&self.out).map_err(io)?;
        }
        fs::rename(&self.dir, &self.out).map_err(io)?;
        self.done = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::new("io", e)
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    if args.schedulers.is_empty() {
        return Err(CliError::new("config", "no scheduler selected"));
    }
    if !(args.delta > 0.0) || !(args.tol > 0.0) {
        return Err(CliError::new("config", "--delta and --tol must be positive"));
    }
    let staging = Staging::new(&args.out)?;
    match args.precision {
        Precision::F64 => run_with::<f64>(args, &staging)?,
        Precision::F32 => run_with::<f32>(args, &staging)?,
    }
    staging.commit()
}

fn build_table<T: Real>(args: &RunArgs, staging: &Staging) -> Result<ChannelTable<T>, CliError> {
    if let Some(path) = &args.scenario {
        let sc = load_scenario_with(path, args.slots, args.min_elevation)?;
        let clouds = if args.clouds == "clear-sky" {
            CloudField::clear_sky(&sc)
        } else {
            let t = CloudTable::load(&args.clouds).map_err(|e| CliError::new("weather", e))?;
            CloudField::resolve(&t, &sc).map_err(|e| CliError::new("weather", e))?
        };
        let start = Instant::now();
        let vis = build_visibility::<T>(&sc);
        log("info", || format!("visibility in {:?}, mean |T_s| {:.1}", start.elapsed(), vis.mean_active_slots()));
        metrics::choice_histograms(&vis)
            .write_csv(staging.file("histograms.csv")?)
            .map_err(io_err)?;
        return Ok(build_channel_table(&sc, &vis, &clouds));
    }
    if args.clouds != "clear-sky" {
        return Err(CliError::new("config", "--clouds needs --scenario"));
    }
    let table = if let Some(path) = &args.channels {
        ChannelTable::<T>::load_csv(path).map_err(|e| CliError::new("channel", e))?
    } else if let Some(shape) = args.synthetic {
        if !(0.0..=1.0).contains(&args.synthetic_visibility) {
            return Err(CliError::new("config", "--synthetic-visibility must be in [0, 1]"));
        }
        generate_synthetic(shape, args.seed, args.synthetic_bits, args.synthetic_visibility).cast::<T>()
    } else {
        return Err(CliError::new("config", "one of --scenario, --channels or --synthetic is required"));
    };
    metrics::choice_histograms_for_table(&table)
        .write_csv(staging.file("histograms.csv")?)
        .map_err(io_err)?;
    Ok(table)
}

struct Outcome {
    schedule: Schedule,
    pools: KeyPools,
    allocation: PairAllocation,
    meta: RunMetadata,
}

fn phase2(schedule: Schedule, pools: KeyPools, budget: &Budget, meta: RunMetadata) -> Result<Outcome, CliError> {
    let it = iterate_phase2(&pools, budget).map_err(|e| CliError::new("alloc", e))?;
    let mut meta = meta;
    meta.phase2_rounds = Some(it.round_values.clone());
    if it.status != SolveStatus::Optimal {
        meta.solver_status = Some(it.status.as_str().into());
    }
    Ok(Outcome {
        schedule,
        pools,
        allocation: it.allocation,
        meta,
    })
}

fn run_with<T: Real>(args: &RunArgs, staging: &Staging) -> Result<(), CliError> {
    let table = build_table::<T>(args, staging)?;
    let table = match args.filter_threshold {
        FilterThreshold::Off => table,
        FilterThreshold::At(th) => apply_filter(&table, th),
    };
    log("info", || format!("{} usable links", table.rows().len()));
    if args.write_channels {
        table.write_csv(staging.file("channels.csv")?).map_err(io_err)?;
    }

    let budget = Budget {
        max_nodes: args.solver_nodes,
        time_limit: args.solver_time_limit.map(std::time::Duration::from_secs_f64),
        integral_objective: false,
    };
    let op_cfg = OpportunisticConfig {
        step_size: args.delta,
        max_passes: args.max_passes,
        convergence_tol: args.tol,
    };
    let mut kinds = args.schedulers.clone();
    kinds.sort();
    kinds.dedup();
    let wants = |k: SchedulerKind| kinds.contains(&k);
    let needs_rr = wants(SchedulerKind::Rr) || wants(SchedulerKind::OpRr) || wants(SchedulerKind::Maxmin) || wants(SchedulerKind::Maxsum);
    let needs_greedy =
        wants(SchedulerKind::Greedy) || wants(SchedulerKind::OpGreedy) || wants(SchedulerKind::Maxmin) || wants(SchedulerKind::Maxsum);

    let excluded = {
        let possible = alloc::baseline::table_possible_pairs(&table);
        let all = PairSet::all(table.station_count());
        PairSet::from_pairs(
            all.station_count(),
            all.pairs().iter().copied().filter(|&(a, b)| possible.index_of(a, b).is_none()),
        )
    };

    let timed = |t: Instant, meta: &mut RunMetadata| {
        if args.report_runtime {
            meta.runtime_ms = Some(t.elapsed().as_millis() as u64);
        }
    };

    let mut seeds: Vec<Schedule> = Vec::new();
    let mut rr = None;
    let mut greedy = None;
    let mut reports: Vec<RunReport> = Vec::new();
    let mut outcomes: Vec<(SchedulerKind, Outcome)> = Vec::new();

    if needs_rr {
        let t = Instant::now();
        let s = run_rr(&table);
        let p = accumulate_pools(&s, &table);
        seeds.push(s.clone());
        if wants(SchedulerKind::Rr) {
            let mut o = phase2(s, p.clone(), &budget, RunMetadata::default())?;
            timed(t, &mut o.meta);
            outcomes.push((SchedulerKind::Rr, o));
        }
        rr = Some(p);
    }
    if needs_greedy {
        let t = Instant::now();
        let s = run_greedy(&table);
        let p = accumulate_pools(&s, &table);
        seeds.push(s.clone());
        if wants(SchedulerKind::Greedy) {
            let mut o = phase2(s, p.clone(), &budget, RunMetadata::default())?;
            timed(t, &mut o.meta);
            outcomes.push((SchedulerKind::Greedy, o));
        }
        greedy = Some(p);
    }
    for (kind, base, source) in [
        (SchedulerKind::OpRr, &rr, RateSource::RoundRobin),
        (SchedulerKind::OpGreedy, &greedy, RateSource::Greedy),
    ] {
        if !wants(kind) {
            continue;
        }
        let t = Instant::now();
        let targets = derive_min_rates(base.as_ref().expect("seed schedule computed"), &table, source);
        let out = run_opportunistic(&table, &targets, &op_cfg);
        log("info", || {
            format!("{}: {} passes, converged {}", kind.name(), out.passes, out.converged)
        });
        let meta = RunMetadata {
            passes: Some(out.passes),
            converged: Some(out.converged),
            final_multiplier_change: Some(out.final_change.to_f64_lossy()),
            ..Default::default()
        };
        let p = accumulate_pools(&out.schedule, &table);
        seeds.push(out.schedule.clone());
        let mut o = phase2(out.schedule, p, &budget, meta)?;
        timed(t, &mut o.meta);
        outcomes.push((kind, o));
    }
    for (kind, objective) in [
        (SchedulerKind::Maxmin, BaselineObjective::MaxMin),
        (SchedulerKind::Maxsum, BaselineObjective::MaxSum),
    ] {
        if !wants(kind) {
            continue;
        }
        if args.export_lp {
            let bm = alloc::baseline::build_baseline_model(&table, objective);
            let mut f = staging.file(&format!("{}/model.lp", kind.name()))?;
            f.write_all(lp_format::to_lp_string(&bm.model).as_bytes()).map_err(io_err)?;
            if args.export_only {
                continue;
            }
        }
        let t = Instant::now();
        let out = alloc::solve_baseline(&table, objective, &budget, &seeds).map_err(|e| CliError::new("alloc", e))?;
        log("info", || format!("{}: {} nodes, gap {}", kind.name(), out.nodes, out.gap()));
        let mut meta = RunMetadata {
            solver_status: Some(out.status.as_str().into()),
            solver_bound: Some(out.bound),
            solver_gap: Some(out.gap()),
            solver_nodes: Some(out.nodes),
            ..Default::default()
        };
        timed(t, &mut meta);
        outcomes.push((
            kind,
            Outcome {
                schedule: out.schedule,
                pools: out.pools,
                allocation: out.allocation,
                meta,
            },
        ));
    }

    for (kind, o) in outcomes {
        let name = kind.name();
        o.schedule.write_csv(staging.file(&format!("{name}/schedule.csv"))?).map_err(io_err)?;
        o.pools.write_csv(staging.file(&format!("{name}/pools.csv"))?).map_err(io_err)?;
        o.allocation.write_csv(staging.file(&format!("{name}/allocation.csv"))?).map_err(io_err)?;
        let mut report = metrics::summarize(name, &o.allocation, &excluded);
        report.scheduled_links = o.schedule.len() as u64;
        report.metadata = o.meta;
        staging
            .file(&format!("{name}/report.json"))?
            .write_all(report.to_json().as_bytes())
            .map_err(io_err)?;
        report.write_csv(staging.file(&format!("{name}/report.csv"))?).map_err(io_err)?;
        reports.push(report);
    }
    metrics::write_comparison(&reports, staging.file("comparison.csv")?).map_err(io_err)?;
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
        Command::Visibility(a) => visibility(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_flags() {
        assert_eq!("off".parse::<FilterThreshold>().unwrap(), FilterThreshold::Off);
        assert_eq!("0.8".parse::<FilterThreshold>().unwrap(), FilterThreshold::At(0.8));
        assert!("1.5".parse::<FilterThreshold>().is_err());
        assert_eq!(
            "3x4x200".parse::<Shape>().unwrap(),
            Shape {
                satellites: 3,
                stations: 4,
                slots: 200
            }
        );
        assert!("3x4".parse::<Shape>().is_err());
        assert_eq!("zero".parse::<BitsDistribution>().unwrap(), BitsDistribution::Zero);
        assert!("uniform:5:1".parse::<BitsDistribution>().is_err());
    }

    #[test]
    fn synthetic_is_seeded() {
        let s = Shape {
            satellites: 2,
            stations: 3,
            slots: 20,
        };
        let bits = BitsDistribution::Uniform { lo: 0.0, hi: 100.0 };
        let a = generate_synthetic(s, 1, bits, 0.7);
        assert_eq!(a, generate_synthetic(s, 1, bits, 0.7));
        assert_ne!(a, generate_synthetic(s, 2, bits, 0.7));
        let z = generate_synthetic(s, 1, BitsDistribution::Zero, 1.0);
        assert_eq!(z.rows().len(), 120);
        assert!(z.rows().iter().all(|r| r.key_bits == 0.0));
    }

    #[test]
    fn error_line_is_json() {
        let e = CliError::new("scenario", "bad \"value\"\non two lines");
        let line = e.to_string();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"]["stage"], "scenario");
    }
}
