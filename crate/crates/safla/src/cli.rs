//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on any error (including usage errors), and 2 when
//! `check` finds the tables inconsistent with the declared intents.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use safla_core::assurance::{
    ApplyRecord, AssuranceEngine, ConsistencyReport, CycleReport, NetworkHandle, NoClock, RemediationPlan,
};
use safla_core::extract::{extract, AddrKey, EndpointTuple, RejectReason};
use safla_core::flow::FlowTable;
use safla_core::intent::IntentRepository;
use safla_core::sim::{build_scenario, inject_scheduled, run_scenario, ScenarioSpec, SimNetwork};
use safla_core::NodeId;

use crate::bench::{bench_extraction, bench_recovery, parse_grid, BenchRow};
use crate::output::{write_csv, write_event_log, write_jsonl, write_metrics_csv};
use crate::schema::{build_nskg, load_repository, parse_flow_tables, parse_scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;

const AFTER_HELP: &str = "\
Exit codes: 0 success, 1 error or usage error, 2 `check` found an inconsistency.
Probe packets used for survival fill an ANY protocol with TCP and an ANY destination
port with 80, and use source port 49152.
Set SAFLA_LOG (error, warn, info, debug, trace) for log output on stderr.";

#[derive(Parser, Debug)]
#[command(name = "safla", version, about = "Intent extraction, consistency checking, and remediation for SDN flow tables")]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Output {
    /// Write data here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Network state: a scenario, or flow tables plus topology plus intents.
#[derive(Args, Debug)]
struct State {
    #[arg(long, value_name = "PATH", conflicts_with_all = ["tables", "topology", "intents"])]
    scenario: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires_all = ["topology", "intents"])]
    tables: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    topology: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    intents: Option<PathBuf>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract the deployed endpoint tuples (set G) from flow tables.
    Extract {
        #[arg(long, value_name = "PATH")]
        tables: PathBuf,
        #[arg(long, value_name = "PATH")]
        topology: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Compare extracted tuples with declared intents; exit 2 if they differ.
    Check {
        #[arg(long, value_name = "PATH")]
        tables: PathBuf,
        #[arg(long, value_name = "PATH")]
        topology: PathBuf,
        #[arg(long, value_name = "PATH")]
        intents: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run one assurance cycle and print the report and the resulting tables.
    ///
    /// With --scenario, every scheduled fault is injected first.
    Remediate {
        #[command(flatten)]
        state: State,
        #[command(flatten)]
        output: Output,
    },
    /// Run assurance cycles, one JSON line each.
    ///
    /// With --scenario, cycle k first injects the faults scheduled for step k.
    Assure {
        #[command(flatten)]
        state: State,
        /// Seconds to wait between cycles.
        #[arg(long, value_name = "SECS")]
        period: Option<f64>,
        /// Stop after this many cycles; runs until interrupted otherwise.
        #[arg(long, value_name = "N")]
        cycles: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Scenario simulation.
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Timing harnesses.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand, Debug)]
enum SimCommand {
    /// Execute a scenario and emit per-step metrics.
    Run {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the event log here, one JSON object per line.
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Debug)]
struct Grid {
    /// Switch counts: `A..B`, `A,B,C`, or `N` [default: extraction 100, recovery 1,50,100,200,400]
    #[arg(long)]
    switches: Option<String>,
    /// Intent counts: `A..B`, `A,B,C`, or `N` [default: extraction 10..100, recovery 60]
    #[arg(long)]
    intents: Option<String>,
    /// Step for `A..B` ranges.
    #[arg(long, default_value_t = 10)]
    step: usize,
    #[arg(long, default_value_t = 5)]
    repeat: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Median full-extraction time.
    Extraction {
        #[command(flatten)]
        grid: Grid,
    },
    /// Median recovery-cycle time after a single-intent hijack.
    Recovery {
        #[command(flatten)]
        grid: Grid,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_only(o: &Output, command: &str) -> anyhow::Result<()> {
    if o.format == Some(Format::Csv) {
        bail!("`{command}` only produces JSON");
    }
    Ok(())
}

fn emit_json<T: Serialize>(o: &Output, value: &T) -> anyhow::Result<()> {
    let mut w = sink(o.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_tables(tables: &Path, topology: &Path) -> anyhow::Result<(Vec<FlowTable>, safla_core::nskg::Nskg)> {
    let t = parse_flow_tables(&read(tables)?).with_context(|| format!("loading {}", tables.display()))?;
    let g = build_nskg(&read(topology)?).with_context(|| format!("loading {}", topology.display()))?;
    log::info!("loaded {} tables and {} nodes", t.len(), g.nodes().len());
    Ok((t, g))
}

fn load_intents(path: &Path) -> anyhow::Result<IntentRepository> {
    let (repo, diags) = load_repository(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    for d in diags {
        log::warn!("{d:?}");
    }
    Ok(repo)
}

fn load_scenario(path: &Path, seed: Option<u64>) -> anyhow::Result<ScenarioSpec> {
    let mut s = parse_scenario(&read(path)?).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

/// A live network plus, in scenario mode, the fault schedule.
struct Loaded {
    network: SimNetwork,
    intents: IntentRepository,
    scenario: Option<ScenarioSpec>,
}

fn load_state(s: &State) -> anyhow::Result<Loaded> {
    if let Some(path) = &s.scenario {
        let spec = load_scenario(path, s.seed)?;
        let (network, intents) = build_scenario(&spec)?;
        return Ok(Loaded { network, intents, scenario: Some(spec) });
    }
    let (Some(tables), Some(topology), Some(intents)) = (&s.tables, &s.topology, &s.intents) else {
        bail!("give either --scenario or all of --tables, --topology, and --intents");
    };
    let (t, g) = load_tables(tables, topology)?;
    let network = SimNetwork::with_tables(g, s.seed.unwrap_or(0), &t)?;
    Ok(Loaded { network, intents: load_intents(intents)?, scenario: None })
}

#[derive(Serialize)]
struct Rejected<'a> {
    key: &'a AddrKey,
    path: &'a [NodeId],
    reason: Option<RejectReason>,
}

#[derive(Serialize)]
struct Extracted<'a> {
    g: Vec<&'a EndpointTuple>,
    diagnostics: Vec<Rejected<'a>>,
}

/// A cycle report without its wall-clock duration, so output depends only on inputs.
#[derive(Serialize)]
struct CycleView<'a> {
    cycle: u64,
    report: &'a ConsistencyReport,
    plan: &'a RemediationPlan,
    applied: bool,
    changes: &'a ApplyRecord,
    post_check: &'a ConsistencyReport,
}

impl<'a> CycleView<'a> {
    fn new(cycle: u64, c: &'a CycleReport) -> Self {
        Self {
            cycle,
            report: &c.report,
            plan: &c.plan,
            applied: c.applied,
            changes: &c.changes,
            post_check: &c.post_check,
        }
    }
}

#[derive(Serialize)]
struct Remediated<'a> {
    #[serde(flatten)]
    cycle: CycleView<'a>,
    tables: Vec<FlowTable>,
}

fn timed_cycle(
    engine: &mut AssuranceEngine,
    l: &mut Loaded,
    cycle: u64,
) -> anyhow::Result<CycleReport> {
    let g = l.network.nskg_arc();
    let start = Instant::now();
    let c = engine.cycle(&mut l.network, &l.intents, &g, &NoClock)?;
    log::info!(
        "cycle {cycle}: {} extraneous, {} missing, {} purges, {} reinstalls, {:.6}s",
        c.report.extraneous.len(),
        c.report.missing.len(),
        c.plan.purges.len(),
        c.plan.reinstalls.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(c)
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Extract { tables, topology, output } => {
            json_only(&output, "extract")?;
            let (t, g) = load_tables(&tables, &topology)?;
            let x = extract(&t, &g);
            let out = Extracted {
                g: x.tuples().collect(),
                diagnostics: x
                    .rejected()
                    .map(|m| Rejected { key: &m.key, path: &m.path, reason: m.reject_reason })
                    .collect(),
            };
            emit_json(&output, &out)?;
            Ok(EXIT_OK)
        }
        Command::Check { tables, topology, intents, output } => {
            json_only(&output, "check")?;
            let (t, g) = load_tables(&tables, &topology)?;
            let repo = load_intents(&intents)?;
            let report = extract(&t, &g).check_against(&repo);
            emit_json(&output, &report)?;
            Ok(if report.consistent { EXIT_OK } else { EXIT_INCONSISTENT })
        }
        Command::Remediate { state, output } => {
            json_only(&output, "remediate")?;
            let mut l = load_state(&state)?;
            if let Some(spec) = l.scenario.clone() {
                for step in 0..=spec.steps {
                    l.network.set_clock(u64::from(step));
                    inject_scheduled(&mut l.network, &l.intents, &spec, step)?;
                }
            }
            let mut engine = AssuranceEngine::new();
            let c = timed_cycle(&mut engine, &mut l, 0)?;
            let out = Remediated { cycle: CycleView::new(0, &c), tables: l.network.export_flow_tables() };
            emit_json(&output, &out)?;
            Ok(EXIT_OK)
        }
        Command::Assure { state, period, cycles, output } => {
            json_only(&output, "assure")?;
            let pause = match period {
                Some(p) if p.is_finite() && p >= 0.0 => Duration::from_secs_f64(p),
                Some(p) => bail!("--period must be a non-negative number of seconds, got {p}"),
                None => Duration::ZERO,
            };
            let mut l = load_state(&state)?;
            let mut engine = AssuranceEngine::new();
            let mut w = sink(output.out.as_deref())?;
            let mut k = 0u64;
            while cycles.is_none_or(|n| k < n) {
                if k > 0 && !pause.is_zero() {
                    std::thread::sleep(pause);
                }
                if let Some(spec) = &l.scenario {
                    let step = u32::try_from(k).unwrap_or(u32::MAX);
                    l.network.set_clock(k);
                    inject_scheduled(&mut l.network, &l.intents, spec, step)?;
                }
                let c = timed_cycle(&mut engine, &mut l, k)?;
                write_jsonl(&mut w, [CycleView::new(k, &c)])?;
                w.flush()?;
                k += 1;
            }
            Ok(EXIT_OK)
        }
        Command::Sim { command: SimCommand::Run { scenario, seed, events, output } } => {
            let spec = load_scenario(&scenario, seed)?;
            let run = run_scenario(&spec, &NoClock)?;
            log::info!("scenario {} ran {} steps", spec.name, spec.steps + 1);
            if let Some(path) = events {
                let mut w = sink(Some(&path))?;
                write_event_log(&mut w, run.network.events())?;
                w.flush()?;
            }
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut w = sink(output.out.as_deref())?;
                    write_metrics_csv(&mut w, &run.metrics)?;
                    w.flush()?;
                }
                Format::Json => emit_json(&output, &run.metrics)?,
            }
            Ok(EXIT_OK)
        }
        Command::Bench { command } => {
            let (grid, extraction) = match command {
                BenchCommand::Extraction { grid } => (grid, true),
                BenchCommand::Recovery { grid } => (grid, false),
            };
            let (s, i) = if extraction { ("100", "10..100") } else { ("1,50,100,200,400", "60") };
            let switches = parse_grid(grid.switches.as_deref().unwrap_or(s), grid.step)
                .map_err(anyhow::Error::msg)
                .context("--switches")?;
            let intents = parse_grid(grid.intents.as_deref().unwrap_or(i), grid.step)
                .map_err(anyhow::Error::msg)
                .context("--intents")?;
            let rows: Vec<BenchRow> = if extraction {
                bench_extraction(&switches, &intents, grid.repeat, grid.seed)?
            } else {
                bench_recovery(&switches, &intents, grid.repeat, grid.seed)?
            };
            match grid.output.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut w = sink(grid.output.out.as_deref())?;
                    write_csv(&mut w, &rows)?;
                    w.flush()?;
                }
                Format::Json => emit_json(&grid.output, &rows)?,
            }
            Ok(EXIT_OK)
        }
    }
}
