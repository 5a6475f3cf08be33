//! Timing harnesses for extraction and recovery.
//!
//! Both report the median wall-clock time over a number of repeats. Switch counts map to
//! topologies with [`bench_topology`]: 1 is a star with 20 hosts, multiples of ten are
//! 10-row meshes, and anything else is a single-column mesh.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::Serialize;

use safla_core::assurance::{AssuranceEngine, Clock, NoClock};
use safla_core::extract::extract;
use safla_core::flow::FlowTable;
use safla_core::intent::IntentRepository;
use safla_core::nskg::Nskg;
use safla_core::sim::{
    build_scenario, fault_seed, inject_hijack, FaultKind, IntentSpec, ScenarioSpec, SimError, SimNetwork,
    TopologySpec,
};

/// Wall-clock time since construction.
#[derive(Clone, Copy, Debug)]
pub struct InstantClock(Instant);

impl InstantClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for InstantClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for InstantClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// One bench result: `bench,switches,intents,repeats,median_seconds`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub bench: &'static str,
    pub switches: usize,
    pub intents: usize,
    pub repeats: usize,
    pub median_seconds: f64,
}

/// Median of `samples`; the mean of the middle pair when the count is even.
///
/// Panics on an empty slice.
pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Parses `A..B` (inclusive, by `step`), `A,B,C`, or a single count.
pub fn parse_grid(s: &str, step: usize) -> Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a count"));
    let out = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if step == 0 {
            return Err("step must be positive".into());
        }
        if a > b {
            return Err(format!("empty range {s}"));
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() {
        return Err(format!("`{s}` names no counts"));
    }
    Ok(out)
}

pub fn bench_topology(switches: usize) -> Result<TopologySpec, SimError> {
    let n = u32::try_from(switches).map_err(|_| SimError::Spec(format!("{switches} switches is too many")))?;
    match n {
        0 => Err(SimError::Spec("a bench needs at least one switch".into())),
        1 => Ok(TopologySpec::Star { hosts: 20 }),
        n if n % 10 == 0 => Ok(TopologySpec::Mesh { rows: 10, cols: n / 10 }),
        n => Ok(TopologySpec::Mesh { rows: n, cols: 1 }),
    }
}

fn spec(name: &str, switches: usize, intents: usize, seed: u64) -> Result<ScenarioSpec, SimError> {
    let s = ScenarioSpec::new(name, bench_topology(switches)?, IntentSpec::Count(intents), seed);
    // declaring a hijack keeps the hijack host out of the generated intents
    let intensity = if intents == 0 { 0.0 } else { 100.0 / intents as f64 };
    Ok(s.with_fault(FaultKind::Hijack { intensity }, 0))
}

/// Flow tables with `intents` deployed intents, and the graph they were compiled on.
pub fn extraction_fixture(switches: usize, intents: usize, seed: u64) -> Result<(Vec<FlowTable>, Nskg), SimError> {
    let (net, _) = build_scenario(&spec("extraction", switches, intents, seed)?)?;
    Ok((safla_core::assurance::NetworkHandle::export_flow_tables(&net), net.nskg().clone()))
}

/// Samples discarded per fixture before timing starts.
const WARMUP: usize = 3;

/// Median time of a full extraction, for every switch and intent count pair.
///
/// Fixtures are sampled round-robin, like [`bench_recovery`].
pub fn bench_extraction(
    switches: &[usize],
    intents: &[usize],
    repeat: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, SimError> {
    let repeat = repeat.max(1);
    let mut fixtures = Vec::new();
    for &s in switches {
        for &n in intents {
            fixtures.push((s, n, extraction_fixture(s, n, seed)?, Vec::with_capacity(repeat)));
        }
    }
    for r in 0..WARMUP + repeat {
        for (_, _, (tables, g), samples) in &mut fixtures {
            let t = Instant::now();
            black_box(extract(black_box(tables), g));
            if r >= WARMUP {
                samples.push(t.elapsed().as_secs_f64());
            }
        }
    }
    Ok(fixtures.into_iter().map(|(s, n, _, samples)| row("extraction", s, n, samples)).collect())
}

fn row(bench: &'static str, switches: usize, intents: usize, mut samples: Vec<f64>) -> BenchRow {
    let median_seconds = median(&mut samples);
    log::info!("{bench} switches={switches} intents={intents} median={median_seconds:.6}s");
    BenchRow { bench, switches, intents, repeats: samples.len(), median_seconds }
}

/// Size of the victim pool for recovery samples.
pub const VICTIM_POOL: usize = 20;

/// A deployed network with a warm assurance engine, ready for a timed recovery.
///
/// Victims come from the first [`VICTIM_POOL`] generated intents. Intent generation is
/// sequential per seed, so fixtures that differ only in intent count share that pool
/// and the hijacks they recover from are the same.
#[derive(Debug, Clone)]
pub struct RecoveryFixture {
    pub network: SimNetwork,
    pub intents: IntentRepository,
    pub engine: AssuranceEngine,
    victims: IntentRepository,
}

impl RecoveryFixture {
    pub fn new(switches: usize, intents: usize, seed: u64) -> Result<Self, SimError> {
        let (mut network, repo) = build_scenario(&spec("recovery", switches, intents, seed)?)?;
        let mut engine = AssuranceEngine::new();
        let g = network.nskg_arc();
        engine.cycle(&mut network, &repo, &g, &NoClock).map_err(|e| e.source)?;
        let (victims, _) = IntentRepository::from_intents(repo.iter().take(VICTIM_POOL).cloned())?;
        Ok(Self { network, intents: repo, engine, victims })
    }

    /// Hijacks one intent, then times the cycle that detects and removes the hijack.
    ///
    /// The cycle restores the network, so samples can be taken back to back.
    pub fn sample(&mut self, seed: u64) -> Result<Duration, SimError> {
        if !self.victims.is_empty() {
            let intensity = 100.0 / self.victims.len() as f64;
            inject_hijack(&mut self.network, &self.victims, intensity, seed)?;
        }
        let g = self.network.nskg_arc();
        let c = self
            .engine
            .cycle(&mut self.network, &self.intents, &g, &InstantClock::new())
            .map_err(|e| e.source)?;
        if !c.post_check.consistent {
            return Err(SimError::Spec("recovery cycle left the network inconsistent".into()));
        }
        Ok(c.elapsed)
    }
}

/// Median time of one recovery cycle after a single-intent hijack.
///
/// All fixtures are built first and sampled round-robin, so drift in machine load
/// spreads evenly over the grid.
pub fn bench_recovery(
    switches: &[usize],
    intents: &[usize],
    repeat: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, SimError> {
    let repeat = repeat.max(1);
    let mut fixtures = Vec::new();
    for &s in switches {
        for &n in intents {
            fixtures.push((s, n, RecoveryFixture::new(s, n, seed)?, Vec::with_capacity(repeat)));
        }
    }
    for r in 0..WARMUP + repeat {
        for (_, _, fixture, samples) in &mut fixtures {
            let d = fixture.sample(fault_seed(seed, r))?;
            if r >= WARMUP {
                samples.push(d.as_secs_f64());
            }
        }
    }
    Ok(fixtures.into_iter().map(|(s, n, _, samples)| row("recovery", s, n, samples)).collect())
}
