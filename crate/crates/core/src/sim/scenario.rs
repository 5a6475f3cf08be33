use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topo::{mesh, star, Topology};
use super::{baseline_primary_backup, fail_nodes, inject_hijack, survival_rate, SimError, SimNetwork};
use crate::assurance::{compile_intent, AssuranceEngine, Clock, CycleReport};
use crate::flow::Proto;
use crate::intent::{to_tuple, Intent, IntentRepository};
use crate::nskg::{LinkRecord, NodeKind, NodeRecord, Nskg};
use crate::NodeId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologySpec {
    Mesh { rows: u32, cols: u32 },
    Star { hosts: u32 },
    Custom { nodes: Vec<NodeRecord>, links: Vec<LinkRecord> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntentSpec {
    /// Generate this many intents from the scenario seed.
    Count(usize),
    List(Vec<Intent>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaultKind {
    /// Percentage of intents to hijack.
    Hijack { intensity: f64 },
    /// Percentage of switches left running.
    NodeFail { completeness: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub at: u32,
}

/// A reproducible experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub topology: TopologySpec,
    pub intents: IntentSpec,
    pub faults: Vec<FaultSpec>,
    pub seed: u64,
    /// The run covers steps `0..=steps`.
    pub steps: u32,
    /// An assurance cycle runs on every step divisible by `period`; 0 disables the loop.
    pub period: u32,
    /// Target of hijack entries. Defaults to the last generated (or listed) host.
    pub hijack_host: Option<NodeId>,
}

impl ScenarioSpec {
    pub fn new(name: &str, topology: TopologySpec, intents: IntentSpec, seed: u64) -> Self {
        Self {
            name: name.into(),
            topology,
            intents,
            faults: Vec::new(),
            seed,
            steps: 0,
            period: 1,
            hijack_host: None,
        }
    }

    pub fn with_fault(mut self, kind: FaultKind, at: u32) -> Self {
        self.faults.push(FaultSpec { kind, at });
        self.steps = self.steps.max(at);
        self
    }

    fn has_hijack(&self) -> bool {
        self.faults.iter().any(|f| matches!(f.kind, FaultKind::Hijack { .. }))
    }

    fn validate(&self) -> Result<(), SimError> {
        for f in &self.faults {
            let p = match f.kind {
                FaultKind::Hijack { intensity } => intensity,
                FaultKind::NodeFail { completeness } => completeness,
            };
            if !(0.0..=100.0).contains(&p) {
                return Err(SimError::InvalidPercent(p));
            }
        }
        match self.topology {
            TopologySpec::Mesh { rows, cols } if rows == 0 || cols == 0 || rows > 62_500 => {
                Err(SimError::Spec(format!("mesh {rows}x{cols} is not supported")))
            }
            TopologySpec::Star { hosts } if !(1..=254).contains(&hosts) => {
                Err(SimError::Spec(format!("star with {hosts} hosts is not supported")))
            }
            _ => Ok(()),
        }
    }
}

/// Seed for the fault at position `index` of a scenario's fault list.
pub fn fault_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn generate_intents(
    count: usize,
    hosts: &[String],
    mesh_sides: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Intent>, SimError> {
    let (west, east): (Vec<&String>, Vec<&String>) = hosts.iter().partition(|h| h.starts_with("hw"));
    let usable = if mesh_sides { !west.is_empty() && !east.is_empty() } else { hosts.len() >= 2 };
    if count > 0 && !usable {
        return Err(SimError::Spec("not enough hosts to generate intents".into()));
    }
    let pick = |rng: &mut ChaCha8Rng, v: &[&String]| v[rng.gen_range(0..v.len() as u32) as usize].clone();
    let all: Vec<&String> = hosts.iter().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 + 64 * count {
            return Err(SimError::Spec(format!("could not generate {count} distinct intents")));
        }
        let (src, dst) = if mesh_sides {
            if rng.gen_range(0..2u32) == 0 {
                (pick(rng, &west), pick(rng, &east))
            } else {
                (pick(rng, &east), pick(rng, &west))
            }
        } else {
            (pick(rng, &all), pick(rng, &all))
        };
        let proto = if rng.gen_range(0..2u32) == 0 { Proto::Tcp } else { Proto::Udp };
        let port = rng.gen_range(1024..=65535u32) as u16;
        if src == dst {
            continue;
        }
        let i = Intent::new(&format!("i{:03}", out.len()), &src, &dst, proto, Some(port));
        if seen.insert(to_tuple(&i)) {
            out.push(i);
        }
    }
    Ok(out)
}

/// Builds the network, generates or loads the intents, and deploys them.
pub fn build_scenario(s: &ScenarioSpec) -> Result<(SimNetwork, IntentRepository), SimError> {
    s.validate()?;
    let (topo, mesh_sides) = match &s.topology {
        TopologySpec::Mesh { rows, cols } => (mesh(*rows, *cols), true),
        TopologySpec::Star { hosts } => (star(*hosts), false),
        TopologySpec::Custom { nodes, links } => {
            let hosts = nodes.iter().filter(|n| n.kind == NodeKind::Host).map(|n| n.id.as_str().into()).collect();
            (Topology { nodes: nodes.clone(), links: links.clone(), hosts }, false)
        }
    };
    let g = Nskg::new(topo.nodes, topo.links)?;
    let hijack_host = s.hijack_host.clone().or_else(|| topo.hosts.last().map(|h| NodeId::new(h)));
    let mut net = SimNetwork::new(g, s.seed);
    net.set_hijack_host(hijack_host.clone())?;

    let intents = match &s.intents {
        IntentSpec::List(list) => list.clone(),
        IntentSpec::Count(n) => {
            let mut hosts = topo.hosts;
            if s.has_hijack() {
                hosts.retain(|h| hijack_host.as_ref().is_none_or(|x| x != h.as_str()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            generate_intents(*n, &hosts, mesh_sides, &mut rng)?
        }
    };
    let (repo, _) = IntentRepository::from_intents(intents)?;
    net.deploy(&repo)?;
    Ok((net, repo))
}

/// Fraction of intents that compile to a live path on `g`; 1.0 when there are none.
pub fn feasible_fraction(g: &Nskg, intents: &IntentRepository) -> f64 {
    if intents.is_empty() {
        return 1.0;
    }
    let ok = intents.iter().filter(|i| matches!(compile_intent(i, g), Ok(Some(_)))).count();
    ok as f64 / intents.len() as f64
}

/// Injects the faults `s` schedules for `step`, each with its own derived seed.
pub fn inject_scheduled(
    n: &mut SimNetwork,
    intents: &IntentRepository,
    s: &ScenarioSpec,
    step: u32,
) -> Result<(), SimError> {
    for (idx, f) in s.faults.iter().enumerate().filter(|(_, f)| f.at == step) {
        let seed = fault_seed(s.seed, idx);
        match f.kind {
            FaultKind::Hijack { intensity } => {
                inject_hijack(n, intents, intensity, seed)?;
            }
            FaultKind::NodeFail { completeness } => {
                fail_nodes(n, intents, completeness, seed)?;
            }
        }
    }
    Ok(())
}

/// One metrics row: `scenario,seed,step,metric,value`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MetricRow {
    pub scenario: String,
    pub seed: u64,
    pub step: u32,
    pub metric: &'static str,
    pub value: f64,
}

/// Everything a scenario run produced.
#[derive(Debug)]
pub struct ScenarioRun {
    pub metrics: Vec<MetricRow>,
    /// The network under assurance, with its event log.
    pub network: SimNetwork,
    /// The same faults without assurance, for the baseline.
    pub baseline: SimNetwork,
    pub intents: IntentRepository,
    pub cycles: Vec<(u32, CycleReport)>,
}

/// Runs a scenario step by step.
///
/// Each step sets the simulated clock, injects the faults scheduled for it into both the
/// assured network and a baseline copy, then runs an assurance cycle if the period says
/// so. Metrics per step: `survival_pre`, `survival`, `baseline_survival`, `feasible`,
/// plus `extraneous`, `missing`, `purges`, `reinstalls`, `infeasible`, and `consistent`
/// on steps with a cycle.
pub fn run_scenario(s: &ScenarioSpec, clock: &dyn Clock) -> Result<ScenarioRun, SimError> {
    let (mut net, intents) = build_scenario(s)?;
    let mut base = net.fork();
    let mut engine = AssuranceEngine::new();
    let mut metrics = Vec::new();
    let mut cycles = Vec::new();
    for step in 0..=s.steps {
        net.set_clock(u64::from(step));
        base.set_clock(u64::from(step));
        inject_scheduled(&mut net, &intents, s, step)?;
        inject_scheduled(&mut base, &intents, s, step)?;
        let mut row = |metric, value| {
            metrics.push(MetricRow { scenario: s.name.clone(), seed: s.seed, step, metric, value })
        };
        let pre = survival_rate(&net, &intents);
        row("survival_pre", pre);
        let mut post = pre;
        if s.period > 0 && step % s.period == 0 {
            let g = net.nskg_arc();
            let c = engine.cycle(&mut net, &intents, &g, clock).map_err(|e| e.source)?;
            post = survival_rate(&net, &intents);
            row("extraneous", c.report.extraneous.len() as f64);
            row("missing", c.report.missing.len() as f64);
            row("purges", c.plan.purges.len() as f64);
            row("reinstalls", c.plan.reinstalls.len() as f64);
            row("infeasible", c.plan.infeasible.len() as f64);
            row("consistent", if c.post_check.consistent { 1.0 } else { 0.0 });
            cycles.push((step, c));
        }
        row("survival", post);
        row("baseline_survival", baseline_primary_backup(&base, &intents));
        row("feasible", feasible_fraction(net.nskg(), &intents));
    }
    Ok(ScenarioRun { metrics, network: net, baseline: base, intents, cycles })
}
