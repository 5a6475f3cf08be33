//! Deterministic simulated data plane.
//!
//! [`SimNetwork`] holds an NSKG snapshot and one flow table per switch. Every mutation
//! goes through its methods and lands in an event log, and table changes additionally
//! land in the journal that [`AssuranceEngine`](crate::assurance::AssuranceEngine)
//! consumes. Nothing here reads a wall clock or an unseeded RNG.

mod baseline;
mod faults;
mod forward;
mod scenario;
pub mod topo;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::assurance::{
    compile_intent, CompileError, EntrySelector, Infeasible, InfeasibleReason, JournaledNetwork,
    NetworkHandle, TableChange,
};
use crate::extract::AddrKey;
use crate::flow::{EntryClass, FlowEntry, FlowError, FlowTable};
use crate::intent::{IntentError, IntentRepository};
use crate::nskg::{NodeKind, Nskg, NskgError, StateEvent};
use crate::{IntentId, NodeId};

pub use baseline::{baseline_primary_backup, BackupRoute};
pub use faults::{fail_nodes, inject_hijack, sample_indices};
pub use forward::{
    forward_packet, intent_satisfied, probe_packet, survival_rate, ForwardingTrace, Outcome,
    PROBE_DST_PORT, PROBE_SRC_PORT,
};
pub use scenario::{
    build_scenario, fault_seed, feasible_fraction, inject_scheduled, run_scenario, FaultKind, FaultSpec, IntentSpec, MetricRow,
    ScenarioRun, ScenarioSpec, TopologySpec,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Nskg(#[from] NskgError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("`{0}` is not a switch")]
    NotASwitch(NodeId),
    #[error("percentage {0} is outside [0, 100]")]
    InvalidPercent(f64),
    #[error("the network has no hijack host")]
    NoHijackHost,
    #[error("invalid scenario: {0}")]
    Spec(String),
}

/// One entry of the simulator's audit log.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "event", rename_all = "snake_case"))]
pub enum SimEvent {
    Clock { clock: u64 },
    Install { clock: u64, switch: NodeId, seq: u64, entry: FlowEntry },
    Remove { clock: u64, switch: NodeId, seq: u64 },
    Topology { clock: u64, change: StateEvent },
    Hijack { clock: u64, victim: IntentId, path: Vec<NodeId>, priority: u32 },
}

/// One installed entry with its sequence number and, for forwarding entries, its key.
#[derive(Clone, Debug)]
struct Slot {
    seq: u64,
    key: Option<AddrKey>,
    entry: FlowEntry,
}

impl Slot {
    fn selected_by(&self, sel: &EntrySelector) -> bool {
        self.key == Some(sel.key) && sel.priority.is_none_or(|p| p == self.entry.priority)
    }
}

/// The simulated network.
#[derive(Clone, Debug)]
pub struct SimNetwork {
    nskg: Arc<Nskg>,
    /// Per switch, entries in table order.
    tables: BTreeMap<NodeId, Vec<Slot>>,
    clock: u64,
    rng_seed: u64,
    next_seq: u64,
    journal: Vec<TableChange>,
    log: Vec<SimEvent>,
    hijack_host: Option<NodeId>,
    routes: BTreeMap<IntentId, BackupRoute>,
}

impl SimNetwork {
    /// A network with an empty table on every switch of `nskg`.
    pub fn new(nskg: Nskg, rng_seed: u64) -> Self {
        let tables = nskg.switches().map(|s| (s.id.clone(), Vec::new())).collect();
        Self {
            nskg: Arc::new(nskg),
            tables,
            clock: 0,
            rng_seed,
            next_seq: 0,
            journal: Vec::new(),
            log: Vec::new(),
            hijack_host: None,
            routes: BTreeMap::new(),
        }
    }

    /// A network preloaded with `tables`, installed in document order.
    pub fn with_tables(nskg: Nskg, rng_seed: u64, tables: &[FlowTable]) -> Result<Self, SimError> {
        let mut n = Self::new(nskg, rng_seed);
        for t in tables {
            for e in &t.entries {
                n.install_entry(&t.switch_id, e.clone())?;
            }
        }
        Ok(n)
    }

    pub fn nskg(&self) -> &Nskg {
        &self.nskg
    }

    /// Shared handle to the current snapshot.
    pub fn nskg_arc(&self) -> Arc<Nskg> {
        Arc::clone(&self.nskg)
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn set_clock(&mut self, clock: u64) {
        self.clock = clock;
        self.log.push(SimEvent::Clock { clock });
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn hijack_host(&self) -> Option<&NodeId> {
        self.hijack_host.as_ref()
    }

    /// Designates the host that hijack entries divert traffic to.
    pub fn set_hijack_host(&mut self, host: Option<NodeId>) -> Result<(), SimError> {
        if let Some(h) = &host {
            match self.nskg.node(h) {
                Some(n) if n.kind == NodeKind::Host => {}
                Some(_) => return Err(NskgError::NotAHost(h.clone()).into()),
                None => return Err(NskgError::UnknownTarget(h.as_str().into()).into()),
            }
        }
        self.hijack_host = host;
        Ok(())
    }

    /// The audit log, oldest first.
    pub fn events(&self) -> &[SimEvent] {
        &self.log
    }

    /// Entries of one switch in table order.
    pub fn entries(&self, switch: &str) -> impl Iterator<Item = &FlowEntry> {
        self.tables.get(switch).into_iter().flatten().map(|s| &s.entry)
    }

    pub fn entry_count(&self) -> usize {
        self.tables.values().map(Vec::len).sum()
    }

    /// Applies a topology event to the NSKG.
    pub fn apply_event(&mut self, e: &StateEvent) -> Result<(), SimError> {
        self.nskg = Arc::new(self.nskg.apply_event(e)?);
        self.log.push(SimEvent::Topology { clock: self.clock, change: e.clone() });
        Ok(())
    }

    /// Compiles and installs every intent, recording primary and backup routes for
    /// the baseline. Returns the intents that could not be deployed.
    pub fn deploy(&mut self, intents: &IntentRepository) -> Result<Vec<Infeasible>, SimError> {
        let mut failed = Vec::new();
        for i in intents.iter() {
            let d = match compile_intent(i, &self.nskg) {
                Ok(Some(d)) => d,
                Ok(None) => {
                    failed.push(Infeasible { intent: i.id.clone(), reason: InfeasibleReason::NoPath });
                    continue;
                }
                Err(CompileError::UnknownHost { .. }) => {
                    failed.push(Infeasible { intent: i.id.clone(), reason: InfeasibleReason::UnknownHost });
                    continue;
                }
            };
            let route = BackupRoute::precompute(i, &d, &self.nskg);
            for (sw, e) in &d.entries {
                self.install_entry(sw, e.clone())?;
            }
            self.routes.insert(i.id.clone(), route);
        }
        Ok(failed)
    }

    /// Primary and backup routes recorded by [`deploy`](Self::deploy).
    pub fn routes(&self) -> &BTreeMap<IntentId, BackupRoute> {
        &self.routes
    }

    /// A copy without the journal and log, for what-if evaluation.
    pub fn fork(&self) -> Self {
        Self { journal: Vec::new(), log: Vec::new(), ..self.clone() }
    }

    fn install_entry(&mut self, switch: &NodeId, mut entry: FlowEntry) -> Result<(), SimError> {
        FlowEntry::check_actions(&entry.actions)?;
        let table = self.tables.get_mut(switch).ok_or_else(|| SimError::NotASwitch(switch.clone()))?;
        let clock = self.clock;
        let key = (entry.class() == EntryClass::Forwarding).then(|| AddrKey::of(&entry.match_fields));
        if let Some(pos) = table
            .iter()
            .position(|s| s.entry.priority == entry.priority && s.entry.match_fields == entry.match_fields)
        {
            let seq = table[pos].seq;
            entry.entry_index = pos;
            table[pos].key = key;
            table[pos].entry = entry.clone();
            self.journal.push(TableChange::Removed { switch: switch.clone(), seq });
            self.log.push(SimEvent::Remove { clock, switch: switch.clone(), seq });
            self.journal.push(TableChange::Added { switch: switch.clone(), seq, entry: entry.clone() });
            self.log.push(SimEvent::Install { clock, switch: switch.clone(), seq, entry });
            return Ok(());
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        entry.entry_index = table.len();
        table.push(Slot { seq, key, entry: entry.clone() });
        self.journal.push(TableChange::Added { switch: switch.clone(), seq, entry: entry.clone() });
        self.log.push(SimEvent::Install { clock, switch: switch.clone(), seq, entry });
        Ok(())
    }

    fn remove_entries(&mut self, switch: &NodeId, sel: &EntrySelector) -> Result<usize, SimError> {
        let table = self.tables.get_mut(switch).ok_or_else(|| SimError::NotASwitch(switch.clone()))?;
        let Some(first) = table.iter().position(|s| s.selected_by(sel)) else { return Ok(0) };
        let before = table.len();
        let clock = self.clock;
        let (journal, log) = (&mut self.journal, &mut self.log);
        table.retain(|s| {
            if !s.selected_by(sel) {
                return true;
            }
            journal.push(TableChange::Removed { switch: switch.clone(), seq: s.seq });
            log.push(SimEvent::Remove { clock, switch: switch.clone(), seq: s.seq });
            false
        });
        for (pos, s) in table.iter_mut().enumerate().skip(first) {
            s.entry.entry_index = pos;
        }
        Ok(before - table.len())
    }
}

impl NetworkHandle for SimNetwork {
    type Error = SimError;

    fn export_flow_tables(&self) -> Vec<FlowTable> {
        self.tables
            .iter()
            .map(|(sw, entries)| FlowTable {
                switch_id: sw.clone(),
                entries: entries.iter().map(|s| s.entry.clone()).collect(),
            })
            .collect()
    }

    fn install(&mut self, switch: &NodeId, entry: FlowEntry) -> Result<(), SimError> {
        self.install_entry(switch, entry)
    }

    fn remove(&mut self, switch: &NodeId, selector: &EntrySelector) -> Result<usize, SimError> {
        self.remove_entries(switch, selector)
    }
}

impl JournaledNetwork for SimNetwork {
    fn cursor(&self) -> u64 {
        self.journal.len() as u64
    }

    fn snapshot(&self) -> Vec<(NodeId, Vec<(u64, FlowEntry)>)> {
        self.tables.iter().map(|(sw, t)| (sw.clone(), t.iter().map(|s| (s.seq, s.entry.clone())).collect())).collect()
    }

    fn changes_since(&self, cursor: u64) -> Option<&[TableChange]> {
        self.journal.get(usize::try_from(cursor).ok()?..)
    }
}
