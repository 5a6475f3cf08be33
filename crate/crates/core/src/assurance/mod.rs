//! Consistency checking between extracted and declared intents, remediation, and the
//! assurance loop.
//!
//! Mismatches fall into two classes. A tuple that was extracted but never declared is
//! *extraneous* and gets purged. An intent that was declared but is not extracted is
//! *missing* and gets recompiled against the current topology and reinstalled.

mod compile;
mod consistency;
mod engine;
mod remediation;

use alloc::vec::Vec;
use core::time::Duration;

use crate::extract::{extract, AddrKey};
use crate::flow::{EntryClass, FlowEntry, FlowTable};
use crate::intent::IntentRepository;
use crate::nskg::Nskg;
use crate::NodeId;

pub(crate) use compile::compile_along;
pub use compile::{compile_intent, intent_key, CompileError, Deployment};
pub use consistency::{consistency_check, ConsistencyReport, Matched};
pub use engine::AssuranceEngine;
pub use remediation::{
    apply_plan, plan_remediation, ApplyError, ApplyRecord, Infeasible, InfeasibleReason, Purge,
    Reinstall, RemediationPlan,
};

/// Selects forwarding entries by key, and optionally by exact priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EntrySelector {
    pub key: AddrKey,
    pub priority: Option<u32>,
}

impl EntrySelector {
    pub fn selects(&self, e: &FlowEntry) -> bool {
        e.class() == EntryClass::Forwarding
            && self.priority.is_none_or(|p| p == e.priority)
            && AddrKey::of(&e.match_fields) == self.key
    }
}

/// What the assurance loop needs from a network.
pub trait NetworkHandle {
    type Error: core::error::Error + 'static;

    fn export_flow_tables(&self) -> Vec<FlowTable>;

    /// Adds an entry. An entry with identical match fields and priority is replaced.
    fn install(&mut self, switch: &NodeId, entry: FlowEntry) -> Result<(), Self::Error>;

    /// Removes every selected entry on `switch`, returning how many went.
    fn remove(&mut self, switch: &NodeId, selector: &EntrySelector) -> Result<usize, Self::Error>;
}

/// One table mutation, as recorded by a journaled network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableChange {
    Added { switch: NodeId, seq: u64, entry: FlowEntry },
    Removed { switch: NodeId, seq: u64 },
}

/// A network that numbers its entries and keeps a change journal, letting
/// [`AssuranceEngine`] re-extract only what changed.
///
/// Sequence numbers must increase in table order: sorting a switch's entries by `seq`
/// gives their table order.
pub trait JournaledNetwork: NetworkHandle {
    /// Position just past the newest journal record.
    fn cursor(&self) -> u64;

    /// Every table as `(seq, entry)` pairs in table order.
    fn snapshot(&self) -> Vec<(NodeId, Vec<(u64, FlowEntry)>)>;

    /// Records after `cursor`, or `None` if they are no longer available.
    fn changes_since(&self, cursor: u64) -> Option<&[TableChange]>;
}

/// Monotonic time source used to stamp cycle durations.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// A clock that never advances; cycles report zero elapsed time.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

impl<F: Fn() -> Duration> Clock for F {
    fn now(&self) -> Duration {
        self()
    }
}

/// Outcome of one assurance cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CycleReport {
    pub report: ConsistencyReport,
    pub plan: RemediationPlan,
    pub applied: bool,
    pub changes: ApplyRecord,
    pub post_check: ConsistencyReport,
    pub elapsed: Duration,
}

/// Extract, check, plan, apply, re-extract, re-check.
///
/// Extraction runs from scratch on every call; [`AssuranceEngine`] gives the same
/// results incrementally.
pub fn assurance_cycle<N: NetworkHandle>(
    net: &mut N,
    intents: &IntentRepository,
    g: &Nskg,
    clock: &dyn Clock,
) -> Result<CycleReport, ApplyError<N::Error>> {
    let start = clock.now();
    let x = extract(&net.export_flow_tables(), g);
    let report = x.check_against(intents);
    let plan = plan_remediation(&report, &x, intents, g);
    let (applied, changes, post_check) = if plan.has_actions() {
        let changes = apply_plan(net, &plan)?;
        let post = extract(&net.export_flow_tables(), g).check_against(intents);
        (true, changes, post)
    } else {
        (false, ApplyRecord::default(), report.clone())
    };
    Ok(CycleReport {
        report,
        plan,
        applied,
        changes,
        post_check,
        elapsed: clock.now().saturating_sub(start),
    })
}
