use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::compile::{compile_intent, CompileError};
use super::{ConsistencyReport, EntrySelector, NetworkHandle};
use crate::extract::{AddrKey, EndpointTuple, Extraction};
use crate::flow::FlowEntry;
use crate::intent::{to_tuple, IntentRepository};
use crate::nskg::Nskg;
use crate::{IntentId, NodeId};

/// Remove the selected entries from one switch.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Purge {
    pub switch: NodeId,
    pub selector: EntrySelector,
}

/// Redeploy a missing intent: clear its key on `clear`, then install `entries`.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Reinstall {
    pub intent: IntentId,
    pub key: AddrKey,
    pub path: Vec<NodeId>,
    pub entries: Vec<(NodeId, FlowEntry)>,
    pub clear: Vec<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum InfeasibleReason {
    /// No live path joins the endpoints' access switches.
    NoPath,
    UnknownHost,
    /// Another intent with the same tuple is already matched.
    DuplicateSemantics,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Infeasible {
    pub intent: IntentId,
    pub reason: InfeasibleReason,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RemediationPlan {
    /// Sorted by switch, then selector.
    pub purges: Vec<Purge>,
    /// In missing-id order.
    pub reinstalls: Vec<Reinstall>,
    pub infeasible: Vec<Infeasible>,
}

impl RemediationPlan {
    /// Whether applying the plan would touch the network.
    pub fn has_actions(&self) -> bool {
        !self.purges.is_empty() || !self.reinstalls.is_empty()
    }
}

/// Declared tuple that a key's compiled entries would carry, if both addresses are hosts.
fn owner_tuple(key: &AddrKey, g: &Nskg) -> Option<EndpointTuple> {
    let host = |p: &crate::flow::Prefix| p.is_host().then(|| g.host_by_ip(p.addr())).flatten();
    Some(EndpointTuple {
        src_host: host(&key.src)?.clone(),
        dst_host: host(&key.dst)?.clone(),
        proto: key.proto,
        dst_port: key.dst_port,
    })
}

/// Turns a consistency report into purges and reinstalls.
///
/// Each extraneous tuple is purged from every switch of every chain producing it. When a
/// declared intent owns the chain's key, only entries at priorities other than that
/// intent's priority class are selected, so the intent's own entries are never purged.
/// Each missing intent is recompiled on `g`; the ones that cannot be land in
/// `infeasible`.
pub fn plan_remediation(
    rep: &ConsistencyReport,
    x: &Extraction,
    intents: &IntentRepository,
    g: &Nskg,
) -> RemediationPlan {
    let mut purges = BTreeSet::new();
    for t in &rep.extraneous {
        for key in x.keys_for(t) {
            let Some(chain) = x.chains.get(key) else { continue };
            let declared: BTreeSet<u32> = owner_tuple(key, g)
                .map(|ot| {
                    intents
                        .ids_for(&ot)
                        .iter()
                        .filter_map(|id| intents.get(id))
                        .map(|i| i.priority_class)
                        .collect()
                })
                .unwrap_or_default();
            for (sw, group) in &chain.groups {
                if declared.is_empty() {
                    purges.insert(Purge { switch: sw.clone(), selector: EntrySelector { key: *key, priority: None } });
                    continue;
                }
                for e in &group.entries {
                    if !declared.contains(&e.priority) {
                        let selector = EntrySelector { key: *key, priority: Some(e.priority) };
                        purges.insert(Purge { switch: sw.clone(), selector });
                    }
                }
            }
        }
    }

    let mut plan = RemediationPlan { purges: purges.into_iter().collect(), ..Default::default() };
    for id in &rep.missing {
        let Some(i) = intents.get(id) else { continue };
        let reason = if x.contains(&to_tuple(i)) {
            Some(InfeasibleReason::DuplicateSemantics)
        } else {
            match compile_intent(i, g) {
                Ok(Some(d)) => {
                    let clear = x
                        .chains
                        .get(&d.key)
                        .map(|c| c.groups.keys().cloned().collect())
                        .unwrap_or_default();
                    plan.reinstalls.push(Reinstall {
                        intent: d.intent,
                        key: d.key,
                        path: d.path,
                        entries: d.entries,
                        clear,
                    });
                    None
                }
                Ok(None) => Some(InfeasibleReason::NoPath),
                Err(CompileError::UnknownHost { .. }) => Some(InfeasibleReason::UnknownHost),
            }
        };
        if let Some(reason) = reason {
            plan.infeasible.push(Infeasible { intent: id.clone(), reason });
        }
    }
    plan
}

/// Counts of what [`apply_plan`] changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ApplyRecord {
    pub removed: usize,
    pub installed: usize,
}

/// A network operation failed part-way through a plan.
#[derive(Debug, thiserror::Error)]
#[error("applying remediation failed after {} removals and {} installs: {source}", applied.removed, applied.installed)]
pub struct ApplyError<E: core::error::Error + 'static> {
    #[source]
    pub source: E,
    /// What had been applied before the failure.
    pub applied: ApplyRecord,
}

/// Applies all purges, then every reinstall's clears and installs.
pub fn apply_plan<N: NetworkHandle>(
    net: &mut N,
    plan: &RemediationPlan,
) -> Result<ApplyRecord, ApplyError<N::Error>> {
    let mut rec = ApplyRecord::default();
    let fail = |source, applied| ApplyError { source, applied };
    for p in &plan.purges {
        rec.removed += net.remove(&p.switch, &p.selector).map_err(|e| fail(e, rec))?;
    }
    for r in &plan.reinstalls {
        let clear = EntrySelector { key: r.key, priority: None };
        for sw in &r.clear {
            rec.removed += net.remove(sw, &clear).map_err(|e| fail(e, rec))?;
        }
        for (sw, e) in &r.entries {
            net.install(sw, e.clone()).map_err(|e| fail(e, rec))?;
            rec.installed += 1;
        }
    }
    Ok(rec)
}
