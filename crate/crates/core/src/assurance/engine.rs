use alloc::collections::{BTreeMap, BTreeSet};

use alloc::vec::Vec;

use super::consistency::update_report;
use super::{
    apply_plan, plan_remediation, ApplyError, ApplyRecord, Clock, ConsistencyReport, CycleReport,
    JournaledNetwork, TableChange,
};
use crate::extract::{aggregate, AddrKey, Chain, EndpointTuple, EntryGroup, Extraction};
use crate::flow::{EntryClass, FlowEntry};
use crate::intent::IntentRepository;
use crate::nskg::Nskg;
use crate::NodeId;

#[derive(Clone, Debug, Default)]
struct SwitchState {
    entries: BTreeMap<u64, FlowEntry>,
    by_key: BTreeMap<AddrKey, BTreeSet<u64>>,
}

#[derive(Debug, Default)]
struct Dirty {
    keys: BTreeSet<AddrKey>,
    functional: BTreeSet<NodeId>,
}

/// Incremental assurance over a [`JournaledNetwork`].
///
/// The engine mirrors the network's tables and replays the change journal on each
/// refresh, re-linking and re-aggregating only the keys that changed. A new NSKG
/// revision re-aggregates every chain. The resulting [`Extraction`] equals what
/// [`extract`](crate::extract::extract) computes from scratch, except that entry
/// indices are the network's sequence numbers rather than table positions.
///
/// The engine tracks one network and one NSKG lineage; call [`reset`](Self::reset)
/// before pointing it at another.
#[derive(Clone, Debug, Default)]
pub struct AssuranceEngine {
    cursor: Option<u64>,
    revision: Option<u64>,
    switches: BTreeMap<NodeId, SwitchState>,
    holders: BTreeMap<AddrKey, BTreeSet<NodeId>>,
    x: Extraction,
    /// The last report and the stamp of the repository it was checked against.
    verdict: Option<(u64, ConsistencyReport)>,
}

/// Tuples whose presence in G may have changed during a refresh.
enum Touched {
    All,
    Some(BTreeSet<EndpointTuple>),
}

impl AssuranceEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// The extraction as of the last refresh.
    pub fn extraction(&self) -> &Extraction {
        &self.x
    }

    /// Forgets all mirrored state; the next refresh reloads a full snapshot.
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Brings the extraction up to date with `net` and `g`.
    pub fn refresh<N: JournaledNetwork + ?Sized>(&mut self, net: &N, g: &Nskg) {
        match self.sync(net, g) {
            Touched::Some(t) if t.is_empty() => {}
            _ => self.verdict = None,
        }
    }

    fn sync<N: JournaledNetwork + ?Sized>(&mut self, net: &N, g: &Nskg) -> Touched {
        let mut dirty = Dirty::default();
        let mut full = false;
        match self.cursor.and_then(|c| net.changes_since(c)) {
            Some(changes) => {
                for c in changes {
                    match c {
                        TableChange::Added { switch, seq, entry } => {
                            self.add(switch, *seq, entry.clone(), &mut dirty)
                        }
                        TableChange::Removed { switch, seq } => self.remove(switch, *seq, &mut dirty),
                    }
                }
            }
            None => {
                full = true;
                self.switches.clear();
                self.holders.clear();
                self.x = Extraction::default();
                for (sw, entries) in net.snapshot() {
                    self.switches.entry(sw.clone()).or_default();
                    for (seq, e) in entries {
                        self.add(&sw, seq, e, &mut dirty);
                    }
                }
            }
        }
        if self.revision != Some(g.revision()) {
            full = true;
            dirty.keys.extend(self.x.chains.keys().copied());
        }
        let mut touched = BTreeSet::new();
        for key in dirty.keys {
            if let Some(t) = self.x.graphs.get(&key).and_then(|m| m.tuple()) {
                touched.insert(t);
            }
            if let Some(t) = self.rebuild(key, g) {
                touched.insert(t);
            }
        }
        for sw in dirty.functional {
            let f: Vec<_> = self
                .switches
                .get(&sw)
                .into_iter()
                .flat_map(|s| s.entries.values())
                .filter(|e| e.class() == EntryClass::Functional)
                .cloned()
                .collect();
            if f.is_empty() {
                self.x.functional.remove(&sw);
            } else {
                self.x.functional.insert(sw, f);
            }
        }
        self.cursor = Some(net.cursor());
        self.revision = Some(g.revision());
        if full {
            Touched::All
        } else {
            Touched::Some(touched)
        }
    }

    /// The report for the current extraction, reusing the last one where G is unchanged.
    fn check(&mut self, intents: &IntentRepository, touched: Touched) -> ConsistencyReport {
        match (&mut self.verdict, touched) {
            (Some((stamp, rep)), Touched::Some(t)) if *stamp == intents.stamp() => {
                update_report(rep, &self.x, intents, &t);
                rep.clone()
            }
            _ => {
                let rep = self.x.check_against(intents);
                self.verdict = Some((intents.stamp(), rep.clone()));
                rep
            }
        }
    }

    fn add(&mut self, sw: &NodeId, seq: u64, mut e: FlowEntry, dirty: &mut Dirty) {
        e.entry_index = seq as usize;
        let st = self.switches.entry(sw.clone()).or_default();
        match e.class() {
            EntryClass::Forwarding => {
                let key = AddrKey::of(&e.match_fields);
                st.by_key.entry(key).or_default().insert(seq);
                self.holders.entry(key).or_default().insert(sw.clone());
                dirty.keys.insert(key);
            }
            EntryClass::Functional => {
                dirty.functional.insert(sw.clone());
            }
        }
        st.entries.insert(seq, e);
    }

    fn remove(&mut self, sw: &NodeId, seq: u64, dirty: &mut Dirty) {
        let Some(st) = self.switches.get_mut(sw) else { return };
        let Some(e) = st.entries.remove(&seq) else { return };
        if e.class() == EntryClass::Functional {
            dirty.functional.insert(sw.clone());
            return;
        }
        let key = AddrKey::of(&e.match_fields);
        dirty.keys.insert(key);
        let Some(seqs) = st.by_key.get_mut(&key) else { return };
        seqs.remove(&seq);
        if seqs.is_empty() {
            st.by_key.remove(&key);
            if let Some(h) = self.holders.get_mut(&key) {
                h.remove(sw);
                if h.is_empty() {
                    self.holders.remove(&key);
                }
            }
        }
    }

    /// Re-aggregates one key, returning the tuple its graph now yields.
    fn rebuild(&mut self, key: AddrKey, g: &Nskg) -> Option<EndpointTuple> {
        let Some(holders) = self.holders.get(&key) else {
            self.x.chains.remove(&key);
            self.x.set_graph(key, None);
            return None;
        };
        let mut chain = Chain::new(key);
        for sw in holders {
            let st = &self.switches[sw];
            let entries = st.by_key[&key].iter().map(|s| st.entries[s].clone()).collect();
            if let Some(group) = EntryGroup::new(sw.clone(), key, entries) {
                chain.insert(group);
            }
        }
        let graph = aggregate(&chain, g);
        let t = graph.tuple();
        self.x.set_graph(key, Some(graph));
        self.x.chains.insert(key, chain);
        t
    }

    /// One assurance cycle using the incremental extraction.
    pub fn cycle<N: JournaledNetwork>(
        &mut self,
        net: &mut N,
        intents: &IntentRepository,
        g: &Nskg,
        clock: &dyn Clock,
    ) -> Result<CycleReport, ApplyError<N::Error>> {
        let start = clock.now();
        let touched = self.sync(net, g);
        let report = self.check(intents, touched);
        let plan = plan_remediation(&report, &self.x, intents, g);
        let (applied, changes, post_check) = if plan.has_actions() {
            let changes = apply_plan(net, &plan)?;
            let touched = self.sync(net, g);
            (true, changes, self.check(intents, touched))
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
}
