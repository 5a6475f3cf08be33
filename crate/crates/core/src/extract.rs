//! Bottom-up intent extraction.
//!
//! The pipeline has three stages:
//!
//! 1. [`cluster_entries`] partitions the forwarding entries of each switch by [`AddrKey`].
//! 2. [`link_groups`] joins same-key groups across switches into [`Chain`]s.
//! 3. [`aggregate`] orders a chain into a switch path by walking egress ports over the
//!    [`Nskg`], producing a [`MetaIntentGraph`] that is either valid or carries a
//!    [`RejectReason`].
//!
//! [`extract`] runs all three and collects the endpoint tuples of the valid graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::flow::{EntryClass, FlowEntry, FlowTable, MatchFields, Prefix, Proto};
use crate::nskg::{NodeKind, Nskg};
use crate::{NodeId, PortId};

/// The address information entries are clustered and linked by.
///
/// Prefixes are stored with host bits cleared and a missing prefix becomes `0.0.0.0/0`,
/// so two entries covering the same traffic get the same key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AddrKey {
    pub src: Prefix,
    pub dst: Prefix,
    pub proto: Proto,
    pub dst_port: Option<u16>,
}

impl AddrKey {
    pub fn of(m: &MatchFields) -> Self {
        Self {
            src: m.src_ip.unwrap_or(Prefix::ANY).network(),
            dst: m.dst_ip.unwrap_or(Prefix::ANY).network(),
            proto: m.proto,
            dst_port: m.dst_port,
        }
    }

    /// Match fields that select exactly this key's traffic.
    pub fn to_match(&self) -> MatchFields {
        MatchFields {
            src_ip: Some(self.src),
            dst_ip: Some(self.dst),
            proto: self.proto,
            dst_port: self.dst_port,
            ..MatchFields::default()
        }
    }
}

impl fmt::Display for AddrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} {}:", self.src, self.dst, self.proto)?;
        match self.dst_port {
            Some(p) => write!(f, "{p}"),
            None => f.write_str("*"),
        }
    }
}

impl fmt::Debug for AddrKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Same-key forwarding entries of one switch.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EntryGroup {
    pub switch_id: NodeId,
    pub key: AddrKey,
    /// In table order.
    pub entries: Vec<FlowEntry>,
    /// Output port of the highest-priority entry.
    pub egress_port: PortId,
    /// Priority of that entry.
    pub priority: u32,
}

impl EntryGroup {
    /// `None` when `entries` is empty or holds no forwarding entry.
    pub fn new(switch_id: NodeId, key: AddrKey, entries: Vec<FlowEntry>) -> Option<Self> {
        let top = entries
            .iter()
            .filter(|e| e.output_port().is_some())
            .reduce(|best, e| if e.outranks(best) { e } else { best })?;
        let egress_port = top.output_port()?;
        let priority = top.priority;
        Some(Self { switch_id, key, entries, egress_port, priority })
    }
}

/// Result of clustering one switch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchClusters {
    pub switch_id: NodeId,
    /// Sorted by key.
    pub groups: Vec<EntryGroup>,
    /// Entries without an Output action; kept for diagnostics only.
    pub functional: Vec<FlowEntry>,
}

/// Partitions each switch's forwarding entries by key.
///
/// Tables that name the same switch are merged. Output is sorted by switch id.
pub fn cluster_entries(tables: &[FlowTable]) -> Vec<SwitchClusters> {
    type Split = (BTreeMap<AddrKey, Vec<FlowEntry>>, Vec<FlowEntry>);
    let mut per_switch: BTreeMap<&NodeId, Split> = BTreeMap::new();
    for t in tables {
        let (groups, functional) = per_switch.entry(&t.switch_id).or_default();
        for e in &t.entries {
            match e.class() {
                EntryClass::Forwarding => {
                    groups.entry(AddrKey::of(&e.match_fields)).or_default().push(e.clone())
                }
                EntryClass::Functional => functional.push(e.clone()),
            }
        }
    }
    per_switch
        .into_iter()
        .map(|(sw, (groups, functional))| SwitchClusters {
            switch_id: sw.clone(),
            groups: groups
                .into_iter()
                .filter_map(|(key, entries)| EntryGroup::new(sw.clone(), key, entries))
                .collect(),
            functional,
        })
        .collect()
}

/// Same-key groups across switches: the raw material of one deployed intent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub key: AddrKey,
    /// At most one group per switch.
    pub groups: BTreeMap<NodeId, EntryGroup>,
}

impl Chain {
    pub fn new(key: AddrKey) -> Self {
        Self { key, groups: BTreeMap::new() }
    }

    /// Adds a group, merging with an existing group on the same switch.
    pub fn insert(&mut self, group: EntryGroup) {
        debug_assert_eq!(group.key, self.key);
        match self.groups.remove(&group.switch_id) {
            Some(mut existing) => {
                existing.entries.extend(group.entries);
                let merged = EntryGroup::new(existing.switch_id, existing.key, existing.entries)
                    .expect("merged group keeps its forwarding entries");
                self.groups.insert(merged.switch_id.clone(), merged);
            }
            None => {
                self.groups.insert(group.switch_id.clone(), group);
            }
        }
    }
}

/// Links groups with equal keys into chains, one chain per distinct key, sorted by key.
pub fn link_groups<I: IntoIterator<Item = EntryGroup>>(groups: I) -> Vec<Chain> {
    let mut chains: BTreeMap<AddrKey, Chain> = BTreeMap::new();
    for g in groups {
        chains.entry(g.key).or_insert_with(|| Chain::new(g.key)).insert(g);
    }
    chains.into_values().collect()
}

/// Why a chain could not be turned into a valid meta-intent graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum RejectReason {
    /// An egress port leads nowhere live.
    BrokenLink,
    /// The source host has no live access switch, or the chain has no group there.
    NoIngress,
    /// The walk reached a switch that holds no group for the key.
    NoEgress,
    /// The walk revisited a switch.
    Cycle,
    /// A key address is not the IP of a known host.
    UnknownHost,
}

/// A chain validated against the topology.
///
/// `dst_host` is the host the egress walk actually delivers to. When traffic has been
/// diverted this differs from the owner of the key's destination address, and the
/// graph's tuple names the diversion target.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MetaIntentGraph {
    pub key: AddrKey,
    pub path: Vec<NodeId>,
    pub src_host: Option<NodeId>,
    pub dst_host: Option<NodeId>,
    pub valid: bool,
    pub reject_reason: Option<RejectReason>,
}

impl MetaIntentGraph {
    fn rejected(mut self, reason: RejectReason) -> Self {
        self.valid = false;
        self.reject_reason = Some(reason);
        self
    }

    /// The endpoint tuple of a valid graph.
    pub fn tuple(&self) -> Option<EndpointTuple> {
        if !self.valid {
            return None;
        }
        Some(EndpointTuple {
            src_host: self.src_host.clone()?,
            dst_host: self.dst_host.clone()?,
            proto: self.key.proto,
            dst_port: self.key.dst_port,
        })
    }
}

/// Endpoint-level description of an intent: who talks to whom, over what.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EndpointTuple {
    pub src_host: NodeId,
    pub dst_host: NodeId,
    pub proto: Proto,
    pub dst_port: Option<u16>,
}

impl fmt::Display for EndpointTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} {}:", self.src_host, self.dst_host, self.proto)?;
        match self.dst_port {
            Some(p) => write!(f, "{p}"),
            None => f.write_str("*"),
        }
    }
}

impl fmt::Debug for EndpointTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Orders a chain into a path by following egress ports from the source's access switch.
pub fn aggregate(c: &Chain, g: &Nskg) -> MetaIntentGraph {
    let m = MetaIntentGraph {
        key: c.key,
        path: Vec::new(),
        src_host: None,
        dst_host: None,
        valid: false,
        reject_reason: None,
    };
    let resolve = |p: &Prefix| p.is_host().then(|| g.host_by_ip(p.addr())).flatten();
    let (Some(src), Some(_)) = (resolve(&c.key.src), resolve(&c.key.dst)) else {
        return m.rejected(RejectReason::UnknownHost);
    };
    let mut m = MetaIntentGraph { src_host: Some(src.clone()), ..m };
    let Ok(start) = g.access_switch(src) else {
        return m.rejected(RejectReason::NoIngress);
    };
    if !c.groups.contains_key(start) {
        return m.rejected(RejectReason::NoIngress);
    }
    let mut cur = start.clone();
    loop {
        let Some(group) = c.groups.get(&cur) else {
            return m.rejected(RejectReason::NoEgress);
        };
        m.path.push(cur.clone());
        let Some((peer, _)) = g.peer(&cur, group.egress_port) else {
            return m.rejected(RejectReason::BrokenLink);
        };
        match peer.kind {
            NodeKind::Host => {
                m.dst_host = Some(peer.id.clone());
                m.valid = true;
                return m;
            }
            NodeKind::Switch => {
                if m.path.contains(&peer.id) {
                    return m.rejected(RejectReason::Cycle);
                }
                cur = peer.id.clone();
            }
        }
    }
}

/// Everything one extraction pass learns from the flow tables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extraction {
    pub chains: BTreeMap<AddrKey, Chain>,
    pub graphs: BTreeMap<AddrKey, MetaIntentGraph>,
    pub functional: BTreeMap<NodeId, Vec<FlowEntry>>,
    tuples: BTreeMap<EndpointTuple, BTreeSet<AddrKey>>,
}

impl Extraction {
    /// The extracted set G, sorted and duplicate-free.
    pub fn tuples(&self) -> impl Iterator<Item = &EndpointTuple> {
        self.tuples.keys()
    }

    pub fn tuple_set(&self) -> BTreeSet<EndpointTuple> {
        self.tuples.keys().cloned().collect()
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn contains(&self, t: &EndpointTuple) -> bool {
        self.tuples.contains_key(t)
    }

    /// Keys whose valid graphs produce `t`.
    pub fn keys_for(&self, t: &EndpointTuple) -> impl Iterator<Item = &AddrKey> {
        self.tuples.get(t).into_iter().flatten()
    }

    pub fn valid_graphs(&self) -> impl Iterator<Item = &MetaIntentGraph> {
        self.graphs.values().filter(|m| m.valid)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &MetaIntentGraph> {
        self.graphs.values().filter(|m| !m.valid)
    }

    /// Replaces the graph of `key`, keeping the tuple index in step.
    pub(crate) fn set_graph(&mut self, key: AddrKey, graph: Option<MetaIntentGraph>) {
        if let Some(old) = self.graphs.remove(&key) {
            if let Some(t) = old.tuple() {
                if let Some(keys) = self.tuples.get_mut(&t) {
                    keys.remove(&key);
                    if keys.is_empty() {
                        self.tuples.remove(&t);
                    }
                }
            }
        }
        if let Some(graph) = graph {
            if let Some(t) = graph.tuple() {
                self.tuples.entry(t).or_default().insert(key);
            }
            self.graphs.insert(key, graph);
        }
    }
}

/// Runs clustering, linking, and aggregation over a full set of tables.
pub fn extract(tables: &[FlowTable], g: &Nskg) -> Extraction {
    let mut out = Extraction::default();
    let mut groups = Vec::new();
    for sc in cluster_entries(tables) {
        if !sc.functional.is_empty() {
            out.functional.insert(sc.switch_id.clone(), sc.functional);
        }
        groups.extend(sc.groups);
    }
    for chain in link_groups(groups) {
        let graph = aggregate(&chain, g);
        out.set_graph(chain.key, Some(graph));
        out.chains.insert(chain.key, chain);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Action;
    use crate::nskg::{LinkRecord, NodeRecord, PortRef};
    use alloc::vec;
    use core::net::Ipv4Addr;

    fn ip(last: u8) -> Ipv4Addr {
        Ipv4Addr::new(10, 0, 0, last)
    }

    fn fwd(src: u8, dst: u8, port: u16, prio: u32, out: u32) -> FlowEntry {
        FlowEntry::new(
            MatchFields {
                src_ip: Some(Prefix::host(ip(src))),
                dst_ip: Some(Prefix::host(ip(dst))),
                proto: Proto::Tcp,
                dst_port: Some(port),
                ..Default::default()
            },
            prio,
            vec![Action::Output(PortId(out))],
        )
    }

    /// h1 - s1 - s2 - h2 with s1:2 <-> s2:1, hosts on port 1 of s1 and port 2 of s2.
    fn line() -> Nskg {
        Nskg::new(
            vec![
                NodeRecord::switch("s1"),
                NodeRecord::switch("s2"),
                NodeRecord::host("h1", ip(1)),
                NodeRecord::host("h2", ip(2)),
            ],
            vec![
                LinkRecord::new(PortRef::new("s1", 2), PortRef::new("s2", 1)),
                LinkRecord::new(PortRef::new("h1", 0), PortRef::new("s1", 1)),
                LinkRecord::new(PortRef::new("h2", 0), PortRef::new("s2", 2)),
            ],
        )
        .unwrap()
    }

    fn table(sw: &str, entries: Vec<FlowEntry>) -> FlowTable {
        FlowTable::new(NodeId::new(sw), entries)
    }

    #[test]
    fn same_address_groups_together() {
        let t = table("s1", vec![fwd(1, 2, 443, 100, 2), fwd(1, 2, 443, 200, 3)]);
        let sc = cluster_entries(&[t]);
        assert_eq!(sc.len(), 1);
        assert_eq!(sc[0].groups.len(), 1);
        assert_eq!(sc[0].groups[0].entries.len(), 2);
        assert_eq!(sc[0].groups[0].egress_port, PortId(3));
    }

    #[test]
    fn different_destinations_split() {
        let t = table("s1", vec![fwd(1, 2, 443, 100, 2), fwd(1, 3, 443, 100, 2)]);
        assert_eq!(cluster_entries(&[t])[0].groups.len(), 2);
    }

    #[test]
    fn drop_only_table_has_no_groups() {
        let d = FlowEntry::new(MatchFields::default(), 5, vec![Action::Drop]);
        let t = table("s1", vec![d.clone(), d]);
        let sc = cluster_entries(&[t]);
        assert!(sc[0].groups.is_empty());
        assert_eq!(sc[0].functional.len(), 2);
    }

    #[test]
    fn host_bits_do_not_split_keys() {
        let mut a = fwd(1, 2, 80, 1, 2);
        a.match_fields.dst_ip = Some("10.0.0.1/24".parse().unwrap());
        let mut b = a.clone();
        b.match_fields.dst_ip = Some("10.0.0.0/24".parse().unwrap());
        assert_eq!(AddrKey::of(&a.match_fields), AddrKey::of(&b.match_fields));
    }

    fn group(sw: &str, e: FlowEntry) -> EntryGroup {
        EntryGroup::new(NodeId::new(sw), AddrKey::of(&e.match_fields), vec![e]).unwrap()
    }

    #[test]
    fn linking_partitions_by_key() {
        let k1 = fwd(1, 2, 80, 1, 2);
        let k2 = fwd(1, 3, 80, 1, 2);
        let chains = link_groups(vec![
            group("s1", k1.clone()),
            group("s2", k1.clone()),
            group("s3", k1.clone()),
        ]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].groups.len(), 3);

        let chains = link_groups(vec![group("s1", k1.clone())]);
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].groups.len(), 1);

        let chains = link_groups(vec![group("s1", k1.clone()), group("s2", k1), group("s2", k2)]);
        let mut sizes: Vec<_> = chains.iter().map(|c| c.groups.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    fn chain_of(groups: Vec<EntryGroup>) -> Chain {
        let mut v = link_groups(groups);
        assert_eq!(v.len(), 1);
        v.remove(0)
    }

    #[test]
    fn aggregate_valid_path() {
        let c = chain_of(vec![group("s1", fwd(1, 2, 80, 1, 2)), group("s2", fwd(1, 2, 80, 1, 2))]);
        let m = aggregate(&c, &line());
        assert!(m.valid, "{m:?}");
        assert_eq!(m.path, vec![NodeId::new("s1"), NodeId::new("s2")]);
        assert_eq!(m.tuple().unwrap().dst_host.as_str(), "h2");
    }

    #[test]
    fn aggregate_broken_link() {
        use crate::nskg::{EventKind, StateEvent};
        let g = line()
            .apply_event(&StateEvent::link(EventKind::LinkDown, PortRef::new("s1", 2), PortRef::new("s2", 1)))
            .unwrap();
        let c = chain_of(vec![group("s1", fwd(1, 2, 80, 1, 2)), group("s2", fwd(1, 2, 80, 1, 2))]);
        let m = aggregate(&c, &g);
        assert!(!m.valid);
        assert_eq!(m.reject_reason, Some(RejectReason::BrokenLink));
    }

    #[test]
    fn aggregate_cycle() {
        let c = chain_of(vec![group("s1", fwd(1, 2, 80, 1, 2)), group("s2", fwd(1, 2, 80, 1, 1))]);
        assert_eq!(aggregate(&c, &line()).reject_reason, Some(RejectReason::Cycle));
    }

    #[test]
    fn aggregate_unknown_host_and_missing_groups() {
        let c = chain_of(vec![group("s1", fwd(1, 9, 80, 1, 2))]);
        assert_eq!(aggregate(&c, &line()).reject_reason, Some(RejectReason::UnknownHost));
        let c = chain_of(vec![group("s2", fwd(1, 2, 80, 1, 2))]);
        assert_eq!(aggregate(&c, &line()).reject_reason, Some(RejectReason::NoIngress));
        let c = chain_of(vec![group("s1", fwd(1, 2, 80, 1, 2))]);
        assert_eq!(aggregate(&c, &line()).reject_reason, Some(RejectReason::NoEgress));
    }

    #[test]
    fn extract_empty() {
        let x = extract(&[], &line());
        assert_eq!(x.tuple_count(), 0);
    }

    #[test]
    fn extract_collects_tuples() {
        let tables = vec![
            table("s1", vec![fwd(1, 2, 80, 1, 2), fwd(2, 1, 80, 1, 1)]),
            table("s2", vec![fwd(1, 2, 80, 1, 2), fwd(2, 1, 80, 1, 1)]),
        ];
        let x = extract(&tables, &line());
        let g: Vec<_> = x.tuples().map(|t| alloc::format!("{t}")).collect();
        assert_eq!(g, vec!["h1->h2 TCP:80", "h2->h1 TCP:80"]);
    }
}
