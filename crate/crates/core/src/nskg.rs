//! Network state knowledge graph: switches, hosts, links, attributes, and status.
//!
//! An [`Nskg`] is an immutable snapshot. [`Nskg::apply_event`] returns the next snapshot
//! with its revision bumped, so older snapshots stay valid for readers that hold them.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use crate::{NodeId, PortId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum NodeKind {
    Switch,
    Host,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Status {
    #[default]
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    pub attrs: BTreeMap<String, String>,
    pub status: Status,
}

impl NodeRecord {
    pub fn switch(id: &str) -> Self {
        Self { id: NodeId::new(id), kind: NodeKind::Switch, attrs: BTreeMap::new(), status: Status::Up }
    }

    pub fn host(id: &str, ip: Ipv4Addr) -> Self {
        let mut attrs = BTreeMap::new();
        attrs.insert("ip".to_string(), ip.to_string());
        Self { id: NodeId::new(id), kind: NodeKind::Host, attrs, status: Status::Up }
    }

    pub fn is_up(&self) -> bool {
        self.status == Status::Up
    }
}

/// One end of a link.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PortRef {
    pub node: NodeId,
    pub port: PortId,
}

impl PortRef {
    pub fn new(node: &str, port: u32) -> Self {
        Self { node: NodeId::new(node), port: PortId(port) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LinkRecord {
    pub a: PortRef,
    pub b: PortRef,
    pub status: Status,
}

impl LinkRecord {
    pub fn new(a: PortRef, b: PortRef) -> Self {
        Self { a, b, status: Status::Up }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum EventKind {
    NodeUp,
    NodeDown,
    LinkUp,
    LinkDown,
    AttrSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum EventTarget {
    Node { node: NodeId },
    Link { a: PortRef, b: PortRef },
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AttrPayload {
    pub key: String,
    pub value: String,
}

/// A change in network state.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StateEvent {
    pub kind: EventKind,
    pub target: EventTarget,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub payload: Option<AttrPayload>,
}

impl StateEvent {
    pub fn node(kind: EventKind, node: &NodeId) -> Self {
        Self { kind, target: EventTarget::Node { node: node.clone() }, payload: None }
    }

    pub fn link(kind: EventKind, a: PortRef, b: PortRef) -> Self {
        Self { kind, target: EventTarget::Link { a, b }, payload: None }
    }

    pub fn attr_set(node: &NodeId, key: &str, value: &str) -> Self {
        Self {
            kind: EventKind::AttrSet,
            target: EventTarget::Node { node: node.clone() },
            payload: Some(AttrPayload { key: key.to_string(), value: value.to_string() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NskgError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("link {link} references unknown node `{node}`")]
    DanglingLink { link: usize, node: NodeId },
    #[error("link {0} connects a node to itself")]
    SelfLink(usize),
    #[error("port {port} of `{node}` appears in more than one link")]
    PortInUse { node: NodeId, port: PortId },
    #[error("host `{0}` has no `ip` attribute")]
    MissingHostIp(NodeId),
    #[error("host `{host}` has invalid ip `{value}`")]
    InvalidHostIp { host: NodeId, value: String },
    #[error("ip {ip} is assigned to both `{first}` and `{second}`")]
    DuplicateHostIp { ip: Ipv4Addr, first: NodeId, second: NodeId },
    #[error("unknown event target `{0}`")]
    UnknownTarget(String),
    #[error("malformed event: {0}")]
    InvalidEvent(&'static str),
    #[error("`{0}` is not a host")]
    NotAHost(NodeId),
    #[error("host `{host}` has {attachments} live switch attachments, expected exactly one")]
    UnattachedHost { host: NodeId, attachments: usize },
}

/// The network state knowledge graph.
#[derive(Clone, Debug)]
pub struct Nskg {
    /// Sorted by id, so index order is lexicographic id order.
    nodes: Vec<NodeRecord>,
    index: BTreeMap<NodeId, usize>,
    links: Vec<LinkRecord>,
    ends: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
    ports: BTreeMap<(usize, PortId), usize>,
    host_ips: BTreeMap<Ipv4Addr, usize>,
    revision: u64,
}

impl Nskg {
    /// Builds a graph at revision 0 after checking every structural invariant.
    pub fn new(mut nodes: Vec<NodeRecord>, links: Vec<LinkRecord>) -> Result<Self, NskgError> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(NskgError::DuplicateNode(pair[0].id.clone()));
            }
        }
        let index: BTreeMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut ends = Vec::with_capacity(links.len());
        let mut incident = vec![Vec::new(); nodes.len()];
        let mut ports = BTreeMap::new();
        for (li, link) in links.iter().enumerate() {
            let lookup = |r: &PortRef| {
                index
                    .get(&r.node)
                    .copied()
                    .ok_or_else(|| NskgError::DanglingLink { link: li, node: r.node.clone() })
            };
            let (a, b) = (lookup(&link.a)?, lookup(&link.b)?);
            if a == b {
                return Err(NskgError::SelfLink(li));
            }
            for (n, r) in [(a, &link.a), (b, &link.b)] {
                if ports.insert((n, r.port), li).is_some() {
                    return Err(NskgError::PortInUse { node: r.node.clone(), port: r.port });
                }
            }
            ends.push((a, b));
            incident[a].push(li);
            incident[b].push(li);
        }

        let mut host_ips = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::Host {
                let ip = parse_host_ip(n)?;
                if let Some(prev) = host_ips.insert(ip, i) {
                    return Err(NskgError::DuplicateHostIp {
                        ip,
                        first: nodes[prev].id.clone(),
                        second: n.id.clone(),
                    });
                }
            }
        }

        Ok(Self { nodes, index, links, ends, incident, ports, host_ips, revision: 0 })
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkRecord] {
        &self.links
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn switches(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Switch)
    }

    pub fn hosts(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Host)
    }

    pub fn switch_count(&self) -> usize {
        self.switches().count()
    }

    pub fn is_up(&self, id: &str) -> bool {
        self.node(id).is_some_and(NodeRecord::is_up)
    }

    pub fn host_ip(&self, host: &str) -> Option<Ipv4Addr> {
        let n = self.node(host)?;
        if n.kind != NodeKind::Host {
            return None;
        }
        n.attrs.get("ip").and_then(|v| v.parse().ok())
    }

    pub fn host_by_ip(&self, ip: Ipv4Addr) -> Option<&NodeId> {
        self.host_ips.get(&ip).map(|&i| &self.nodes[i].id)
    }

    fn idx(&self, id: &str) -> Result<usize, NskgError> {
        self.index.get(id).copied().ok_or_else(|| NskgError::UnknownTarget(id.to_string()))
    }

    /// A link carries traffic only when it and both of its endpoints are Up.
    fn usable(&self, li: usize) -> bool {
        let (a, b) = self.ends[li];
        self.links[li].status == Status::Up && self.nodes[a].is_up() && self.nodes[b].is_up()
    }

    fn far_end(&self, li: usize, from: usize) -> (usize, PortId) {
        let (a, b) = self.ends[li];
        if a == from {
            (b, self.links[li].b.port)
        } else {
            (a, self.links[li].a.port)
        }
    }

    fn find_link(&self, x: &PortRef, y: &PortRef) -> Result<usize, NskgError> {
        let xi = self.idx(&x.node)?;
        let li = self
            .ports
            .get(&(xi, x.port))
            .copied()
            .ok_or_else(|| NskgError::UnknownTarget(alloc::format!("{}:{}", x.node, x.port)))?;
        let l = &self.links[li];
        if (l.a == *x && l.b == *y) || (l.a == *y && l.b == *x) {
            Ok(li)
        } else {
            Err(NskgError::UnknownTarget(alloc::format!(
                "{}:{}-{}:{}",
                x.node, x.port, y.node, y.port
            )))
        }
    }

    /// Applies one event, returning the next snapshot.
    pub fn apply_event(&self, e: &StateEvent) -> Result<Nskg, NskgError> {
        let mut g = self.clone();
        match (&e.kind, &e.target) {
            (EventKind::NodeUp, EventTarget::Node { node }) => {
                let i = g.idx(node)?;
                g.nodes[i].status = Status::Up;
            }
            (EventKind::NodeDown, EventTarget::Node { node }) => {
                let i = g.idx(node)?;
                g.nodes[i].status = Status::Down;
                for &li in &g.incident[i] {
                    g.links[li].status = Status::Down;
                }
            }
            (EventKind::LinkUp | EventKind::LinkDown, EventTarget::Link { a, b }) => {
                let li = g.find_link(a, b)?;
                g.links[li].status =
                    if e.kind == EventKind::LinkUp { Status::Up } else { Status::Down };
            }
            (EventKind::AttrSet, EventTarget::Node { node }) => {
                let i = g.idx(node)?;
                let payload =
                    e.payload.as_ref().ok_or(NskgError::InvalidEvent("AttrSet without payload"))?;
                let old_ip = (g.nodes[i].kind == NodeKind::Host).then(|| parse_host_ip(&g.nodes[i]));
                g.nodes[i].attrs.insert(payload.key.clone(), payload.value.clone());
                if let Some(old_ip) = old_ip {
                    let new_ip = parse_host_ip(&g.nodes[i])?;
                    if let Ok(old) = old_ip {
                        g.host_ips.remove(&old);
                    }
                    if let Some(prev) = g.host_ips.insert(new_ip, i) {
                        if prev != i {
                            return Err(NskgError::DuplicateHostIp {
                                ip: new_ip,
                                first: g.nodes[prev].id.clone(),
                                second: g.nodes[i].id.clone(),
                            });
                        }
                    }
                }
            }
            (EventKind::LinkUp | EventKind::LinkDown, EventTarget::Node { .. }) => {
                return Err(NskgError::InvalidEvent("link event needs a link target"));
            }
            (_, EventTarget::Link { .. }) => {
                return Err(NskgError::InvalidEvent("node event needs a node target"));
            }
        }
        g.revision += 1;
        Ok(g)
    }

    /// Live peer on the far side of `(node, port)`, with the peer's port.
    pub fn peer(&self, node: &str, port: PortId) -> Option<(&NodeRecord, PortId)> {
        let i = *self.index.get(node)?;
        let li = *self.ports.get(&(i, port))?;
        if !self.usable(li) {
            return None;
        }
        let (j, p) = self.far_end(li, i);
        Some((&self.nodes[j], p))
    }

    /// Node at the far end of the Up link on `(sw, port)`.
    pub fn neighbor_of(&self, sw: &str, port: PortId) -> Result<Option<&NodeId>, NskgError> {
        self.idx(sw)?;
        Ok(self.peer(sw, port).map(|(n, _)| &n.id))
    }

    /// Lowest local port of a usable link from `a` to `b`.
    pub fn port_toward(&self, a: &str, b: &str) -> Option<PortId> {
        let ai = *self.index.get(a)?;
        let bi = *self.index.get(b)?;
        self.incident[ai]
            .iter()
            .filter(|&&li| self.usable(li) && self.far_end(li, ai).0 == bi)
            .map(|&li| if self.ends[li].0 == ai { self.links[li].a.port } else { self.links[li].b.port })
            .min()
    }

    /// Every node Up and every consecutive pair joined by a usable link.
    pub fn path_is_up(&self, path: &[NodeId]) -> bool {
        path.iter().all(|n| self.is_up(n))
            && path.windows(2).all(|w| self.port_toward(&w[0], &w[1]).is_some())
    }

    /// Hop distances to `target` over usable links. Only switches relay traffic.
    fn distances_to(
        &self,
        target: usize,
        source: usize,
        skip_node: &dyn Fn(usize) -> bool,
        skip_link: &dyn Fn(usize) -> bool,
    ) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.nodes.len()];
        dist[target] = 0;
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            if u != target && self.nodes[u].kind != NodeKind::Switch {
                continue;
            }
            for &li in &self.incident[u] {
                if !self.usable(li) || skip_link(li) {
                    continue;
                }
                let (v, _) = self.far_end(li, u);
                if dist[v] != u32::MAX || (skip_node(v) && v != source) {
                    continue;
                }
                if self.nodes[v].kind != NodeKind::Switch && v != source {
                    continue;
                }
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
        dist
    }

    fn shortest_path(
        &self,
        a: usize,
        b: usize,
        skip_node: &dyn Fn(usize) -> bool,
        skip_link: &dyn Fn(usize) -> bool,
    ) -> Option<Vec<NodeId>> {
        if !self.nodes[a].is_up() || !self.nodes[b].is_up() {
            return None;
        }
        if a == b {
            return Some(vec![self.nodes[a].id.clone()]);
        }
        let dist = self.distances_to(b, a, skip_node, skip_link);
        if dist[a] == u32::MAX {
            return None;
        }
        // greedy descent picking the smallest id at each step gives the
        // lexicographically smallest shortest path
        let mut path = vec![self.nodes[a].id.clone()];
        let mut cur = a;
        while cur != b {
            let next = self.incident[cur]
                .iter()
                .filter(|&&li| self.usable(li) && !skip_link(li))
                .map(|&li| self.far_end(li, cur).0)
                .filter(|&v| dist[v] != u32::MAX && dist[v] + 1 == dist[cur])
                .min()?;
            path.push(self.nodes[next].id.clone());
            cur = next;
        }
        Some(path)
    }

    /// Shortest hop-count path over Up nodes and links, ties broken by the
    /// lexicographically smallest node-id sequence. Hosts never relay.
    pub fn path_between(&self, a: &str, b: &str) -> Result<Option<Vec<NodeId>>, NskgError> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        Ok(self.shortest_path(ai, bi, &|_| false, &|_| false))
    }

    /// Shortest path from `a` to `b` sharing no intermediate node with `primary`.
    /// When `primary` is a single hop, its direct links are excluded as well.
    pub fn disjoint_path(
        &self,
        a: &str,
        b: &str,
        primary: &[NodeId],
    ) -> Result<Option<Vec<NodeId>>, NskgError> {
        let (ai, bi) = (self.idx(a)?, self.idx(b)?);
        if ai == bi {
            return Ok(None);
        }
        let mut avoid = BTreeSet::new();
        if primary.len() > 2 {
            for n in &primary[1..primary.len() - 1] {
                avoid.insert(self.idx(n)?);
            }
        }
        let direct = primary.len() == 2;
        let skip_link = |li: usize| {
            let (x, y) = self.ends[li];
            direct && ((x, y) == (ai, bi) || (x, y) == (bi, ai))
        };
        Ok(self.shortest_path(ai, bi, &|v| avoid.contains(&v), &skip_link))
    }

    /// The switch and switch-side port of a host's single live attachment.
    pub fn attachment(&self, host: &str) -> Result<(&NodeId, PortId), NskgError> {
        let hi = self.idx(host)?;
        if self.nodes[hi].kind != NodeKind::Host {
            return Err(NskgError::NotAHost(self.nodes[hi].id.clone()));
        }
        let mut found = None;
        let mut count = 0;
        for &li in &self.incident[hi] {
            let (j, port) = self.far_end(li, hi);
            if self.links[li].status == Status::Up
                && self.nodes[j].kind == NodeKind::Switch
                && self.nodes[j].is_up()
            {
                count += 1;
                found = Some((&self.nodes[j].id, port));
            }
        }
        match (count, found) {
            (1, Some(att)) => Ok(att),
            _ => Err(NskgError::UnattachedHost { host: self.nodes[hi].id.clone(), attachments: count }),
        }
    }

    /// The unique Up switch linked to `host`.
    pub fn access_switch(&self, host: &str) -> Result<&NodeId, NskgError> {
        self.attachment(host).map(|(s, _)| s)
    }
}

fn parse_host_ip(n: &NodeRecord) -> Result<Ipv4Addr, NskgError> {
    let v = n.attrs.get("ip").ok_or_else(|| NskgError::MissingHostIp(n.id.clone()))?;
    v.parse()
        .map_err(|_| NskgError::InvalidHostIp { host: n.id.clone(), value: v.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_switch() -> Nskg {
        Nskg::new(
            vec![
                NodeRecord::switch("s1"),
                NodeRecord::switch("s2"),
                NodeRecord::host("h1", Ipv4Addr::new(10, 0, 0, 1)),
                NodeRecord::host("h2", Ipv4Addr::new(10, 0, 0, 2)),
            ],
            vec![
                LinkRecord::new(PortRef::new("s1", 2), PortRef::new("s2", 1)),
                LinkRecord::new(PortRef::new("h1", 0), PortRef::new("s1", 1)),
                LinkRecord::new(PortRef::new("h2", 0), PortRef::new("s2", 2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn build_counts() {
        let g = two_switch();
        assert_eq!(g.nodes().len(), 4);
        assert_eq!(g.links().len(), 3);
        assert_eq!(g.revision(), 0);
        assert_eq!(g.switch_count(), 2);
    }

    #[test]
    fn dangling_link() {
        let err = Nskg::new(
            vec![NodeRecord::switch("s1")],
            vec![LinkRecord::new(PortRef::new("s1", 1), PortRef::new("s9", 1))],
        )
        .unwrap_err();
        assert_eq!(err, NskgError::DanglingLink { link: 0, node: NodeId::new("s9") });
    }

    #[test]
    fn structural_errors() {
        let s = || vec![NodeRecord::switch("s1"), NodeRecord::switch("s2")];
        assert_eq!(
            Nskg::new(s(), vec![LinkRecord::new(PortRef::new("s1", 1), PortRef::new("s1", 2))])
                .unwrap_err(),
            NskgError::SelfLink(0)
        );
        assert!(matches!(
            Nskg::new(
                s(),
                vec![
                    LinkRecord::new(PortRef::new("s1", 1), PortRef::new("s2", 1)),
                    LinkRecord::new(PortRef::new("s1", 1), PortRef::new("s2", 2)),
                ]
            ),
            Err(NskgError::PortInUse { .. })
        ));
        let mut dup = s();
        dup.push(NodeRecord::switch("s1"));
        assert!(matches!(Nskg::new(dup, vec![]), Err(NskgError::DuplicateNode(_))));
        let mut bare = NodeRecord::host("h1", Ipv4Addr::new(1, 1, 1, 1));
        bare.attrs.clear();
        assert!(matches!(Nskg::new(vec![bare], vec![]), Err(NskgError::MissingHostIp(_))));
        let twins = vec![
            NodeRecord::host("h1", Ipv4Addr::new(1, 1, 1, 1)),
            NodeRecord::host("h2", Ipv4Addr::new(1, 1, 1, 1)),
        ];
        assert!(matches!(Nskg::new(twins, vec![]), Err(NskgError::DuplicateHostIp { .. })));
    }

    #[test]
    fn node_down_takes_links_down() {
        let g = two_switch();
        let g2 = g.apply_event(&StateEvent::node(EventKind::NodeDown, &NodeId::new("s1"))).unwrap();
        assert_eq!(g2.revision(), 1);
        assert!(!g2.is_up("s1"));
        let l = g2.find_link(&PortRef::new("s1", 2), &PortRef::new("s2", 1)).unwrap();
        assert_eq!(g2.links()[l].status, Status::Down);
        // the old snapshot is untouched
        assert!(g.is_up("s1"));
    }

    #[test]
    fn attr_set_updates_ip_index() {
        let g = two_switch();
        let h1 = NodeId::new("h1");
        let g2 = g.apply_event(&StateEvent::attr_set(&h1, "ip", "10.0.0.5")).unwrap();
        assert_eq!(g2.node("h1").unwrap().attrs["ip"], "10.0.0.5");
        assert_eq!(g2.host_by_ip(Ipv4Addr::new(10, 0, 0, 5)), Some(&h1));
        assert_eq!(g2.host_by_ip(Ipv4Addr::new(10, 0, 0, 1)), None);
        assert_eq!(g2.links(), g.links());
        assert!(matches!(
            g.apply_event(&StateEvent::attr_set(&h1, "ip", "10.0.0.2")),
            Err(NskgError::DuplicateHostIp { .. })
        ));
    }

    #[test]
    fn link_up_on_dead_node_is_not_routable() {
        let g = two_switch();
        let g = g.apply_event(&StateEvent::node(EventKind::NodeDown, &NodeId::new("s2"))).unwrap();
        let g = g
            .apply_event(&StateEvent::link(EventKind::LinkUp, PortRef::new("s2", 1), PortRef::new("s1", 2)))
            .unwrap();
        assert_eq!(g.path_between("s1", "s2").unwrap(), None);
        assert_eq!(g.neighbor_of("s1", PortId(2)).unwrap(), None);
    }

    #[test]
    fn unknown_targets() {
        let g = two_switch();
        assert!(matches!(
            g.apply_event(&StateEvent::node(EventKind::NodeDown, &NodeId::new("s9"))),
            Err(NskgError::UnknownTarget(_))
        ));
        assert!(matches!(
            g.apply_event(&StateEvent::link(EventKind::LinkDown, PortRef::new("s1", 2), PortRef::new("s2", 2))),
            Err(NskgError::UnknownTarget(_))
        ));
        assert!(g.neighbor_of("nope", PortId(1)).is_err());
        assert!(g.path_between("s1", "nope").is_err());
    }

    #[test]
    fn neighbors() {
        let g = two_switch();
        assert_eq!(g.neighbor_of("s1", PortId(2)).unwrap().map(NodeId::as_str), Some("s2"));
        assert_eq!(g.neighbor_of("s1", PortId(7)).unwrap(), None);
        let g = g
            .apply_event(&StateEvent::link(EventKind::LinkDown, PortRef::new("s1", 2), PortRef::new("s2", 1)))
            .unwrap();
        assert_eq!(g.neighbor_of("s1", PortId(2)).unwrap(), None);
    }

    #[test]
    fn access_switches() {
        let g = two_switch();
        assert_eq!(g.access_switch("h1").unwrap().as_str(), "s1");
        assert_eq!(g.attachment("h2").unwrap().1, PortId(2));
        assert!(matches!(g.access_switch("s1"), Err(NskgError::NotAHost(_))));
        let g2 = g
            .apply_event(&StateEvent::link(EventKind::LinkDown, PortRef::new("h1", 0), PortRef::new("s1", 1)))
            .unwrap();
        assert!(matches!(
            g2.access_switch("h1"),
            Err(NskgError::UnattachedHost { attachments: 0, .. })
        ));
        let multi = Nskg::new(
            vec![
                NodeRecord::switch("s1"),
                NodeRecord::switch("s2"),
                NodeRecord::host("h1", Ipv4Addr::new(10, 0, 0, 1)),
            ],
            vec![
                LinkRecord::new(PortRef::new("h1", 0), PortRef::new("s1", 1)),
                LinkRecord::new(PortRef::new("h1", 1), PortRef::new("s2", 1)),
            ],
        )
        .unwrap();
        assert!(matches!(
            multi.access_switch("h1"),
            Err(NskgError::UnattachedHost { attachments: 2, .. })
        ));
    }

    #[test]
    fn path_identity_and_isolation() {
        let g = two_switch();
        assert_eq!(g.path_between("s1", "s1").unwrap(), Some(vec![NodeId::new("s1")]));
        assert_eq!(g.path_between("s1", "s2").unwrap().unwrap().len(), 2);
        let g = g.apply_event(&StateEvent::node(EventKind::NodeDown, &NodeId::new("s2"))).unwrap();
        assert_eq!(g.path_between("s1", "h2").unwrap(), None);
    }

    #[test]
    fn hosts_do_not_relay() {
        // s1 - h1 - s2 would be a path if hosts relayed
        let g = Nskg::new(
            vec![
                NodeRecord::switch("s1"),
                NodeRecord::switch("s2"),
                NodeRecord::host("h1", Ipv4Addr::new(10, 0, 0, 1)),
            ],
            vec![
                LinkRecord::new(PortRef::new("h1", 0), PortRef::new("s1", 1)),
                LinkRecord::new(PortRef::new("h1", 1), PortRef::new("s2", 1)),
            ],
        )
        .unwrap();
        assert_eq!(g.path_between("s1", "s2").unwrap(), None);
    }

    #[test]
    fn lexicographic_tie_break() {
        // square a-b-d and a-c-d: both two hops, b < c
        let g = Nskg::new(
            vec![
                NodeRecord::switch("a"),
                NodeRecord::switch("c"),
                NodeRecord::switch("b"),
                NodeRecord::switch("d"),
            ],
            vec![
                LinkRecord::new(PortRef::new("a", 1), PortRef::new("c", 1)),
                LinkRecord::new(PortRef::new("a", 2), PortRef::new("b", 1)),
                LinkRecord::new(PortRef::new("b", 2), PortRef::new("d", 1)),
                LinkRecord::new(PortRef::new("c", 2), PortRef::new("d", 2)),
            ],
        )
        .unwrap();
        let p: Vec<_> = g.path_between("a", "d").unwrap().unwrap();
        assert_eq!(p, vec![NodeId::new("a"), NodeId::new("b"), NodeId::new("d")]);
        let back = g.path_between("d", "a").unwrap().unwrap();
        assert_eq!(back, vec![NodeId::new("d"), NodeId::new("b"), NodeId::new("a")]);
        let alt = g.disjoint_path("a", "d", &p).unwrap().unwrap();
        assert_eq!(alt, vec![NodeId::new("a"), NodeId::new("c"), NodeId::new("d")]);
        assert!(g.path_is_up(&alt));
    }

    #[test]
    fn disjoint_path_for_direct_hop() {
        let g = two_switch();
        let p = g.path_between("s1", "s2").unwrap().unwrap();
        assert_eq!(g.disjoint_path("s1", "s2", &p).unwrap(), None);
        assert_eq!(g.disjoint_path("s1", "s1", &p).unwrap(), None);
    }
}
