//! Oracles shared by the integration tests. They read the graph's raw node and link
//! records and never call the path or matching code under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use safla_core::flow::{FlowEntry, Packet};
use safla_core::intent::Intent;
use safla_core::nskg::{NodeKind, Nskg, Status};
use safla_core::sim::{probe_packet, SimNetwork};
use safla_core::NodeId;

/// `(node, port) -> (peer, peer port)` over links whose status and both ends are Up.
pub fn live_ports(g: &Nskg) -> BTreeMap<(String, u32), (String, u32)> {
    let up: BTreeSet<&str> =
        g.nodes().iter().filter(|n| n.status == Status::Up).map(|n| n.id.as_str()).collect();
    let mut m = BTreeMap::new();
    for l in g.links() {
        if l.status != Status::Up || !up.contains(l.a.node.as_str()) || !up.contains(l.b.node.as_str()) {
            continue;
        }
        m.insert((l.a.node.to_string(), l.a.port.0), (l.b.node.to_string(), l.b.port.0));
        m.insert((l.b.node.to_string(), l.b.port.0), (l.a.node.to_string(), l.a.port.0));
    }
    m
}

fn kind(g: &Nskg, id: &str) -> NodeKind {
    g.nodes().iter().find(|n| n.id.as_str() == id).unwrap().kind
}

/// Switches adjacent to a host over live links.
pub fn host_switches(g: &Nskg, host: &str) -> Vec<String> {
    live_ports(g)
        .iter()
        .filter(|((n, _), (p, _))| n == host && kind(g, p) == NodeKind::Switch)
        .map(|(_, (p, _))| p.clone())
        .collect()
}

/// Hop distances between switches by plain BFS over live switch-to-switch links.
pub fn switch_bfs(g: &Nskg, from: &str) -> BTreeMap<String, usize> {
    let ports = live_ports(g);
    let mut adj: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for ((a, _), (b, _)) in &ports {
        if kind(g, a) == NodeKind::Switch && kind(g, b) == NodeKind::Switch {
            adj.entry(a.clone()).or_default().push(b.clone());
        }
    }
    let mut dist = BTreeMap::from([(from.to_string(), 0)]);
    let mut q = VecDeque::from([from.to_string()]);
    while let Some(u) = q.pop_front() {
        let d = dist[&u];
        for v in adj.get(&u).into_iter().flatten() {
            if !dist.contains_key(v) {
                dist.insert(v.clone(), d + 1);
                q.push_back(v.clone());
            }
        }
    }
    dist
}

/// Whether any live path joins the endpoints of `i` on `g`.
pub fn bfs_feasible(g: &Nskg, i: &Intent) -> bool {
    let (a, b) = (host_switches(g, &i.src_host), host_switches(g, &i.dst_host));
    if a.len() != 1 || b.len() != 1 {
        return false;
    }
    switch_bfs(g, &a[0]).contains_key(&b[0])
}

fn brute_best<'a>(entries: &'a [FlowEntry], p: &Packet, now: u64) -> Option<&'a FlowEntry> {
    let mut hits: Vec<&FlowEntry> = entries
        .iter()
        .filter(|e| e.timeout.is_none_or(|t| now < t) && e.match_fields.matches(p))
        .collect();
    hits.sort_by_key(|e| (std::cmp::Reverse(e.priority), e.entry_index));
    hits.first().copied()
}

/// Second reachability oracle: composes each switch's best next hop for the probe,
/// following `(switch, in_port)` states until delivery or a repeated state.
pub fn next_hop_delivers(n: &SimNetwork, i: &Intent) -> bool {
    use safla_core::assurance::NetworkHandle;
    use safla_core::flow::Action;
    let Some((mut p, ingress)) = probe_packet(n, i) else { return false };
    let g = n.nskg();
    if g.node(&ingress).is_none_or(|s| s.status != Status::Up) {
        return false;
    }
    let ports = live_ports(g);
    let tables: BTreeMap<NodeId, Vec<FlowEntry>> =
        n.export_flow_tables().into_iter().map(|t| (t.switch_id, t.entries)).collect();
    let mut seen = BTreeSet::new();
    let mut cur = ingress.to_string();
    loop {
        if !seen.insert((cur.clone(), p.in_port.0)) {
            return false;
        }
        let Some(e) = tables.get(cur.as_str()).and_then(|t| brute_best(t, &p, n.clock())) else {
            return false;
        };
        if e.actions.contains(&Action::Drop) {
            return false;
        }
        let Some(out) = e.actions.iter().find_map(|a| match a {
            Action::Output(o) => Some(o.0),
            _ => None,
        }) else {
            return false;
        };
        let Some((peer, peer_port)) = ports.get(&(cur.clone(), out)) else { return false };
        if kind(g, peer) == NodeKind::Host {
            return peer.as_str() == i.dst_host.as_str();
        }
        p.in_port = safla_core::PortId(*peer_port);
        cur = peer.clone();
    }
}
