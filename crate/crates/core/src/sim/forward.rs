use alloc::vec::Vec;

use super::SimNetwork;
use crate::flow::{best_match, Action, IpProto, MacAddr, Packet, Proto};
use crate::intent::{Intent, IntentRepository};
use crate::nskg::NodeKind;
use crate::NodeId;

/// Destination port used for probes of intents whose port is ANY.
pub const PROBE_DST_PORT: u16 = 80;
/// Source port of every probe.
pub const PROBE_SRC_PORT: u16 = 49152;

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Outcome {
    Delivered(NodeId),
    Dropped,
    NoMatch(NodeId),
    Loop,
    DeadEnd,
}

/// The path a packet took and how its journey ended.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ForwardingTrace {
    /// Visited switches with the table position of the entry that matched there.
    pub hops: Vec<(NodeId, Option<usize>)>,
    pub outcome: Outcome,
    /// The packet as it left the last hop, rewrites included.
    pub packet: Packet,
}

/// Forwards `p` hop by hop from `ingress`.
///
/// At most one hop per switch is taken; a packet still in flight after that many hops
/// is reported as a loop.
pub fn forward_packet(n: &SimNetwork, mut p: Packet, ingress: &str) -> ForwardingTrace {
    let g = n.nskg();
    let bound = g.switch_count();
    let mut hops = Vec::new();
    let mut cur = match g.node(ingress) {
        Some(node) if node.kind == NodeKind::Switch && node.is_up() => node.id.clone(),
        _ => return ForwardingTrace { hops, outcome: Outcome::DeadEnd, packet: p },
    };
    loop {
        if hops.len() >= bound {
            return ForwardingTrace { hops, outcome: Outcome::Loop, packet: p };
        }
        let Some(e) = best_match(n.entries(&cur), &p, n.clock()) else {
            hops.push((cur.clone(), None));
            return ForwardingTrace { hops, outcome: Outcome::NoMatch(cur), packet: p };
        };
        hops.push((cur.clone(), Some(e.entry_index)));
        let mut out = None;
        for a in &e.actions {
            match *a {
                Action::Output(port) => out = Some(port),
                Action::Drop => return ForwardingTrace { hops, outcome: Outcome::Dropped, packet: p },
                Action::ToController => {}
                Action::SetVlan(v) => p.vlan_id = v,
                Action::SetDstMac(m) => p.dst_mac = m,
            }
        }
        let Some(out) = out else {
            return ForwardingTrace { hops, outcome: Outcome::Dropped, packet: p };
        };
        match g.peer(&cur, out) {
            None => return ForwardingTrace { hops, outcome: Outcome::DeadEnd, packet: p },
            Some((peer, _)) if peer.kind == NodeKind::Host => {
                let outcome = Outcome::Delivered(peer.id.clone());
                return ForwardingTrace { hops, outcome, packet: p };
            }
            Some((peer, in_port)) => {
                p.in_port = in_port;
                cur = peer.id.clone();
            }
        }
    }
}

/// The canonical probe for an intent and the switch it enters at.
///
/// ANY protocol becomes TCP and ANY port becomes [`PROBE_DST_PORT`]. `None` when an
/// endpoint is unknown or the source host has no live attachment.
pub fn probe_packet(n: &SimNetwork, i: &Intent) -> Option<(Packet, NodeId)> {
    let g = n.nskg();
    let (ingress, in_port) = g.attachment(&i.src_host).ok()?;
    let p = Packet {
        src_ip: g.host_ip(&i.src_host)?,
        dst_ip: g.host_ip(&i.dst_host)?,
        proto: match i.proto {
            Proto::Udp => IpProto::Udp,
            Proto::Icmp => IpProto::Icmp,
            Proto::Tcp | Proto::Any => IpProto::Tcp,
        },
        src_port: PROBE_SRC_PORT,
        dst_port: i.dst_port.unwrap_or(PROBE_DST_PORT),
        in_port,
        vlan_id: 0,
        src_mac: MacAddr::default(),
        dst_mac: MacAddr::default(),
    };
    Some((p, ingress.clone()))
}

/// Whether the intent's probe is delivered to its declared destination.
pub fn intent_satisfied(n: &SimNetwork, i: &Intent) -> bool {
    probe_packet(n, i).is_some_and(|(p, ingress)| {
        forward_packet(n, p, &ingress).outcome == Outcome::Delivered(i.dst_host.clone())
    })
}

/// Fraction of intents whose probe is delivered; 1.0 for an empty repository.
pub fn survival_rate(n: &SimNetwork, intents: &IntentRepository) -> f64 {
    if intents.is_empty() {
        return 1.0;
    }
    let ok = intents.iter().filter(|i| intent_satisfied(n, i)).count();
    ok as f64 / intents.len() as f64
}
