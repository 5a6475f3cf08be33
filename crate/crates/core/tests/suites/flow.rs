use std::net::Ipv4Addr;

use proptest::prelude::*;
use safla_core::flow::{match_packet, Action, FlowEntry, FlowTable, IpProto, MacAddr, MatchFields, Packet, Prefix, Proto};
use safla_core::{NodeId, PortId};

fn prefix_hit(p: &Option<Prefix>, ip: Ipv4Addr) -> bool {
    let Some(p) = p else { return true };
    let bits = p.mask_len() as u32;
    let shift = 32 - bits;
    bits == 0 || (u32::from(p.addr()) >> shift) == (u32::from(ip) >> shift)
}

fn opt_hit<T: PartialEq>(m: &Option<T>, v: T) -> bool {
    m.as_ref().is_none_or(|m| *m == v)
}

fn hits(m: &MatchFields, p: &Packet) -> bool {
    let proto = match m.proto {
        Proto::Any => true,
        Proto::Tcp => p.proto == IpProto::Tcp,
        Proto::Udp => p.proto == IpProto::Udp,
        Proto::Icmp => p.proto == IpProto::Icmp,
    };
    prefix_hit(&m.src_ip, p.src_ip)
        && prefix_hit(&m.dst_ip, p.dst_ip)
        && proto
        && opt_hit(&m.src_port, p.src_port)
        && opt_hit(&m.dst_port, p.dst_port)
        && opt_hit(&m.in_port, p.in_port)
        && opt_hit(&m.vlan_id, p.vlan_id)
        && opt_hit(&m.src_mac, p.src_mac)
        && opt_hit(&m.dst_mac, p.dst_mac)
        && opt_hit(&m.eth_type, 0x0800)
}

/// Every matching live entry, sorted by priority then position; the first one wins.
pub fn oracle(t: &FlowTable, p: &Packet, now: u64) -> Option<usize> {
    let mut all: Vec<(u32, usize)> = t
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.timeout.is_none_or(|h| now < h) && hits(&e.match_fields, p))
        .map(|(i, e)| (e.priority, i))
        .collect();
    all.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    all.first().map(|x| x.1)
}

fn ip() -> impl Strategy<Value = Ipv4Addr> {
    (0u8..2, 0u8..4).prop_map(|(c, d)| Ipv4Addr::new(10, 0, c, d))
}

fn prefix() -> impl Strategy<Value = Option<Prefix>> {
    prop_oneof![
        Just(None),
        (ip(), prop::sample::select(vec![0u32, 16, 24, 30, 31, 32]))
            .prop_map(|(a, l)| Some(Prefix::new(a, l).unwrap())),
    ]
}

fn proto() -> impl Strategy<Value = Proto> {
    prop::sample::select(vec![Proto::Any, Proto::Tcp, Proto::Udp, Proto::Icmp])
}

fn ip_proto() -> impl Strategy<Value = IpProto> {
    prop::sample::select(vec![IpProto::Tcp, IpProto::Udp, IpProto::Icmp])
}

fn mac() -> impl Strategy<Value = MacAddr> {
    (0u8..2).prop_map(|b| MacAddr([0, 0, 0, 0, 0, b]))
}

fn match_fields() -> impl Strategy<Value = MatchFields> {
    (
        (prefix(), prefix(), proto()),
        (prop::option::of(1u16..3), prop::option::of(79u16..81), prop::option::of(1u32..3)),
        (prop::option::of(0u16..2), prop::option::of(mac()), prop::option::of(mac())),
        prop::option::of(prop::sample::select(vec![0x0800u16, 0x86dd])),
    )
        .prop_map(|((src_ip, dst_ip, proto), (sp, dp, inp), (vlan, sm, dm), eth)| MatchFields {
            src_ip,
            dst_ip,
            proto,
            src_port: sp,
            dst_port: dp,
            in_port: inp.map(PortId),
            vlan_id: vlan,
            src_mac: sm,
            dst_mac: dm,
            eth_type: eth,
        })
}

pub fn entry() -> impl Strategy<Value = FlowEntry> {
    (match_fields(), 0u32..4, prop::option::of(0u64..8), 1u32..5).prop_map(|(m, prio, timeout, out)| {
        let mut e = FlowEntry::new(m, prio, vec![Action::Output(PortId(out))]);
        e.timeout = timeout;
        e
    })
}

pub fn packet() -> impl Strategy<Value = Packet> {
    (ip(), ip(), ip_proto(), 1u16..3, 79u16..81, 1u32..3, 0u16..2, mac(), mac()).prop_map(
        |(s, d, proto, sp, dp, inp, vlan, sm, dm)| Packet {
            src_ip: s,
            dst_ip: d,
            proto,
            src_port: sp,
            dst_port: dp,
            in_port: PortId(inp),
            vlan_id: vlan,
            src_mac: sm,
            dst_mac: dm,
        },
    )
}

/// `match_packet` picks the same entry as the brute-force oracle.
pub fn match_oracle(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(entry(), 0..12), packet(), 0u64..10);
    super::run(source, cases, strategy, |(entries, p, now)| {
        let t = FlowTable::new(NodeId::new("s1"), entries);
        let got = match_packet(&t, &p, now).map(|e| e.entry_index);
        prop_assert_eq!(got, oracle(&t, &p, now));
        if let Some(i) = got {
            prop_assert!(t.entries[i].timeout.is_none_or(|h| now < h));
        }
        Ok(())
    })
}
