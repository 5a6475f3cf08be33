//! Flow entries, flow tables, and single-table packet matching.
//!
//! A [`FlowEntry`] carries the five parts of a switch rule: match fields, priority,
//! actions, counters, and an optional timeout. Match fields left unset are wildcards.

use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;
use core::str::FromStr;

use crate::{NodeId, PortId};

/// EtherType carried by every simulated packet (IPv4).
pub const ETH_TYPE_IPV4: u16 = 0x0800;

/// Largest VLAN identifier.
pub const MAX_VLAN: u16 = 4095;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowError {
    #[error("invalid IPv4 address `{0}`")]
    InvalidAddress(alloc::string::String),
    #[error("prefix mask length {0} exceeds 32")]
    MaskTooLong(u32),
    #[error("port {0} outside 1..=65535")]
    PortOutOfRange(i64),
    #[error("VLAN id {0} outside 0..=4095")]
    VlanOutOfRange(i64),
    #[error("invalid MAC address `{0}`")]
    InvalidMac(alloc::string::String),
    #[error("action list holds more than one {0} action")]
    RepeatedAction(&'static str),
    #[error("action list holds both Drop and Output")]
    DropWithOutput,
}

/// An IPv4 prefix in `address/mask-length` form.
///
/// The address is kept as written; host bits are ignored when matching.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix {
    addr: Ipv4Addr,
    len: u8,
}

impl Prefix {
    /// The prefix that contains every address.
    pub const ANY: Prefix = Prefix { addr: Ipv4Addr::UNSPECIFIED, len: 0 };

    pub fn new(addr: Ipv4Addr, len: u32) -> Result<Self, FlowError> {
        if len > 32 {
            return Err(FlowError::MaskTooLong(len));
        }
        Ok(Self { addr, len: len as u8 })
    }

    pub fn host(addr: Ipv4Addr) -> Self {
        Self { addr, len: 32 }
    }

    pub fn addr(&self) -> Ipv4Addr {
        self.addr
    }

    pub fn mask_len(&self) -> u8 {
        self.len
    }

    pub fn is_host(&self) -> bool {
        self.len == 32
    }

    fn mask(&self) -> u32 {
        if self.len == 0 {
            0
        } else {
            u32::MAX << (32 - u32::from(self.len))
        }
    }

    /// Same prefix with host bits cleared.
    pub fn network(&self) -> Prefix {
        Prefix { addr: Ipv4Addr::from(u32::from(self.addr) & self.mask()), len: self.len }
    }

    pub fn contains(&self, ip: Ipv4Addr) -> bool {
        (u32::from(ip) ^ u32::from(self.addr)) & self.mask() == 0
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Prefix {
    type Err = FlowError;

    /// Accepts `a.b.c.d` (a /32) or `a.b.c.d/n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = match s.split_once('/') {
            Some((addr, len)) => {
                let len: u32 =
                    len.parse().map_err(|_| FlowError::InvalidAddress(s.into()))?;
                (addr, len)
            }
            None => (s, 32),
        };
        let addr: Ipv4Addr = addr.parse().map_err(|_| FlowError::InvalidAddress(s.into()))?;
        Prefix::new(addr, len)
    }
}

/// A 48-bit Ethernet address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub [u8; 6]);

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MacAddr {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 6];
        let mut parts = s.split(':');
        for byte in out.iter_mut() {
            let part = parts.next().ok_or_else(|| FlowError::InvalidMac(s.into()))?;
            if part.len() != 2 {
                return Err(FlowError::InvalidMac(s.into()));
            }
            *byte = u8::from_str_radix(part, 16).map_err(|_| FlowError::InvalidMac(s.into()))?;
        }
        if parts.next().is_some() {
            return Err(FlowError::InvalidMac(s.into()));
        }
        Ok(MacAddr(out))
    }
}

/// Transport protocol slot of a match or intent. `Any` is the wildcard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Proto {
    Tcp,
    Udp,
    Icmp,
    #[default]
    Any,
}

impl Proto {
    pub fn as_str(&self) -> &'static str {
        match self {
            Proto::Tcp => "TCP",
            Proto::Udp => "UDP",
            Proto::Icmp => "ICMP",
            Proto::Any => "ANY",
        }
    }

    pub fn is_any(&self) -> bool {
        matches!(self, Proto::Any)
    }

    pub fn matches(&self, proto: IpProto) -> bool {
        match self {
            Proto::Any => true,
            Proto::Tcp => proto == IpProto::Tcp,
            Proto::Udp => proto == IpProto::Udp,
            Proto::Icmp => proto == IpProto::Icmp,
        }
    }
}

impl fmt::Display for Proto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Proto {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TCP" => Ok(Proto::Tcp),
            "UDP" => Ok(Proto::Udp),
            "ICMP" => Ok(Proto::Icmp),
            "ANY" => Ok(Proto::Any),
            _ => Err(()),
        }
    }
}

/// Concrete protocol of an in-flight packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IpProto {
    Tcp,
    Udp,
    Icmp,
}

impl From<IpProto> for Proto {
    fn from(p: IpProto) -> Self {
        match p {
            IpProto::Tcp => Proto::Tcp,
            IpProto::Udp => Proto::Udp,
            IpProto::Icmp => Proto::Icmp,
        }
    }
}

/// Checks a transport port read from a document.
pub fn check_port(port: i64) -> Result<u16, FlowError> {
    if (1..=65535).contains(&port) {
        Ok(port as u16)
    } else {
        Err(FlowError::PortOutOfRange(port))
    }
}

pub fn check_vlan(vlan: i64) -> Result<u16, FlowError> {
    if (0..=i64::from(MAX_VLAN)).contains(&vlan) {
        Ok(vlan as u16)
    } else {
        Err(FlowError::VlanOutOfRange(vlan))
    }
}

/// Match part of a flow entry. `None` (and [`Proto::Any`]) match every packet value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MatchFields {
    pub src_ip: Option<Prefix>,
    pub dst_ip: Option<Prefix>,
    pub proto: Proto,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    pub in_port: Option<PortId>,
    pub vlan_id: Option<u16>,
    pub src_mac: Option<MacAddr>,
    pub dst_mac: Option<MacAddr>,
    pub eth_type: Option<u16>,
}

impl MatchFields {
    pub fn matches(&self, p: &Packet) -> bool {
        self.src_ip.is_none_or(|m| m.contains(p.src_ip))
            && self.dst_ip.is_none_or(|m| m.contains(p.dst_ip))
            && self.proto.matches(p.proto)
            && self.src_port.is_none_or(|m| m == p.src_port)
            && self.dst_port.is_none_or(|m| m == p.dst_port)
            && self.in_port.is_none_or(|m| m == p.in_port)
            && self.vlan_id.is_none_or(|m| m == p.vlan_id)
            && self.src_mac.is_none_or(|m| m == p.src_mac)
            && self.dst_mac.is_none_or(|m| m == p.dst_mac)
            && self.eth_type.is_none_or(|m| m == ETH_TYPE_IPV4)
    }
}

/// One action of a flow entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Output(PortId),
    Drop,
    ToController,
    SetVlan(u16),
    SetDstMac(MacAddr),
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Output(_) => "Output",
            Action::Drop => "Drop",
            Action::ToController => "ToController",
            Action::SetVlan(_) => "SetVlan",
            Action::SetDstMac(_) => "SetDstMac",
        }
    }
}

/// Forwarding entries send traffic out of a port; everything else is functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum EntryClass {
    Forwarding,
    Functional,
}

/// A single switch rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlowEntry {
    pub match_fields: MatchFields,
    pub priority: u32,
    pub actions: Vec<Action>,
    pub counters: u64,
    /// Absolute expiry horizon in seconds; the entry is gone once `now >= timeout`.
    pub timeout: Option<u64>,
    /// Position in the source table; ties between equal priorities go to the smaller index.
    pub entry_index: usize,
}

impl FlowEntry {
    pub fn new(match_fields: MatchFields, priority: u32, actions: Vec<Action>) -> Self {
        Self { match_fields, priority, actions, counters: 0, timeout: None, entry_index: 0 }
    }

    /// Enforces the action-list rules: one Output at most, one Drop at most, never both.
    pub fn check_actions(actions: &[Action]) -> Result<(), FlowError> {
        let outputs = actions.iter().filter(|a| matches!(a, Action::Output(_))).count();
        let drops = actions.iter().filter(|a| matches!(a, Action::Drop)).count();
        if outputs > 1 {
            return Err(FlowError::RepeatedAction("Output"));
        }
        if drops > 1 {
            return Err(FlowError::RepeatedAction("Drop"));
        }
        if outputs == 1 && drops == 1 {
            return Err(FlowError::DropWithOutput);
        }
        Ok(())
    }

    pub fn output_port(&self) -> Option<PortId> {
        self.actions.iter().find_map(|a| match a {
            Action::Output(p) => Some(*p),
            _ => None,
        })
    }

    pub fn is_expired(&self, now: u64) -> bool {
        self.timeout.is_some_and(|t| now >= t)
    }

    /// `Forwarding` iff the action list contains an Output.
    pub fn class(&self) -> EntryClass {
        classify_entry(self)
    }

    /// True if `self` should win over `other` for a packet both match.
    pub fn outranks(&self, other: &FlowEntry) -> bool {
        (self.priority, core::cmp::Reverse(self.entry_index))
            > (other.priority, core::cmp::Reverse(other.entry_index))
    }
}

pub fn classify_entry(e: &FlowEntry) -> EntryClass {
    if e.output_port().is_some() {
        EntryClass::Forwarding
    } else {
        EntryClass::Functional
    }
}

/// The rules installed on one switch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowTable {
    pub switch_id: NodeId,
    pub entries: Vec<FlowEntry>,
}

impl FlowTable {
    /// Builds a table and assigns `entry_index` by position.
    pub fn new(switch_id: NodeId, entries: Vec<FlowEntry>) -> Self {
        let mut table = Self { switch_id, entries };
        table.reindex();
        table
    }

    pub fn reindex(&mut self) {
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.entry_index = i;
        }
    }
}

/// A fully concrete packet header, as seen by a switch.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Packet {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub proto: IpProto,
    pub src_port: u16,
    pub dst_port: u16,
    pub in_port: PortId,
    pub vlan_id: u16,
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
}

/// Highest-priority live entry among `entries` matching `p`.
pub fn best_match<'a, I>(entries: I, p: &Packet, now: u64) -> Option<&'a FlowEntry>
where
    I: IntoIterator<Item = &'a FlowEntry>,
{
    let mut best: Option<&FlowEntry> = None;
    for e in entries {
        if e.is_expired(now) || !e.match_fields.matches(p) {
            continue;
        }
        if best.is_none_or(|b| e.outranks(b)) {
            best = Some(e);
        }
    }
    best
}

/// The entry a switch applies to `p` at time `now`, if any.
pub fn match_packet<'a>(t: &'a FlowTable, p: &Packet, now: u64) -> Option<&'a FlowEntry> {
    best_match(&t.entries, p, now)
}

#[cfg(feature = "serde")]
mod ser {
    use super::*;
    use serde::ser::{SerializeMap, SerializeStruct};
    use serde::{Serialize, Serializer};

    impl Serialize for Prefix {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(self)
        }
    }

    impl Serialize for MacAddr {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            s.collect_str(self)
        }
    }

    impl Serialize for Proto {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_str(self.as_str())
        }
    }

    impl Serialize for MatchFields {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut m = s.serialize_map(None)?;
            if let Some(v) = &self.src_ip {
                m.serialize_entry("src_ip", v)?;
            }
            if let Some(v) = &self.dst_ip {
                m.serialize_entry("dst_ip", v)?;
            }
            if !self.proto.is_any() {
                m.serialize_entry("proto", &self.proto)?;
            }
            if let Some(v) = &self.src_port {
                m.serialize_entry("src_port", v)?;
            }
            if let Some(v) = &self.dst_port {
                m.serialize_entry("dst_port", v)?;
            }
            if let Some(v) = &self.in_port {
                m.serialize_entry("in_port", v)?;
            }
            if let Some(v) = &self.vlan_id {
                m.serialize_entry("vlan_id", v)?;
            }
            if let Some(v) = &self.src_mac {
                m.serialize_entry("src_mac", v)?;
            }
            if let Some(v) = &self.dst_mac {
                m.serialize_entry("dst_mac", v)?;
            }
            if let Some(v) = &self.eth_type {
                m.serialize_entry("eth_type", v)?;
            }
            m.end()
        }
    }

    impl Serialize for Action {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut m = s.serialize_map(None)?;
            m.serialize_entry("kind", self.kind())?;
            match self {
                Action::Output(p) => m.serialize_entry("arg", p)?,
                Action::SetVlan(v) => m.serialize_entry("arg", v)?,
                Action::SetDstMac(mac) => m.serialize_entry("arg", mac)?,
                Action::Drop | Action::ToController => {}
            }
            m.end()
        }
    }

    impl Serialize for FlowEntry {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut st = s.serialize_struct("FlowEntry", 5)?;
            st.serialize_field("match", &self.match_fields)?;
            st.serialize_field("priority", &self.priority)?;
            st.serialize_field("actions", &self.actions)?;
            st.serialize_field("counters", &self.counters)?;
            st.serialize_field("timeout", &self.timeout)?;
            st.end()
        }
    }

    impl Serialize for FlowTable {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut st = s.serialize_struct("FlowTable", 2)?;
            st.serialize_field("switch_id", &self.switch_id)?;
            st.serialize_field("entries", &self.entries)?;
            st.end()
        }
    }

    impl Serialize for IpProto {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            Proto::from(*self).serialize(s)
        }
    }
}
