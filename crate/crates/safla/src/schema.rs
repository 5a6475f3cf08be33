//! JSON documents: flow tables, topologies, state events, intent repositories, and
//! scenarios.
//!
//! Loading runs in two passes. Serde reads the document into plain records, so a missing
//! field, a wrong type, or an unknown field becomes [`LoadError::Schema`]. The records are
//! then checked and turned into core values, and a bad value (mask length 33, port 0)
//! becomes [`LoadError::Value`]. Both carry the JSON path of the offending field, written
//! as `[0].entries[2].match.dst_ip`.
//!
//! Writers emit the canonical form: pretty-printed, fixed field order, trailing newline.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use safla_core::flow::{check_port, check_vlan, Action, FlowEntry, FlowTable, MacAddr, MatchFields, Prefix, Proto};
use safla_core::intent::{Diagnostic, Intent, IntentError, IntentRepository, DEFAULT_PRIORITY_CLASS};
use safla_core::nskg::{
    AttrPayload, EventKind, EventTarget, LinkRecord, NodeKind, NodeRecord, Nskg, NskgError, PortRef, StateEvent,
    Status,
};
use safla_core::sim::{FaultKind, FaultSpec, IntentSpec, ScenarioSpec, TopologySpec};
use safla_core::{IntentId, NodeId, PortId};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value at {path}: {message}")]
    Value { path: String, message: String },
    #[error(transparent)]
    Topology(#[from] NskgError),
    #[error(transparent)]
    Intent(#[from] IntentError),
}

impl LoadError {
    /// JSON path of the offending field, for schema and value errors.
    pub fn path(&self) -> Option<&str> {
        match self {
            LoadError::Schema { path, .. } | LoadError::Value { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct JsonPath(String);

impl JsonPath {
    fn index(&self, i: usize) -> Self {
        JsonPath(format!("{}[{i}]", self.0))
    }

    fn field(&self, name: &str) -> Self {
        if self.0.is_empty() {
            JsonPath(name.to_string())
        } else {
            JsonPath(format!("{}.{name}", self.0))
        }
    }

    fn invalid(&self, message: impl fmt::Display) -> LoadError {
        LoadError::Value { path: self.to_string(), message: message.to_string() }
    }
}

impl fmt::Display for JsonPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str(".")
        } else {
            f.write_str(&self.0)
        }
    }
}

fn read<T: DeserializeOwned>(doc: &[u8]) -> Result<T, LoadError> {
    let mut de = serde_json::Deserializer::from_slice(doc);
    let value = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| LoadError::Schema { path: e.path().to_string(), message: e.inner().to_string() })?;
    de.end().map_err(|e| LoadError::Schema { path: ".".into(), message: e.to_string() })?;
    Ok(value)
}

fn write<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRecord {
    switch_id: String,
    entries: Vec<EntryRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    #[serde(rename = "match", default)]
    match_fields: MatchRecord,
    priority: u32,
    actions: Vec<ActionRecord>,
    #[serde(default)]
    counters: u64,
    #[serde(default)]
    timeout: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct MatchRecord {
    src_ip: Option<String>,
    dst_ip: Option<String>,
    proto: Option<String>,
    src_port: Option<i64>,
    dst_port: Option<i64>,
    in_port: Option<u32>,
    vlan_id: Option<i64>,
    src_mac: Option<String>,
    dst_mac: Option<String>,
    eth_type: Option<u16>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", content = "arg", deny_unknown_fields)]
enum ActionRecord {
    Output(u32),
    Drop,
    ToController,
    SetVlan(i64),
    SetDstMac(String),
}

fn prefix(s: &Option<String>, at: JsonPath) -> Result<Option<Prefix>, LoadError> {
    s.as_deref().map(|s| s.parse::<Prefix>().map_err(|e| at.invalid(e))).transpose()
}

fn mac(s: &Option<String>, at: JsonPath) -> Result<Option<MacAddr>, LoadError> {
    s.as_deref().map(|s| s.parse::<MacAddr>().map_err(|e| at.invalid(e))).transpose()
}

fn port(p: Option<i64>, at: JsonPath) -> Result<Option<u16>, LoadError> {
    p.map(|p| check_port(p).map_err(|e| at.invalid(e))).transpose()
}

fn proto(s: &str, at: JsonPath) -> Result<Proto, LoadError> {
    s.parse().map_err(|()| at.invalid(format!("unknown protocol `{s}`, expected TCP, UDP, ICMP, or ANY")))
}

impl MatchRecord {
    fn convert(self, at: &JsonPath) -> Result<MatchFields, LoadError> {
        Ok(MatchFields {
            src_ip: prefix(&self.src_ip, at.field("src_ip"))?,
            dst_ip: prefix(&self.dst_ip, at.field("dst_ip"))?,
            proto: match &self.proto {
                Some(p) => proto(p, at.field("proto"))?,
                None => Proto::Any,
            },
            src_port: port(self.src_port, at.field("src_port"))?,
            dst_port: port(self.dst_port, at.field("dst_port"))?,
            in_port: self.in_port.map(PortId),
            vlan_id: self.vlan_id.map(|v| check_vlan(v).map_err(|e| at.field("vlan_id").invalid(e))).transpose()?,
            src_mac: mac(&self.src_mac, at.field("src_mac"))?,
            dst_mac: mac(&self.dst_mac, at.field("dst_mac"))?,
            eth_type: self.eth_type,
        })
    }
}

impl ActionRecord {
    fn convert(self, at: JsonPath) -> Result<Action, LoadError> {
        Ok(match self {
            ActionRecord::Output(p) => Action::Output(PortId(p)),
            ActionRecord::Drop => Action::Drop,
            ActionRecord::ToController => Action::ToController,
            ActionRecord::SetVlan(v) => Action::SetVlan(check_vlan(v).map_err(|e| at.field("arg").invalid(e))?),
            ActionRecord::SetDstMac(m) => {
                Action::SetDstMac(m.parse().map_err(|e| at.field("arg").invalid(e))?)
            }
        })
    }
}

impl EntryRecord {
    fn convert(self, at: &JsonPath) -> Result<FlowEntry, LoadError> {
        let match_fields = self.match_fields.convert(&at.field("match"))?;
        let actions = self
            .actions
            .into_iter()
            .enumerate()
            .map(|(k, a)| a.convert(at.field("actions").index(k)))
            .collect::<Result<Vec<_>, _>>()?;
        FlowEntry::check_actions(&actions).map_err(|e| at.field("actions").invalid(e))?;
        Ok(FlowEntry {
            match_fields,
            priority: self.priority,
            actions,
            counters: self.counters,
            timeout: self.timeout,
            entry_index: 0,
        })
    }
}

/// Reads a flow-table document. Absent match keys are wildcards.
pub fn parse_flow_tables(doc: &[u8]) -> Result<Vec<FlowTable>, LoadError> {
    let records: Vec<TableRecord> = read(doc)?;
    let root = JsonPath::default();
    records
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let at = root.index(i);
            if t.switch_id.is_empty() {
                return Err(at.field("switch_id").invalid("switch id is empty"));
            }
            let entries = t
                .entries
                .into_iter()
                .enumerate()
                .map(|(j, e)| e.convert(&at.field("entries").index(j)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FlowTable::new(NodeId::new(&t.switch_id), entries))
        })
        .collect()
}

pub fn write_flow_tables(tables: &[FlowTable]) -> Vec<u8> {
    write(tables)
}

#[derive(Deserialize, Clone, Copy)]
enum KindRecord {
    #[serde(alias = "switch")]
    Switch,
    #[serde(alias = "host")]
    Host,
}

#[derive(Deserialize, Clone, Copy, Default)]
enum StatusRecord {
    #[default]
    #[serde(alias = "up")]
    Up,
    #[serde(alias = "down")]
    Down,
}

impl From<StatusRecord> for Status {
    fn from(s: StatusRecord) -> Self {
        match s {
            StatusRecord::Up => Status::Up,
            StatusRecord::Down => Status::Down,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRec {
    id: String,
    kind: KindRecord,
    #[serde(default)]
    attrs: BTreeMap<String, String>,
    #[serde(default)]
    status: StatusRecord,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PortRec {
    node: String,
    port: u32,
}

impl From<PortRec> for PortRef {
    fn from(p: PortRec) -> Self {
        PortRef::new(&p.node, p.port)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRec {
    a: PortRec,
    b: PortRec,
    #[serde(default)]
    status: StatusRecord,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyRecord {
    nodes: Vec<NodeRec>,
    links: Vec<LinkRec>,
}

impl TopologyRecord {
    fn convert(self) -> (Vec<NodeRecord>, Vec<LinkRecord>) {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| NodeRecord {
                id: NodeId::new(&n.id),
                kind: match n.kind {
                    KindRecord::Switch => NodeKind::Switch,
                    KindRecord::Host => NodeKind::Host,
                },
                attrs: n.attrs,
                status: n.status.into(),
            })
            .collect();
        let links = self
            .links
            .into_iter()
            .map(|l| LinkRecord { a: l.a.into(), b: l.b.into(), status: l.status.into() })
            .collect();
        (nodes, links)
    }
}

/// Reads a topology document into a revision-0 NSKG.
pub fn build_nskg(doc: &[u8]) -> Result<Nskg, LoadError> {
    let (nodes, links) = read::<TopologyRecord>(doc)?.convert();
    Ok(Nskg::new(nodes, links)?)
}

#[derive(Serialize)]
struct TopologyOut<'a> {
    nodes: &'a [NodeRecord],
    links: &'a [LinkRecord],
}

pub fn write_topology(g: &Nskg) -> Vec<u8> {
    write(&TopologyOut { nodes: g.nodes(), links: g.links() })
}

#[derive(Deserialize, Clone, Copy)]
enum EventKindRecord {
    NodeUp,
    NodeDown,
    LinkUp,
    LinkDown,
    AttrSet,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeTarget {
    node: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkTarget {
    a: PortRec,
    b: PortRec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TargetRecord {
    Node(NodeTarget),
    Link(LinkTarget),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadRecord {
    key: String,
    value: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    kind: EventKindRecord,
    target: TargetRecord,
    #[serde(default)]
    payload: Option<PayloadRecord>,
}

/// Reads an event stream: an array of state events.
pub fn parse_events(doc: &[u8]) -> Result<Vec<StateEvent>, LoadError> {
    let records: Vec<EventRecord> = read(doc)?;
    Ok(records
        .into_iter()
        .map(|e| StateEvent {
            kind: match e.kind {
                EventKindRecord::NodeUp => EventKind::NodeUp,
                EventKindRecord::NodeDown => EventKind::NodeDown,
                EventKindRecord::LinkUp => EventKind::LinkUp,
                EventKindRecord::LinkDown => EventKind::LinkDown,
                EventKindRecord::AttrSet => EventKind::AttrSet,
            },
            target: match e.target {
                TargetRecord::Node(n) => EventTarget::Node { node: NodeId::new(&n.node) },
                TargetRecord::Link(l) => EventTarget::Link { a: l.a.into(), b: l.b.into() },
            },
            payload: e.payload.map(|p| AttrPayload { key: p.key, value: p.value }),
        })
        .collect())
}

pub fn write_events(events: &[StateEvent]) -> Vec<u8> {
    write(events)
}

fn any() -> String {
    "ANY".into()
}

fn default_priority() -> u32 {
    DEFAULT_PRIORITY_CLASS
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntentRecord {
    id: String,
    src_host: String,
    dst_host: String,
    #[serde(default = "any")]
    proto: String,
    #[serde(default)]
    dst_port: Option<i64>,
    #[serde(default = "default_priority")]
    priority_class: u32,
}

impl IntentRecord {
    fn convert(self, at: &JsonPath) -> Result<Intent, LoadError> {
        if self.id.is_empty() {
            return Err(at.field("id").invalid("intent id is empty"));
        }
        Ok(Intent {
            id: IntentId::new(&self.id),
            src_host: NodeId::new(&self.src_host),
            dst_host: NodeId::new(&self.dst_host),
            proto: proto(&self.proto, at.field("proto"))?,
            dst_port: port(self.dst_port, at.field("dst_port"))?,
            priority_class: self.priority_class,
        })
    }
}

fn convert_intents(records: Vec<IntentRecord>, root: &JsonPath) -> Result<Vec<Intent>, LoadError> {
    records.into_iter().enumerate().map(|(i, r)| r.convert(&root.index(i))).collect()
}

/// Reads an intent repository. Intents that share an endpoint tuple load fine and are
/// reported in the diagnostics.
pub fn load_repository(doc: &[u8]) -> Result<(IntentRepository, Vec<Diagnostic>), LoadError> {
    let intents = convert_intents(read(doc)?, &JsonPath::default())?;
    Ok(IntentRepository::from_intents(intents)?)
}

/// Canonical repository document: intents sorted by id.
pub fn save_repository(r: &IntentRepository) -> Vec<u8> {
    write(&r.iter().collect::<Vec<_>>())
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TopologyChoice {
    Mesh { rows: u32, cols: u32 },
    Star { hosts: u32 },
    Custom(TopologyRecord),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IntentsChoice {
    Count(usize),
    List(Vec<IntentRecord>),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FaultRecord {
    Hijack { intensity: f64, at: u32 },
    NodeFail { completeness: f64, at: u32 },
}

fn one() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRecord {
    name: String,
    topology: TopologyChoice,
    intents: IntentsChoice,
    #[serde(default)]
    faults: Vec<FaultRecord>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    steps: Option<u32>,
    #[serde(default = "one")]
    period: u32,
    #[serde(default)]
    hijack_host: Option<String>,
}

/// Reads a scenario document.
///
/// `steps` defaults to the last fault step; `period` defaults to 1 and 0 turns the
/// assurance loop off.
pub fn parse_scenario(doc: &[u8]) -> Result<ScenarioSpec, LoadError> {
    let r: ScenarioRecord = read(doc)?;
    let root = JsonPath::default();
    let topology = match r.topology {
        TopologyChoice::Mesh { rows, cols } => TopologySpec::Mesh { rows, cols },
        TopologyChoice::Star { hosts } => TopologySpec::Star { hosts },
        TopologyChoice::Custom(t) => {
            let (nodes, links) = t.convert();
            TopologySpec::Custom { nodes, links }
        }
    };
    let intents = match r.intents {
        IntentsChoice::Count(n) => IntentSpec::Count(n),
        IntentsChoice::List(list) => IntentSpec::List(convert_intents(list, &root.field("intents"))?),
    };
    let mut spec = ScenarioSpec::new(&r.name, topology, intents, r.seed);
    spec.period = r.period;
    spec.hijack_host = r.hijack_host.as_deref().map(NodeId::new);
    for (k, f) in r.faults.into_iter().enumerate() {
        let at = root.field("faults").index(k);
        let (kind, step, field, p) = match f {
            FaultRecord::Hijack { intensity, at } => (FaultKind::Hijack { intensity }, at, "intensity", intensity),
            FaultRecord::NodeFail { completeness, at } => {
                (FaultKind::NodeFail { completeness }, at, "completeness", completeness)
            }
        };
        if !(0.0..=100.0).contains(&p) {
            return Err(at.field(field).invalid(format!("{p} is outside [0, 100]")));
        }
        spec.faults.push(FaultSpec { kind, at: step });
    }
    let last = spec.faults.iter().map(|f| f.at).max().unwrap_or(0);
    spec.steps = match r.steps {
        Some(s) if s < last => return Err(root.field("steps").invalid(format!("{s} ends before the fault at {last}"))),
        Some(s) => s,
        None => last,
    };
    Ok(spec)
}
