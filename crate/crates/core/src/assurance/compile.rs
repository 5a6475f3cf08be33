use alloc::vec::Vec;

use crate::extract::AddrKey;
use crate::flow::{Action, FlowEntry, Prefix};
use crate::intent::Intent;
use crate::nskg::{NodeKind, Nskg};
use crate::{IntentId, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    /// An endpoint is missing from the graph, is not a host, or has no usable IP.
    #[error("intent `{intent}` names unknown host `{host}`")]
    UnknownHost { intent: IntentId, host: NodeId },
}

/// A compiled intent: the switch path and one entry per switch along it.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Deployment {
    pub intent: IntentId,
    pub key: AddrKey,
    pub path: Vec<NodeId>,
    pub entries: Vec<(NodeId, FlowEntry)>,
}

/// The key an intent's compiled entries carry: exact host prefixes plus proto and port.
pub fn intent_key(i: &Intent, g: &Nskg) -> Result<AddrKey, CompileError> {
    let ip = |h: &NodeId| {
        g.node(h)
            .filter(|n| n.kind == NodeKind::Host)
            .and_then(|_| g.host_ip(h))
            .ok_or_else(|| CompileError::UnknownHost { intent: i.id.clone(), host: h.clone() })
    };
    Ok(AddrKey {
        src: Prefix::host(ip(&i.src_host)?),
        dst: Prefix::host(ip(&i.dst_host)?),
        proto: i.proto,
        dst_port: i.dst_port,
    })
}

/// Compiles an intent along the shortest live path between its access switches.
///
/// Returns `Ok(None)` when an endpoint has no live attachment or no path exists.
pub fn compile_intent(i: &Intent, g: &Nskg) -> Result<Option<Deployment>, CompileError> {
    let key = intent_key(i, g)?;
    let (Ok(a), Ok(b)) = (g.access_switch(&i.src_host), g.access_switch(&i.dst_host)) else {
        return Ok(None);
    };
    let Ok(Some(path)) = g.path_between(a, b) else {
        return Ok(None);
    };
    Ok(compile_along(i, key, path, g))
}

/// Builds the entries for `i` along a given switch path, or `None` if any hop is not live.
pub(crate) fn compile_along(
    i: &Intent,
    key: AddrKey,
    path: Vec<NodeId>,
    g: &Nskg,
) -> Option<Deployment> {
    let (_, host_port) = g.attachment(&i.dst_host).ok()?;
    let mut entries = Vec::with_capacity(path.len());
    for (n, sw) in path.iter().enumerate() {
        let out = match path.get(n + 1) {
            Some(next) => g.port_toward(sw, next)?,
            None => {
                if g.access_switch(&i.dst_host).ok()? != sw {
                    return None;
                }
                host_port
            }
        };
        let e = FlowEntry::new(key.to_match(), i.priority_class, alloc::vec![Action::Output(out)]);
        entries.push((sw.clone(), e));
    }
    Some(Deployment { intent: i.id.clone(), key, path, entries })
}
