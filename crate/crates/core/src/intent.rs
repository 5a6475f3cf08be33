//! Declared intents and the repository that holds them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::extract::EndpointTuple;
use crate::flow::Proto;
use crate::{IntentId, NodeId};

/// Priority given to compiled entries when an intent does not say otherwise.
pub const DEFAULT_PRIORITY_CLASS: u32 = 100;

/// A reachability intent between two hosts, optionally scoped to a protocol and port.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Intent {
    pub id: IntentId,
    pub src_host: NodeId,
    pub dst_host: NodeId,
    pub proto: Proto,
    pub dst_port: Option<u16>,
    pub priority_class: u32,
}

impl Intent {
    pub fn new(id: &str, src: &str, dst: &str, proto: Proto, dst_port: Option<u16>) -> Self {
        Self {
            id: IntentId::new(id),
            src_host: NodeId::new(src),
            dst_host: NodeId::new(dst),
            proto,
            dst_port,
            priority_class: DEFAULT_PRIORITY_CLASS,
        }
    }
}

/// Projection of an intent onto its endpoint tuple.
pub fn to_tuple(i: &Intent) -> EndpointTuple {
    EndpointTuple {
        src_host: i.src_host.clone(),
        dst_host: i.dst_host.clone(),
        proto: i.proto,
        dst_port: i.dst_port,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntentError {
    #[error("duplicate intent id `{0}`")]
    DuplicateId(IntentId),
    #[error("intent `{0}` has the same source and destination host")]
    SelfLoop(IntentId),
    #[error("unknown intent id `{0}`")]
    UnknownId(alloc::string::String),
}

/// Non-fatal findings from loading a repository.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Diagnostic {
    /// Several intents project onto the same tuple, so no bijection with G exists.
    DuplicateSemantics { tuple: EndpointTuple, ids: Vec<IntentId> },
}

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// The set I of declared intents.
#[derive(Clone, Debug)]
pub struct IntentRepository {
    intents: BTreeMap<IntentId, Intent>,
    by_tuple: BTreeMap<EndpointTuple, Vec<IntentId>>,
    revision: u64,
    /// Process-unique content tag: copies share it, every mutation replaces it.
    stamp: u64,
}

impl Default for IntentRepository {
    fn default() -> Self {
        Self { intents: BTreeMap::new(), by_tuple: BTreeMap::new(), revision: 0, stamp: fresh_stamp() }
    }
}

impl PartialEq for IntentRepository {
    fn eq(&self, other: &Self) -> bool {
        self.revision == other.revision && self.intents == other.intents
    }
}

impl Eq for IntentRepository {}

impl IntentRepository {
    pub fn new() -> Self {
        Self::default()
    }

    /// Two repositories with the same stamp hold the same intents.
    pub(crate) fn stamp(&self) -> u64 {
        self.stamp
    }

    /// Builds a repository, rejecting duplicate ids and self-loops.
    pub fn from_intents<I>(intents: I) -> Result<(Self, Vec<Diagnostic>), IntentError>
    where
        I: IntoIterator<Item = Intent>,
    {
        let mut repo = Self::new();
        for i in intents {
            if repo.intents.contains_key(&i.id) {
                return Err(IntentError::DuplicateId(i.id));
            }
            repo.upsert(i)?;
        }
        repo.revision = 0;
        let diags = repo.diagnostics();
        Ok((repo, diags))
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Intent> {
        self.intents.get(id)
    }

    /// Intents sorted by id.
    pub fn iter(&self) -> impl Iterator<Item = &Intent> {
        self.intents.values()
    }

    /// Declared tuples with the intents that project onto them, sorted by tuple.
    pub fn by_tuple(&self) -> impl Iterator<Item = (&EndpointTuple, &[IntentId])> {
        self.by_tuple.iter().map(|(t, ids)| (t, ids.as_slice()))
    }

    pub fn ids_for(&self, t: &EndpointTuple) -> &[IntentId] {
        self.by_tuple.get(t).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Inserts or replaces an intent.
    pub fn upsert(&mut self, i: Intent) -> Result<(), IntentError> {
        if i.src_host == i.dst_host {
            return Err(IntentError::SelfLoop(i.id));
        }
        if let Some(old) = self.intents.remove(&i.id) {
            self.unindex(&old);
        }
        self.by_tuple.entry(to_tuple(&i)).or_default().push(i.id.clone());
        self.intents.insert(i.id.clone(), i);
        self.revision += 1;
        self.stamp = fresh_stamp();
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<Intent, IntentError> {
        let old = self.intents.remove(id).ok_or_else(|| IntentError::UnknownId(id.into()))?;
        self.unindex(&old);
        self.revision += 1;
        self.stamp = fresh_stamp();
        Ok(old)
    }

    fn unindex(&mut self, i: &Intent) {
        let t = to_tuple(i);
        if let Some(ids) = self.by_tuple.get_mut(&t) {
            ids.retain(|x| *x != i.id);
            if ids.is_empty() {
                self.by_tuple.remove(&t);
            }
        }
    }

    /// Tuples shared by more than one intent.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.by_tuple
            .iter()
            .filter(|(_, ids)| ids.len() > 1)
            .map(|(t, ids)| {
                let mut ids = ids.clone();
                ids.sort();
                Diagnostic::DuplicateSemantics { tuple: t.clone(), ids }
            })
            .collect()
    }
}
