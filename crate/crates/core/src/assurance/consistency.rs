use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::extract::{EndpointTuple, Extraction};
use crate::intent::IntentRepository;
use crate::IntentId;

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Matched {
    pub tuple: EndpointTuple,
    pub intent: IntentId,
}

/// Result of matching G against I.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConsistencyReport {
    /// One pair per matched tuple, ordered by tuple.
    pub matched: Vec<Matched>,
    /// In G but not declared, ordered by tuple.
    pub extraneous: Vec<EndpointTuple>,
    /// Declared but not extracted, ordered by id.
    pub missing: Vec<IntentId>,
    pub consistent: bool,
}

/// Exact-equality matching of extracted tuples against declared intents.
///
/// Wildcard slots only match wildcard slots. When several intents share a tuple (a
/// duplicate-semantics repository) the smallest id is matched and the rest are missing.
pub fn consistency_check(g: &BTreeSet<EndpointTuple>, intents: &IntentRepository) -> ConsistencyReport {
    check_sorted(g.iter(), intents)
}

impl Extraction {
    /// [`consistency_check`] against this extraction's G.
    pub fn check_against(&self, intents: &IntentRepository) -> ConsistencyReport {
        check_sorted(self.tuples(), intents)
    }
}

/// Merge join of two tuple-sorted sequences.
fn check_sorted<'a, G>(g: G, intents: &IntentRepository) -> ConsistencyReport
where
    G: Iterator<Item = &'a EndpointTuple>,
{
    let mut rep = ConsistencyReport::default();
    let mut declared = intents.by_tuple().peekable();
    let mut extracted = g.peekable();
    loop {
        match (extracted.peek(), declared.peek()) {
            (None, None) => break,
            (Some(_), None) => rep.extraneous.extend(extracted.by_ref().cloned()),
            (None, Some(_)) => {
                for (_, ids) in declared.by_ref() {
                    rep.missing.extend(ids.iter().cloned());
                }
            }
            (Some(&t), Some(&(d, ids))) => match t.cmp(d) {
                core::cmp::Ordering::Less => {
                    rep.extraneous.push(t.clone());
                    extracted.next();
                }
                core::cmp::Ordering::Greater => {
                    rep.missing.extend(ids.iter().cloned());
                    declared.next();
                }
                core::cmp::Ordering::Equal => {
                    let first = ids.iter().min().expect("indexed tuples have an id");
                    rep.matched.push(Matched { tuple: t.clone(), intent: first.clone() });
                    rep.missing.extend(ids.iter().filter(|i| *i != first).cloned());
                    extracted.next();
                    declared.next();
                }
            },
        }
    }
    rep.missing.sort();
    rep.consistent = rep.extraneous.is_empty() && rep.missing.is_empty();
    rep
}

/// Brings `rep` up to date after G changed only at `touched` tuples.
///
/// `rep` must be the report for the previous G against the same `intents`.
pub(crate) fn update_report<'a, T>(rep: &mut ConsistencyReport, x: &Extraction, intents: &IntentRepository, touched: T)
where
    T: IntoIterator<Item = &'a EndpointTuple>,
{
    for t in touched {
        if let Ok(k) = rep.matched.binary_search_by(|m| m.tuple.cmp(t)) {
            rep.matched.remove(k);
        }
        if let Ok(k) = rep.extraneous.binary_search(t) {
            rep.extraneous.remove(k);
        }
        let ids = intents.ids_for(t);
        for id in ids {
            if let Ok(k) = rep.missing.binary_search(id) {
                rep.missing.remove(k);
            }
        }
        let mut missing: Vec<&IntentId> = ids.iter().collect();
        if x.contains(t) {
            match ids.iter().min() {
                Some(first) => {
                    let k = rep.matched.binary_search_by(|m| m.tuple.cmp(t)).unwrap_err();
                    rep.matched.insert(k, Matched { tuple: t.clone(), intent: first.clone() });
                    missing.retain(|i| *i != first);
                }
                None => {
                    let k = rep.extraneous.binary_search(t).unwrap_err();
                    rep.extraneous.insert(k, t.clone());
                }
            }
        }
        for id in missing {
            let k = rep.missing.binary_search(id).unwrap_or_else(|k| k);
            rep.missing.insert(k, id.clone());
        }
    }
    rep.consistent = rep.extraneous.is_empty() && rep.missing.is_empty();
}
