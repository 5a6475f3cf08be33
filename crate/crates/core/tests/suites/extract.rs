use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safla_core::assurance::NetworkHandle;
use safla_core::extract::{cluster_entries, extract, link_groups, AddrKey, Extraction};
use safla_core::flow::{EntryClass, FlowEntry, FlowTable};
use safla_core::sim::{build_scenario, fail_nodes, inject_hijack, FaultKind, IntentSpec, ScenarioSpec, TopologySpec};

fn shuffle<T>(v: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i as u32) as usize;
        v.swap(i, j);
    }
}

/// Tables of a faulted scenario: deployed intents, some hijacks, some failures.
fn faulted_tables(seed: u64, rows: u32, cols: u32, n: usize) -> (Vec<FlowTable>, safla_core::nskg::Nskg) {
    let spec = ScenarioSpec::new("laws", TopologySpec::Mesh { rows, cols }, IntentSpec::Count(n), seed)
        .with_fault(FaultKind::Hijack { intensity: 40.0 }, 0);
    let (mut net, repo) = build_scenario(&spec).unwrap();
    inject_hijack(&mut net, &repo, 40.0, seed).unwrap();
    fail_nodes(&mut net, &repo, 80.0, seed).unwrap();
    (net.export_flow_tables(), net.nskg().clone())
}

/// What an extraction says, minus entry positions.
fn summary(x: &Extraction) -> (BTreeSet<String>, Vec<String>, usize) {
    let g = x.tuples().map(|t| t.to_string()).collect();
    let graphs = x
        .graphs
        .values()
        .map(|m| format!("{:?} {:?} {:?} {:?} {:?}", m.key, m.path, m.src_host, m.dst_host, m.reject_reason))
        .collect();
    (g, graphs, x.functional.values().map(Vec::len).sum())
}

/// Splits every table into random chunks and shuffles entries and tables.
fn scramble(tables: &[FlowTable], rng: &mut ChaCha8Rng) -> Vec<FlowTable> {
    let mut out = Vec::new();
    for t in tables {
        let mut entries = t.entries.clone();
        shuffle(&mut entries, rng);
        while !entries.is_empty() {
            let take = rng.gen_range(1..=entries.len() as u32) as usize;
            let rest = entries.split_off(take);
            out.push(FlowTable::new(t.switch_id.clone(), entries));
            entries = rest;
        }
    }
    shuffle(&mut out, rng);
    out
}

/// Extraction ignores entry order, table order, and how a switch's entries are split into tables.
pub fn order_insensitive(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2u32..5, 2u32..5, 1usize..8, any::<u64>());
    super::run(source, cases, strategy, |(seed, rows, cols, n, shuffle_seed)| {
        let (tables, g) = faulted_tables(seed, rows, cols, n);
        let base = extract(&tables, &g);
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let scrambled = scramble(&tables, &mut rng);
        prop_assert_eq!(summary(&extract(&scrambled, &g)), summary(&base));
        Ok(())
    })
}

/// Clustering splits every table into functional entries and one group per key, and
/// linking keeps every group in exactly one chain.
pub fn partition(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2u32..5, 1u32..5, 1usize..8, prop::collection::vec((0u32..4, 0u32..3), 0..6));
    super::run(source, cases, strategy, |(seed, rows, cols, n, extra)| {
        let (mut tables, _) = faulted_tables(seed, rows, cols, n);
        // add some functional entries
        let count = tables.len();
        for (i, (t, kind)) in extra.into_iter().enumerate() {
            let t = &mut tables[t as usize % count];
            let actions = match kind {
                0 => vec![safla_core::flow::Action::Drop],
                1 => vec![safla_core::flow::Action::ToController],
                _ => vec![safla_core::flow::Action::SetVlan(i as u16)],
            };
            t.entries.push(FlowEntry::new(Default::default(), 7, actions));
            t.reindex();
        }
        let clusters = cluster_entries(&tables);
        for sc in &clusters {
            let t = tables.iter().find(|t| t.switch_id == sc.switch_id).unwrap();
            let fwd: Vec<&FlowEntry> = t.entries.iter().filter(|e| e.class() == EntryClass::Forwarding).collect();
            let grouped: usize = sc.groups.iter().map(|g| g.entries.len()).sum();
            prop_assert_eq!(grouped, fwd.len());
            prop_assert!(sc.groups.len() <= t.entries.len());
            prop_assert_eq!(sc.functional.len(), t.entries.len() - fwd.len());
            let keys: BTreeSet<AddrKey> = sc.groups.iter().map(|g| g.key).collect();
            prop_assert_eq!(keys.len(), sc.groups.len());
            for grp in &sc.groups {
                prop_assert!(grp.entries.iter().all(|e| AddrKey::of(&e.match_fields) == grp.key));
            }
            // same group iff same key
            for a in &fwd {
                for b in &fwd {
                    let ga = sc.groups.iter().position(|g| g.entries.contains(a));
                    let gb = sc.groups.iter().position(|g| g.entries.contains(b));
                    prop_assert_eq!(ga == gb, AddrKey::of(&a.match_fields) == AddrKey::of(&b.match_fields));
                }
            }
        }
        let groups: Vec<_> = clusters.into_iter().flat_map(|c| c.groups).collect();
        let total = groups.len();
        let chains = link_groups(groups);
        prop_assert_eq!(chains.iter().map(|c| c.groups.len()).sum::<usize>(), total);
        let mut per_key = BTreeMap::new();
        for c in &chains {
            prop_assert!(per_key.insert(c.key, ()).is_none());
            prop_assert!(c.groups.values().all(|g| g.key == c.key));
        }
        Ok(())
    })
}
