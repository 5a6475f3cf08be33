use std::collections::BTreeSet;

use proptest::prelude::*;
use safla_core::assurance::{
    apply_plan, assurance_cycle, intent_key, plan_remediation, AssuranceEngine, NetworkHandle, NoClock,
    RemediationPlan,
};
use safla_core::extract::{extract, AddrKey};
use safla_core::intent::IntentRepository;
use safla_core::sim::{
    build_scenario, fail_nodes, inject_hijack, intent_satisfied, FaultKind, IntentSpec, ScenarioSpec, SimNetwork,
    TopologySpec,
};
use safla_core::IntentId;

#[derive(Clone, Debug)]
pub enum Fault {
    Hijack(f64),
    Fail(f64),
}

pub fn fault() -> impl Strategy<Value = Fault> {
    prop_oneof![(0.0..=100.0f64).prop_map(Fault::Hijack), (30.0..=100.0f64).prop_map(Fault::Fail)]
}

pub fn deployed(seed: u64, rows: u32, cols: u32, n: usize) -> (SimNetwork, IntentRepository) {
    let spec = ScenarioSpec::new("props", TopologySpec::Mesh { rows, cols }, IntentSpec::Count(n), seed)
        .with_fault(FaultKind::Hijack { intensity: 0.0 }, 0);
    build_scenario(&spec).unwrap()
}

pub fn inject(net: &mut SimNetwork, repo: &IntentRepository, seed: u64, faults: &[Fault]) {
    for (k, f) in faults.iter().enumerate() {
        let s = seed.wrapping_add(k as u64);
        match *f {
            Fault::Hijack(p) => drop(inject_hijack(net, repo, p, s).unwrap()),
            Fault::Fail(c) => drop(fail_nodes(net, repo, c, s).unwrap()),
        }
    }
}

pub fn faulted(seed: u64, rows: u32, cols: u32, n: usize, faults: &[Fault]) -> (SimNetwork, IntentRepository) {
    let (mut net, repo) = deployed(seed, rows, cols, n);
    inject(&mut net, &repo, seed, faults);
    (net, repo)
}

pub fn satisfied(net: &SimNetwork, repo: &IntentRepository) -> BTreeSet<IntentId> {
    repo.iter().filter(|i| intent_satisfied(net, i)).map(|i| i.id.clone()).collect()
}

/// Purge safety, full and incremental agreement, convergence, monotone non-harm, and idempotence
/// of one cycle over a faulted network.
pub fn cycle_laws(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 2u32..6, 2u32..6, 1usize..10, prop::collection::vec(fault(), 0..4));
    super::run(source, cases, strategy, |(seed, rows, cols, n, faults)| {
        let (net, repo) = faulted(seed, rows, cols, n, &faults);
        let g = net.nskg_arc();
        let before = satisfied(&net, &repo);

        // purge safety: no selector can hit a declared (key, priority class) pair
        let x = extract(&net.export_flow_tables(), &g);
        let rep = x.check_against(&repo);
        let plan = plan_remediation(&rep, &x, &repo, &g);
        let declared: BTreeSet<_> = repo
            .iter()
            .filter_map(|i| intent_key(i, &g).ok().map(|k| (k, i.priority_class)))
            .collect();
        for p in &plan.purges {
            for (k, prio) in &declared {
                prop_assert!(!(p.selector.key == *k && p.selector.priority.is_none_or(|s| s == *prio)));
            }
        }
        let mut purged_only = net.clone();
        let purges = RemediationPlan { purges: plan.purges.clone(), ..Default::default() };
        apply_plan(&mut purged_only, &purges).unwrap();
        for (k, _) in &declared {
            let kept = net.export_flow_tables().iter().flat_map(|t| t.entries.clone()).filter(|e| {
                AddrKey::of(&e.match_fields) == *k
                    && declared.contains(&(*k, e.priority))
            }).count();
            let still = purged_only.export_flow_tables().iter().flat_map(|t| t.entries.clone()).filter(|e| {
                AddrKey::of(&e.match_fields) == *k
                    && declared.contains(&(*k, e.priority))
            }).count();
            prop_assert_eq!(kept, still);
        }

        // full and incremental cycles agree
        let mut full = net.clone();
        let mut inc = net.clone();
        let mut engine = AssuranceEngine::new();
        engine.refresh(&inc, &g);
        let c_full = assurance_cycle(&mut full, &repo, &g, &NoClock).unwrap();
        let c_inc = engine.cycle(&mut inc, &repo, &g, &NoClock).unwrap();
        prop_assert_eq!(&c_full, &c_inc);
        prop_assert_eq!(full.export_flow_tables(), inc.export_flow_tables());
        let fresh = extract(&inc.export_flow_tables(), &g);
        prop_assert_eq!(fresh.tuple_set(), engine.extraction().tuple_set());
        prop_assert_eq!(
            fresh.graphs.values().map(|m| (m.key, m.path.clone(), m.valid)).collect::<Vec<_>>(),
            engine.extraction().graphs.values().map(|m| (m.key, m.path.clone(), m.valid)).collect::<Vec<_>>()
        );

        // convergence: what is left missing is exactly what no live path can carry
        let oracle_infeasible: BTreeSet<IntentId> =
            repo.iter().filter(|i| !crate::common::bfs_feasible(&g, i)).map(|i| i.id.clone()).collect();
        prop_assert!(c_full.post_check.extraneous.is_empty());
        prop_assert_eq!(c_full.post_check.missing.iter().cloned().collect::<BTreeSet<_>>(), oracle_infeasible.clone());
        let planned_infeasible: BTreeSet<_> = c_full.plan.infeasible.iter().map(|f| f.intent.clone()).collect();
        prop_assert!(planned_infeasible.is_subset(&oracle_infeasible));
        if c_full.plan.infeasible.is_empty() && c_full.applied {
            prop_assert!(c_full.post_check.consistent);
        }

        // monotone non-harm, and survivors are exactly the feasible intents
        let after = satisfied(&full, &repo);
        prop_assert!(before.is_subset(&after));
        let feasible: BTreeSet<_> =
            repo.iter().filter(|i| crate::common::bfs_feasible(&g, i)).map(|i| i.id.clone()).collect();
        prop_assert_eq!(&after, &feasible);

        // idempotence
        let again = assurance_cycle(&mut full, &repo, &g, &NoClock).unwrap();
        prop_assert!(!again.plan.has_actions());
        prop_assert!(!again.applied);
        prop_assert_eq!(&again.report, &c_full.post_check);
        let again_inc = engine.cycle(&mut inc, &repo, &g, &NoClock).unwrap();
        prop_assert_eq!(again, again_inc);
        Ok(())
    })
}

/// A warm engine matches a from-scratch cycle over rounds of faults.
pub fn warm_engine(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let rounds = prop::collection::vec(prop::collection::vec(fault(), 0..3), 1..4);
    let strategy = (any::<u64>(), 2u32..6, 2u32..6, 1usize..10, rounds);
    super::run(source, cases, strategy, |(seed, rows, cols, n, rounds)| {
        let (mut full, repo) = deployed(seed, rows, cols, n);
        let mut inc = full.clone();
        let mut engine = AssuranceEngine::new();
        let g = inc.nskg_arc();
        engine.cycle(&mut inc, &repo, &g, &NoClock).unwrap();
        for (r, faults) in rounds.iter().enumerate() {
            let s = seed.wrapping_add(100 * r as u64);
            inject(&mut full, &repo, s, faults);
            inject(&mut inc, &repo, s, faults);
            let g = full.nskg_arc();
            let c_full = assurance_cycle(&mut full, &repo, &g, &NoClock).unwrap();
            let c_inc = engine.cycle(&mut inc, &repo, &g, &NoClock).unwrap();
            prop_assert_eq!(&c_full, &c_inc);
            prop_assert_eq!(full.export_flow_tables(), inc.export_flow_tables());
        }
        // a different repository forces a fresh check
        let mut fewer = repo.clone();
        if let Some(first) = repo.iter().next() {
            fewer.remove(&first.id).unwrap();
        }
        let g = full.nskg_arc();
        let c_full = assurance_cycle(&mut full, &fewer, &g, &NoClock).unwrap();
        let c_inc = engine.cycle(&mut inc, &fewer, &g, &NoClock).unwrap();
        prop_assert_eq!(&c_full, &c_inc);
        Ok(())
    })
}
