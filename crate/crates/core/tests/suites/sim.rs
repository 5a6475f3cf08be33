use proptest::prelude::*;
use safla_core::assurance::{NetworkHandle, NoClock};
use safla_core::sim::{intent_satisfied, run_scenario, survival_rate, FaultKind, IntentSpec, ScenarioSpec, TopologySpec};

pub fn spec(seed: u64, hijack: f64, completeness: f64) -> ScenarioSpec {
    let mut s = ScenarioSpec::new("det", TopologySpec::Mesh { rows: 5, cols: 6 }, IntentSpec::Count(8), seed)
        .with_fault(FaultKind::Hijack { intensity: hijack }, 1)
        .with_fault(FaultKind::NodeFail { completeness }, 2);
    s.steps = 3;
    s
}

/// Two runs of one scenario produce identical logs, metrics, cycles, and tables.
pub fn deterministic(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 0.0..=100.0f64, 40.0..=100.0f64);
    super::run(source, cases, strategy, |(seed, hijack, completeness)| {
        let s = spec(seed, hijack, completeness);
        let a = run_scenario(&s, &NoClock).unwrap();
        let b = run_scenario(&s, &NoClock).unwrap();
        prop_assert_eq!(a.network.events(), b.network.events());
        prop_assert_eq!(&a.metrics, &b.metrics);
        prop_assert_eq!(format!("{:?}", a.cycles), format!("{:?}", b.cycles));
        prop_assert_eq!(a.network.export_flow_tables(), b.network.export_flow_tables());
        Ok(())
    })
}

/// The forwarding engine and a next-hop composition oracle agree on every intent.
pub fn forwarding_agrees(source: Option<&'static str>, cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), 0.0..=100.0f64, 40.0..=100.0f64, any::<bool>());
    super::run(source, cases, strategy, |(seed, hijack, completeness, remediate)| {
        let mut s = spec(seed, hijack, completeness);
        s.period = if remediate { 1 } else { 0 };
        let run = run_scenario(&s, &NoClock).unwrap();
        for net in [&run.network, &run.baseline] {
            let by_forwarding: Vec<bool> =
                run.intents.iter().map(|i| intent_satisfied(net, i)).collect();
            let by_next_hops: Vec<bool> =
                run.intents.iter().map(|i| crate::common::next_hop_delivers(net, i)).collect();
            prop_assert_eq!(&by_forwarding, &by_next_hops);
            let rate = by_next_hops.iter().filter(|b| **b).count() as f64 / run.intents.len() as f64;
            prop_assert_eq!(survival_rate(net, &run.intents), rate);
        }
        Ok(())
    })
}
