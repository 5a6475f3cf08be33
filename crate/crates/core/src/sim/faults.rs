use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimError, SimEvent, SimNetwork};
use crate::assurance::{intent_key, NetworkHandle};
use crate::extract::AddrKey;
use crate::flow::{Action, FlowEntry};
use crate::intent::{Intent, IntentRepository};
use crate::nskg::{EventKind, StateEvent};
use crate::NodeId;

/// Absorbs float noise such as `100 * 3 / 9 * 9 / 100` landing just above 3.
const EPS: f64 = 1e-9;

fn check_percent(p: f64) -> Result<f64, SimError> {
    if (0.0..=100.0).contains(&p) {
        Ok(p)
    } else {
        Err(SimError::InvalidPercent(p))
    }
}

fn ceil_count(x: f64) -> usize {
    let x = x - EPS;
    if x <= 0.0 {
        return 0;
    }
    let t = x as usize;
    if (t as f64) < x { t + 1 } else { t }
}

fn floor_count(x: f64) -> usize {
    let x = x + EPS;
    if x <= 0.0 { 0 } else { x as usize }
}

/// `k` distinct indices below `n` by partial Fisher-Yates, in draw order.
///
/// Draws are 32-bit so results do not depend on the platform's pointer width.
pub fn sample_indices<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let n = u32::try_from(n).expect("population fits in u32");
    let k = (k as u32).min(n);
    let mut idx: Vec<u32> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i as usize, j as usize);
    }
    idx.truncate(k as usize);
    idx.into_iter().map(|i| i as usize).collect()
}

/// Diverts a seeded sample of intents to the network's hijack host.
///
/// `⌈intensity% · |I|⌉` victims are drawn without replacement. For each one, entries that
/// copy the victim's match are installed along the shortest path from the victim's
/// ingress switch to the hijack host, one priority above anything already installed for
/// that key. Victims with no live path to the hijack host are skipped. Returns the
/// injected entries.
pub fn inject_hijack(
    n: &mut SimNetwork,
    intents: &IntentRepository,
    intensity: f64,
    seed: u64,
) -> Result<Vec<(NodeId, FlowEntry)>, SimError> {
    let intensity = check_percent(intensity)?;
    let count = ceil_count(intensity * intents.len() as f64 / 100.0);
    if count == 0 {
        return Ok(Vec::new());
    }
    let host = n.hijack_host().cloned().ok_or(SimError::NoHijackHost)?;
    let all: Vec<&Intent> = intents.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut victims: Vec<&Intent> = sample_indices(&mut rng, all.len(), count).into_iter().map(|i| all[i]).collect();
    victims.sort_by(|a, b| a.id.cmp(&b.id));

    let mut injected = Vec::new();
    for v in victims {
        let g = n.nskg_arc();
        let key = intent_key(v, &g)?;
        let Ok(ingress) = g.access_switch(&v.src_host) else { continue };
        let Ok((target, host_port)) = g.attachment(&host) else { continue };
        let Some(path) = g.path_between(ingress, target)? else { continue };
        let top = n
            .tables
            .values()
            .flatten()
            .filter(|s| s.key == Some(key) && s.entry.output_port().is_some())
            .map(|s| s.entry.priority)
            .max()
            .unwrap_or(v.priority_class)
            .max(v.priority_class);
        let priority = top + 1;
        for (k, sw) in path.iter().enumerate() {
            let out = match path.get(k + 1) {
                Some(next) => g.port_toward(sw, next).expect("path hops are linked"),
                None => host_port,
            };
            let e = FlowEntry::new(key.to_match(), priority, vec![Action::Output(out)]);
            n.install(sw, e.clone())?;
            injected.push((sw.clone(), e));
        }
        let dominated = n
            .entries(ingress)
            .filter(|e| AddrKey::of(&e.match_fields) == key && e.priority != priority)
            .all(|e| e.priority < priority);
        assert!(dominated, "hijack entry must outrank the victim at {ingress}");
        n.log.push(SimEvent::Hijack { clock: n.clock, victim: v.id.clone(), path, priority });
    }
    Ok(injected)
}

/// Marks a seeded sample of switches Down.
///
/// `⌊(100 − completeness)% · |switches|⌋` switches are drawn from those that are Up and
/// are not the access switch of any intent endpoint; the count is capped by how many
/// such switches exist. Returns the failed switches in id order.
pub fn fail_nodes(
    n: &mut SimNetwork,
    intents: &IntentRepository,
    completeness: f64,
    seed: u64,
) -> Result<Vec<NodeId>, SimError> {
    let completeness = check_percent(completeness)?;
    let g = n.nskg_arc();
    let count = floor_count((100.0 - completeness) * g.switch_count() as f64 / 100.0);
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut access = BTreeSet::new();
    for i in intents.iter() {
        for h in [&i.src_host, &i.dst_host] {
            if let Ok(sw) = g.access_switch(h) {
                access.insert(sw.clone());
            }
        }
    }
    let eligible: Vec<&NodeId> =
        g.switches().filter(|s| s.is_up() && !access.contains(&s.id)).map(|s| &s.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut down: Vec<NodeId> =
        sample_indices(&mut rng, eligible.len(), count).into_iter().map(|i| eligible[i].clone()).collect();
    down.sort();
    for sw in &down {
        n.apply_event(&StateEvent::node(EventKind::NodeDown, sw))?;
    }
    Ok(down)
}
