use alloc::vec::Vec;

use super::{survival_rate, SimNetwork};
use crate::assurance::{compile_along, Deployment, NetworkHandle};
use crate::intent::{Intent, IntentRepository};
use crate::nskg::Nskg;
use crate::NodeId;

/// Routes fixed when an intent is first deployed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackupRoute {
    pub primary: Vec<NodeId>,
    /// A node-disjoint alternative with its entries, when one existed at deploy time.
    pub backup: Option<Deployment>,
}

impl BackupRoute {
    pub(crate) fn precompute(i: &Intent, d: &Deployment, g: &Nskg) -> Self {
        let (first, last) = (&d.path[0], &d.path[d.path.len() - 1]);
        let backup = g
            .disjoint_path(first, last, &d.path)
            .ok()
            .flatten()
            .and_then(|p| compile_along(i, d.key, p, g));
        Self { primary: d.path.clone(), backup }
    }
}

/// Survival under a precomputed primary/backup strategy.
///
/// Intents whose primary path has a failed node or link switch to their backup when the
/// backup is fully live. Nothing is re-extracted and nothing is purged, so injected
/// entries stay in place. The network itself is left untouched.
pub fn baseline_primary_backup(n: &SimNetwork, intents: &IntentRepository) -> f64 {
    let mut b = n.fork();
    for i in intents.iter() {
        let Some(r) = n.routes().get(&i.id) else { continue };
        if n.nskg().path_is_up(&r.primary) {
            continue;
        }
        if let Some(d) = r.backup.as_ref().filter(|d| n.nskg().path_is_up(&d.path)) {
            for (sw, e) in &d.entries {
                b.install(sw, e.clone()).expect("backup entries target known switches");
            }
        }
    }
    survival_rate(&b, intents)
}
