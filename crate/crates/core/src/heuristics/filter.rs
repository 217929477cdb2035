//! Admission rules that bound the load imbalance caused by migrations.

use crate::directory::MigrationIntent;
use crate::ids::LpId;

/// Integer band `[floor, cap]` of per-LP entity counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub floor: u32,
    pub cap: u32,
}

impl Band {
    pub fn symmetric(num_se: u64, num_lps: u32, tolerance: f64) -> Self {
        let fair = num_se as f64 / num_lps as f64;
        Self {
            floor: ((1.0 - tolerance) * fair - 1e-9).ceil().max(0.0) as u32,
            cap: ((1.0 + tolerance) * fair + 1e-9).floor() as u32,
        }
    }

    pub fn admits(&self, from: LpId, to: LpId, counts: &[u32]) -> bool {
        counts[to.index()] < self.cap && counts[from.index()] > self.floor
    }
}

/// Approves intents in SeId order against running counts.
pub fn symmetric_filter(intents: &[MigrationIntent], counts: &[u32], num_se: u64, tolerance: f64) -> Vec<MigrationIntent> {
    let band = Band::symmetric(num_se, counts.len() as u32, tolerance);
    let mut counts = counts.to_vec();
    let mut sorted = intents.to_vec();
    sorted.sort_by_key(|i| i.se);
    sorted
        .into_iter()
        .filter(|i| {
            let ok = band.admits(i.from, i.to, &counts);
            if ok {
                counts[i.from.index()] -= 1;
                counts[i.to.index()] += 1;
            }
            ok
        })
        .collect()
}

/// Pairwise rule for clustering moves when load balancing is asymmetric: the
/// move may not leave the target more than `2·tolerance·N/L` entities above the
/// source.
pub fn pairwise_admits(from: LpId, to: LpId, counts: &[u32], num_se: u64, tolerance: f64) -> bool {
    let slack = 2.0 * tolerance * num_se as f64 / counts.len() as f64;
    let after_to = counts[to.index()] as f64 + 1.0;
    let after_from = counts[from.index()] as f64 - 1.0;
    counts[from.index()] > 1 && after_to - after_from <= slack + 1e-9
}
