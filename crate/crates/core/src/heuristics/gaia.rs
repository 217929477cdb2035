//! Communication clustering: move an entity to the LP that hosts most of its
//! interaction partners.

use crate::directory::{MigrationIntent, MigrationReason};
use crate::ids::{LpId, SeId, Timestep};

use super::config::HeuristicConfig;
use super::stats::SeCommStats;

/// Where an entity's windowed interactions went.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowProfile {
    pub totals: Vec<u64>,
    pub sum: u64,
}

impl WindowProfile {
    pub fn of(stats: &SeCommStats, now: Timestep, cfg: &HeuristicConfig, num_lps: usize) -> Self {
        let totals = stats.totals(now, cfg.window, num_lps);
        let sum = totals.iter().sum();
        Self { totals, sum }
    }

    pub fn fraction(&self, lp: LpId) -> f64 {
        if self.sum == 0 {
            0.0
        } else {
            self.totals[lp.index()] as f64 / self.sum as f64
        }
    }
}

/// Clustering candidate for one entity, if any: the external LP with the
/// largest share (lowest id on ties), provided it beats both the threshold
/// and the local share, the window holds enough traffic and the entity is
/// out of cooldown.
pub fn clustering_target(
    se: SeId,
    stats: &SeCommStats,
    local: LpId,
    num_lps: usize,
    cfg: &HeuristicConfig,
    step: Timestep,
) -> Option<MigrationIntent> {
    if stats.in_cooldown(step, cfg.cooldown) {
        return None;
    }
    let profile = WindowProfile::of(stats, step, cfg, num_lps);
    if profile.sum == 0 || profile.sum < cfg.migration_factor {
        return None;
    }
    let (best, best_count) = profile
        .totals
        .iter()
        .enumerate()
        .filter(|&(lp, _)| lp != local.index())
        .fold((None, 0u64), |(b, bc), (lp, &c)| if c > bc { (Some(lp), c) } else { (b, bc) });
    let best = LpId(best? as u32);
    let frac = best_count as f64 / profile.sum as f64;
    if frac > cfg.external_threshold && frac > profile.fraction(local) {
        Some(MigrationIntent { se, from: local, to: best, decided_at: step, reason: MigrationReason::Clustering })
    } else {
        None
    }
}

/// Clustering intents for all local entities, in SeId order.
pub fn gaia_evaluate<'a, I>(entities: I, local: LpId, num_lps: usize, cfg: &HeuristicConfig, step: Timestep) -> Vec<MigrationIntent>
where
    I: IntoIterator<Item = (SeId, &'a SeCommStats)>,
{
    let mut out: Vec<MigrationIntent> = entities
        .into_iter()
        .filter_map(|(se, st)| clustering_target(se, st, local, num_lps, cfg, step))
        .collect();
    out.sort_by_key(|i| i.se);
    out
}
