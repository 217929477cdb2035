//! Adaptive placement policies.
//!
//! Decisions use only the entity's own interaction window, the replicated
//! directory and the metrics piggybacked on STEP_DONE frames.

pub mod config;
pub mod filter;
pub mod gaia;
pub mod plus;
pub mod speed;
pub mod stats;

pub use config::{HeuristicConfig, Mode};
pub use filter::{pairwise_admits, symmetric_filter, Band};
pub use gaia::{clustering_target, gaia_evaluate};
pub use plus::{gaia_plus_quota, load_intents, LoadQuota};
pub use speed::LpSpeedView;
pub use stats::SeCommStats;

use crate::directory::MigrationIntent;
use crate::ids::{LpId, SeId, Timestep};
use crate::transport::frame::MigrateAnnounceBody;

/// Result of one evaluation round on one LP.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    pub intents: Vec<MigrationIntent>,
    pub quota: Option<LoadQuota>,
}

#[derive(Debug, Clone)]
pub struct Policy {
    cfg: HeuristicConfig,
    num_se: u64,
    num_lps: u32,
}

impl Policy {
    pub fn new(cfg: HeuristicConfig, num_se: u64, num_lps: u32) -> Self {
        Self { cfg, num_se, num_lps }
    }

    pub fn config(&self) -> &HeuristicConfig {
        &self.cfg
    }

    pub fn is_evaluation_step(&self, step: Timestep) -> bool {
        self.cfg.mode != Mode::Static && step.0 > 0 && step.0.is_multiple_of(self.cfg.evaluation_interval)
    }

    /// Migration intents of `local` for this step. `entities` must list only
    /// resident entities that are not already leaving.
    pub fn evaluate(
        &self,
        step: Timestep,
        local: LpId,
        entities: &[(SeId, &SeCommStats)],
        projected_counts: &[u32],
        speed: &LpSpeedView,
    ) -> Evaluation {
        if !self.is_evaluation_step(step) || self.num_lps < 2 {
            return Evaluation::default();
        }
        let n = self.num_lps as usize;
        let clustering = gaia_evaluate(entities.iter().copied(), local, n, &self.cfg, step);
        match self.cfg.mode {
            Mode::Static => Evaluation::default(),
            Mode::Gaia => Evaluation {
                intents: symmetric_filter(&clustering, projected_counts, self.num_se, self.cfg.symmetric_tolerance),
                quota: None,
            },
            Mode::GaiaPlus => {
                if !speed.is_populated() {
                    return Evaluation::default();
                }
                let quota = gaia_plus_quota(&speed.step_times(), projected_counts, &self.cfg);
                let mut counts = projected_counts.to_vec();
                let mut intents = Vec::new();
                if !quota.is_fast(local) {
                    for i in clustering {
                        if quota.is_slow(i.to) {
                            continue;
                        }
                        // Moves off a slow LP or onto a fast one help both goals.
                        let relieves = quota.is_slow(i.from) || quota.is_fast(i.to);
                        if relieves || pairwise_admits(i.from, i.to, &counts, self.num_se, self.cfg.symmetric_tolerance) {
                            counts[i.from.index()] -= 1;
                            counts[i.to.index()] += 1;
                            intents.push(i);
                        }
                    }
                }
                if quota.is_slow(local) {
                    let chosen: Vec<SeId> = intents.iter().map(|i| i.se).collect();
                    let rest = entities.iter().copied().filter(|(se, _)| !chosen.contains(se));
                    let load = load_intents(rest, local, &quota, &self.cfg, step);
                    let keep = (counts[local.index()] as usize).saturating_sub(1);
                    intents.extend(load.into_iter().take(keep));
                }
                intents.sort_by_key(|i| i.se);
                Evaluation { intents, quota: Some(quota) }
            }
        }
    }

    /// Global admission of an announced move; identical on every LP.
    pub fn admit(&self, a: &MigrateAnnounceBody, counts: &[u32]) -> bool {
        match self.cfg.mode {
            Mode::Static => false,
            Mode::Gaia => Band::symmetric(self.num_se, self.num_lps, self.cfg.symmetric_tolerance).admits(a.from, a.to, counts),
            Mode::GaiaPlus => counts[a.from.index()] > 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn busy_stats(lp: u32, n: u32) -> SeCommStats {
        let mut s = SeCommStats::new();
        for _ in 0..n {
            s.record(LpId(lp), Timestep(8), 16);
        }
        s
    }

    #[test]
    fn static_mode_never_acts() {
        let p = Policy::new(HeuristicConfig::with_mode(Mode::Static), 30, 3);
        let s = busy_stats(1, 50);
        let e = p.evaluate(Timestep(8), LpId(0), &[(SeId(0), &s)], &[10, 10, 10], &LpSpeedView::new(3, 0.3, 0.5));
        assert!(e.intents.is_empty());
        assert!(!p.is_evaluation_step(Timestep(8)));
    }

    #[test]
    fn gaia_only_on_interval() {
        let p = Policy::new(HeuristicConfig::with_mode(Mode::Gaia), 30, 3);
        let s = busy_stats(1, 50);
        let v = LpSpeedView::new(3, 0.3, 0.5);
        assert_eq!(p.evaluate(Timestep(8), LpId(0), &[(SeId(0), &s)], &[10, 10, 10], &v).intents.len(), 1);
        assert!(p.evaluate(Timestep(9), LpId(0), &[(SeId(0), &s)], &[10, 10, 10], &v).intents.is_empty());
    }

    #[test]
    fn gaia_plus_slow_lp_sheds_and_fast_lp_holds() {
        let p = Policy::new(HeuristicConfig::with_mode(Mode::GaiaPlus), 30, 3);
        let mut v = LpSpeedView::new(3, 1.0, 0.5);
        v.observe(LpId(0), 100, 10, 0);
        v.observe(LpId(1), 100, 10, 0);
        v.observe(LpId(2), 400, 10, 0);
        let s = SeCommStats::new();
        let ents: Vec<(SeId, &SeCommStats)> = (0..10).map(|i| (SeId(i * 3 + 2), &s)).collect();
        let e = p.evaluate(Timestep(8), LpId(2), &ents, &[10, 10, 10], &v);
        assert!(!e.intents.is_empty());
        assert!(e.intents.iter().all(|i| i.reason == crate::directory::MigrationReason::Load));
        // fast LP exports no clustering moves even with strong external pull
        let pull = busy_stats(1, 50);
        let e = p.evaluate(Timestep(8), LpId(0), &[(SeId(0), &pull)], &[10, 10, 10], &v);
        assert!(e.intents.is_empty());
    }

    #[test]
    fn admission_by_mode() {
        let a = MigrateAnnounceBody { step: Timestep(1), se: SeId(0), from: LpId(0), to: LpId(1) };
        let gaia = Policy::new(HeuristicConfig::with_mode(Mode::Gaia), 12_000, 3);
        assert!(!gaia.admit(&a, &[4000, 4400, 3600]));
        assert!(gaia.admit(&a, &[4000, 4000, 4000]));
        let plus = Policy::new(HeuristicConfig::with_mode(Mode::GaiaPlus), 12_000, 3);
        assert!(plus.admit(&a, &[2, 9000, 2998]));
        assert!(!plus.admit(&a, &[1, 9000, 2999]));
    }
}
