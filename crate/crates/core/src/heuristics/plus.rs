//! Speed-aware asymmetric rebalancing.
//!
//! Slow LPs (step time above `(1+ε)·mean`) get an outbound allowance
//! `ceil(q · seCount · (stepTime − mean) / stepTime)`; fast LPs (below
//! `(1−ε)·mean`) stop exporting clustering moves and become targets,
//! weighted by `mean − stepTime`. This formula is an engineering choice.

use crate::directory::{MigrationIntent, MigrationReason};
use crate::ids::{LpId, SeId, Timestep};

use super::config::HeuristicConfig;
use super::gaia::WindowProfile;
use super::stats::SeCommStats;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadQuota {
    pub mean: f64,
    pub slow: Vec<bool>,
    pub fast: Vec<bool>,
    /// Outbound LOAD allowance per LP; zero unless slow.
    pub allowance: Vec<u32>,
    /// Target preference per LP; zero unless fast.
    pub target_weight: Vec<f64>,
}

impl LoadQuota {
    pub fn is_slow(&self, lp: LpId) -> bool {
        self.slow[lp.index()]
    }

    pub fn is_fast(&self, lp: LpId) -> bool {
        self.fast[lp.index()]
    }

    /// Splits `lp`'s allowance over the targets proportionally to their
    /// weights (largest remainder, lowest LpId first on ties).
    pub fn split_allowance(&self, lp: LpId) -> Vec<(LpId, u32)> {
        let total = self.allowance[lp.index()];
        let wsum: f64 = self.target_weight.iter().sum();
        if total == 0 || wsum <= 0.0 {
            return Vec::new();
        }
        let mut parts: Vec<(usize, u32, f64)> = self
            .target_weight
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| {
                let exact = total as f64 * w / wsum;
                (i, exact.floor() as u32, exact - exact.floor())
            })
            .collect();
        let assigned: u32 = parts.iter().map(|p| p.1).sum();
        let mut order: Vec<usize> = (0..parts.len()).collect();
        order.sort_by(|&a, &b| parts[b].2.total_cmp(&parts[a].2).then(parts[a].0.cmp(&parts[b].0)));
        for &k in order.iter().take(total.saturating_sub(assigned) as usize) {
            parts[k].1 += 1;
        }
        parts.into_iter().filter(|p| p.1 > 0).map(|(i, n, _)| (LpId(i as u32), n)).collect()
    }
}

pub fn gaia_plus_quota(step_times: &[f64], se_counts: &[u32], cfg: &HeuristicConfig) -> LoadQuota {
    let n = step_times.len();
    let mean = if n == 0 { 0.0 } else { step_times.iter().sum::<f64>() / n as f64 };
    let eps = cfg.slowdown_trigger;
    let mut q = LoadQuota {
        mean,
        slow: vec![false; n],
        fast: vec![false; n],
        allowance: vec![0; n],
        target_weight: vec![0.0; n],
    };
    if mean <= 0.0 {
        return q;
    }
    for (i, &t) in step_times.iter().enumerate() {
        if t > (1.0 + eps) * mean {
            q.slow[i] = true;
            q.allowance[i] = (cfg.quota_fraction * se_counts[i] as f64 * (t - mean) / t).ceil() as u32;
        } else if t < (1.0 - eps) * mean {
            q.fast[i] = true;
            q.target_weight[i] = mean - t;
        }
    }
    q
}

/// LOAD intents for the slow LP `local`: for each target share, the eligible
/// entities with the largest interaction fraction toward that target.
pub fn load_intents<'a, I>(
    entities: I,
    local: LpId,
    quota: &LoadQuota,
    cfg: &HeuristicConfig,
    step: Timestep,
) -> Vec<MigrationIntent>
where
    I: IntoIterator<Item = (SeId, &'a SeCommStats)>,
{
    let shares = quota.split_allowance(local);
    if shares.is_empty() {
        return Vec::new();
    }
    let num_lps = quota.slow.len();
    let mut pool: Vec<(SeId, WindowProfile)> = entities
        .into_iter()
        .filter(|(_, st)| !st.in_cooldown(step, cfg.cooldown))
        .map(|(se, st)| (se, WindowProfile::of(st, step, cfg, num_lps)))
        .collect();
    pool.sort_by_key(|(se, _)| *se);
    let mut taken = vec![false; pool.len()];
    let mut out = Vec::new();
    for (target, n) in shares {
        let mut ranked: Vec<usize> = (0..pool.len()).filter(|&k| !taken[k]).collect();
        ranked.sort_by(|&a, &b| {
            pool[b].1.fraction(target).total_cmp(&pool[a].1.fraction(target)).then(pool[a].0.cmp(&pool[b].0))
        });
        for k in ranked.into_iter().take(n as usize) {
            taken[k] = true;
            out.push(MigrationIntent { se: pool[k].0, from: local, to: target, decided_at: step, reason: MigrationReason::Load });
        }
    }
    out.sort_by_key(|i| i.se);
    out
}
