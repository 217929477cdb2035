//! Per-LP execution speed as observed from one LP.

use crate::ids::LpId;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeedEntry {
    pub busy_latest: u64,
    pub se_count: u32,
    busy_ema: Option<f64>,
    lag_ema: Option<f64>,
}

impl SpeedEntry {
    pub fn busy_ema(&self) -> Option<f64> {
        self.busy_ema
    }

    pub fn lag_ema(&self) -> f64 {
        self.lag_ema.unwrap_or(0.0)
    }
}

/// Smoothed busy time of every LP plus the arrival lag of each peer's
/// STEP_DONE relative to this LP's own ready time.
///
/// A peer whose completion notice keeps arriving after we are ready reads as
/// slow, whether it is CPU-bound or behind a slow link. When the view knows
/// which LP owns it, lags are taken relative to the least-lagged peer: a
/// delay common to every one of our links is charged to us, not to them.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSpeedView {
    alpha: f64,
    lag_weight: f64,
    owner: Option<LpId>,
    entries: Vec<SpeedEntry>,
}

fn ema(prev: Option<f64>, sample: f64, alpha: f64) -> f64 {
    match prev {
        None => sample,
        Some(p) => alpha * sample + (1.0 - alpha) * p,
    }
}

impl LpSpeedView {
    pub fn new(num_lps: usize, alpha: f64, lag_weight: f64) -> Self {
        Self { alpha, lag_weight, owner: None, entries: vec![SpeedEntry::default(); num_lps] }
    }

    /// Marks `me` as the observing LP, enabling lag normalization.
    pub fn with_owner(mut self, me: LpId) -> Self {
        self.owner = Some(me);
        self
    }

    /// Smallest smoothed lag among peers of the owner.
    fn base_lag(&self, me: LpId) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != me.index())
            .map(|(_, e)| e.lag_ema())
            .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))))
            .unwrap_or(0.0)
    }

    /// Folds in one step's STEP_DONE data for `lp`.
    pub fn observe(&mut self, lp: LpId, busy_nanos: u64, se_count: u32, lag_nanos: u64) {
        let a = self.alpha;
        let e = &mut self.entries[lp.index()];
        e.busy_latest = busy_nanos;
        e.se_count = se_count;
        e.busy_ema = Some(ema(e.busy_ema, busy_nanos as f64, a));
        e.lag_ema = Some(ema(e.lag_ema, lag_nanos as f64, a));
    }

    pub fn is_populated(&self) -> bool {
        self.entries.iter().all(|e| e.busy_ema.is_some())
    }

    pub fn entry(&self, lp: LpId) -> &SpeedEntry {
        &self.entries[lp.index()]
    }

    /// Smoothed step time in nanoseconds: busy EMA plus weighted lag EMA.
    pub fn step_time(&self, lp: LpId) -> f64 {
        let e = &self.entries[lp.index()];
        let lag = match self.owner {
            None => e.lag_ema(),
            Some(me) if me == lp => self.base_lag(me),
            Some(me) => (e.lag_ema() - self.base_lag(me)).max(0.0),
        };
        e.busy_ema.unwrap_or(0.0) + self.lag_weight * lag
    }

    pub fn step_times(&self) -> Vec<f64> {
        (0..self.entries.len()).map(|i| self.step_time(LpId(i as u32))).collect()
    }

    pub fn se_counts(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.se_count).collect()
    }
}
