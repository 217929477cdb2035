//! Per-entity sliding window of interaction counts by counterpart LP.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ids::{LpId, Timestep};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bucket {
    step: Timestep,
    counts: Vec<(LpId, u32)>,
}

/// Travels with the entity when it migrates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeCommStats {
    window: VecDeque<Bucket>,
    last_migrated: Option<Timestep>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed statistics record")]
pub struct StatsDecodeError;

impl SeCommStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one interaction with an entity hosted on `counterpart` during `step`,
    /// evicting buckets that fall out of the `window`-step horizon.
    pub fn record(&mut self, counterpart: LpId, step: Timestep, window: u64) {
        self.evict(step, window);
        let bucket = match self.window.back_mut() {
            Some(b) if b.step == step => b,
            _ => {
                self.window.push_back(Bucket { step, counts: Vec::new() });
                self.window.back_mut().unwrap()
            }
        };
        match bucket.counts.iter_mut().find(|(lp, _)| *lp == counterpart) {
            Some((_, c)) => *c += 1,
            None => bucket.counts.push((counterpart, 1)),
        }
    }

    /// Drops buckets at or before `now - window`.
    pub fn evict(&mut self, now: Timestep, window: u64) {
        while let Some(front) = self.window.front() {
            if front.step.0 + window <= now.0 {
                self.window.pop_front();
            } else {
                break;
            }
        }
    }

    /// Window totals per LP, as of `now`.
    pub fn totals(&self, now: Timestep, window: u64, num_lps: usize) -> Vec<u64> {
        let mut out = vec![0u64; num_lps];
        for b in &self.window {
            if b.step.0 + window > now.0 && b.step <= now {
                for &(lp, c) in &b.counts {
                    if lp.index() < num_lps {
                        out[lp.index()] += c as u64;
                    }
                }
            }
        }
        out
    }

    pub fn bucket_count(&self) -> usize {
        self.window.len()
    }

    pub fn last_migrated(&self) -> Option<Timestep> {
        self.last_migrated
    }

    pub fn mark_migrated(&mut self, at: Timestep) {
        self.last_migrated = Some(at);
    }

    /// Whether the entity moved less than `cooldown` steps before `now`.
    pub fn in_cooldown(&self, now: Timestep, cooldown: u64) -> bool {
        matches!(self.last_migrated, Some(t) if now.0 < t.0 + cooldown)
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.last_migrated.map_or(u64::MAX, |t| t.0).to_be_bytes());
        out.extend_from_slice(&(self.window.len() as u16).to_be_bytes());
        for b in &self.window {
            out.extend_from_slice(&b.step.0.to_be_bytes());
            out.extend_from_slice(&(b.counts.len() as u16).to_be_bytes());
            for &(lp, c) in &b.counts {
                out.extend_from_slice(&lp.0.to_be_bytes());
                out.extend_from_slice(&c.to_be_bytes());
            }
        }
    }

    /// Decodes from the front of `buf`, returning the rest.
    pub fn decode(mut buf: &[u8]) -> Result<(Self, &[u8]), StatsDecodeError> {
        fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8], StatsDecodeError> {
            if buf.len() < n {
                return Err(StatsDecodeError);
            }
            let (h, t) = buf.split_at(n);
            *buf = t;
            Ok(h)
        }
        let u64_of = |b: &[u8]| u64::from_be_bytes(b.try_into().unwrap());
        let u32_of = |b: &[u8]| u32::from_be_bytes(b.try_into().unwrap());
        let u16_of = |b: &[u8]| u16::from_be_bytes(b.try_into().unwrap());

        let lm = u64_of(take(&mut buf, 8)?);
        let n = u16_of(take(&mut buf, 2)?);
        let mut window = VecDeque::with_capacity(n as usize);
        for _ in 0..n {
            let step = Timestep(u64_of(take(&mut buf, 8)?));
            let k = u16_of(take(&mut buf, 2)?);
            let mut counts = Vec::with_capacity(k as usize);
            for _ in 0..k {
                let lp = LpId(u32_of(take(&mut buf, 4)?));
                counts.push((lp, u32_of(take(&mut buf, 4)?)));
            }
            window.push_back(Bucket { step, counts });
        }
        let last_migrated = (lm != u64::MAX).then_some(Timestep(lm));
        Ok((Self { window, last_migrated }, buf))
    }
}
