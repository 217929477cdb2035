//! Per-step receive buffer and the completion test behind the barrier.

use crate::ids::{LpId, SeId, Timestep};
use crate::model::InboundEvent;
use crate::transport::frame::{MigrateAnnounceBody, MigrateDataBody, StepDoneBody};

use super::SyncError;

#[derive(Debug, Clone)]
pub struct StepInbox {
    pub step: Timestep,
    pub events: Vec<InboundEvent>,
    pub announcements: Vec<MigrateAnnounceBody>,
    pub migrate_data: Vec<(LpId, MigrateDataBody)>,
    done: Vec<Option<StepDoneBody>>,
    done_arrival: Vec<Option<u64>>,
    received: Vec<u32>,
}

impl StepInbox {
    pub fn new(step: Timestep, num_lps: usize) -> Self {
        Self {
            step,
            events: Vec::new(),
            announcements: Vec::new(),
            migrate_data: Vec::new(),
            done: vec![None; num_lps],
            done_arrival: vec![None; num_lps],
            received: vec![0; num_lps],
        }
    }

    pub fn push_event(&mut self, from: LpId, ev: InboundEvent, remote: bool) -> Result<(), SyncError> {
        self.events.push(ev);
        if remote {
            self.received[from.index()] += 1;
            self.check_overflow(from)?;
        }
        Ok(())
    }

    pub fn push_step_done(&mut self, from: LpId, body: StepDoneBody, arrival: u64) -> Result<(), SyncError> {
        if self.done[from.index()].is_some() {
            return Err(SyncError::DuplicateStepDone { peer: from, step: self.step });
        }
        self.done[from.index()] = Some(body);
        self.done_arrival[from.index()] = Some(arrival);
        self.check_overflow(from)
    }

    fn check_overflow(&self, from: LpId) -> Result<(), SyncError> {
        match &self.done[from.index()] {
            Some(d) if self.received[from.index()] > d.sent_count => Err(SyncError::CountMismatch {
                peer: from,
                step: self.step,
                expected: d.sent_count,
                received: self.received[from.index()],
            }),
            _ => Ok(()),
        }
    }

    /// Complete iff every peer's STEP_DONE is in and its event count matches.
    pub fn is_complete(&self, me: LpId) -> bool {
        self.done.iter().enumerate().all(|(p, d)| {
            p == me.index() || matches!(d, Some(d) if d.sent_count == self.received[p])
        })
    }

    pub fn step_done(&self, peer: LpId) -> Option<&StepDoneBody> {
        self.done[peer.index()].as_ref()
    }

    pub fn step_done_arrival(&self, peer: LpId) -> Option<u64> {
        self.done_arrival[peer.index()]
    }

    /// Human-readable reason the step is not complete yet.
    pub fn diagnostic(&self, me: LpId) -> String {
        let mut parts = Vec::new();
        for (p, d) in self.done.iter().enumerate() {
            if p == me.index() {
                continue;
            }
            match d {
                None => parts.push(format!("lp{p}: no STEP_DONE ({} events so far)", self.received[p])),
                Some(d) if d.sent_count != self.received[p] => parts.push(format!(
                    "lp{p}: count mismatch, STEP_DONE says {} events, received {}",
                    d.sent_count, self.received[p]
                )),
                Some(_) => {}
            }
        }
        parts.join("; ")
    }
}

/// Sorts events by `(sender, seq)`; duplicates are a protocol error.
pub fn canonical_order(mut events: Vec<InboundEvent>) -> Result<Vec<InboundEvent>, SyncError> {
    events.sort_by_key(|e| (e.body.sender, e.body.seq));
    for w in events.windows(2) {
        if (w[0].body.sender, w[0].body.seq) == (w[1].body.sender, w[1].body.seq) {
            return Err(SyncError::DuplicateEvent { sender: w[0].body.sender, seq: w[0].body.seq });
        }
    }
    Ok(events)
}

/// Convenience for tests and diagnostics.
pub fn order_keys(events: &[InboundEvent]) -> Vec<(SeId, u32)> {
    events.iter().map(|e| (e.body.sender, e.body.seq)).collect()
}
