//! One logical process: owns a subset of entities and runs the per-step
//! phase sequence. Transport-agnostic; drivers feed frames in and ship
//! frames out.

use std::collections::BTreeMap;
use std::sync::Arc;

use log::warn;

use crate::directory::{MigrationIntent, PlacementMap};
use crate::heuristics::{HeuristicConfig, LoadQuota, LpSpeedView, Policy, SeCommStats};
use crate::ids::{LpId, SeId, Timestep};
use crate::model::{Delivery, Emission, InboundEvent, Model, ModelError};
use crate::transport::frame::{EventBody, Frame, MigrateDataBody, StepDoneBody, MAX_FRAME_LEN};

use super::digest::entity_hash;
use super::inbox::{canonical_order, StepInbox};
use super::SyncError;

#[derive(Debug, Clone)]
pub struct LpSetup {
    pub lp: LpId,
    pub num_lps: u32,
    pub heuristics: HeuristicConfig,
}

/// Work done in phases 1-5 of one step; drivers may price it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepWork {
    pub advanced: u64,
    pub events_in: u64,
    pub local_deliveries: u64,
    pub remote_deliveries: u64,
    pub events_generated: u64,
    pub sent_pings: u64,
    pub frames_out: u64,
    pub migrations_in: u64,
    pub migrations_out: u64,
}

/// Per-LP trace of one step. Interaction counts refer to events generated
/// in this step (delivered at the start of the next one).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: Timestep,
    pub lp: LpId,
    pub local_interactions: u64,
    pub remote_interactions: u64,
    pub sent_pings: u64,
    pub events_generated: u64,
    pub committed: u64,
    pub admitted: u64,
    pub intents: u64,
    pub migrations_out: u64,
    /// Committed placement after this step's boundary.
    pub se_counts: Vec<u32>,
    /// Busy time each LP reported for this step.
    pub busy_nanos: Vec<u64>,
    pub partial_digest: u64,
    pub quota: Option<LoadQuota>,
}

struct Resident<S> {
    state: S,
    stats: SeCommStats,
}

pub struct LogicalProcess<M: Model> {
    id: LpId,
    num_lps: usize,
    model: Arc<M>,
    policy: Policy,
    directory: PlacementMap,
    residents: BTreeMap<SeId, Resident<M::State>>,
    inboxes: BTreeMap<u64, StepInbox>,
    consumed_through: u64,
    outbox: Vec<(LpId, Frame)>,
    sent_counts: Vec<u32>,
    speed: LpSpeedView,
    work: StepWork,
    own_busy: u64,
    ready_at: u64,
    open: Option<StepRecord>,
    open_prev: Option<StepRecord>,
    finished: Vec<StepRecord>,
    emissions: Vec<Emission>,
    scratch: Vec<u8>,
}

impl<M: Model> LogicalProcess<M> {
    pub fn new(setup: LpSetup, model: Arc<M>) -> Self {
        let num_se = model.num_entities();
        let directory = PlacementMap::round_robin(num_se, setup.num_lps);
        let residents = (0..num_se)
            .map(SeId)
            .filter(|&se| directory.lookup(se).ok() == Some(setup.lp))
            .map(|se| (se, Resident { state: model.initial_state(se), stats: SeCommStats::new() }))
            .collect();
        let n = setup.num_lps as usize;
        let speed = LpSpeedView::new(n, setup.heuristics.ema_alpha, setup.heuristics.lag_weight).with_owner(setup.lp);
        Self {
            id: setup.lp,
            num_lps: n,
            policy: Policy::new(setup.heuristics, num_se, setup.num_lps),
            model,
            directory,
            residents,
            inboxes: BTreeMap::new(),
            consumed_through: 0,
            outbox: Vec::new(),
            sent_counts: vec![0; n],
            speed,
            work: StepWork::default(),
            own_busy: 0,
            ready_at: 0,
            open: None,
            open_prev: None,
            finished: Vec::new(),
            emissions: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn id(&self) -> LpId {
        self.id
    }

    pub fn directory(&self) -> &PlacementMap {
        &self.directory
    }

    pub fn resident_count(&self) -> usize {
        self.residents.len()
    }

    pub fn resident_ids(&self) -> impl Iterator<Item = SeId> + '_ {
        self.residents.keys().copied()
    }

    pub fn speed_view(&self) -> &LpSpeedView {
        &self.speed
    }

    pub fn work(&self) -> &StepWork {
        &self.work
    }

    /// Serialized state of every resident entity, in id order.
    pub fn snapshot(&self) -> Vec<(SeId, Vec<u8>)> {
        self.residents
            .iter()
            .map(|(&se, r)| {
                let mut b = Vec::new();
                self.model.encode_state(&r.state, &mut b);
                (se, b)
            })
            .collect()
    }

    fn inbox(&mut self, step: Timestep) -> &mut StepInbox {
        let n = self.num_lps;
        self.inboxes.entry(step.0).or_insert_with(|| StepInbox::new(step, n))
    }

    /// Accepts one frame from a peer. `arrival` is in the driver's clock.
    pub fn receive(&mut self, from: LpId, frame: Frame, arrival: u64) -> Result<(), SyncError> {
        let step = match &frame {
            Frame::Event(e) => e.step,
            Frame::StepDone(d) => d.step,
            Frame::MigrateAnnounce(a) => a.step,
            Frame::MigrateData(d) => d.step,
            Frame::Bye { .. } => return Err(SyncError::PeerLeft(from)),
            Frame::Hello(_) => return Err(SyncError::UnexpectedFrame { peer: from, kind: frame.kind() }),
        };
        if step.0 <= self.consumed_through {
            return Err(SyncError::StaleFrame { peer: from, step });
        }
        let inbox = self.inbox(step);
        match frame {
            Frame::Event(body) => inbox.push_event(from, InboundEvent { body, sender_host: from }, true),
            Frame::StepDone(d) => inbox.push_step_done(from, d, arrival),
            Frame::MigrateAnnounce(a) => {
                inbox.announcements.push(a);
                Ok(())
            }
            Frame::MigrateData(d) => {
                inbox.migrate_data.push((from, d));
                Ok(())
            }
            Frame::Hello(_) | Frame::Bye { .. } => unreachable!(),
        }
    }

    /// Phases 1-5 of `step`: install arrivals, deliver last step's events,
    /// apply the boundary, advance residents, evaluate, announce and ship
    /// outgoing entities. Outgoing frames accumulate until [`Self::seal`].
    pub fn run_phases(&mut self, step: Timestep) -> Result<(), SyncError> {
        self.work = StepWork::default();
        let prev = step.prev();
        let inbox = self.inboxes.remove(&prev.0).unwrap_or_else(|| StepInbox::new(prev, self.num_lps));
        self.consumed_through = prev.0;

        // Phase 1
        self.install_arrivals(step, inbox.migrate_data)?;
        self.deliver(inbox.events)?;

        // Phase 2
        let policy = &self.policy;
        let outcome = self
            .directory
            .apply_boundary_updates(step, &inbox.announcements, |a, c| policy.admit(a, c))?;
        for m in &outcome.committed {
            let here = self.residents.contains_key(&m.se);
            if (m.to == self.id && !here) || (m.from == self.id && here) {
                return Err(SyncError::Migration {
                    se: m.se,
                    detail: format!("commit {}->{} disagrees with residency on {}", m.from, m.to, self.id),
                });
            }
        }

        // Phase 3
        let projected = self.directory.projected_counts();
        let partial_digest = self.advance_all(step, &projected)?;

        // Phase 4
        let mut quota = None;
        let mut intents = Vec::new();
        if self.policy.is_evaluation_step(step) {
            let entities: Vec<(SeId, &SeCommStats)> = self
                .residents
                .iter()
                .filter(|(se, _)| !self.directory.is_pending(**se))
                .map(|(se, r)| (*se, &r.stats))
                .collect();
            let eval = self.policy.evaluate(step, self.id, &entities, &projected, &self.speed);
            quota = eval.quota;
            intents = eval.intents;
        }
        intents.retain(|i| self.fits_in_frame(i));

        // Phase 5
        for i in &intents {
            let ann = i.announcement();
            for p in self.peers() {
                self.outbox.push((p, Frame::MigrateAnnounce(ann.clone())));
                self.work.frames_out += 1;
            }
            self.inbox(step).announcements.push(ann);
        }
        let leaving: Vec<_> = self.directory.pending().filter(|m| m.from == self.id).copied().collect();
        for m in leaving {
            let r = self.residents.remove(&m.se).ok_or_else(|| SyncError::Migration {
                se: m.se,
                detail: format!("admitted to leave {} but not resident", self.id),
            })?;
            let mut state = Vec::new();
            self.model.encode_state(&r.state, &mut state);
            r.stats.encode(&mut state);
            self.outbox.push((m.to, Frame::MigrateData(MigrateDataBody { step, se: m.se, state })));
            self.work.frames_out += 1;
            self.work.migrations_out += 1;
        }

        self.open = Some(StepRecord {
            step,
            lp: self.id,
            local_interactions: 0,
            remote_interactions: 0,
            sent_pings: self.work.sent_pings,
            events_generated: self.work.events_generated,
            committed: outcome.committed.len() as u64,
            admitted: outcome.admitted.len() as u64,
            intents: intents.len() as u64,
            migrations_out: self.work.migrations_out,
            se_counts: self.directory.counts().to_vec(),
            busy_nanos: vec![0; self.num_lps],
            partial_digest,
            quota,
        });
        Ok(())
    }

    /// Phase 6: appends a STEP_DONE per peer and hands every outgoing frame
    /// of this step to the driver, in send order.
    pub fn seal(&mut self, step: Timestep, busy_nanos: u64, ready_at: u64) -> Vec<(LpId, Frame)> {
        let se_count = self.work.advanced as u32;
        for p in self.peers() {
            let sent_count = self.sent_counts[p.index()];
            self.outbox.push((p, Frame::StepDone(StepDoneBody { step, sent_count, busy_nanos, se_count })));
        }
        self.sent_counts.iter_mut().for_each(|c| *c = 0);
        self.own_busy = busy_nanos;
        self.ready_at = ready_at;
        std::mem::take(&mut self.outbox)
    }

    pub fn is_complete(&self, step: Timestep) -> bool {
        self.num_lps == 1 || self.inboxes.get(&step.0).is_some_and(|i| i.is_complete(self.id))
    }

    pub fn barrier_diagnostic(&self, step: Timestep) -> String {
        match self.inboxes.get(&step.0) {
            Some(i) => i.diagnostic(self.id),
            None => "nothing received from any peer".to_string(),
        }
    }

    /// Phase 7 bookkeeping once the barrier for `step` is complete.
    pub fn complete(&mut self, step: Timestep) -> Result<(), SyncError> {
        if !self.is_complete(step) {
            return Err(SyncError::Timeout { step, detail: self.barrier_diagnostic(step) });
        }
        let mut record = self.open.take().expect("complete() without run_phases()");
        let own_count = self.work.advanced as u32;
        self.speed.observe(self.id, self.own_busy, own_count, 0);
        record.busy_nanos[self.id.index()] = self.own_busy;
        if let Some(inbox) = self.inboxes.get(&step.0) {
            for p in (0..self.num_lps as u32).map(LpId).filter(|&p| p != self.id) {
                let d = inbox.step_done(p).expect("complete inbox has every STEP_DONE");
                let lag = inbox.step_done_arrival(p).unwrap_or(0).saturating_sub(self.ready_at);
                self.speed.observe(p, d.busy_nanos, d.se_count, lag);
                record.busy_nanos[p.index()] = d.busy_nanos;
            }
        }
        if let Some(prev) = self.open_prev.take() {
            self.finished.push(prev);
        }
        self.open_prev = Some(record);
        Ok(())
    }

    /// Delivers the events of the final step so its interactions are counted.
    pub fn finish(&mut self, last: Timestep) -> Result<Vec<StepRecord>, SyncError> {
        let inbox = self.inboxes.remove(&last.0).unwrap_or_else(|| StepInbox::new(last, self.num_lps));
        self.consumed_through = last.0;
        self.work = StepWork::default();
        self.deliver(inbox.events)?;
        if let Some(prev) = self.open_prev.take() {
            self.finished.push(prev);
        }
        Ok(std::mem::take(&mut self.finished))
    }

    /// Records completed so far (all but the most recent step).
    pub fn take_records(&mut self) -> Vec<StepRecord> {
        std::mem::take(&mut self.finished)
    }

    fn peers(&self) -> impl Iterator<Item = LpId> {
        let me = self.id;
        (0..self.num_lps as u32).map(LpId).filter(move |&p| p != me)
    }

    fn fits_in_frame(&self, i: &MigrationIntent) -> bool {
        let Some(r) = self.residents.get(&i.se) else { return false };
        let mut buf = Vec::new();
        self.model.encode_state(&r.state, &mut buf);
        r.stats.encode(&mut buf);
        let ok = buf.len() + 32 < MAX_FRAME_LEN as usize;
        if !ok {
            warn!("{}: state of {} is {} bytes, too large to migrate; staying local", self.id, i.se, buf.len());
        }
        ok
    }

    fn install_arrivals(&mut self, step: Timestep, data: Vec<(LpId, MigrateDataBody)>) -> Result<(), SyncError> {
        let expected = self.directory.pending().filter(|m| m.to == self.id).count();
        if data.len() != expected {
            return Err(SyncError::Migration {
                se: data.first().map(|d| d.1.se).unwrap_or(SeId(0)),
                detail: format!("{} expected {expected} arrivals, got {}", self.id, data.len()),
            });
        }
        for (from, d) in data {
            let ok = self.directory.pending().any(|m| m.se == d.se && m.from == from && m.to == self.id);
            if !ok || self.residents.contains_key(&d.se) {
                return Err(SyncError::Migration { se: d.se, detail: format!("unexpected state from {from}") });
            }
            let (state, rest) = self.model.decode_state(&d.state)?;
            let (mut stats, rest) =
                SeCommStats::decode(rest).map_err(|_| ModelError::MalformedState)?;
            if !rest.is_empty() {
                return Err(ModelError::MalformedState.into());
            }
            stats.mark_migrated(step);
            self.residents.insert(d.se, Resident { state, stats });
            self.work.migrations_in += 1;
        }
        Ok(())
    }

    fn deliver(&mut self, events: Vec<InboundEvent>) -> Result<(), SyncError> {
        let events = canonical_order(events)?;
        self.work.events_in = events.len() as u64;
        let mut deliveries: Vec<Delivery> = Vec::new();
        {
            let list: Vec<(SeId, &M::State)> = self.residents.iter().map(|(se, r)| (*se, &r.state)).collect();
            self.model.deliver(&events, &list, &mut deliveries)?;
        }
        let window = self.policy.config().window;
        let (mut local, mut remote) = (0u64, 0u64);
        for d in &deliveries {
            let ev = &events[d.event];
            let Some(r) = self.residents.get_mut(&d.receiver) else {
                return Err(SyncError::Migration { se: d.receiver, detail: "delivery to non-resident".into() });
            };
            r.stats.record(ev.sender_host, ev.body.step, window);
            if ev.sender_host == self.id {
                local += 1;
            } else {
                remote += 1;
            }
        }
        self.work.local_deliveries = local;
        self.work.remote_deliveries = remote;
        if let Some(rec) = self.open_prev.as_mut() {
            rec.local_interactions = local;
            rec.remote_interactions = remote;
        }
        Ok(())
    }

    fn advance_all(&mut self, step: Timestep, projected: &[u32]) -> Result<u64, SyncError> {
        let me = self.id;
        let remote_hosts: Vec<LpId> =
            (0..self.num_lps as u32).map(LpId).filter(|&p| p != me && projected[p.index()] > 0).collect();
        let n = self.num_lps;
        let Self { residents, model, directory, outbox, sent_counts, inboxes, work, emissions, scratch, .. } = self;
        let own = inboxes.entry(step.0).or_insert_with(|| StepInbox::new(step, n));
        let mut digest = 0u64;
        for (&se, r) in residents.iter_mut() {
            emissions.clear();
            model.advance(se, &mut r.state, step, emissions);
            work.advanced += 1;
            for (seq, e) in emissions.drain(..).enumerate() {
                let body = EventBody { step, sender: se, seq: seq as u32, dest: e.dest, payload: e.payload };
                work.events_generated += 1;
                if body.is_broadcast() {
                    work.sent_pings += 1;
                    for &p in &remote_hosts {
                        outbox.push((p, Frame::Event(body.clone())));
                        sent_counts[p.index()] += 1;
                        work.frames_out += 1;
                    }
                    own.push_event(me, InboundEvent { body, sender_host: me }, false)?;
                } else {
                    let to = directory.route(body.dest)?;
                    if to == me {
                        own.push_event(me, InboundEvent { body, sender_host: me }, false)?;
                    } else {
                        outbox.push((to, Frame::Event(body)));
                        sent_counts[to.index()] += 1;
                        work.frames_out += 1;
                    }
                }
            }
            scratch.clear();
            model.encode_state(&r.state, scratch);
            digest ^= entity_hash(se, scratch);
        }
        Ok(digest)
    }
}
