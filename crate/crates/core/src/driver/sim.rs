//! Single-threaded virtual-clock scheduler.
//!
//! Each LP starts step `s` at its own virtual time, becomes ready after the
//! priced busy time, and its frames cross the simulated links. The step
//! completes for an LP once it is ready and every frame addressed to it has
//! arrived; that instant is when it starts the next step.

use std::sync::Arc;

use crate::heuristics::HeuristicConfig;
use crate::ids::{LpId, Timestep};
use crate::model::Model;
use crate::rng::{splitmix_hash, RngStream};
use crate::sync::{LogicalProcess, LpSetup, SyncError};
use crate::transport::frame::Frame;
use crate::transport::{NetProfile, SimNetwork};

use super::{CostModel, RunOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalOrder {
    /// Frames are handed over in order of simulated arrival.
    Network,
    /// Every step's frames are handed over in a seeded random order.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub profile: NetProfile,
    pub cost: CostModel,
    pub order: ArrivalOrder,
    pub net_seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { profile: NetProfile::ideal(), cost: CostModel::default(), order: ArrivalOrder::Network, net_seed: 0 }
    }
}

fn shuffle<T>(items: &mut [T], rng: &mut RngStream) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Runs `steps` steps of `model` over `num_lps` LPs. `observe` is called
/// after every completed step with all LPs, for invariant checks.
pub fn run_sim<M: Model>(
    model: Arc<M>,
    num_lps: u32,
    heuristics: &HeuristicConfig,
    steps: u64,
    opts: &SimOptions,
    mut observe: impl FnMut(Timestep, &[LogicalProcess<M>]),
) -> Result<RunOutput, SyncError> {
    let n = num_lps as usize;
    let mut lps: Vec<LogicalProcess<M>> = (0..num_lps)
        .map(|lp| {
            let setup = LpSetup { lp: LpId(lp), num_lps, heuristics: heuristics.clone() };
            LogicalProcess::new(setup, Arc::clone(&model))
        })
        .collect();
    let mut net = SimNetwork::new(&opts.profile, n, opts.net_seed);
    let mut start = vec![0u64; n];
    let mut end_nanos = vec![Vec::with_capacity(steps as usize); n];

    for s in 1..=steps {
        let step = Timestep(s);
        let mut in_flight: Vec<(u64, LpId, LpId, Frame)> = Vec::new();
        let mut ready = vec![0u64; n];
        for (i, lp) in lps.iter_mut().enumerate() {
            lp.run_phases(step)?;
            let busy = opts.cost.busy(lp.work(), opts.profile.cpu_slowdown(LpId(i as u32)));
            ready[i] = start[i] + busy;
            for (to, frame) in lp.seal(step, busy, ready[i]) {
                let at = net.transmit(LpId(i as u32), to, frame.encoded_len(), ready[i]);
                in_flight.push((at, LpId(i as u32), to, frame));
            }
        }
        match opts.order {
            ArrivalOrder::Network => in_flight.sort_by_key(|f| f.0),
            ArrivalOrder::Shuffled { seed } => {
                let mut rng = RngStream::from_state(splitmix_hash([seed, s]));
                shuffle(&mut in_flight, &mut rng);
            }
        }
        let mut done = ready.clone();
        for (at, from, to, frame) in in_flight {
            done[to.index()] = done[to.index()].max(at);
            lps[to.index()].receive(from, frame, at)?;
        }
        for (i, lp) in lps.iter_mut().enumerate() {
            lp.complete(step)?;
            start[i] = done[i];
            end_nanos[i].push(done[i]);
        }
        observe(step, &lps);
    }
    let mut records = Vec::with_capacity(n);
    for lp in &mut lps {
        records.push(lp.finish(Timestep(steps))?);
    }
    Ok(RunOutput { records, end_nanos })
}
