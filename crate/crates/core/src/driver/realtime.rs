//! Real-time step loop shared by the in-process threaded mode and TCP.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use thiserror::Error;

use crate::heuristics::HeuristicConfig;
use crate::ids::{LpId, Timestep};
use crate::metrics::LpTraceRow;
use crate::model::Model;
use crate::sync::{LogicalProcess, LpSetup, StepRecord, SyncError};
use crate::transport::frame::Frame;

use super::RunOutput;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("link to {0} closed")]
    Disconnected(LpId),
    #[error("link to {peer}: {msg}")]
    Io { peer: LpId, msg: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Reliable, per-peer FIFO frame delivery.
pub trait Transport {
    fn send(&mut self, to: LpId, frame: &Frame) -> Result<(), TransportError>;
    /// Pushes out anything buffered by `send`.
    fn flush(&mut self) -> Result<(), TransportError>;
    /// Next frame from any peer, or `None` once `timeout` elapses.
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<(LpId, Frame)>, TransportError>;
}

pub struct ChannelTransport {
    me: LpId,
    peers: Vec<Option<Sender<(LpId, Frame)>>>,
    rx: Receiver<(LpId, Frame)>,
}

/// Fully connected in-process mesh of `n` endpoints.
pub fn channel_mesh(n: u32) -> Vec<ChannelTransport> {
    let (txs, rxs): (Vec<_>, Vec<_>) = (0..n).map(|_| mpsc::channel()).unzip();
    rxs.into_iter()
        .enumerate()
        .map(|(i, rx)| ChannelTransport {
            me: LpId(i as u32),
            peers: txs.iter().enumerate().map(|(j, tx)| (i != j).then(|| tx.clone())).collect(),
            rx,
        })
        .collect()
}

impl Transport for ChannelTransport {
    fn send(&mut self, to: LpId, frame: &Frame) -> Result<(), TransportError> {
        let tx = self.peers.get(to.index()).and_then(Option::as_ref).ok_or(TransportError::Disconnected(to))?;
        tx.send((self.me, frame.clone())).map_err(|_| TransportError::Disconnected(to))
    }

    fn flush(&mut self) -> Result<(), TransportError> {
        Ok(())
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<(LpId, Frame)>, TransportError> {
        match self.rx.recv_timeout(timeout) {
            Ok(f) => Ok(Some(f)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Disconnected(self.me)),
        }
    }
}

/// Per-LP result of a real-time run.
#[derive(Debug, Clone)]
pub struct LpRunOutput {
    pub rows: Vec<LpTraceRow>,
}

fn nanos_since(t0: Instant) -> u64 {
    t0.elapsed().as_nanos() as u64
}

/// Drives one LP through `steps` steps. `cpu_slowdown > 1` stretches each
/// step's busy period by sleeping. On failure a BYE is sent to every peer.
pub fn run_lp<M: Model, T: Transport>(
    lp: &mut LogicalProcess<M>,
    transport: &mut T,
    steps: u64,
    cpu_slowdown: f64,
    barrier_timeout: Duration,
    t0: Instant,
) -> Result<LpRunOutput, RunError> {
    let result = step_loop(lp, transport, steps, cpu_slowdown, barrier_timeout, t0);
    let last = match &result {
        Ok(_) => Timestep(steps),
        Err(_) => Timestep(0),
    };
    let peers: Vec<LpId> = (0..lp.directory().num_lps()).map(LpId).filter(|&p| p != lp.id()).collect();
    for p in peers {
        let _ = transport.send(p, &Frame::Bye { step: last });
    }
    let _ = transport.flush();
    result
}

fn step_loop<M: Model, T: Transport>(
    lp: &mut LogicalProcess<M>,
    transport: &mut T,
    steps: u64,
    cpu_slowdown: f64,
    barrier_timeout: Duration,
    t0: Instant,
) -> Result<LpRunOutput, RunError> {
    let mut ends = Vec::with_capacity(steps as usize);
    for s in 1..=steps {
        let step = Timestep(s);
        let began = Instant::now();
        lp.run_phases(step)?;
        if cpu_slowdown > 1.0 {
            thread::sleep(began.elapsed().mul_f64(cpu_slowdown - 1.0));
        }
        let busy = began.elapsed().as_nanos() as u64;
        for (to, frame) in lp.seal(step, busy, nanos_since(t0)) {
            transport.send(to, &frame)?;
        }
        transport.flush()?;
        let deadline = Instant::now() + barrier_timeout;
        while !lp.is_complete(step) {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(SyncError::Timeout { step, detail: lp.barrier_diagnostic(step) }.into());
            }
            match transport.recv_timeout(left)? {
                Some((from, Frame::Bye { step: bye })) if bye.0 >= steps => {
                    debug!("{}: {from} finished early", lp.id());
                }
                Some((from, frame)) => lp.receive(from, frame, nanos_since(t0))?,
                None => {}
            }
        }
        lp.complete(step)?;
        ends.push(nanos_since(t0));
    }
    let records = lp.finish(Timestep(steps))?;
    let rows = records.into_iter().zip(ends).map(|(record, end_nanos)| LpTraceRow { record, end_nanos }).collect();
    Ok(LpRunOutput { rows })
}

/// Runs every LP on its own thread over in-process channels. Results are
/// placement-independent but timing, and hence migration decisions that
/// depend on measured speed, are not reproducible.
pub fn run_threads<M: Model>(
    model: Arc<M>,
    num_lps: u32,
    heuristics: &HeuristicConfig,
    steps: u64,
    cpu_slowdown: &[f64],
    barrier_timeout: Duration,
) -> Result<RunOutput, RunError> {
    let t0 = Instant::now();
    let handles: Vec<_> = channel_mesh(num_lps)
        .into_iter()
        .enumerate()
        .map(|(i, mut transport)| {
            let setup = LpSetup { lp: LpId(i as u32), num_lps, heuristics: heuristics.clone() };
            let model = Arc::clone(&model);
            let slow = cpu_slowdown.get(i).copied().unwrap_or(1.0);
            thread::spawn(move || {
                let mut lp = LogicalProcess::new(setup, model);
                run_lp(&mut lp, &mut transport, steps, slow, barrier_timeout, t0)
            })
        })
        .collect();
    let mut records: Vec<Vec<StepRecord>> = Vec::new();
    let mut end_nanos = Vec::new();
    let mut first_err = None;
    for h in handles {
        match h.join().expect("LP thread panicked") {
            Ok(out) => {
                end_nanos.push(out.rows.iter().map(|r| r.end_nanos).collect());
                records.push(out.rows.into_iter().map(|r| r.record).collect());
            }
            Err(e) => {
                warn!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(RunOutput { records, end_nanos }),
    }
}
