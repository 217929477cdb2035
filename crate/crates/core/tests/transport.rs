use std::net::TcpListener;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use stepsim::driver::{channel_mesh, run_lp, run_sim, ChannelTransport, RunError, SimOptions, Transport, TransportError};
use stepsim::heuristics::{HeuristicConfig, Mode};
use stepsim::manet::{Manet, ModelConfig};
use stepsim::sync::{LogicalProcess, LpSetup, SyncError};
use stepsim::transport::tcp::{MeshOptions, TcpError, TcpMesh};
use stepsim::transport::Frame;
use stepsim::LpId;

const SEED: u64 = 11;

fn model(steps: u64) -> Arc<Manet> {
    Arc::new(Manet::new(ModelConfig { num_mh: 240, steps, seed: SEED, ..Default::default() }))
}

fn free_ports(n: usize) -> Vec<String> {
    let listeners: Vec<_> = (0..n).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    listeners.iter().map(|l| l.local_addr().unwrap().to_string()).collect()
}

fn quick_mesh() -> MeshOptions {
    MeshOptions { connect_retries: 50, retry_delay: Duration::from_millis(50), accept_timeout: Duration::from_secs(20) }
}

fn setup(lp: u32, mode: Mode) -> LpSetup {
    LpSetup { lp: LpId(lp), num_lps: 3, heuristics: HeuristicConfig::with_mode(mode) }
}

#[test]
fn tcp_loopback_matches_sim() {
    let steps = 60;
    let peers = free_ports(3);
    let t0 = Instant::now();
    let handles: Vec<_> = (0..3u32)
        .map(|i| {
            let peers = peers.clone();
            thread::spawn(move || {
                let mut mesh = TcpMesh::connect(LpId(i), &peers, SEED, &quick_mesh()).unwrap();
                let mut lp = LogicalProcess::new(setup(i, Mode::Gaia), model(steps));
                let out = run_lp(&mut lp, &mut mesh, steps, 1.0, Duration::from_secs(20), t0).unwrap();
                mesh.close();
                out.rows.into_iter().map(|r| r.record.partial_digest).collect::<Vec<u64>>()
            })
        })
        .collect();
    let partials: Vec<Vec<u64>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let combined: Vec<u64> = (0..steps as usize).map(|s| partials.iter().fold(0, |acc, p| acc ^ p[s])).collect();

    let sim = run_sim(model(steps), 1, &HeuristicConfig::default(), steps, &SimOptions::default(), |_, _| {}).unwrap();
    let want: Vec<u64> = sim.traces().unwrap().iter().map(|t| t.digest).collect();
    assert_eq!(combined, want);
}

#[test]
fn seed_mismatch_fails_handshake() {
    let peers = free_ports(2);
    let handles: Vec<_> = [(0u32, SEED), (1, SEED + 1)]
        .into_iter()
        .map(|(i, seed)| {
            let peers = peers.clone();
            thread::spawn(move || TcpMesh::connect(LpId(i), &peers, seed, &quick_mesh()).map(|_| ()))
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let msgs: Vec<String> = results
        .iter()
        .filter_map(|r| match r {
            Err(TcpError::Handshake(m)) => Some(m.clone()),
            _ => None,
        })
        .collect();
    assert!(!msgs.is_empty(), "{results:?}");
    assert!(msgs.iter().any(|m| m.contains("seed")), "{msgs:?}");
}

#[test]
fn unreachable_peer_reports_handshake_error() {
    let peers = free_ports(2);
    let opts = MeshOptions { connect_retries: 2, retry_delay: Duration::from_millis(10), accept_timeout: Duration::from_millis(200) };
    assert!(matches!(TcpMesh::connect(LpId(0), &peers, SEED, &opts), Err(TcpError::Handshake(_))));
    assert!(matches!(TcpMesh::connect(LpId(1), &peers, SEED, &opts), Err(TcpError::Handshake(_))));
}

/// Loses the first remote EVENT it is asked to send.
struct Lossy {
    inner: ChannelTransport,
    dropped: bool,
}

impl Transport for Lossy {
    fn send(&mut self, to: LpId, frame: &Frame) -> Result<(), TransportError> {
        if !self.dropped && to == LpId(1) && matches!(frame, Frame::Event(_)) {
            self.dropped = true;
            return Ok(());
        }
        self.inner.send(to, frame)
    }
    fn flush(&mut self) -> Result<(), TransportError> {
        self.inner.flush()
    }
    fn recv_timeout(&mut self, t: Duration) -> Result<Option<(LpId, Frame)>, TransportError> {
        self.inner.recv_timeout(t)
    }
}

#[test]
fn lost_event_times_out_with_count_diagnostic() {
    let steps = 10;
    let t0 = Instant::now();
    let timeout = Duration::from_millis(500);
    let handles: Vec<_> = channel_mesh(3)
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            thread::spawn(move || {
                let mut lp = LogicalProcess::new(setup(i as u32, Mode::Static), model(steps));
                if i == 0 {
                    run_lp(&mut lp, &mut Lossy { inner: t, dropped: false }, steps, 1.0, timeout, t0).map(|_| ())
                } else {
                    let mut t = t;
                    run_lp(&mut lp, &mut t, steps, 1.0, timeout, t0).map(|_| ())
                }
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    match &results[1] {
        Err(RunError::Sync(SyncError::Timeout { detail, .. })) => assert!(detail.contains("count mismatch"), "{detail}"),
        other => panic!("LP1: {other:?}"),
    }
    for r in [&results[0], &results[2]] {
        assert!(r.is_err(), "peers of a failed LP must not finish: {r:?}");
    }
}

#[test]
fn departed_peer_aborts_the_rest() {
    let steps = 50;
    let t0 = Instant::now();
    let mut mesh = channel_mesh(3).into_iter();
    let quitter = mesh.next().unwrap();
    drop(quitter);
    let handles: Vec<_> = mesh
        .enumerate()
        .map(|(i, mut t)| {
            thread::spawn(move || {
                let mut lp = LogicalProcess::new(setup(i as u32 + 1, Mode::Static), model(steps));
                run_lp(&mut lp, &mut t, steps, 1.0, Duration::from_secs(2), t0).map(|_| ())
            })
        })
        .collect();
    for h in handles {
        assert!(h.join().unwrap().is_err());
    }
}
