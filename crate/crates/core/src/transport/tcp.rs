//! Full TCP mesh between LPs. The lower LP id dials the higher one; both
//! sides exchange HELLO and validate it before any other frame flows.

use std::io::{self, BufWriter, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info};
use thiserror::Error;

use crate::driver::{Transport, TransportError};
use crate::ids::LpId;

use super::frame::{read_frame, write_frame, Frame, FrameIoError, HelloBody, PROTOCOL_VERSION};

#[derive(Debug, Error)]
pub enum TcpError {
    #[error("handshake: {0}")]
    Handshake(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

fn io_ctx(context: impl Into<String>) -> impl FnOnce(io::Error) -> TcpError {
    let context = context.into();
    move |source| TcpError::Io { context, source }
}

#[derive(Debug, Clone)]
pub struct MeshOptions {
    pub connect_retries: u32,
    pub retry_delay: Duration,
    /// Bound on waiting for lower-numbered peers to dial in.
    pub accept_timeout: Duration,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { connect_retries: 30, retry_delay: Duration::from_secs(1), accept_timeout: Duration::from_secs(60) }
    }
}

type Inbound = (LpId, Result<Frame, TransportError>);

pub struct TcpMesh {
    me: LpId,
    writers: Vec<Option<BufWriter<TcpStream>>>,
    rx: Receiver<Inbound>,
}

fn expect_hello(stream: &mut TcpStream, want: &HelloBody, from: Option<LpId>) -> Result<HelloBody, TcpError> {
    let frame = match read_frame(stream) {
        Ok(Some(f)) => f,
        Ok(None) => return Err(TcpError::Handshake("peer closed before HELLO".into())),
        Err(FrameIoError::Io(e)) => return Err(io_ctx("reading HELLO")(e)),
        Err(FrameIoError::Frame(e)) => return Err(TcpError::Handshake(format!("malformed HELLO: {e}"))),
    };
    let Frame::Hello(h) = frame else {
        return Err(TcpError::Handshake(format!("expected HELLO, got frame kind {}", frame.kind())));
    };
    if h.protocol_version != want.protocol_version {
        return Err(TcpError::Handshake(format!("protocol version {} != {}", h.protocol_version, want.protocol_version)));
    }
    if h.num_lps != want.num_lps {
        return Err(TcpError::Handshake(format!("peer expects {} LPs, we have {}", h.num_lps, want.num_lps)));
    }
    if h.global_seed != want.global_seed {
        return Err(TcpError::Handshake(format!("peer seed {} != ours {}", h.global_seed, want.global_seed)));
    }
    if let Some(from) = from {
        if h.lp != from {
            return Err(TcpError::Handshake(format!("dialed {from} but peer says it is {}", h.lp)));
        }
    }
    Ok(h)
}

fn send_hello(stream: &mut TcpStream, hello: &HelloBody) -> Result<(), TcpError> {
    write_frame(stream, &Frame::Hello(hello.clone())).map_err(|e| match e {
        FrameIoError::Io(e) => io_ctx("sending HELLO")(e),
        FrameIoError::Frame(e) => TcpError::Handshake(e.to_string()),
    })
}

fn dial(addr: &str, opts: &MeshOptions) -> Result<TcpStream, TcpError> {
    let mut last = None;
    for attempt in 0..=opts.connect_retries {
        let addrs = addr.to_socket_addrs().map_err(io_ctx(format!("resolving {addr}")))?;
        for a in addrs {
            match TcpStream::connect_timeout(&a, Duration::from_secs(5)) {
                Ok(s) => return Ok(s),
                Err(e) => last = Some(e),
            }
        }
        if attempt < opts.connect_retries {
            debug!("connect to {addr} failed, retry {}/{}", attempt + 1, opts.connect_retries);
            thread::sleep(opts.retry_delay);
        }
    }
    let why = last.map_or_else(|| "no address".to_string(), |e| e.to_string());
    Err(TcpError::Handshake(format!("could not reach {addr} after {} attempts: {why}", opts.connect_retries + 1)))
}

impl TcpMesh {
    /// Binds `peers[me]`, dials every higher LP and accepts every lower one.
    pub fn connect(me: LpId, peers: &[String], global_seed: u64, opts: &MeshOptions) -> Result<Self, TcpError> {
        let n = peers.len() as u32;
        let hello = HelloBody { protocol_version: PROTOCOL_VERSION, lp: me, num_lps: n, global_seed };
        let listener = TcpListener::bind(&peers[me.index()]).map_err(|e| {
            if e.kind() == io::ErrorKind::AddrInUse {
                TcpError::Handshake(format!("{} is already bound; is another process running as {me}?", peers[me.index()]))
            } else {
                io_ctx(format!("binding {}", peers[me.index()]))(e)
            }
        })?;
        let mut streams: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();

        for j in me.0 + 1..n {
            let mut s = dial(&peers[j as usize], opts)?;
            s.set_read_timeout(Some(opts.accept_timeout)).map_err(io_ctx("socket option"))?;
            send_hello(&mut s, &hello)?;
            expect_hello(&mut s, &hello, Some(LpId(j)))?;
            info!("{me}: connected to lp{j}");
            streams[j as usize] = Some(s);
        }

        listener.set_nonblocking(true).map_err(io_ctx("socket option"))?;
        let deadline = Instant::now() + opts.accept_timeout;
        let mut missing = me.0;
        while missing > 0 {
            match listener.accept() {
                Ok((mut s, addr)) => {
                    s.set_nonblocking(false).map_err(io_ctx("socket option"))?;
                    s.set_read_timeout(Some(opts.accept_timeout)).map_err(io_ctx("socket option"))?;
                    let h = expect_hello(&mut s, &hello, None)?;
                    if h.lp >= me || streams[h.lp.index()].is_some() {
                        let msg = format!("unexpected HELLO from {} claiming to be {}", addr, h.lp);
                        return Err(TcpError::Handshake(msg));
                    }
                    send_hello(&mut s, &hello)?;
                    info!("{me}: accepted {}", h.lp);
                    streams[h.lp.index()] = Some(s);
                    missing -= 1;
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(TcpError::Handshake(format!("{missing} lower-numbered peers never connected")));
                    }
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(io_ctx("accepting")(e)),
            }
        }

        let (tx, rx) = mpsc::channel();
        let mut writers = Vec::with_capacity(n as usize);
        for (j, s) in streams.into_iter().enumerate() {
            match s {
                None => writers.push(None),
                Some(s) => {
                    s.set_read_timeout(None).map_err(io_ctx("socket option"))?;
                    s.set_nodelay(true).map_err(io_ctx("socket option"))?;
                    let reader = s.try_clone().map_err(io_ctx("cloning socket"))?;
                    spawn_reader(LpId(j as u32), reader, tx.clone());
                    writers.push(Some(BufWriter::with_capacity(1 << 16, s)));
                }
            }
        }
        Ok(Self { me, writers, rx })
    }

    pub fn id(&self) -> LpId {
        self.me
    }

    /// Closes every link after flushing.
    pub fn close(mut self) {
        for w in self.writers.iter_mut().flatten() {
            let _ = w.flush();
            let _ = w.get_ref().shutdown(Shutdown::Write);
        }
    }
}

fn spawn_reader(peer: LpId, mut stream: TcpStream, tx: Sender<Inbound>) {
    thread::spawn(move || loop {
        let item = match read_frame(&mut stream) {
            Ok(Some(f)) => Ok(f),
            Ok(None) => Err(TransportError::Disconnected(peer)),
            Err(e) => Err(TransportError::Io { peer, msg: e.to_string() }),
        };
        let stop = item.is_err() || matches!(item, Ok(Frame::Bye { .. }));
        if tx.send((peer, item)).is_err() || stop {
            return;
        }
    });
}

impl Transport for TcpMesh {
    fn send(&mut self, to: LpId, frame: &Frame) -> Result<(), TransportError> {
        let w = self.writers.get_mut(to.index()).and_then(Option::as_mut).ok_or(TransportError::Disconnected(to))?;
        write_frame(w, frame).map_err(|e| TransportError::Io { peer: to, msg: e.to_string() })
    }

    fn flush(&mut self) -> Result<(), TransportError> {
        for (j, w) in self.writers.iter_mut().enumerate() {
            if let Some(w) = w {
                w.flush().map_err(|e| TransportError::Io { peer: LpId(j as u32), msg: e.to_string() })?;
            }
        }
        Ok(())
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<(LpId, Frame)>, TransportError> {
        match self.rx.recv_timeout(timeout) {
            Ok((peer, item)) => item.map(|f| Some((peer, f))),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Disconnected(self.me)),
        }
    }
}
