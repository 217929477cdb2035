//! Virtual-time link model for the in-process backend.
//!
//! Each directed link is a serial resource: a frame starts serializing when
//! both the sender is ready and the previous frame has left, then incurs
//! latency plus a uniform jitter draw. Delivery times on one link are clamped
//! to be non-decreasing, so frames never overtake each other.

use crate::ids::LpId;
use crate::rng::{splitmix_hash, RngStream};

use super::profile::{LinkSpec, NetProfile};

/// Virtual nanoseconds.
pub type VirtualNanos = u64;

const LINK_STREAM_TAG: u64 = 0x4C49_4E4B;

/// Serialization time of `bytes` on a link, in nanoseconds.
pub fn serialization_nanos(spec: &LinkSpec, bytes: usize) -> u64 {
    match spec.bandwidth_mbps {
        None => 0,
        // bits / (mbps * 1e6) seconds = bits * 1000 / mbps nanoseconds
        Some(mbps) => ((bytes as f64 * 8.0) * 1000.0 / mbps).round() as u64,
    }
}

/// Delivery time of a single frame on an idle link with a given jitter draw
/// in `[-1, 1]`.
pub fn sim_link_deliver(spec: &LinkSpec, bytes: usize, send_time: VirtualNanos, jitter_unit: f64) -> VirtualNanos {
    let flight_ms = (spec.latency_ms + jitter_unit * spec.jitter_ms).max(0.0);
    send_time + serialization_nanos(spec, bytes) + (flight_ms * 1e6).round() as u64
}

#[derive(Debug, Clone)]
struct LinkState {
    spec: LinkSpec,
    free_at: VirtualNanos,
    last_delivery: VirtualNanos,
    rng: RngStream,
}

/// All directed links between `num_lps` processes.
#[derive(Debug, Clone)]
pub struct SimNetwork {
    num_lps: usize,
    links: Vec<LinkState>,
}

impl SimNetwork {
    pub fn new(profile: &NetProfile, num_lps: usize, seed: u64) -> Self {
        let mut links = Vec::with_capacity(num_lps * num_lps);
        for from in 0..num_lps {
            for to in 0..num_lps {
                let spec = profile.link(LpId(from as u32), LpId(to as u32));
                links.push(LinkState {
                    spec,
                    free_at: 0,
                    last_delivery: 0,
                    rng: RngStream::from_state(splitmix_hash([seed, LINK_STREAM_TAG, from as u64, to as u64])),
                });
            }
        }
        Self { num_lps, links }
    }

    /// Schedules one frame and returns its delivery time.
    pub fn transmit(&mut self, from: LpId, to: LpId, bytes: usize, send_time: VirtualNanos) -> VirtualNanos {
        let link = &mut self.links[from.index() * self.num_lps + to.index()];
        let start = send_time.max(link.free_at);
        link.free_at = start + serialization_nanos(&link.spec, bytes);
        let jitter = if link.spec.jitter_ms > 0.0 { link.rng.uniform(-1.0, 1.0) } else { 0.0 };
        let at = sim_link_deliver(&link.spec, bytes, start, jitter).max(link.last_delivery);
        link.last_delivery = at;
        at
    }
}
