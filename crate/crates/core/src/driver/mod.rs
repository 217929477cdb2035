//! Drivers that run a set of logical processes: a deterministic
//! virtual-clock scheduler and a real-time loop over any [`Transport`].

mod realtime;
mod sim;

pub use realtime::{channel_mesh, run_lp, run_threads, ChannelTransport, LpRunOutput, RunError, Transport, TransportError};
pub use sim::{run_sim, ArrivalOrder, SimOptions};

use crate::metrics::{merge_records, MergeError, StepTrace};
use crate::sync::{StepRecord, StepWork};

/// Prices a step's work in virtual nanoseconds for the simulated clock.
///
/// Remote deliveries cost more than local ones because each crossed the
/// wire and had to be decoded and dispatched on behalf of a foreign sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub entity_ns: u64,
    pub event_in_ns: u64,
    pub local_delivery_ns: u64,
    pub remote_delivery_ns: u64,
    pub frame_out_ns: u64,
    pub migration_ns: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            entity_ns: 2_000,
            event_in_ns: 500,
            local_delivery_ns: 1_000,
            remote_delivery_ns: 8_000,
            frame_out_ns: 1_000,
            migration_ns: 20_000,
        }
    }
}

impl CostModel {
    pub fn busy(&self, w: &StepWork, cpu_slowdown: f64) -> u64 {
        let base = w.advanced * self.entity_ns
            + w.events_in * self.event_in_ns
            + w.local_deliveries * self.local_delivery_ns
            + w.remote_deliveries * self.remote_delivery_ns
            + w.frames_out * self.frame_out_ns
            + (w.migrations_in + w.migrations_out) * self.migration_ns;
        (base as f64 * cpu_slowdown).round() as u64
    }
}

/// Everything a finished multi-LP run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Vec<StepRecord>>,
    pub end_nanos: Vec<Vec<u64>>,
}

impl RunOutput {
    pub fn traces(&self) -> Result<Vec<StepTrace>, MergeError> {
        merge_records(&self.records, &self.end_nanos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_scales_with_slowdown() {
        let w = StepWork { advanced: 10, remote_deliveries: 2, local_deliveries: 3, ..Default::default() };
        let c = CostModel::default();
        assert_eq!(c.busy(&w, 1.0), 10 * 2_000 + 2 * 8_000 + 3 * 1_000);
        assert_eq!(c.busy(&w, 3.0), 3 * c.busy(&w, 1.0));
        assert_eq!(c.busy(&StepWork::default(), 2.0), 0);
    }
}
