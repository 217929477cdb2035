//! Per-step measurement records, run summaries, CSV traces and reports.

mod report;
mod trace;

pub use report::{gain, gain_table, load_run, render_report, write_label, LoadedRun, Report, ReportError, LABEL_FILE};
pub use trace::{
    read_lp_records, read_steps, read_summary, write_lp_records, write_steps, write_summary, write_traces,
    TraceError, LP_FILE_PREFIX, STEPS_FILE, SUMMARY_FILE,
};

use thiserror::Error;

use crate::ids::Timestep;
use crate::sync::{combine, StepRecord};

/// Fraction of interactions that stayed inside one LP; `None` when there were none.
pub fn lcr(local: u64, remote: u64) -> Option<f64> {
    let total = local + remote;
    (total > 0).then(|| local as f64 / total as f64)
}

/// One merged row of `steps.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub step: Timestep,
    pub local_interactions: u64,
    pub remote_interactions: u64,
    pub sent_pings: u64,
    pub migrations: u64,
    pub se_count_per_lp: Vec<u32>,
    pub busy_nanos_per_lp: Vec<u64>,
    pub digest: u64,
    pub wall_nanos: u64,
}

impl StepTrace {
    pub fn lcr(&self) -> Option<f64> {
        lcr(self.local_interactions, self.remote_interactions)
    }

    pub fn interactions(&self) -> u64 {
        self.local_interactions + self.remote_interactions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: String,
    pub num_se: u64,
    pub num_lps: u32,
    pub steps: u64,
    pub seed: u64,
    pub total_wct_s: f64,
    pub avg_lcr: Option<f64>,
    pub final_lcr: Option<f64>,
    pub total_interactions: u64,
    pub total_sent_pings: u64,
    pub total_migrations: u64,
    pub final_digest: u64,
}

/// Identification of a run, echoed into `summary.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLabel {
    pub mode: String,
    pub num_se: u64,
    pub num_lps: u32,
    pub seed: u64,
}

impl RunSummary {
    pub fn from_traces(label: &RunLabel, traces: &[StepTrace]) -> Self {
        let lcrs: Vec<f64> = traces.iter().filter_map(StepTrace::lcr).collect();
        Self {
            mode: label.mode.clone(),
            num_se: label.num_se,
            num_lps: label.num_lps,
            steps: traces.len() as u64,
            seed: label.seed,
            total_wct_s: traces.iter().map(|t| t.wall_nanos).sum::<u64>() as f64 / 1e9,
            avg_lcr: (!lcrs.is_empty()).then(|| lcrs.iter().sum::<f64>() / lcrs.len() as f64),
            final_lcr: traces.iter().rev().find_map(StepTrace::lcr),
            total_interactions: traces.iter().map(StepTrace::interactions).sum(),
            total_sent_pings: traces.iter().map(|t| t.sent_pings).sum(),
            total_migrations: traces.iter().map(|t| t.migrations).sum(),
            final_digest: traces.last().map_or(0, |t| t.digest),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("no per-LP records to merge")]
    Empty,
    #[error("lp{lp} has {got} records, lp0 has {want}")]
    Length { lp: u32, got: usize, want: usize },
    #[error("step {step}: LPs disagree on {what}")]
    Disagree { step: Timestep, what: &'static str },
}

/// Merges per-LP records (indexed by LP) into global step traces.
///
/// `end_nanos[lp][i]` is when LP `lp` completed its `i`-th step, measured
/// from a common run start; a step's wall time is the growth of the
/// latest completion across LPs.
pub fn merge_records(per_lp: &[Vec<StepRecord>], end_nanos: &[Vec<u64>]) -> Result<Vec<StepTrace>, MergeError> {
    let first = per_lp.first().ok_or(MergeError::Empty)?;
    for (lp, recs) in per_lp.iter().enumerate() {
        if recs.len() != first.len() || end_nanos.get(lp).map(Vec::len) != Some(first.len()) {
            return Err(MergeError::Length { lp: lp as u32, got: recs.len(), want: first.len() });
        }
    }
    let mut prev_end = 0u64;
    let mut out = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let rows: Vec<&StepRecord> = per_lp.iter().map(|r| &r[i]).collect();
        let step = rows[0].step;
        for r in &rows {
            if r.step != step {
                return Err(MergeError::Disagree { step, what: "step number" });
            }
            if r.se_counts != rows[0].se_counts {
                return Err(MergeError::Disagree { step, what: "placement" });
            }
            if r.committed != rows[0].committed {
                return Err(MergeError::Disagree { step, what: "committed migrations" });
            }
        }
        let end = end_nanos.iter().map(|e| e[i]).max().unwrap_or(0);
        out.push(StepTrace {
            step,
            local_interactions: rows.iter().map(|r| r.local_interactions).sum(),
            remote_interactions: rows.iter().map(|r| r.remote_interactions).sum(),
            sent_pings: rows.iter().map(|r| r.sent_pings).sum(),
            migrations: rows[0].committed,
            se_count_per_lp: rows[0].se_counts.clone(),
            busy_nanos_per_lp: rows.iter().enumerate().map(|(lp, r)| r.busy_nanos[lp]).collect(),
            digest: combine(rows.iter().map(|r| r.partial_digest)),
            wall_nanos: end.saturating_sub(prev_end),
        });
        prev_end = prev_end.max(end);
    }
    Ok(out)
}

/// Per-LP record plus the LP-local completion time, as stored in `lp<k>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpTraceRow {
    pub record: StepRecord,
    pub end_nanos: u64,
}

pub fn merge_lp_rows(rows: &[Vec<LpTraceRow>]) -> Result<Vec<StepTrace>, MergeError> {
    let recs: Vec<Vec<StepRecord>> = rows.iter().map(|r| r.iter().map(|x| x.record.clone()).collect()).collect();
    let ends: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x.end_nanos).collect()).collect();
    merge_records(&recs, &ends)
}
