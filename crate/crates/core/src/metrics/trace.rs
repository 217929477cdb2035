//! CSV trace files. Schemas are documented in `docs/traces.md`.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ids::{LpId, Timestep};
use crate::sync::StepRecord;

use super::{LpTraceRow, RunLabel, RunSummary, StepTrace};

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const LP_FILE_PREFIX: &str = "lp";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: line {line}: {msg}")]
    Malformed { path: PathBuf, line: u64, msg: String },
}

fn lp_columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn steps_header(num_lps: usize) -> Vec<String> {
    let mut h: Vec<String> =
        ["step", "local_interactions", "remote_interactions", "sent_pings", "migrations"].map(String::from).into();
    h.extend(lp_columns("se_count_lp", num_lps));
    h.extend(lp_columns("busy_ns_lp", num_lps));
    h.push("digest".into());
    h.push("wall_ns".into());
    h
}

fn lp_header(num_lps: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "step",
        "lp",
        "local_interactions",
        "remote_interactions",
        "sent_pings",
        "events_generated",
        "committed",
        "admitted",
        "intents",
        "migrations_out",
    ]
    .map(String::from)
    .into();
    h.extend(lp_columns("se_count_lp", num_lps));
    h.extend(lp_columns("busy_ns_lp", num_lps));
    h.push("partial_digest".into());
    h.push("end_ns".into());
    h
}

const SUMMARY_HEADER: [&str; 12] = [
    "mode",
    "num_se",
    "num_lps",
    "steps",
    "seed",
    "total_wct_s",
    "avg_lcr",
    "final_lcr",
    "total_interactions",
    "total_sent_pings",
    "total_migrations",
    "final_digest",
];

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, TraceError> {
    let file = fs::File::create(path).map_err(|source| TraceError::Io { path: path.into(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> TraceError + '_ {
    move |source| TraceError::Csv { path: path.into(), source }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_steps(path: &Path, num_lps: usize, traces: &[StepTrace]) -> Result<(), TraceError> {
    let mut w = writer(path)?;
    w.write_record(steps_header(num_lps)).map_err(csv_err(path))?;
    for t in traces {
        let mut row = vec![
            t.step.0.to_string(),
            t.local_interactions.to_string(),
            t.remote_interactions.to_string(),
            t.sent_pings.to_string(),
            t.migrations.to_string(),
        ];
        row.extend(t.se_count_per_lp.iter().map(u32::to_string));
        row.extend(t.busy_nanos_per_lp.iter().map(u64::to_string));
        row.push(format!("{:016x}", t.digest));
        row.push(t.wall_nanos.to_string());
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| TraceError::Io { path: path.into(), source })
}

pub fn write_summary(path: &Path, s: &RunSummary) -> Result<(), TraceError> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    w.write_record([
        s.mode.clone(),
        s.num_se.to_string(),
        s.num_lps.to_string(),
        s.steps.to_string(),
        s.seed.to_string(),
        format!("{:.9}", s.total_wct_s),
        opt(s.avg_lcr),
        opt(s.final_lcr),
        s.total_interactions.to_string(),
        s.total_sent_pings.to_string(),
        s.total_migrations.to_string(),
        format!("{:016x}", s.final_digest),
    ])
    .map_err(csv_err(path))?;
    w.flush().map_err(|source| TraceError::Io { path: path.into(), source })
}

pub fn write_lp_records(path: &Path, num_lps: usize, rows: &[LpTraceRow]) -> Result<(), TraceError> {
    let mut w = writer(path)?;
    w.write_record(lp_header(num_lps)).map_err(csv_err(path))?;
    for LpTraceRow { record: r, end_nanos } in rows {
        let mut row = vec![
            r.step.0.to_string(),
            r.lp.0.to_string(),
            r.local_interactions.to_string(),
            r.remote_interactions.to_string(),
            r.sent_pings.to_string(),
            r.events_generated.to_string(),
            r.committed.to_string(),
            r.admitted.to_string(),
            r.intents.to_string(),
            r.migrations_out.to_string(),
        ];
        row.extend(r.se_counts.iter().map(u32::to_string));
        row.extend(r.busy_nanos.iter().map(u64::to_string));
        row.push(format!("{:016x}", r.partial_digest));
        row.push(end_nanos.to_string());
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| TraceError::Io { path: path.into(), source })
}

/// Writes `steps.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn write_traces(dir: &Path, label: &RunLabel, traces: &[StepTrace]) -> Result<RunSummary, TraceError> {
    fs::create_dir_all(dir).map_err(|source| TraceError::Io { path: dir.into(), source })?;
    write_steps(&dir.join(STEPS_FILE), label.num_lps as usize, traces)?;
    let summary = RunSummary::from_traces(label, traces);
    write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

struct Rows {
    path: PathBuf,
    header: Vec<String>,
    records: Vec<(u64, csv::StringRecord)>,
}

fn load(path: &Path) -> Result<Rows, TraceError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    Ok(Rows { path: path.into(), header, records })
}

impl Rows {
    fn num_lps(&self) -> usize {
        self.header.iter().filter(|h| h.starts_with("se_count_lp")).count()
    }

    fn expect_header(&self, want: &[String]) -> Result<(), TraceError> {
        if self.header != want {
            return Err(TraceError::Malformed {
                path: self.path.clone(),
                line: 1,
                msg: format!("unexpected header, want {}", want.join(",")),
            });
        }
        Ok(())
    }

    fn field<T: std::str::FromStr>(&self, line: u64, rec: &csv::StringRecord, i: usize) -> Result<T, TraceError> {
        let raw = rec.get(i).unwrap_or("");
        raw.parse().map_err(|_| TraceError::Malformed {
            path: self.path.clone(),
            line,
            msg: format!("column {}: cannot parse {raw:?}", self.header.get(i).map_or("?", String::as_str)),
        })
    }

    fn hex(&self, line: u64, rec: &csv::StringRecord, i: usize) -> Result<u64, TraceError> {
        let raw = rec.get(i).unwrap_or("");
        u64::from_str_radix(raw, 16).map_err(|_| TraceError::Malformed {
            path: self.path.clone(),
            line,
            msg: format!("column {}: bad hex {raw:?}", self.header.get(i).map_or("?", String::as_str)),
        })
    }

    fn opt_f64(&self, line: u64, rec: &csv::StringRecord, i: usize) -> Result<Option<f64>, TraceError> {
        if rec.get(i).unwrap_or("").is_empty() {
            Ok(None)
        } else {
            self.field(line, rec, i).map(Some)
        }
    }
}

pub fn read_steps(path: &Path) -> Result<Vec<StepTrace>, TraceError> {
    let rows = load(path)?;
    let n = rows.num_lps();
    rows.expect_header(&steps_header(n))?;
    let mut out = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let line = *line;
        let mut se = Vec::with_capacity(n);
        let mut busy = Vec::with_capacity(n);
        for k in 0..n {
            se.push(rows.field(line, rec, 5 + k)?);
            busy.push(rows.field(line, rec, 5 + n + k)?);
        }
        out.push(StepTrace {
            step: Timestep(rows.field(line, rec, 0)?),
            local_interactions: rows.field(line, rec, 1)?,
            remote_interactions: rows.field(line, rec, 2)?,
            sent_pings: rows.field(line, rec, 3)?,
            migrations: rows.field(line, rec, 4)?,
            se_count_per_lp: se,
            busy_nanos_per_lp: busy,
            digest: rows.hex(line, rec, 5 + 2 * n)?,
            wall_nanos: rows.field(line, rec, 6 + 2 * n)?,
        });
    }
    Ok(out)
}

pub fn read_summary(path: &Path) -> Result<RunSummary, TraceError> {
    let rows = load(path)?;
    let want: Vec<String> = SUMMARY_HEADER.map(String::from).into();
    rows.expect_header(&want)?;
    let (line, rec) = rows.records.first().ok_or_else(|| TraceError::Malformed {
        path: path.into(),
        line: 2,
        msg: "no data row".into(),
    })?;
    let line = *line;
    Ok(RunSummary {
        mode: rec.get(0).unwrap_or("").to_string(),
        num_se: rows.field(line, rec, 1)?,
        num_lps: rows.field(line, rec, 2)?,
        steps: rows.field(line, rec, 3)?,
        seed: rows.field(line, rec, 4)?,
        total_wct_s: rows.field(line, rec, 5)?,
        avg_lcr: rows.opt_f64(line, rec, 6)?,
        final_lcr: rows.opt_f64(line, rec, 7)?,
        total_interactions: rows.field(line, rec, 8)?,
        total_sent_pings: rows.field(line, rec, 9)?,
        total_migrations: rows.field(line, rec, 10)?,
        final_digest: rows.hex(line, rec, 11)?,
    })
}

pub fn read_lp_records(path: &Path) -> Result<Vec<LpTraceRow>, TraceError> {
    let rows = load(path)?;
    let n = rows.num_lps();
    rows.expect_header(&lp_header(n))?;
    let mut out = Vec::with_capacity(rows.records.len());
    for (line, rec) in &rows.records {
        let line = *line;
        let mut se = Vec::with_capacity(n);
        let mut busy = Vec::with_capacity(n);
        for k in 0..n {
            se.push(rows.field(line, rec, 10 + k)?);
            busy.push(rows.field(line, rec, 10 + n + k)?);
        }
        let record = StepRecord {
            step: Timestep(rows.field(line, rec, 0)?),
            lp: LpId(rows.field(line, rec, 1)?),
            local_interactions: rows.field(line, rec, 2)?,
            remote_interactions: rows.field(line, rec, 3)?,
            sent_pings: rows.field(line, rec, 4)?,
            events_generated: rows.field(line, rec, 5)?,
            committed: rows.field(line, rec, 6)?,
            admitted: rows.field(line, rec, 7)?,
            intents: rows.field(line, rec, 8)?,
            migrations_out: rows.field(line, rec, 9)?,
            se_counts: se,
            busy_nanos: busy,
            partial_digest: rows.hex(line, rec, 10 + 2 * n)?,
            quota: None,
        };
        out.push(LpTraceRow { record, end_nanos: rows.field(line, rec, 11 + 2 * n)? });
    }
    Ok(out)
}
