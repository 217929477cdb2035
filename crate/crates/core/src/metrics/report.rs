//! Static SVG charts and the WCT comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use plotters::style::text_anchor::{HPos, Pos, VPos};
use thiserror::Error;

use super::trace::{read_lp_records, read_steps, read_summary, write_traces, TraceError};
use super::{merge_lp_rows, RunLabel, RunSummary, StepTrace, LP_FILE_PREFIX, STEPS_FILE, SUMMARY_FILE};

pub const LABEL_FILE: &str = "run.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no usable trace directory: {}", .0.join("; "))]
    NoTraces(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error("chart {file}: {msg}")]
    Chart { file: String, msg: String },
}

/// Gain of `mode` over the static baseline, in percent.
pub fn gain(static_wct: f64, mode_wct: f64) -> f64 {
    if static_wct == 0.0 {
        0.0
    } else {
        (static_wct - mode_wct) / static_wct * 100.0
    }
}

#[derive(Debug)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub traces: Vec<StepTrace>,
}

#[derive(Debug, Default)]
pub struct Report {
    pub runs: Vec<LoadedRun>,
    pub diagnostics: Vec<String>,
    pub charts: Vec<PathBuf>,
    pub table: String,
}

/// Writes the identification file that lets the report tool merge per-LP traces.
pub fn write_label(dir: &Path, label: &RunLabel) -> Result<(), TraceError> {
    let path = dir.join(LABEL_FILE);
    let text = format!("mode,num_se,num_lps,seed\n{},{},{},{}\n", label.mode, label.num_se, label.num_lps, label.seed);
    fs::write(&path, text).map_err(|source| TraceError::Io { path, source })
}

fn read_label(dir: &Path) -> Result<RunLabel, String> {
    let path = dir.join(LABEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let row = text.lines().nth(1).ok_or_else(|| format!("{}: no data row", path.display()))?;
    let f: Vec<&str> = row.split(',').collect();
    let bad = || format!("{}: malformed row {row:?}", path.display());
    if f.len() != 4 {
        return Err(bad());
    }
    Ok(RunLabel {
        mode: f[0].to_string(),
        num_se: f[1].parse().map_err(|_| bad())?,
        num_lps: f[2].parse().map_err(|_| bad())?,
        seed: f[3].parse().map_err(|_| bad())?,
    })
}

/// Loads one trace directory, merging per-LP files first when only those exist.
pub fn load_run(dir: &Path) -> Result<LoadedRun, String> {
    if !dir.is_dir() {
        return Err(format!("{}: not a directory", dir.display()));
    }
    if !dir.join(SUMMARY_FILE).exists() {
        merge_lp_dir(dir)?;
    }
    let summary = read_summary(&dir.join(SUMMARY_FILE)).map_err(|e| e.to_string())?;
    let traces = read_steps(&dir.join(STEPS_FILE)).map_err(|e| e.to_string())?;
    Ok(LoadedRun { dir: dir.into(), summary, traces })
}

fn merge_lp_dir(dir: &Path) -> Result<(), String> {
    let label = read_label(dir).map_err(|e| format!("{}: no {SUMMARY_FILE} and {e}", dir.display()))?;
    let mut rows = Vec::new();
    for k in 0..label.num_lps {
        let p = dir.join(format!("{LP_FILE_PREFIX}{k}.csv"));
        rows.push(read_lp_records(&p).map_err(|e| e.to_string())?);
    }
    let traces = merge_lp_rows(&rows).map_err(|e| format!("{}: {e}", dir.display()))?;
    write_traces(dir, &label, &traces).map_err(|e| e.to_string())?;
    Ok(())
}

fn chart_err(file: &str) -> impl Fn(String) -> ReportError + '_ {
    move |msg| ReportError::Chart { file: file.into(), msg }
}

macro_rules! tryc {
    ($e:expr, $file:expr) => {
        $e.map_err(|e| chart_err($file)(e.to_string()))?
    };
}

const W: u32 = 900;
const H: u32 = 560;

fn series_by_mode(runs: &[LoadedRun], value: impl Fn(&LoadedRun) -> f64) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut m: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in runs {
        m.entry(r.summary.mode.clone()).or_default().push((r.summary.num_se as f64, value(r)));
    }
    for v in m.values_mut() {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    m
}

fn line_chart(
    path: &Path,
    caption: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[(String, Vec<(f64, f64)>, bool)],
) -> Result<(), ReportError> {
    let file = path.display().to_string();
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y1) = (f64::MAX, f64::MIN, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1) = (0.0, 1.0);
    }
    if x0 == x1 {
        x1 = x0 + 1.0;
    }
    let y1 = if y1 <= 0.0 { 1.0 } else { y1 * 1.05 };
    let root = SVGBackend::new(path, (W, H)).into_drawing_area();
    tryc!(root.fill(&WHITE), &file);
    let mut chart = tryc!(
        ChartBuilder::on(&root)
            .caption(caption, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, 0.0..y1),
        &file
    );
    tryc!(chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw(), &file);
    for (i, (name, points, dashed)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let style = if *dashed { color.stroke_width(1) } else { color.stroke_width(2) };
        let drawn = tryc!(chart.draw_series(LineSeries::new(points.iter().copied(), style)), &file);
        drawn.label(name.as_str()).legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    tryc!(
        chart.configure_series_labels().background_style(WHITE.mix(0.85)).border_style(BLACK).draw(),
        &file
    );
    tryc!(root.present(), &file);
    Ok(())
}

fn bar_chart(path: &Path, runs: &[LoadedRun]) -> Result<(), ReportError> {
    let file = path.display().to_string();
    let sizes: Vec<u64> = {
        let mut s: Vec<u64> = runs.iter().map(|r| r.summary.num_se).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let modes: Vec<String> = {
        let mut m: Vec<String> = runs.iter().map(|r| r.summary.mode.clone()).collect();
        m.sort_by_key(|m| mode_rank(m));
        m.dedup();
        m
    };
    let ymax = runs.iter().map(|r| r.summary.total_wct_s).fold(0.0, f64::max).max(1e-9) * 1.1;
    let root = SVGBackend::new(path, (W, H)).into_drawing_area();
    tryc!(root.fill(&WHITE), &file);
    let mut chart = tryc!(
        ChartBuilder::on(&root)
            .caption("Wall-clock time by population and mode", ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(0.0..sizes.len() as f64, 0.0..ymax),
        &file
    );
    tryc!(chart.configure_mesh().disable_x_mesh().x_labels(0).y_desc("WCT (s)").draw(), &file);
    for (i, n) in sizes.iter().enumerate() {
        let (px, py) = chart.backend_coord(&(i as f64 + 0.5, 0.0));
        let style = TextStyle::from(("sans-serif", 14)).pos(Pos::new(HPos::Center, VPos::Top));
        tryc!(root.draw(&Text::new(format!("N={n}"), (px, py + 8), style)), &file);
    }
    let width = 0.8 / modes.len().max(1) as f64;
    for (mi, mode) in modes.iter().enumerate() {
        let color = Palette99::pick(mi).to_rgba();
        let bars: Vec<_> = runs
            .iter()
            .filter(|r| &r.summary.mode == mode)
            .filter_map(|r| {
                let i = sizes.iter().position(|&n| n == r.summary.num_se)? as f64;
                let x = i + 0.1 + width * mi as f64;
                Some(Rectangle::new([(x, 0.0), (x + width * 0.9, r.summary.total_wct_s)], color.filled()))
            })
            .collect();
        let drawn = tryc!(chart.draw_series(bars), &file);
        drawn.label(mode.as_str()).legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.filled()));
    }
    tryc!(
        chart.configure_series_labels().background_style(WHITE.mix(0.85)).border_style(BLACK).draw(),
        &file
    );
    tryc!(root.present(), &file);
    Ok(())
}

fn mode_rank(m: &str) -> (u8, String) {
    let r = match m {
        "static" => 0,
        "gaia" => 1,
        "gaia+" => 2,
        _ => 3,
    };
    (r, m.to_string())
}

fn running_average(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sum = 0.0;
    points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            sum += y;
            (x, sum / (i + 1) as f64)
        })
        .collect()
}

fn run_name(r: &LoadedRun) -> String {
    format!("{} N={}", r.summary.mode, r.summary.num_se)
}

/// WCT table with gains relative to the static run of the same population.
pub fn gain_table(runs: &[LoadedRun]) -> String {
    let mut rows: Vec<&RunSummary> = runs.iter().map(|r| &r.summary).collect();
    rows.sort_by_key(|s| (s.num_se, mode_rank(&s.mode), s.seed));
    let mut out = String::new();
    let _ = writeln!(out, "{:>8} {:>8} {:>6} {:>12} {:>8} {:>8} {:>10}", "N", "mode", "LPs", "WCT (s)", "gain %", "avg LCR", "migrations");
    for s in &rows {
        let base = rows.iter().find(|b| b.num_se == s.num_se && b.mode == "static" && b.num_lps == s.num_lps);
        let g = base.map_or("-".to_string(), |b| format!("{:.2}", gain(b.total_wct_s, s.total_wct_s)));
        let lcr = s.avg_lcr.map_or("-".to_string(), |l| format!("{l:.3}"));
        let _ = writeln!(
            out,
            "{:>8} {:>8} {:>6} {:>12.3} {:>8} {:>8} {:>10}",
            s.num_se, s.mode, s.num_lps, s.total_wct_s, g, lcr, s.total_migrations
        );
    }
    out
}

/// Loads every directory, writes charts into `out_dir` and returns the report.
/// Unreadable directories are reported as diagnostics and skipped.
pub fn render_report(dirs: &[PathBuf], out_dir: &Path) -> Result<Report, ReportError> {
    let mut report = Report::default();
    for d in dirs {
        match load_run(d) {
            Ok(r) => report.runs.push(r),
            Err(e) => report.diagnostics.push(e),
        }
    }
    if report.runs.is_empty() {
        return Err(ReportError::NoTraces(report.diagnostics));
    }
    fs::create_dir_all(out_dir).map_err(|e| ReportError::Io(format!("{}: {e}", out_dir.display())))?;
    let runs = &report.runs;

    if runs.len() > 1 {
        let msgs = out_dir.join("messages.svg");
        let series: Vec<_> = series_by_mode(runs, |r| r.summary.total_interactions as f64)
            .into_iter()
            .map(|(m, p)| (m, p, false))
            .collect();
        line_chart(&msgs, "Interactions vs population", "N", "total interactions", &series)?;
        report.charts.push(msgs);
        let wct = out_dir.join("wct.svg");
        bar_chart(&wct, runs)?;
        report.charts.push(wct);
    }

    let lcr_path = out_dir.join("lcr.svg");
    let mut lcr_series = Vec::new();
    for r in runs {
        let pts: Vec<(f64, f64)> = r.traces.iter().filter_map(|t| Some((t.step.0 as f64, t.lcr()?))).collect();
        let avg = running_average(&pts);
        lcr_series.push((format!("{} LCR", run_name(r)), pts, false));
        lcr_series.push((format!("{} running avg", run_name(r)), avg, true));
    }
    line_chart(&lcr_path, "Local communication ratio", "step", "LCR", &lcr_series)?;
    report.charts.push(lcr_path);

    let alloc_path = out_dir.join("allocation.svg");
    let first = &runs[0];
    let n_lps = first.traces.first().map_or(0, |t| t.se_count_per_lp.len());
    let alloc: Vec<_> = (0..n_lps)
        .map(|k| {
            let pts = first.traces.iter().map(|t| (t.step.0 as f64, t.se_count_per_lp[k] as f64)).collect();
            (format!("LP{k}"), pts, false)
        })
        .collect();
    line_chart(&alloc_path, &format!("Entities per LP ({})", run_name(first)), "step", "entities", &alloc)?;
    report.charts.push(alloc_path);

    report.table = gain_table(runs);
    fs::write(out_dir.join("summary.txt"), &report.table)
        .map_err(|e| ReportError::Io(format!("{}: {e}", out_dir.display())))?;
    Ok(report)
}
