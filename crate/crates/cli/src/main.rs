use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{error, info, warn};

use stepsim::config::{ConfigError, RunConfig, RunMode, Scheduler};
use stepsim::driver::{run_lp, run_sim, run_threads, ArrivalOrder, RunOutput, SimOptions};
use stepsim::ids::LpId;
use stepsim::manet::Manet;
use stepsim::metrics::{self, LpTraceRow, RunLabel, RunSummary, LP_FILE_PREFIX};
use stepsim::sync::{LogicalProcess, LpSetup};
use stepsim::transport::tcp::{MeshOptions, TcpError, TcpMesh};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_HANDSHAKE: u8 = 3;

#[derive(Parser)]
#[command(name = "stepsim", version, about = "Time-stepped distributed simulation with adaptive entity migration")]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    /// Config override as section.key=value; repeatable
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every LP in this process
    Run { config: PathBuf },
    /// Run one LP of a TCP deployment
    Launch {
        config: PathBuf,
        /// LP id of this process; defaults to [net] this_lp
        #[arg(long)]
        lp: Option<u32>,
    },
    /// Render charts and the WCT comparison table from trace directories
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Output directory for charts
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Handshake(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp_millis().init();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config, &cli.overrides),
        Command::Launch { config, lp } => cmd_launch(config, *lp, &cli.overrides),
        Command::Report { dirs, out } => cmd_report(dirs, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Handshake(msg)) => {
            eprintln!("handshake failed: {msg}");
            ExitCode::from(EXIT_HANDSHAKE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn label(cfg: &RunConfig) -> RunLabel {
    RunLabel {
        mode: cfg.heuristics.mode.to_string(),
        num_se: cfg.model.num_mh,
        num_lps: cfg.run.num_lps,
        seed: cfg.run.global_seed,
    }
}

fn print_summary(s: &RunSummary) {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!("mode               {}", s.mode);
    println!("entities           {}", s.num_se);
    println!("lps                {}", s.num_lps);
    println!("steps              {}", s.steps);
    println!("seed               {}", s.seed);
    println!("total wct (s)      {:.3}", s.total_wct_s);
    println!("avg lcr            {}", fmt(s.avg_lcr));
    println!("final lcr          {}", fmt(s.final_lcr));
    println!("interactions       {}", s.total_interactions);
    println!("sent pings         {}", s.total_sent_pings);
    println!("migrations         {}", s.total_migrations);
    println!("final digest       {:016x}", s.final_digest);
}

fn write_config_echo(dir: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("config.ini");
    std::fs::write(&path, cfg.to_ini()).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(path: &Path, overrides: &[String]) -> Result<(), Failure> {
    let cfg = RunConfig::load(path, overrides)?;
    if cfg.run.mode != RunMode::Sim {
        return Err(Failure::Config(format!(
            "{}: run needs [run] mode = sim; start TCP deployments with launch",
            path.display()
        )));
    }
    let model = Arc::new(Manet::new(cfg.model.clone()));
    let steps = cfg.model.steps;
    info!(
        "running {} entities on {} LPs for {steps} steps ({}, {} scheduler)",
        cfg.model.num_mh, cfg.run.num_lps, cfg.heuristics.mode, cfg.run.scheduler
    );
    let started = Instant::now();
    let out: RunOutput = match cfg.run.scheduler {
        Scheduler::Virtual => {
            let opts = SimOptions {
                profile: cfg.profile.clone(),
                cost: cfg.cost,
                order: ArrivalOrder::Network,
                net_seed: cfg.run.global_seed,
            };
            run_sim(model, cfg.run.num_lps, &cfg.heuristics, steps, &opts, |_, _| {}).context("simulation aborted")?
        }
        Scheduler::Threads => {
            let slow: Vec<f64> = (0..cfg.run.num_lps).map(|i| cfg.profile.cpu_slowdown(LpId(i))).collect();
            run_threads(model, cfg.run.num_lps, &cfg.heuristics, steps, &slow, cfg.barrier_timeout())
                .context("threaded run aborted")?
        }
    };
    info!("finished in {:.2}s real time", started.elapsed().as_secs_f64());
    let traces = out.traces().context("merging per-LP records")?;
    let dir = &cfg.run.trace_dir;
    let summary = metrics::write_traces(dir, &label(&cfg), &traces).context("writing traces")?;
    write_config_echo(dir, &cfg)?;
    print_summary(&summary);
    println!("traces             {}", dir.display());
    Ok(())
}

fn cmd_launch(path: &Path, lp: Option<u32>, overrides: &[String]) -> Result<(), Failure> {
    let cfg = RunConfig::load(path, overrides)?;
    if cfg.run.mode != RunMode::Tcp {
        return Err(Failure::Config(format!("{}: launch needs [run] mode = tcp", path.display())));
    }
    let me = lp.or(cfg.net.this_lp).ok_or_else(|| {
        Failure::Config(format!("{}: no LP id; pass --lp or set [net] this_lp", path.display()))
    })?;
    if me >= cfg.run.num_lps {
        return Err(Failure::Config(format!("--lp {me} but num_lps = {}", cfg.run.num_lps)));
    }
    let me = LpId(me);
    let opts = MeshOptions {
        connect_retries: cfg.net.connect_retries,
        retry_delay: std::time::Duration::from_millis(cfg.net.retry_delay_ms),
        accept_timeout: cfg.barrier_timeout(),
    };
    info!("{me}: connecting mesh of {} LPs", cfg.run.num_lps);
    let mut mesh = match TcpMesh::connect(me, &cfg.peers, cfg.run.global_seed, &opts) {
        Ok(m) => m,
        Err(TcpError::Handshake(msg)) => return Err(Failure::Handshake(msg)),
        Err(e) => return Err(Failure::Runtime(anyhow::Error::new(e).context("connecting mesh"))),
    };
    let model = Arc::new(Manet::new(cfg.model.clone()));
    let setup = LpSetup { lp: me, num_lps: cfg.run.num_lps, heuristics: cfg.heuristics.clone() };
    let mut process = LogicalProcess::new(setup, model);
    let t0 = Instant::now();
    let slow = cfg.profile.cpu_slowdown(me);
    let result = run_lp(&mut process, &mut mesh, cfg.model.steps, slow, cfg.barrier_timeout(), t0);
    mesh.close();
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            error!("{me}: {e}");
            return Err(Failure::Runtime(anyhow::Error::new(e).context(format!("{me} aborted"))));
        }
    };
    let dir = &cfg.run.trace_dir;
    write_lp_trace(dir, &cfg, me, &out.rows)?;
    let digest = out.rows.last().map_or(0, |r| r.record.partial_digest);
    println!("{me} finished {} steps in {:.3}s", out.rows.len(), t0.elapsed().as_secs_f64());
    println!("partial digest     {digest:016x}");
    println!("traces             {}", dir.display());
    Ok(())
}

fn write_lp_trace(dir: &Path, cfg: &RunConfig, me: LpId, rows: &[LpTraceRow]) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let file = dir.join(format!("{LP_FILE_PREFIX}{}.csv", me.0));
    metrics::write_lp_records(&file, cfg.run.num_lps as usize, rows).context("writing per-LP trace")?;
    metrics::write_label(dir, &label(cfg)).context("writing run label")?;
    if me == LpId(0) {
        write_config_echo(dir, cfg)?;
    }
    Ok(())
}

fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let report = match metrics::render_report(dirs, out) {
        Ok(r) => r,
        Err(e) => {
            return Err(Failure::Runtime(anyhow::anyhow!("{e}")));
        }
    };
    for d in &report.diagnostics {
        warn!("{d}");
        eprintln!("skipped: {d}");
    }
    print!("{}", report.table);
    for c in &report.charts {
        println!("chart              {}", c.display());
    }
    Ok(())
}
