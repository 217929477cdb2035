//! Run configuration: INI-style file plus `section.key=value` overrides.
//! The schema is documented in `docs/config.md`.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::driver::CostModel;
use crate::geom::Arena;
use crate::heuristics::{HeuristicConfig, Mode};
use crate::ids::LpId;
use crate::ini::{self, Entry, IniError, Section};
use crate::manet::ModelConfig;
use crate::transport::{NetProfile, ProfileError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Syntax { path: String, source: IniError },
    #[error("override {0:?}: expected section.key=value")]
    Override(String),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("network profile file {0} does not exist")]
    MissingProfile(PathBuf),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Sim,
    Tcp,
}

impl FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sim" => Ok(Self::Sim),
            "tcp" => Ok(Self::Tcp),
            _ => Err("expected sim or tcp".into()),
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sim => "sim",
            Self::Tcp => "tcp",
        })
    }
}

/// How `run` schedules LPs inside one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    /// Deterministic single-threaded virtual clock.
    Virtual,
    /// One OS thread per LP over in-process channels, real time.
    Threads,
}

impl FromStr for Scheduler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "virtual" => Ok(Self::Virtual),
            "threads" => Ok(Self::Threads),
            _ => Err("expected virtual or threads".into()),
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Virtual => "virtual",
            Self::Threads => "threads",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub mode: RunMode,
    pub num_lps: u32,
    pub global_seed: u64,
    pub trace_dir: PathBuf,
    pub barrier_timeout_s: f64,
    pub scheduler: Scheduler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetSection {
    /// Resolved against the config file's directory.
    pub profile: Option<PathBuf>,
    pub this_lp: Option<u32>,
    pub connect_retries: u32,
    pub retry_delay_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub heuristics: HeuristicConfig,
    pub run: RunSection,
    pub net: NetSection,
    pub peers: Vec<String>,
    pub cost: CostModel,
    pub profile: NetProfile,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            heuristics: HeuristicConfig::default(),
            run: RunSection {
                mode: RunMode::Sim,
                num_lps: 3,
                global_seed: 1,
                trace_dir: PathBuf::from("traces"),
                barrier_timeout_s: 60.0,
                scheduler: Scheduler::Virtual,
            },
            net: NetSection { profile: None, this_lp: None, connect_retries: 30, retry_delay_ms: 1000 },
            peers: Vec::new(),
            cost: CostModel::default(),
            profile: NetProfile::ideal(),
        }
    }
}

fn val<T>(e: &Entry) -> Result<T, IniError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    e.value.parse().map_err(|err| IniError::new(e.line, format!("{}: invalid value {:?}: {err}", e.key, e.value)))
}

fn unknown(section: &Section, e: &Entry) -> IniError {
    IniError::new(e.line, format!("unknown key {:?} in [{}]", e.key, section.name))
}

fn apply_model(s: &Section, m: &mut ModelConfig) -> Result<(), IniError> {
    for e in &s.entries {
        match e.key.as_str() {
            "num_mh" => m.num_mh = val(e)?,
            "radius" => m.radius = val(e)?,
            "fraction" => m.broadcast_fraction = val(e)?,
            "steps" => m.steps = val(e)?,
            "speed_min" => m.speed_min = val(e)?,
            "speed_max" => m.speed_max = val(e)?,
            "arena_w" => m.arena = Arena::new(val(e)?, m.arena.height),
            "arena_h" => m.arena = Arena::new(m.arena.width, val(e)?),
            "waypoint_eps" => m.waypoint_eps = val(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_heuristics(s: &Section, h: &mut HeuristicConfig) -> Result<(), IniError> {
    for e in &s.entries {
        match e.key.as_str() {
            "mode" => h.mode = val::<Mode>(e)?,
            "window" => h.window = val(e)?,
            "evaluation_interval" => h.evaluation_interval = val(e)?,
            "theta" => h.external_threshold = val(e)?,
            "migration_factor" => h.migration_factor = val(e)?,
            "delta" => h.symmetric_tolerance = val(e)?,
            "cooldown" => h.cooldown = val(e)?,
            "epsilon" => h.slowdown_trigger = val(e)?,
            "quota" => h.quota_fraction = val(e)?,
            "alpha" => h.ema_alpha = val(e)?,
            "lag_weight" => h.lag_weight = val(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_run(s: &Section, r: &mut RunSection) -> Result<(), IniError> {
    for e in &s.entries {
        match e.key.as_str() {
            "mode" => r.mode = val(e)?,
            "num_lps" => r.num_lps = val(e)?,
            "global_seed" => r.global_seed = val(e)?,
            "trace_dir" => r.trace_dir = PathBuf::from(&e.value),
            "barrier_timeout_s" => r.barrier_timeout_s = val(e)?,
            "scheduler" => r.scheduler = val(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_net(s: &Section, n: &mut NetSection, base: &Path) -> Result<(), IniError> {
    for e in &s.entries {
        match e.key.as_str() {
            "profile" => n.profile = (!e.value.is_empty()).then(|| base.join(&e.value)),
            "this_lp" => n.this_lp = Some(val(e)?),
            "connect_retries" => n.connect_retries = val(e)?,
            "retry_delay_ms" => n.retry_delay_ms = val(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_cost(s: &Section, c: &mut CostModel) -> Result<(), IniError> {
    for e in &s.entries {
        match e.key.as_str() {
            "entity_ns" => c.entity_ns = val(e)?,
            "event_in_ns" => c.event_in_ns = val(e)?,
            "local_delivery_ns" => c.local_delivery_ns = val(e)?,
            "remote_delivery_ns" => c.remote_delivery_ns = val(e)?,
            "frame_out_ns" => c.frame_out_ns = val(e)?,
            "migration_ns" => c.migration_ns = val(e)?,
            _ => return Err(unknown(s, e)),
        }
    }
    Ok(())
}

fn apply_peers(s: &Section, peers: &mut Vec<(u32, String, usize)>) -> Result<(), IniError> {
    for e in &s.entries {
        let id: u32 = e.key.parse().map_err(|_| IniError::new(e.line, format!("peer key {:?} is not an LP id", e.key)))?;
        peers.retain(|p| p.0 != id);
        peers.push((id, e.value.clone(), e.line));
    }
    Ok(())
}

/// Splits `section.key=value`.
pub fn parse_override(raw: &str) -> Result<(String, String, String), ConfigError> {
    let (lhs, value) = raw.split_once('=').ok_or_else(|| ConfigError::Override(raw.into()))?;
    let (section, key) = lhs.trim().split_once('.').ok_or_else(|| ConfigError::Override(raw.into()))?;
    if section.is_empty() || key.is_empty() {
        return Err(ConfigError::Override(raw.into()));
    }
    Ok((section.to_string(), key.to_string(), value.trim().to_string()))
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &path.display().to_string(), &base, overrides)
    }

    /// Parses config text; `origin` names it in diagnostics and relative
    /// paths inside it resolve against `base`.
    pub fn parse(text: &str, origin: &str, base: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let syntax = |source| ConfigError::Syntax { path: origin.to_string(), source };
        let mut doc = ini::parse(text).map_err(syntax)?;
        for raw in overrides {
            let (section, key, value) = parse_override(raw)?;
            let idx = match doc.sections.iter().position(|s| s.name == section) {
                Some(i) => i,
                None => {
                    doc.sections.push(Section { name: section.clone(), line: 0, entries: Vec::new() });
                    doc.sections.len() - 1
                }
            };
            doc.sections[idx].entries.push(Entry { key, value, line: 0 });
        }

        let mut cfg = RunConfig::default();
        let mut peers = Vec::new();
        for s in &doc.sections {
            let r = match s.name.as_str() {
                "model" => apply_model(s, &mut cfg.model),
                "heuristics" => apply_heuristics(s, &mut cfg.heuristics),
                "run" => apply_run(s, &mut cfg.run),
                "net" => apply_net(s, &mut cfg.net, base),
                "cost" => apply_cost(s, &mut cfg.cost),
                "peers" => apply_peers(s, &mut peers),
                other => Err(IniError::new(s.line, format!("unknown section [{other}]"))),
            };
            r.map_err(syntax)?;
        }
        cfg.model.seed = cfg.run.global_seed;
        peers.sort_by_key(|p| p.0);
        for (i, p) in peers.iter().enumerate() {
            if p.0 != i as u32 {
                return Err(syntax(IniError::new(p.2, format!("peer ids must be 0..num_lps without gaps, found {}", p.0))));
            }
        }
        cfg.peers = peers.into_iter().map(|p| p.1).collect();

        let invalid = |msg: String| ConfigError::Invalid { path: origin.to_string(), msg };
        cfg.model.validate().map_err(|m| invalid(format!("[model] {m}")))?;
        cfg.heuristics.validate().map_err(|m| invalid(format!("[heuristics] {m}")))?;
        if cfg.run.num_lps < 1 {
            return Err(invalid("[run] num_lps must be >= 1".into()));
        }
        if !(cfg.run.barrier_timeout_s > 0.0) {
            return Err(invalid("[run] barrier_timeout_s must be > 0".into()));
        }
        if cfg.run.mode == RunMode::Tcp && cfg.peers.len() != cfg.run.num_lps as usize {
            return Err(invalid(format!(
                "[peers] lists {} addresses but num_lps = {}",
                cfg.peers.len(),
                cfg.run.num_lps
            )));
        }
        if let Some(lp) = cfg.net.this_lp {
            if lp >= cfg.run.num_lps {
                return Err(invalid(format!("[net] this_lp = {lp} but num_lps = {}", cfg.run.num_lps)));
            }
        }
        if let Some(p) = &cfg.net.profile {
            if !p.exists() {
                return Err(ConfigError::MissingProfile(p.clone()));
            }
            cfg.profile = NetProfile::from_file(p)?;
        }
        for lp in 0..cfg.run.num_lps {
            let f = cfg.profile.cpu_slowdown(LpId(lp));
            if !(f >= 1.0) {
                return Err(invalid(format!("cpu_slowdown of lp {lp} must be >= 1")));
            }
        }
        Ok(cfg)
    }

    pub fn barrier_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.run.barrier_timeout_s)
    }

    /// Effective configuration in the file format, written next to traces.
    pub fn to_ini(&self) -> String {
        let m = &self.model;
        let h = &self.heuristics;
        let r = &self.run;
        let c = &self.cost;
        let mut out = String::new();
        let _ = writeln!(out, "[model]\nnum_mh = {}\nradius = {}\nfraction = {}\nsteps = {}", m.num_mh, m.radius, m.broadcast_fraction, m.steps);
        let _ = writeln!(out, "speed_min = {}\nspeed_max = {}\narena_w = {}\narena_h = {}\nwaypoint_eps = {}", m.speed_min, m.speed_max, m.arena.width, m.arena.height, m.waypoint_eps);
        let _ = writeln!(out, "\n[heuristics]\nmode = {}\nwindow = {}\nevaluation_interval = {}\ntheta = {}", h.mode, h.window, h.evaluation_interval, h.external_threshold);
        let _ = writeln!(out, "migration_factor = {}\ndelta = {}\ncooldown = {}\nepsilon = {}", h.migration_factor, h.symmetric_tolerance, h.cooldown, h.slowdown_trigger);
        let _ = writeln!(out, "quota = {}\nalpha = {}\nlag_weight = {}", h.quota_fraction, h.ema_alpha, h.lag_weight);
        let _ = writeln!(out, "\n[run]\nmode = {}\nnum_lps = {}\nglobal_seed = {}\ntrace_dir = {}", r.mode, r.num_lps, r.global_seed, r.trace_dir.display());
        let _ = writeln!(out, "barrier_timeout_s = {}\nscheduler = {}", r.barrier_timeout_s, r.scheduler);
        let _ = writeln!(out, "\n[net]");
        if let Some(p) = &self.net.profile {
            let _ = writeln!(out, "profile = {}", p.display());
        }
        if let Some(lp) = self.net.this_lp {
            let _ = writeln!(out, "this_lp = {lp}");
        }
        let _ = writeln!(out, "connect_retries = {}\nretry_delay_ms = {}", self.net.connect_retries, self.net.retry_delay_ms);
        let _ = writeln!(out, "\n[cost]\nentity_ns = {}\nevent_in_ns = {}\nlocal_delivery_ns = {}", c.entity_ns, c.event_in_ns, c.local_delivery_ns);
        let _ = writeln!(out, "remote_delivery_ns = {}\nframe_out_ns = {}\nmigration_ns = {}", c.remote_delivery_ns, c.frame_out_ns, c.migration_ns);
        if !self.peers.is_empty() {
            let _ = writeln!(out, "\n[peers]");
            for (i, p) in self.peers.iter().enumerate() {
                let _ = writeln!(out, "{i} = {p}");
            }
        }
        out
    }
}
