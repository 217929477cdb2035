//! Injectable network profiles for the simulated backend.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::ids::LpId;
use crate::ini::{self, IniError};

/// Properties of one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    /// One-way mean latency.
    pub latency_ms: f64,
    /// Half-width of the uniform jitter band.
    pub jitter_ms: f64,
    /// `None` means unlimited.
    pub bandwidth_mbps: Option<f64>,
}

impl LinkSpec {
    pub const IDEAL: LinkSpec = LinkSpec { latency_ms: 0.0, jitter_ms: 0.0, bandwidth_mbps: None };
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read profile {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("profile {path}: {source}")]
    Parse { path: String, source: IniError },
}

/// Per-directed-pair link specs plus per-LP CPU slowdown factors.
///
/// Pairs not listed in a profile file behave as ideal links.
#[derive(Debug, Clone, PartialEq)]
pub struct NetProfile {
    links: BTreeMap<(LpId, LpId), LinkSpec>,
    cpu_slowdown: BTreeMap<LpId, f64>,
}

impl Default for NetProfile {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NetProfile {
    /// Zero latency, unlimited bandwidth, no slowdown.
    pub fn ideal() -> Self {
        Self { links: BTreeMap::new(), cpu_slowdown: BTreeMap::new() }
    }

    /// A three-host wide-area testbed: LP0 in Greece, LP1 in Singapore,
    /// LP2 in California.
    ///
    /// One-way latency is half the measured round-trip time of each directed
    /// pair. The slowdown factors approximate the vCPU disparity of the hosts;
    /// they are an engineering estimate, not a measurement.
    pub fn testbed_paper() -> Self {
        // (from, to, rtt_ms, mbps)
        const PAIRS: [(u32, u32, f64, f64); 6] = [
            (0, 1, 369.7, 17.4),
            (0, 2, 218.7, 6.47),
            (1, 0, 369.6, 35.3),
            (1, 2, 242.1, 1.41),
            (2, 0, 213.0, 1.88),
            (2, 1, 369.7, 1.44),
        ];
        let mut p = Self::ideal();
        for (from, to, rtt, mbps) in PAIRS {
            p.set_link(
                LpId(from),
                LpId(to),
                LinkSpec { latency_ms: rtt / 2.0, jitter_ms: 0.0, bandwidth_mbps: Some(mbps) },
            );
        }
        p.set_cpu_slowdown(LpId(0), 1.0);
        p.set_cpu_slowdown(LpId(1), 2.0);
        p.set_cpu_slowdown(LpId(2), 3.0);
        p
    }

    pub fn link(&self, from: LpId, to: LpId) -> LinkSpec {
        self.links.get(&(from, to)).copied().unwrap_or(LinkSpec::IDEAL)
    }

    pub fn set_link(&mut self, from: LpId, to: LpId, spec: LinkSpec) {
        self.links.insert((from, to), spec);
    }

    pub fn cpu_slowdown(&self, lp: LpId) -> f64 {
        self.cpu_slowdown.get(&lp).copied().unwrap_or(1.0)
    }

    pub fn set_cpu_slowdown(&mut self, lp: LpId, factor: f64) {
        self.cpu_slowdown.insert(lp, factor);
    }

    pub fn from_file(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|source| ProfileError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Parses `[link <from> <to>]` and `[lp <id>]` sections.
    pub fn parse(text: &str) -> Result<Self, IniError> {
        let doc = ini::parse(text)?;
        let mut p = Self::ideal();
        for s in &doc.sections {
            let words = s.words();
            let lp_arg = |w: &str| {
                w.parse::<u32>()
                    .map(LpId)
                    .map_err(|_| IniError::new(s.line, format!("invalid LP id {w:?}")))
            };
            match words.as_slice() {
                ["link", from, to] => {
                    let (from, to) = (lp_arg(from)?, lp_arg(to)?);
                    let latency_ms = s.parse::<f64>("latency_ms")?.unwrap_or(0.0);
                    let jitter_ms = s.parse::<f64>("jitter_ms")?.unwrap_or(0.0);
                    if latency_ms < 0.0 || jitter_ms < 0.0 {
                        return Err(IniError::new(s.line, "latency and jitter must be >= 0"));
                    }
                    let bandwidth_mbps = match (s.get("bandwidth_mbps"), s.get("bandwidth")) {
                        (Some(e), _) | (None, Some(e)) if e.value == "unlimited" => None,
                        (Some(e), _) | (None, Some(e)) => {
                            let v: f64 = e.value.parse().map_err(|_| {
                                IniError::new(e.line, format!("invalid bandwidth {:?}", e.value))
                            })?;
                            if v <= 0.0 {
                                return Err(IniError::new(e.line, "bandwidth must be > 0"));
                            }
                            Some(v)
                        }
                        (None, None) => None,
                    };
                    p.set_link(from, to, LinkSpec { latency_ms, jitter_ms, bandwidth_mbps });
                }
                ["lp", id] => {
                    let id = lp_arg(id)?;
                    if let Some(f) = s.parse::<f64>("cpu_slowdown")? {
                        if f < 1.0 {
                            return Err(IniError::new(s.line, "cpu_slowdown must be >= 1"));
                        }
                        p.set_cpu_slowdown(id, f);
                    }
                }
                _ => return Err(IniError::new(s.line, format!("unknown section [{}]", s.name))),
            }
        }
        Ok(p)
    }

    /// Serializes back into the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((from, to), l) in &self.links {
            out.push_str(&format!("[link {} {}]\nlatency_ms = {}\njitter_ms = {}\n", from.0, to.0, l.latency_ms, l.jitter_ms));
            match l.bandwidth_mbps {
                Some(b) => out.push_str(&format!("bandwidth_mbps = {b}\n\n")),
                None => out.push_str("bandwidth_mbps = unlimited\n\n"),
            }
        }
        for (lp, f) in &self.cpu_slowdown {
            out.push_str(&format!("[lp {}]\ncpu_slowdown = {f}\n\n", lp.0));
        }
        out
    }
}
