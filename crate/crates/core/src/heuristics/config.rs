use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Static,
    Gaia,
    GaiaPlus,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Static, Mode::Gaia, Mode::GaiaPlus];

    pub fn label(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Gaia => "gaia",
            Mode::GaiaPlus => "gaia+",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(Mode::Static),
            "gaia" => Ok(Mode::Gaia),
            "gaia+" | "gaia_plus" | "gaiaplus" => Ok(Mode::GaiaPlus),
            other => Err(format!("unknown mode {other:?} (static|gaia|gaia_plus)")),
        }
    }
}

/// Tunables of the adaptive policies.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicConfig {
    pub mode: Mode,
    /// Sliding window length in steps.
    pub window: u64,
    /// Evaluate every this many steps.
    pub evaluation_interval: u64,
    /// Minimum external fraction that makes an entity a candidate.
    pub external_threshold: f64,
    /// Minimum window interactions before an entity is worth moving.
    pub migration_factor: u64,
    /// Symmetric band half-width, relative to N / num_lps.
    pub symmetric_tolerance: f64,
    pub cooldown: u64,
    /// Relative band around the mean step time that counts as "normal".
    pub slowdown_trigger: f64,
    pub quota_fraction: f64,
    pub ema_alpha: f64,
    /// Weight of peer arrival lag folded into step time.
    pub lag_weight: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Static,
            window: 16,
            evaluation_interval: 8,
            external_threshold: 0.6,
            migration_factor: 8,
            symmetric_tolerance: 0.1,
            cooldown: 24,
            slowdown_trigger: 0.15,
            quota_fraction: 0.2,
            ema_alpha: 0.3,
            lag_weight: 0.5,
        }
    }
}

impl HeuristicConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    /// Returns a description of the first violated constraint.
    pub fn validate(&self) -> Result<(), String> {
        let checks: [(bool, &str); 9] = [
            (self.window >= 1, "window must be >= 1"),
            (self.evaluation_interval >= 1, "evaluation_interval must be >= 1"),
            (self.external_threshold > 0.0 && self.external_threshold < 1.0, "threshold must be in (0,1)"),
            (self.migration_factor >= 1, "migration_factor must be >= 1"),
            ((0.0..1.0).contains(&self.symmetric_tolerance), "symmetric_tolerance must be in [0,1)"),
            (self.slowdown_trigger > 0.0, "slowdown_trigger must be > 0"),
            (self.quota_fraction > 0.0 && self.quota_fraction <= 1.0, "quota_fraction must be in (0,1]"),
            (self.ema_alpha > 0.0 && self.ema_alpha <= 1.0, "ema_alpha must be in (0,1]"),
            (self.lag_weight >= 0.0, "lag_weight must be >= 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }
}
