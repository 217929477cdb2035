//! Identifier newtypes shared by every layer of the engine.

use std::fmt;

/// Globally unique simulated-entity id, dense in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeId(pub u64);

/// Logical process id, dense in `[0, num_lps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LpId(pub u32);

/// One fixed-size simulated step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestep(pub u64);

impl SeId {
    /// Destination sentinel for broadcast events.
    pub const BROADCAST: SeId = SeId(u64::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LpId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Timestep {
    pub fn next(self) -> Timestep {
        Timestep(self.0 + 1)
    }

    /// Previous step, saturating at zero.
    pub fn prev(self) -> Timestep {
        Timestep(self.0.saturating_sub(1))
    }
}

impl fmt::Display for SeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "se{}", self.0)
    }
}

impl fmt::Display for LpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lp{}", self.0)
    }
}

impl fmt::Display for Timestep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}
