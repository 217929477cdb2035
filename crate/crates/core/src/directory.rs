//! Replicated entity placement and the boundary-synchronous migration protocol.
//!
//! A migration goes through three boundaries:
//!
//! 1. step `t`: the owner decides and broadcasts `MIGRATE_ANNOUNCE`;
//! 2. boundary `t+1`: every LP runs the same admission check over the same
//!    announcement set (canonical SeId order) and marks admitted moves as
//!    pending. From here on, all new traffic for the entity is routed to the
//!    target, which is where the entity will be when that traffic is
//!    delivered. The owner ships `MIGRATE_DATA` during step `t+1`;
//! 3. boundary `t+2`: the target installs the state and the owner switch is
//!    committed on every replica.
//!
//! The entity is resident on exactly one LP in every step.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ids::{LpId, SeId, Timestep};
use crate::transport::frame::MigrateAnnounceBody;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DirectoryError {
    #[error("unknown entity {0}")]
    UnknownSe(SeId),
    #[error("{claimed} announced migration of {se} owned by {actual}")]
    NotOwner { se: SeId, claimed: LpId, actual: LpId },
    #[error("{0} announced twice in one step")]
    DuplicateAnnouncement(SeId),
    #[error("migration target {0} out of range")]
    BadTarget(LpId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MigrationReason {
    Clustering,
    Load,
}

/// A migration decided by the owner's heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MigrationIntent {
    pub se: SeId,
    pub from: LpId,
    pub to: LpId,
    pub decided_at: Timestep,
    pub reason: MigrationReason,
}

impl MigrationIntent {
    pub fn announcement(&self) -> MigrateAnnounceBody {
        MigrateAnnounceBody { step: self.decided_at, se: self.se, from: self.from, to: self.to }
    }
}

/// An admitted move whose state transfer is in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingMove {
    pub se: SeId,
    pub from: LpId,
    pub to: LpId,
    pub admitted_at: Timestep,
}

/// What one boundary did to the map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryOutcome {
    pub committed: Vec<PendingMove>,
    pub admitted: Vec<PendingMove>,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMap {
    owner: Vec<LpId>,
    counts: Vec<u32>,
    pending: BTreeMap<SeId, PendingMove>,
    epoch: Timestep,
}

impl PlacementMap {
    /// Entity `i` starts on LP `i mod num_lps`.
    pub fn round_robin(num_se: u64, num_lps: u32) -> Self {
        assert!(num_lps >= 1);
        let owner: Vec<LpId> = (0..num_se).map(|i| LpId((i % num_lps as u64) as u32)).collect();
        Self::from_owners(owner, num_lps)
    }

    pub fn from_owners(owner: Vec<LpId>, num_lps: u32) -> Self {
        let mut counts = vec![0u32; num_lps as usize];
        for lp in &owner {
            counts[lp.index()] += 1;
        }
        Self { owner, counts, pending: BTreeMap::new(), epoch: Timestep(0) }
    }

    pub fn num_se(&self) -> usize {
        self.owner.len()
    }

    pub fn num_lps(&self) -> u32 {
        self.counts.len() as u32
    }

    pub fn epoch(&self) -> Timestep {
        self.epoch
    }

    /// Committed owner.
    pub fn lookup(&self, se: SeId) -> Result<LpId, DirectoryError> {
        self.owner.get(se.index()).copied().ok_or(DirectoryError::UnknownSe(se))
    }

    /// Where traffic generated now must go: the target of an admitted move,
    /// otherwise the owner.
    pub fn route(&self, se: SeId) -> Result<LpId, DirectoryError> {
        match self.pending.get(&se) {
            Some(m) => Ok(m.to),
            None => self.lookup(se),
        }
    }

    pub fn is_pending(&self, se: SeId) -> bool {
        self.pending.contains_key(&se)
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingMove> {
        self.pending.values()
    }

    /// Committed entity counts per LP.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Counts once every pending move lands.
    pub fn projected_counts(&self) -> Vec<u32> {
        let mut c = self.counts.clone();
        for m in self.pending.values() {
            c[m.from.index()] -= 1;
            c[m.to.index()] += 1;
        }
        c
    }

    /// Applies one boundary: commits every pending move, then admits the
    /// announcements of the previous step in SeId order. `admit` sees the
    /// projected counts including moves admitted earlier in the same batch and
    /// may veto; vetoed announcements are dropped.
    pub fn apply_boundary_updates<F>(
        &mut self,
        step: Timestep,
        announcements: &[MigrateAnnounceBody],
        mut admit: F,
    ) -> Result<BoundaryOutcome, DirectoryError>
    where
        F: FnMut(&MigrateAnnounceBody, &[u32]) -> bool,
    {
        let mut outcome = BoundaryOutcome::default();
        for (_, m) in std::mem::take(&mut self.pending) {
            self.owner[m.se.index()] = m.to;
            self.counts[m.from.index()] -= 1;
            self.counts[m.to.index()] += 1;
            outcome.committed.push(m);
        }

        let mut sorted: Vec<&MigrateAnnounceBody> = announcements.iter().collect();
        sorted.sort_by_key(|a| a.se);
        for pair in sorted.windows(2) {
            if pair[0].se == pair[1].se {
                return Err(DirectoryError::DuplicateAnnouncement(pair[0].se));
            }
        }
        for a in &sorted {
            let actual = self.lookup(a.se)?;
            if actual != a.from {
                return Err(DirectoryError::NotOwner { se: a.se, claimed: a.from, actual });
            }
            if a.to.0 >= self.num_lps() {
                return Err(DirectoryError::BadTarget(a.to));
            }
        }

        let mut projected = self.counts.clone();
        for a in sorted {
            if admit(a, &projected) {
                projected[a.from.index()] -= 1;
                projected[a.to.index()] += 1;
                let m = PendingMove { se: a.se, from: a.from, to: a.to, admitted_at: step };
                self.pending.insert(a.se, m);
                outcome.admitted.push(m);
            } else {
                outcome.rejected += 1;
            }
        }
        self.epoch = step;
        Ok(outcome)
    }

    /// Compact byte image used to compare replicas.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.owner.len() * 4 + self.pending.len() * 16);
        out.extend_from_slice(&self.epoch.0.to_be_bytes());
        for lp in &self.owner {
            out.extend_from_slice(&lp.0.to_be_bytes());
        }
        for m in self.pending.values() {
            out.extend_from_slice(&m.se.0.to_be_bytes());
            out.extend_from_slice(&m.to.0.to_be_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(se: u64, from: u32, to: u32) -> MigrateAnnounceBody {
        MigrateAnnounceBody { step: Timestep(1), se: SeId(se), from: LpId(from), to: LpId(to) }
    }

    #[test]
    fn round_robin_lookup() {
        let m = PlacementMap::round_robin(9, 3);
        assert_eq!(m.lookup(SeId(4)), Ok(LpId(1)));
        assert_eq!(m.lookup(SeId(4)), m.lookup(SeId(4)));
        assert_eq!(m.counts(), [3, 3, 3]);
        assert_eq!(m.lookup(SeId(9)), Err(DirectoryError::UnknownSe(SeId(9))));
    }

    #[test]
    fn migration_commits_one_boundary_after_admission() {
        let mut m = PlacementMap::round_robin(9, 3);
        let out = m.apply_boundary_updates(Timestep(2), &[ann(4, 1, 2)], |_, _| true).unwrap();
        assert_eq!(out.admitted.len(), 1);
        assert_eq!(m.lookup(SeId(4)), Ok(LpId(1)));
        assert_eq!(m.route(SeId(4)), Ok(LpId(2)));
        assert_eq!(m.projected_counts(), [3, 2, 4]);
        let out = m.apply_boundary_updates(Timestep(3), &[], |_, _| true).unwrap();
        assert_eq!(out.committed.len(), 1);
        assert_eq!(m.lookup(SeId(4)), Ok(LpId(2)));
        assert_eq!(m.counts(), [3, 2, 4]);
        assert_eq!(m.epoch(), Timestep(3));
    }

    #[test]
    fn empty_batch_advances_epoch_only() {
        let mut m = PlacementMap::round_robin(9, 3);
        let before = m.counts().to_vec();
        m.apply_boundary_updates(Timestep(5), &[], |_, _| true).unwrap();
        assert_eq!(m.counts(), before);
        assert_eq!(m.epoch(), Timestep(5));
    }

    #[test]
    fn opposite_moves_conserve_counts() {
        let mut m = PlacementMap::round_robin(9, 3);
        m.apply_boundary_updates(Timestep(1), &[ann(0, 0, 1), ann(1, 1, 0)], |_, _| true).unwrap();
        m.apply_boundary_updates(Timestep(2), &[], |_, _| true).unwrap();
        assert_eq!(m.counts(), [3, 3, 3]);
        assert_eq!(m.lookup(SeId(0)), Ok(LpId(1)));
    }

    #[test]
    fn non_owner_announcement_rejected() {
        let mut m = PlacementMap::round_robin(9, 3);
        // se 2 is on LP2
        assert_eq!(
            m.apply_boundary_updates(Timestep(1), &[ann(2, 0, 1)], |_, _| true),
            Err(DirectoryError::NotOwner { se: SeId(2), claimed: LpId(0), actual: LpId(2) })
        );
    }

    #[test]
    fn duplicate_announcement_rejected() {
        let mut m = PlacementMap::round_robin(9, 3);
        assert!(matches!(
            m.apply_boundary_updates(Timestep(1), &[ann(0, 0, 1), ann(0, 0, 2)], |_, _| true),
            Err(DirectoryError::DuplicateAnnouncement(_))
        ));
    }

    #[test]
    fn admission_sees_running_projection() {
        let mut m = PlacementMap::round_robin(6, 2);
        let mut seen = Vec::new();
        m.apply_boundary_updates(Timestep(1), &[ann(2, 0, 1), ann(0, 0, 1)], |_, c| {
            seen.push(c.to_vec());
            true
        })
        .unwrap();
        // processed in SeId order: 0 then 2
        assert_eq!(seen, vec![vec![3, 3], vec![2, 4]]);
    }
}
