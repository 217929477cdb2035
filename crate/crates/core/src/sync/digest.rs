//! Placement-independent fingerprints of the global model state.

use crate::ids::{SeId, Timestep};
use crate::rng::splitmix_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDigest {
    pub step: Timestep,
    pub hash: u64,
}

/// Hash of one entity's serialized state.
pub fn entity_hash(se: SeId, state: &[u8]) -> u64 {
    let words = state.chunks(8).map(|c| {
        let mut w = [0u8; 8];
        w[..c.len()].copy_from_slice(c);
        u64::from_be_bytes(w)
    });
    splitmix_hash(std::iter::once(se.0).chain(std::iter::once(state.len() as u64)).chain(words))
}

/// XOR of entity hashes; order- and placement-independent.
pub fn step_digest<'a>(entities: impl IntoIterator<Item = (SeId, &'a [u8])>) -> u64 {
    entities.into_iter().fold(0, |acc, (se, s)| acc ^ entity_hash(se, s))
}

/// Combines per-LP partial digests into the global one.
pub fn combine(partials: impl IntoIterator<Item = u64>) -> u64 {
    partials.into_iter().fold(0, |a, b| a ^ b)
}
