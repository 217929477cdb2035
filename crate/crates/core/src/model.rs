//! The interface between the engine and a simulation model.

use thiserror::Error;

use crate::ids::{LpId, SeId, Timestep};
use crate::transport::frame::EventBody;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("event from {sender} has malformed payload of {len} bytes")]
    MalformedPayload { sender: SeId, len: usize },
    #[error("malformed entity state")]
    MalformedState,
}

/// An event an entity wants to send; `dest` may be [`SeId::BROADCAST`].
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub dest: SeId,
    pub payload: Vec<u8>,
}

/// An event as seen by the receiving LP.
#[derive(Debug, Clone, PartialEq)]
pub struct InboundEvent {
    pub body: EventBody,
    /// LP that hosted the sender when the event was generated.
    pub sender_host: LpId,
}

/// One entity-to-entity delivery: `events[event]` reached `receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub event: usize,
    pub receiver: SeId,
}

/// A time-stepped model made of migratable entities.
///
/// Implementations must draw all randomness from per-entity streams so that
/// results do not depend on placement.
pub trait Model: Send + Sync + 'static {
    type State: Clone + Send + 'static;

    fn num_entities(&self) -> u64;

    fn initial_state(&self, se: SeId) -> Self::State;

    /// Advances one entity by one step, pushing any events it emits.
    fn advance(&self, se: SeId, state: &mut Self::State, step: Timestep, out: &mut Vec<Emission>);

    /// Resolves which local entities receive which events. `events` is in
    /// canonical order and `residents` is sorted by id.
    fn deliver(
        &self,
        events: &[InboundEvent],
        residents: &[(SeId, &Self::State)],
        out: &mut Vec<Delivery>,
    ) -> Result<(), ModelError>;

    fn encode_state(&self, state: &Self::State, out: &mut Vec<u8>);

    /// Decodes a state from the front of `buf`, returning the remainder.
    fn decode_state<'a>(&self, buf: &'a [u8]) -> Result<(Self::State, &'a [u8]), ModelError>;
}
