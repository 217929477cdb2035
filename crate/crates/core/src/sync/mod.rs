//! Conservative step-barrier synchronization between logical processes.

mod digest;
mod inbox;
mod lp;

pub use digest::{combine, entity_hash, step_digest, StepDigest};
pub use inbox::{canonical_order, order_keys, StepInbox};
pub use lp::{LogicalProcess, LpSetup, StepRecord, StepWork};

use thiserror::Error;

use crate::directory::DirectoryError;
use crate::ids::{LpId, SeId, Timestep};
use crate::model::ModelError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyncError {
    #[error(transparent)]
    Directory(#[from] DirectoryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("duplicate event ({sender}, seq {seq})")]
    DuplicateEvent { sender: SeId, seq: u32 },
    #[error("step {step}: {peer} announced {expected} events but {received} arrived")]
    CountMismatch { peer: LpId, step: Timestep, expected: u32, received: u32 },
    #[error("step {step}: second STEP_DONE from {peer}")]
    DuplicateStepDone { peer: LpId, step: Timestep },
    #[error("frame for step {step} from {peer} arrived after that step was consumed")]
    StaleFrame { peer: LpId, step: Timestep },
    #[error("unexpected frame kind {kind} from {peer}")]
    UnexpectedFrame { peer: LpId, kind: u8 },
    #[error("migration of {se}: {detail}")]
    Migration { se: SeId, detail: String },
    #[error("{0} left the session early")]
    PeerLeft(LpId),
    #[error("step {step} barrier timed out: {detail}")]
    Timeout { step: Timestep, detail: String },
}
