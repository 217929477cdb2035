//! Wire format, network profiles, simulated links and the TCP mesh.

pub mod frame;
pub mod profile;
pub mod simnet;
pub mod tcp;

pub use frame::{decode_frame, encode_frame, read_frame, write_frame, Frame, FrameError};
pub use profile::{LinkSpec, NetProfile, ProfileError};
pub use simnet::{SimNetwork, VirtualNanos};
