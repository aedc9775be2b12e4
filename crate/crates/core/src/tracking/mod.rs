//! Forward tracking of reference pixels through estimated body motion.
//!
//! A reference pixel at frame `t₀` is lifted to a scene point with a depth
//! provider, carried through the accumulated body motion `T^{B_T,B_t₀}`
//! and re-projected into every later frame.

mod forward;
mod respawn;
mod rig;
mod track;

use thiserror::Error;

use crate::depth::DepthError;
use crate::geometry::{GeometryError, Timestamp};

pub use forward::{Propagation, Tracker};
pub use respawn::{run_track_with_respawn, Initializer};
pub use rig::RigConfig;
pub use track::{KeypointTrack, TrackSegment};

#[derive(Debug, Error)]
pub enum TrackingError {
    #[error("no extrinsic for timestamp {0}")]
    MissingExtrinsic(Timestamp),
    #[error("frame {frame} out of range for a sequence of {len} frames")]
    FrameOutOfRange { frame: usize, len: usize },
    #[error("no depth for the reference at frame {frame}: {source}")]
    Depth { frame: usize, source: DepthError },
    #[error("cannot respawn at frame {frame}: {reason}")]
    Respawn { frame: usize, reason: String },
    #[error("malformed track: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
