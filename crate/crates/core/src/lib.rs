//! Time-sensitive instruction data built from image and clip sequences.
//!
//! Positions in a sequence are written as four digit tokens (`<0>`..`<9>`)
//! giving `round(i / L, 4)`. Image sequences yield index grounding, indexed
//! captioning and adjacent-location questions; clip sequences are stitched
//! into pseudo videos whose event times come from frame positions. The
//! [`eval`] module reads timed outputs back and scores them.

pub mod clip_sequence;
pub mod dataset_io;
pub mod error;
pub mod eval;
pub mod image_sequence;
pub mod pipeline;
pub mod position_token;
pub mod templates;

pub use error::{Error, GenerationError, InvariantViolation};
pub use position_token::{RelativePositionCode, TimeInterval, TimeRepresentation};
