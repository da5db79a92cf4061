//! Fractional tackles from player-tracking data.
//!
//! A run play's ball-carrier is tracked from the snap to the end of the
//! play. Stretches where a defender is within a distance `D` form contact
//! windows; each window is worth the share of the carrier's peak forward
//! velocity it took away for good, and that value is split over frames and
//! then over the defenders present.
//!
//! ```
//! use fractackle::valuation::{value_landmarks, Landmarks, DEFAULT_PEAK_EPSILON};
//!
//! let l = Landmarks { v_start: 5.01, v_end: 4.72, v_pre: 5.16, v_post: 4.60, pre_peak_inside: false };
//! let (w, _) = value_landmarks(&l, DEFAULT_PEAK_EPSILON);
//! assert!((w - 0.0562).abs() < 1e-4);
//! ```

pub mod analytics;
pub mod attribution;
pub mod config;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod kinematics;
pub mod pipeline;
pub mod study;
pub mod types;
pub mod valuation;
pub mod windows;

pub use error::{Error, Result};
pub use pipeline::{process_play, run_pipeline, PipelineConfig, PipelineOutput, PlayResult};
pub use types::{NflId, PlayKey};
