//! Rotation-invariant template tracking for a gimbal-mounted camera.
//!
//! The pipeline: [`warp`] builds a bank of rotated templates, [`matcher`]
//! scores them against a frame, [`ekf`] predicts where to look next,
//! [`tracker`] ties those together and [`gimbal`] turns detections into
//! motor commands. [`scenesim`] and [`sim`] close the loop in software.

pub mod bench;
pub mod config;
pub mod ekf;
pub mod gimbal;
pub mod groundlink;
pub mod imagebuf;
pub mod matcher;
pub mod scenesim;
pub mod serve;
pub mod sim;
pub mod tracker;
pub mod tracklog;
pub mod warp;

pub use config::{OpticsConfig, TrackerConfig};
pub use imagebuf::{GrayImage, Rect};
pub use matcher::{Detection, MatchPoint};
pub use tracker::{Status, TrackOutcome, Tracker};
