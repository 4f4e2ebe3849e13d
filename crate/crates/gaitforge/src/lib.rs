//! gaitforge: multi-sensor gait recognition from accelerometer streams
//! and RGBD video.
//!
//! The pipeline partitions compound-acceleration curves into step
//! windows and projects them onto a learned eigenspace (EigenGait),
//! tracks dense 3D trajectories through segmented RGBD sequences and
//! encodes them against a k-means codebook (TrajGait), fuses both
//! blocks under L1 normalization, and identifies subjects with
//! one-vs-all linear SVMs. A seeded synthetic dataset generator and an
//! evaluation harness (accuracy sweeps, covariate breakdowns, ROC)
//! round out the toolkit.

pub mod accel;
pub mod cli;
pub mod datamodel;
pub mod eigengait;
pub mod error;
pub mod eval;
pub mod numerics;
pub mod pipeline;
pub mod recognition;
pub mod rgbd;
pub mod synth;
pub mod trajgait;

pub use error::{GaitError, Result};
