//! RGBD processing: person-mask extraction from depth, dense motion
//! estimation on color frames, and L-frame 3D trajectory tracking.

pub mod flow;
pub mod mask;
pub mod track;

pub use flow::{MotionEstimator, MotionField, PyramidalFlow};
pub use mask::{resize_depth_bicubic, segment_mask, PersonMask};
pub use track::{
    calc_trajectories, calc_trajectories_with, estimate_fields, prepare_frames, PreparedFrame,
    TrackParams, Trajectory3D,
};

/// Default trajectory length in frames (each track spans L+1 points).
pub const DEFAULT_TRACK_LEN: usize = 15;
