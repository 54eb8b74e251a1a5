//! Metric alignment of monocular SLAM output.
//!
//! A monocular SLAM run produces a trajectory and key-frame depth samples in
//! an arbitrary frame with an arbitrary scale. Given a metric reference
//! trajectory (IMU or ground truth), this crate estimates the similarity
//! transform between the two in closed form, detects the initialization
//! transient where the SLAM scale has not yet settled, maps the semi-dense
//! point cloud into the metric frame and voxelizes it into an occupancy
//! octree.

pub mod alignment;
pub mod cli;
pub mod eigen;
pub mod geometry;
pub mod io;
pub mod octree;
pub mod projection;
pub mod scale_series;
pub mod synth;
pub mod tolerances;
pub mod trajectory;

pub use alignment::{align, align_with, associate, AlignError, AlignOptions, AlignmentResult, TrajectoryPair};
pub use geometry::{Rotation3, Sim3Transform, UnitQuaternion};
pub use projection::{back_project, forward_project, transform_cloud, CameraIntrinsics, DepthSample, KeyFrame, PointCloud};
pub use trajectory::{StampedPose, Trajectory};
