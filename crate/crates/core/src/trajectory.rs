//! Timestamped pose sequences.

use nalgebra::Vector3;

use crate::geometry::Sim3Transform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampedPose {
    /// Seconds.
    pub timestamp: f64,
    /// Camera frame to trajectory frame.
    pub pose: Sim3Transform,
}

impl StampedPose {
    pub fn new(timestamp: f64, pose: Sim3Transform) -> Self {
        Self { timestamp, pose }
    }

    pub fn position(&self) -> &Vector3<f64> {
        self.pose.translation()
    }
}

/// Poses sorted by strictly increasing timestamp, plus any comment lines that
/// accompanied them on disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<StampedPose>,
    pub comments: Vec<String>,
}

impl Trajectory {
    pub fn new(poses: Vec<StampedPose>) -> Self {
        Self { poses, comments: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        self.poses.iter().map(|p| p.timestamp)
    }

    pub fn positions(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.poses.iter().map(|p| *p.position())
    }

    /// Index of the first pair of timestamps that is not strictly increasing.
    pub fn first_non_monotone(&self) -> Option<usize> {
        self.poses
            .windows(2)
            .position(|w| !(w[1].timestamp > w[0].timestamp))
            .map(|i| i + 1)
    }

    /// Polyline length of the positions, in trajectory units.
    pub fn path_length(&self) -> f64 {
        path_length(self.positions())
    }

    /// Applies `t ∘ pose` to every pose.
    pub fn transformed(&self, t: &Sim3Transform) -> Self {
        Self {
            poses: self
                .poses
                .iter()
                .map(|p| StampedPose::new(p.timestamp, t.compose(&p.pose)))
                .collect(),
            comments: self.comments.clone(),
        }
    }
}

pub fn path_length(points: impl IntoIterator<Item = Vector3<f64>>) -> f64 {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else {
        return 0.0;
    };
    let mut total = 0.0;
    for p in it {
        total += (p - prev).norm();
        prev = p;
    }
    total
}
