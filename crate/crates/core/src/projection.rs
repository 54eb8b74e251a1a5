//! Pinhole back-projection of key-frame depth samples and point-cloud transforms.
//!
//! Pixel coordinates address pixel centers directly: the principal point
//! `(cx, cy)` maps to the optical axis with no half-pixel offset. Lens
//! distortion is not modelled.

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::Sim3Transform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("{} sample(s) outside the {width}x{height} image: {}", .offending.len(), format_pixels(.offending))]
    OutOfBounds { width: u32, height: u32, offending: Vec<(usize, u32, u32)> },
    #[error("sample {index} has non-positive or non-finite depth {depth}")]
    InvalidDepth { index: usize, depth: f64 },
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
}

fn format_pixels(p: &[(usize, u32, u32)]) -> String {
    let shown: Vec<String> = p.iter().take(8).map(|(i, u, v)| format!("#{i} ({u},{v})")).collect();
    let more = if p.len() > 8 { ", ..." } else { "" };
    format!("{}{more}", shown.join(", "))
}

/// Focal lengths and principal point in pixels, image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, ProjectionError> {
        let bad = |msg: String| Err(ProjectionError::InvalidIntrinsics(msg));
        if !(fx > 0.0 && fx.is_finite() && fy > 0.0 && fy.is_finite()) {
            return bad(format!("focal lengths must be positive and finite (fx={fx}, fy={fy})"));
        }
        if width == 0 || height == 0 {
            return bad(format!("image size must be positive ({width}x{height})"));
        }
        if !(cx >= 0.0 && cx < width as f64 && cy >= 0.0 && cy < height as f64) {
            return bad(format!("principal point ({cx}, {cy}) outside the {width}x{height} image"));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Intrinsics for a horizontal field of view with the principal point at
    /// the image center.
    pub fn from_horizontal_fov(width: u32, height: u32, hfov_deg: f64) -> Result<Self, ProjectionError> {
        let f = 0.5 * width as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Self::new(f, f, 0.5 * width as f64, 0.5 * height as f64, width, height)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        u < self.width && v < self.height
    }

    /// Camera-frame point for real-valued pixel coordinates and z-depth.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * depth / self.fx, (v - self.cy) * depth / self.fy, depth)
    }
}

/// One semi-dense sample: integer pixel and depth along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub u: u32,
    pub v: u32,
    pub d: f64,
}

impl DepthSample {
    pub fn new(u: u32, v: u32, d: f64) -> Self {
        Self { u, v, d }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrame {
    pub id: u64,
    pub timestamp: f64,
    /// Camera frame to trajectory frame.
    pub pose: Sim3Transform,
    pub samples: Vec<DepthSample>,
}

impl KeyFrame {
    /// Checks every sample against the image bounds and the depth constraint.
    pub fn validate(&self, camera: &CameraIntrinsics) -> Result<(), ProjectionError> {
        let offending: Vec<(usize, u32, u32)> = self
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| !camera.contains(s.u, s.v))
            .map(|(i, s)| (i, s.u, s.v))
            .collect();
        if !offending.is_empty() {
            return Err(ProjectionError::OutOfBounds { width: camera.width, height: camera.height, offending });
        }
        if let Some((index, s)) = self.samples.iter().enumerate().find(|(_, s)| !(s.d > 0.0 && s.d.is_finite())) {
            return Err(ProjectionError::InvalidDepth { index, depth: s.d });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    /// Key-frame id of each point, when known.
    pub source_ids: Option<Vec<u64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self { points, source_ids: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|c| c.is_finite()))
    }

    /// Appends another cloud. Source ids are kept only if both sides have them.
    pub fn extend(&mut self, other: PointCloud) {
        let was_empty = self.points.is_empty();
        self.points.extend(other.points);
        self.source_ids = match (self.source_ids.take(), other.source_ids) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, Some(b)) if was_empty => Some(b),
            _ => None,
        };
    }
}

/// Maps every sample of `kf` to `pose · [(u-cx)d/fx, (v-cy)d/fy, d]`.
pub fn back_project(kf: &KeyFrame, camera: &CameraIntrinsics) -> Result<PointCloud, ProjectionError> {
    kf.validate(camera)?;
    let linear = kf.pose.linear_part();
    let t = kf.pose.translation();
    let points = kf
        .samples
        .iter()
        .map(|s| linear * camera.unproject(s.u as f64, s.v as f64, s.d) + t)
        .collect();
    Ok(PointCloud { points, source_ids: Some(vec![kf.id; kf.samples.len()]) })
}

/// Back-projects all key-frames into one cloud, in key-frame order.
pub fn back_project_all(keyframes: &[KeyFrame], camera: &CameraIntrinsics) -> Result<PointCloud, ProjectionError> {
    let mut cloud = PointCloud { points: Vec::new(), source_ids: Some(Vec::new()) };
    for kf in keyframes {
        cloud.extend(back_project(kf, camera)?);
    }
    Ok(cloud)
}

/// Pointwise similarity transform; order and source ids are preserved.
pub fn transform_cloud(t: &Sim3Transform, cloud: &PointCloud) -> PointCloud {
    let linear = t.linear_part();
    let tr = t.translation();
    PointCloud {
        points: cloud.points.iter().map(|p| linear * p + tr).collect(),
        source_ids: cloud.source_ids.clone(),
    }
}

/// Projects a camera-frame point to real-valued pixel coordinates and depth.
pub fn forward_project(point: &Vector3<f64>, camera: &CameraIntrinsics) -> Result<(f64, f64, f64), ProjectionError> {
    let z = point.z;
    if !(z > 0.0) {
        return Err(ProjectionError::BehindCamera(z));
    }
    Ok((camera.fx * point.x / z + camera.cx, camera.fy * point.y / z + camera.cy, z))
}
