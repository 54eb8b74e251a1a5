//! Synthetic ground-truth and SLAM-like datasets with known alignment.
//!
//! A camera flies along a closed (or straight) path around a box scene while
//! looking at a fixed target. The SLAM-like trajectory is the noisy ground
//! truth mapped through `Λ_gt⁻¹`, so aligning it back must recover `Λ_gt`.
//! Key-frame depth samples come from ray casting the scene boxes from the true
//! camera pose, expressed in SLAM units.
//!
//! SLAM poses are stored rigid (unit scale): the metric-to-SLAM scale factor
//! lives in the translations and in the depths, the way a monocular tracker
//! reports them.
//!
//! Initialization transient: for frames `k < transient_len` the SLAM
//! frame-to-frame displacement is multiplied by
//!
//! ```text
//! c(k) = drift^(1 - k/L) · (1 + J·u_k),   u_k ~ U(-1, 1),   J = ½(1 - 1/max(drift, 1/drift))
//! ```
//!
//! and positions are integrated backwards from frame `L`, leaving frames
//! `k >= L` untouched. Depths of key-frames inside the transient carry the
//! same factor.
//!
//! Randomness comes from a single ChaCha8 stream seeded with `seed`
//! ([`GENERATOR_VERSION`]); noise is drawn in a fixed order (translation then
//! rotation per frame, then the transient jitter), so identical configs give
//! bit-identical datasets.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{Rotation3, Sim3Transform, UnitQuaternion};
use crate::projection::{CameraIntrinsics, DepthSample, KeyFrame, PointCloud};
use crate::trajectory::{path_length, StampedPose, Trajectory};

pub const GENERATOR_VERSION: &str = "chacha8-v1";

pub const BENCHMARK_FRAMES: usize = 7000;
pub const BENCHMARK_KEYFRAMES: usize = 123;
pub const BENCHMARK_FPS: f64 = 60.0;
pub const BENCHMARK_PATH_LENGTH: f64 = 195.12;
pub const BENCHMARK_SLAM_PATH_LENGTH: f64 = 12.6;
pub const BENCHMARK_TRANSIENT_FRAMES: usize = 1100;

/// Arc-length table resolution per lap.
const CURVE_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid config value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("scene has no boxes")]
    EmptyScene,
}

fn invalid(key: &str, reason: impl Into<String>) -> SynthError {
    SynthError::InvalidConfig { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Line,
    Circle,
    Lissajous,
    WaypointSpline,
}

impl PathKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PathKind::Line => "line",
            PathKind::Circle => "circle",
            PathKind::Lissajous => "lissajous",
            PathKind::WaypointSpline => "waypoint-spline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "line" => Some(PathKind::Line),
            "circle" => Some(PathKind::Circle),
            "lissajous" => Some(PathKind::Lissajous),
            "waypoint-spline" => Some(PathKind::WaypointSpline),
            _ => None,
        }
    }
}

/// Axis-aligned scene box in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl SceneBox {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Option<Self> {
        let ok = (0..3).all(|i| min[i].is_finite() && max[i].is_finite() && min[i] < max[i]);
        ok.then_some(Self { min, max })
    }

    /// Euclidean distance from `p` to the box surface (also for interior points).
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        let below = self.min - p;
        let above = p - self.max;
        let outside = below.sup(&above).sup(&Vector3::zeros());
        if outside.iter().any(|&c| c > 0.0) {
            return outside.norm();
        }
        (0..3)
            .map(|i| (p[i] - self.min[i]).min(self.max[i] - p[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Entry distance along a ray (`dir` need not be unit), if the ray starts
    /// outside and hits the box.
    pub fn ray_entry(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let a = (self.min[i] - origin[i]) / dir[i];
            let b = (self.max[i] - origin[i]) / dir[i];
            t_near = t_near.max(a.min(b));
            t_far = t_far.min(a.max(b));
        }
        (t_near <= t_far && t_near > 0.0).then_some(t_near)
    }
}

/// A 10 × 5 m floor slab with eight 1 m cubes standing on it.
pub fn benchmark_scene_boxes() -> Vec<SceneBox> {
    let mut boxes = vec![SceneBox::new(Vector3::new(-5.0, -2.5, -0.1), Vector3::new(5.0, 2.5, 0.0)).unwrap()];
    for x in [-3.5, -1.5, 0.5, 2.5] {
        for y in [-1.75, 0.75] {
            boxes.push(SceneBox::new(Vector3::new(x, y, 0.0), Vector3::new(x + 1.0, y + 1.0, 1.0)).unwrap());
        }
    }
    boxes
}

/// 640 × 480 at 75° horizontal field of view.
pub fn benchmark_camera() -> CameraIntrinsics {
    CameraIntrinsics::from_horizontal_fov(640, 480, 75.0).expect("valid camera")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub fps: f64,
    pub n_keyframes: usize,
    pub path_kind: PathKind,
    /// Half-extent of the path shape, meters.
    pub path_scale: f64,
    /// Total distance travelled, meters.
    pub path_length: f64,
    pub path_height: f64,
    pub look_at: Vector3<f64>,
    /// Control points (scaled by `path_scale`) for `waypoint-spline`.
    pub waypoints: Vec<Vector3<f64>>,
    pub camera: CameraIntrinsics,
    /// `Λ_gt`: maps the SLAM frame into the world frame.
    pub true_transform: Sim3Transform,
    pub transient_len: usize,
    pub transient_scale_drift: f64,
    pub noise_sigma_t: f64,
    pub noise_sigma_r: f64,
    pub scene_boxes: Vec<SceneBox>,
    /// Pixel spacing of the depth-sample grid.
    pub sample_stride: u32,
    /// Hits farther than this (meters) are dropped.
    pub max_depth: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::benchmark_scene_with_transient()
    }
}

impl ScenarioConfig {
    /// 7000 frames at 60 Hz, 123 key-frames, 195.12 m of travel, and a
    /// ground-truth scale of 195.12 / 12.6. No initialization transient.
    pub fn benchmark_scene() -> Self {
        let rotation = Rotation3::from_axis_angle(&Vector3::new(0.3, -0.5, 0.8), 1.1).expect("nonzero axis");
        Self {
            seed: 1,
            n_frames: BENCHMARK_FRAMES,
            fps: BENCHMARK_FPS,
            n_keyframes: BENCHMARK_KEYFRAMES,
            path_kind: PathKind::Lissajous,
            path_scale: 4.0,
            path_length: BENCHMARK_PATH_LENGTH,
            path_height: 2.0,
            look_at: Vector3::new(0.0, 0.0, 0.5),
            waypoints: default_waypoints(),
            camera: benchmark_camera(),
            true_transform: Sim3Transform::new(
                BENCHMARK_PATH_LENGTH / BENCHMARK_SLAM_PATH_LENGTH,
                rotation,
                Vector3::new(2.0, -1.0, 0.5),
            )
            .expect("positive scale"),
            transient_len: 0,
            transient_scale_drift: 1.0,
            noise_sigma_t: 1e-4,
            noise_sigma_r: 1e-3,
            scene_boxes: benchmark_scene_boxes(),
            sample_stride: 16,
            max_depth: 20.0,
        }
    }

    /// [`benchmark_scene`](Self::benchmark_scene) with a 1100-frame transient
    /// starting at twice the final scale.
    pub fn benchmark_scene_with_transient() -> Self {
        Self { transient_len: BENCHMARK_TRANSIENT_FRAMES, transient_scale_drift: 2.0, ..Self::benchmark_scene() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_frames < 2 {
            return Err(invalid("n_frames", format!("need at least 2 frames, got {}", self.n_frames)));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(invalid("fps", "must be positive"));
        }
        if self.n_keyframes > self.n_frames {
            return Err(invalid("n_keyframes", "cannot exceed n_frames"));
        }
        if !(self.path_scale > 0.0 && self.path_scale.is_finite()) {
            return Err(invalid("path_scale", "must be positive"));
        }
        if !(self.path_length > 0.0 && self.path_length.is_finite()) {
            return Err(invalid("path_length", "must be positive"));
        }
        if !self.path_height.is_finite() || !self.look_at.iter().all(|c| c.is_finite()) {
            return Err(invalid("look_at", "must be finite"));
        }
        if self.path_kind == PathKind::WaypointSpline && self.waypoints.len() < 3 {
            return Err(invalid("waypoint", "waypoint-spline needs at least 3 waypoints"));
        }
        if self.transient_len >= self.n_frames {
            return Err(invalid("transient_len", "must be smaller than n_frames"));
        }
        if !(self.transient_scale_drift > 0.0 && self.transient_scale_drift.is_finite()) {
            return Err(invalid("transient_scale_drift", "must be positive"));
        }
        if !(self.noise_sigma_t >= 0.0 && self.noise_sigma_t.is_finite()) {
            return Err(invalid("noise_sigma_t", "must be non-negative"));
        }
        if !(self.noise_sigma_r >= 0.0 && self.noise_sigma_r.is_finite()) {
            return Err(invalid("noise_sigma_r", "must be non-negative"));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be positive"));
        }
        if !(self.max_depth > 0.0) {
            return Err(invalid("max_depth", "must be positive"));
        }
        Ok(())
    }

    /// Plain-text `key = value` form with every field materialized.
    pub fn to_key_values(&self) -> String {
        let v3 = |v: &Vector3<f64>| format!("{} {} {}", v.x, v.y, v.z);
        let c = &self.camera;
        let q = self.true_transform.rotation().quaternion();
        let mut out = String::from("# sim3-align v1 scenario\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("n_frames", self.n_frames.to_string());
        kv("fps", self.fps.to_string());
        kv("n_keyframes", self.n_keyframes.to_string());
        kv("path_kind", self.path_kind.as_str().to_string());
        kv("path_scale", self.path_scale.to_string());
        kv("path_length", self.path_length.to_string());
        kv("path_height", self.path_height.to_string());
        kv("look_at", v3(&self.look_at));
        kv("camera", format!("{} {} {} {} {} {}", c.fx(), c.fy(), c.cx(), c.cy(), c.width(), c.height()));
        kv("gt_scale", self.true_transform.scale().to_string());
        kv("gt_rotation", format!("{} {} {} {}", q.w(), q.x(), q.y(), q.z()));
        kv("gt_translation", v3(self.true_transform.translation()));
        kv("transient_len", self.transient_len.to_string());
        kv("transient_scale_drift", self.transient_scale_drift.to_string());
        kv("noise_sigma_t", self.noise_sigma_t.to_string());
        kv("noise_sigma_r", self.noise_sigma_r.to_string());
        kv("sample_stride", self.sample_stride.to_string());
        kv("max_depth", self.max_depth.to_string());
        for w in &self.waypoints {
            kv("waypoint", v3(w));
        }
        for b in &self.scene_boxes {
            kv("box", format!("{} {}", v3(&b.min), v3(&b.max)));
        }
        out
    }

    /// Parses a `key = value` file. Unspecified keys keep the default
    /// scenario's value; any `box` or `waypoint` line replaces the default
    /// list. `gt_rotation` is a `w x y z` quaternion;
    /// `gt_rotation_axis_angle = ax ay az radians` is accepted as well.
    pub fn from_key_values(text: &str) -> Result<Self, SynthError> {
        let mut cfg = Self::default();
        let mut boxes = Vec::new();
        let mut waypoints = Vec::new();
        let (mut scale, mut rotation, mut translation) = (
            cfg.true_transform.scale(),
            *cfg.true_transform.rotation(),
            *cfg.true_transform.translation(),
        );
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SynthError::Syntax { line: i + 1, reason: "expected `key = value`".into() });
            };
            let (key, value) = (key.trim(), value.trim());
            let nums = |n: usize| -> Result<Vec<f64>, SynthError> {
                let v: Vec<f64> = value
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| invalid(key, e.to_string()))?;
                if v.len() != n || !v.iter().all(|x| x.is_finite()) {
                    return Err(invalid(key, format!("expected {n} finite numbers")));
                }
                Ok(v)
            };
            let num = || nums(1).map(|v| v[0]);
            let int = || value.parse::<u64>().map_err(|e| invalid(key, e.to_string()));
            let usize_of = || int().and_then(|v| usize::try_from(v).map_err(|e| invalid(key, e.to_string())));
            match key {
                "seed" => cfg.seed = int()?,
                "n_frames" => cfg.n_frames = usize_of()?,
                "fps" => cfg.fps = num()?,
                "n_keyframes" => cfg.n_keyframes = usize_of()?,
                "path_kind" => {
                    cfg.path_kind = PathKind::parse(value)
                        .ok_or_else(|| invalid(key, "expected line, circle, lissajous or waypoint-spline"))?
                }
                "path_scale" => cfg.path_scale = num()?,
                "path_length" => cfg.path_length = num()?,
                "path_height" => cfg.path_height = num()?,
                "look_at" => {
                    let v = nums(3)?;
                    cfg.look_at = Vector3::new(v[0], v[1], v[2]);
                }
                "camera" => {
                    let v = nums(6)?;
                    let dim = |x: f64| -> Result<u32, SynthError> {
                        if x.fract() == 0.0 && x >= 1.0 && x <= u32::MAX as f64 {
                            Ok(x as u32)
                        } else {
                            Err(invalid(key, "width and height must be positive integers"))
                        }
                    };
                    cfg.camera = CameraIntrinsics::new(v[0], v[1], v[2], v[3], dim(v[4])?, dim(v[5])?)
                        .map_err(|e| invalid(key, e.to_string()))?;
                }
                "gt_scale" => scale = num()?,
                "gt_rotation" => {
                    let v = nums(4)?;
                    rotation = Rotation3::from_quaternion(
                        UnitQuaternion::new(v[0], v[1], v[2], v[3]).map_err(|e| invalid(key, e.to_string()))?,
                    );
                }
                "gt_rotation_axis_angle" => {
                    let v = nums(4)?;
                    rotation = Rotation3::from_axis_angle(&Vector3::new(v[0], v[1], v[2]), v[3])
                        .map_err(|e| invalid(key, e.to_string()))?;
                }
                "gt_translation" => {
                    let v = nums(3)?;
                    translation = Vector3::new(v[0], v[1], v[2]);
                }
                "transient_len" => cfg.transient_len = usize_of()?,
                "transient_scale_drift" => cfg.transient_scale_drift = num()?,
                "noise_sigma_t" => cfg.noise_sigma_t = num()?,
                "noise_sigma_r" => cfg.noise_sigma_r = num()?,
                "sample_stride" => {
                    cfg.sample_stride = u32::try_from(int()?).map_err(|e| invalid(key, e.to_string()))?
                }
                "max_depth" => cfg.max_depth = num()?,
                "waypoint" => {
                    let v = nums(3)?;
                    waypoints.push(Vector3::new(v[0], v[1], v[2]));
                }
                "box" => {
                    let v = nums(6)?;
                    boxes.push(
                        SceneBox::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]))
                            .ok_or_else(|| invalid(key, "box min must be below max on every axis"))?,
                    );
                }
                other => return Err(invalid(other, "unknown key")),
            }
        }
        if !boxes.is_empty() {
            cfg.scene_boxes = boxes;
        }
        if !waypoints.is_empty() {
            cfg.waypoints = waypoints;
        }
        cfg.true_transform =
            Sim3Transform::new(scale, rotation, translation).map_err(|e| invalid("gt_scale", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_waypoints() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(1.0, 0.55, 0.0),
        Vector3::new(0.0, 0.7, 0.1),
        Vector3::new(-1.0, 0.55, 0.0),
        Vector3::new(-1.1, -0.2, -0.05),
        Vector3::new(-0.4, -0.7, 0.0),
        Vector3::new(0.6, -0.6, 0.05),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub config: ScenarioConfig,
    /// World frame, meters, noise free.
    pub ground_truth: Trajectory,
    /// SLAM frame, arbitrary units.
    pub slam: Trajectory,
    pub keyframes: Vec<KeyFrame>,
    pub camera: CameraIntrinsics,
    pub true_transform: Sim3Transform,
    pub scene: Vec<SceneBox>,
    /// Displacement multiplier applied to each frame (1 outside the transient).
    pub transient_factors: Vec<f64>,
}

/// Point on the unit-size path shape at curve parameter `u`.
fn shape_point(cfg: &ScenarioConfig, u: f64) -> Vector3<f64> {
    let a = cfg.path_scale;
    match cfg.path_kind {
        PathKind::Line => Vector3::new(u, 0.0, 0.0),
        PathKind::Circle => Vector3::new(a * u.cos(), a * u.sin(), 0.0),
        PathKind::Lissajous => Vector3::new(a * u.cos(), 0.5 * a * (2.0 * u).sin(), 0.12 * a * (3.0 * u).sin()),
        PathKind::WaypointSpline => {
            // Closed centripetal-free (uniform) Catmull-Rom through the waypoints.
            let w = &cfg.waypoints;
            let n = w.len();
            let x = u / std::f64::consts::TAU * n as f64;
            let seg = (x.floor() as usize) % n;
            let t = x - x.floor();
            let p = |i: usize| w[(seg + n + i - 1) % n] * a;
            let (p0, p1, p2, p3) = (p(0), p(1), p(2), p(3));
            let t2 = t * t;
            let t3 = t2 * t;
            (p1 * 2.0 + (p2 - p0) * t + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2 + (-p0 + p1 * 3.0 - p2 * 3.0 + p3) * t3)
                * 0.5
        }
    }
}

/// Positions at equal arc-length steps covering `path_length`.
fn sample_path(cfg: &ScenarioConfig) -> Vec<Vector3<f64>> {
    let n = cfg.n_frames;
    let offset = Vector3::new(0.0, 0.0, cfg.path_height);
    let step = cfg.path_length / (n - 1) as f64;
    if cfg.path_kind == PathKind::Line {
        let half = 0.5 * cfg.path_length;
        return (0..n).map(|k| shape_point(cfg, k as f64 * step - half) + offset).collect();
    }
    let tau = std::f64::consts::TAU;
    let params: Vec<f64> = (0..=CURVE_SAMPLES).map(|i| tau * i as f64 / CURVE_SAMPLES as f64).collect();
    let pts: Vec<Vector3<f64>> = params.iter().map(|&u| shape_point(cfg, u)).collect();
    let mut cumulative = Vec::with_capacity(pts.len());
    cumulative.push(0.0);
    for w in pts.windows(2) {
        cumulative.push(cumulative.last().unwrap() + (w[1] - w[0]).norm());
    }
    let lap = *cumulative.last().unwrap();
    (0..n)
        .map(|k| {
            let s = k as f64 * step;
            let r = s - (s / lap).floor() * lap;
            let i = cumulative.partition_point(|&c| c <= r).clamp(1, CURVE_SAMPLES);
            let (c0, c1) = (cumulative[i - 1], cumulative[i]);
            let f = if c1 > c0 { (r - c0) / (c1 - c0) } else { 0.0 };
            let u = params[i - 1] + f * (params[i] - params[i - 1]);
            shape_point(cfg, u) + offset
        })
        .collect()
}

/// Camera-to-world rotation with +z toward `target`, +x right, +y down.
fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> Rotation3 {
    let forward = (target - eye).normalize();
    let mut up = Vector3::z();
    if forward.cross(&up).norm() < 1e-6 {
        up = Vector3::y();
    }
    let right = forward.cross(&up).normalize();
    let down = forward.cross(&right);
    let m = Matrix3::from_columns(&[right, down, forward]);
    Rotation3::from_matrix(&m).expect("orthonormal frame")
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vector3::new(x, y, z) * sigma
}

/// Evenly spread key-frame frame indices, first and last included.
pub fn keyframe_indices(n_frames: usize, n_keyframes: usize) -> Vec<usize> {
    match n_keyframes {
        0 => Vec::new(),
        1 => vec![0],
        k => (0..k)
            .map(|i| ((i as f64 * (n_frames - 1) as f64) / (k - 1) as f64).round() as usize)
            .collect(),
    }
}

pub fn generate(cfg: &ScenarioConfig) -> Result<SyntheticDataset, SynthError> {
    cfg.validate()?;
    let n = cfg.n_frames;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lambda = cfg.true_transform;
    let lambda_inv = lambda.inverse();
    let s = lambda.scale();

    let positions = sample_path(cfg);
    let timestamps: Vec<f64> = (0..n).map(|k| k as f64 / cfg.fps).collect();
    let rotations: Vec<Rotation3> = positions.iter().map(|p| look_at(p, &cfg.look_at)).collect();

    let ground_truth = Trajectory::new(
        (0..n).map(|k| StampedPose::new(timestamps[k], Sim3Transform::rigid(rotations[k], positions[k]))).collect(),
    );

    let mut noisy_pos = Vec::with_capacity(n);
    let mut noisy_rot = Vec::with_capacity(n);
    for k in 0..n {
        let dt = gaussian3(&mut rng, cfg.noise_sigma_t);
        let dr = gaussian3(&mut rng, cfg.noise_sigma_r);
        noisy_pos.push(positions[k] + dt);
        noisy_rot.push(Rotation3::from_rotation_vector(&dr).compose(&rotations[k]));
    }

    let drift = cfg.transient_scale_drift;
    let jitter = 0.5 * (1.0 - 1.0 / drift.max(1.0 / drift));
    let len = cfg.transient_len;
    let mut factors = vec![1.0; n];
    for (k, f) in factors.iter_mut().enumerate().take(len) {
        let u: f64 = rng.random_range(-1.0..1.0);
        *f = drift.powf(1.0 - k as f64 / len as f64) * (1.0 + jitter * u);
    }
    let mut slam_pos = noisy_pos.clone();
    for k in (0..len).rev() {
        slam_pos[k] = slam_pos[k + 1] - (noisy_pos[k + 1] - noisy_pos[k]) * factors[k];
    }

    let inv_rot = lambda.rotation().inverse();
    let slam_poses: Vec<Sim3Transform> = (0..n)
        .map(|k| Sim3Transform::rigid(inv_rot.compose(&noisy_rot[k]), lambda_inv.apply(&slam_pos[k])))
        .collect();
    let slam = Trajectory::new((0..n).map(|k| StampedPose::new(timestamps[k], slam_poses[k])).collect());

    let camera = cfg.camera;
    let keyframes = keyframe_indices(n, cfg.n_keyframes)
        .into_iter()
        .enumerate()
        .map(|(id, k)| {
            let samples = ray_cast_samples(cfg, &positions[k], &rotations[k])
                .into_iter()
                .map(|(u, v, d)| DepthSample::new(u, v, d * factors[k] / s))
                .collect();
            KeyFrame { id: id as u64, timestamp: timestamps[k], pose: slam_poses[k], samples }
        })
        .collect();

    Ok(SyntheticDataset {
        config: cfg.clone(),
        ground_truth,
        slam,
        keyframes,
        camera,
        true_transform: lambda,
        scene: cfg.scene_boxes.clone(),
        transient_factors: factors,
    })
}

/// Metric z-depth of the nearest scene surface on a grid of pixels.
fn ray_cast_samples(cfg: &ScenarioConfig, eye: &Vector3<f64>, rot: &Rotation3) -> Vec<(u32, u32, f64)> {
    let c = &cfg.camera;
    let m = rot.matrix();
    let stride = cfg.sample_stride;
    let mut out = Vec::new();
    let mut v = stride / 2;
    while v < c.height() {
        let mut u = stride / 2;
        while u < c.width() {
            let dir = m * c.unproject(u as f64, v as f64, 1.0);
            let hit = cfg
                .scene_boxes
                .iter()
                .filter_map(|b| b.ray_entry(eye, &dir))
                .fold(f64::INFINITY, f64::min);
            if hit.is_finite() && hit <= cfg.max_depth {
                out.push((u, v, hit));
            }
            u += stride;
        }
        v += stride;
    }
    out
}

/// Distance from every point to the nearest box surface.
pub fn distance_to_scene(cloud: &PointCloud, scene: &[SceneBox]) -> Result<Vec<f64>, SynthError> {
    if scene.is_empty() {
        return Err(SynthError::EmptyScene);
    }
    Ok(cloud
        .points
        .iter()
        .map(|p| scene.iter().map(|b| b.surface_distance(p)).fold(f64::INFINITY, f64::min))
        .collect())
}

impl SyntheticDataset {
    pub fn ground_truth_path_length(&self) -> f64 {
        self.ground_truth.path_length()
    }

    pub fn slam_path_length(&self) -> f64 {
        path_length(self.slam.positions())
    }
}
