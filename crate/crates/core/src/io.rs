//! Text and binary file formats.
//!
//! Trajectory (one pose per line, TUM column order):
//!
//! ```text
//! # sim3-align v1 trajectory
//! timestamp tx ty tz qx qy qz qw
//! ```
//!
//! Key-frames:
//!
//! ```text
//! # sim3-align v1 keyframes
//! camera fx fy cx cy width height
//! KF id timestamp tx ty tz qx qy qz qw n_samples
//! u v d            (n_samples lines)
//! ```
//!
//! Transform: a single `s tx ty tz qx qy qz qw` line, or the word `identity`.
//! Scene: `box minx miny minz maxx maxy maxz` lines. Point clouds are PLY
//! with `double x y z` vertices, ascii or binary little endian.
//!
//! Lines starting with `#` are comments. Trajectory comments other than the
//! format header are kept as metadata. Numbers are written in shortest
//! round-trip form, so write-then-read is exact. Pose files store no scale:
//! writers drop it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use thiserror::Error;

use crate::geometry::{Rotation3, Sim3Transform, UnitQuaternion};
use crate::octree::{OccupancyOctree, OctreeError};
use crate::projection::{CameraIntrinsics, DepthSample, KeyFrame, PointCloud};
use crate::synth::SceneBox;
use crate::tolerances::FILE_QUATERNION_NORM_TOL;
use crate::trajectory::{StampedPose, Trajectory};

pub const TRAJECTORY_HEADER: &str = "# sim3-align v1 trajectory";
pub const KEYFRAME_HEADER: &str = "# sim3-align v1 keyframes";
pub const TRANSFORM_HEADER: &str = "# sim3-align v1 transform";
pub const SCENE_HEADER: &str = "# sim3-align v1 scene";
const TRAJECTORY_COLUMNS: &str = "# timestamp tx ty tz qx qy qz qw";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what}, line {line}: {reason}")]
    Parse { what: &'static str, line: usize, reason: String },
    #[error("{what}, line {line}: timestamp {timestamp} does not increase")]
    Unsorted { what: &'static str, line: usize, timestamp: f64 },
    #[error("{0}: no data")]
    Empty(&'static str),
    #[error("PLY: {0}")]
    Ply(String),
    #[error(transparent)]
    Octree(#[from] OctreeError),
}

impl IoError {
    fn parse(what: &'static str, line: usize, reason: impl Into<String>) -> Self {
        IoError::Parse { what, line, reason: reason.into() }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<(), IoError> {
    std::fs::write(path, data).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn parse_f64(what: &'static str, line: usize, tok: &str) -> Result<f64, IoError> {
    let v: f64 = tok.parse().map_err(|_| IoError::parse(what, line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(IoError::parse(what, line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

fn parse_fields(what: &'static str, line: usize, toks: &[&str]) -> Result<Vec<f64>, IoError> {
    toks.iter().map(|t| parse_f64(what, line, t)).collect()
}

/// Pose from `tx ty tz qx qy qz qw`, renormalizing near-unit quaternions.
fn parse_pose(what: &'static str, line: usize, v: &[f64]) -> Result<Sim3Transform, IoError> {
    let q = UnitQuaternion::with_tolerance(v[6], v[3], v[4], v[5], FILE_QUATERNION_NORM_TOL)
        .map_err(|e| IoError::parse(what, line, e.to_string()))?;
    Ok(Sim3Transform::rigid(Rotation3::from_quaternion(q), Vector3::new(v[0], v[1], v[2])))
}

fn pose_fields(pose: &Sim3Transform) -> String {
    let t = pose.translation();
    let [x, y, z, w] = pose.rotation().quaternion().xyzw();
    [t.x, t.y, t.z, x, y, z, w].iter().map(|&v| num(v)).collect::<Vec<_>>().join(" ")
}

/// Content lines with 1-based line numbers; comments are passed to `on_comment`.
fn content_lines<'a>(text: &'a str, mut on_comment: impl FnMut(&'a str)) -> impl Iterator<Item = (usize, &'a str)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            on_comment(c.trim());
            continue;
        }
        out.push((i + 1, line));
    }
    out.into_iter()
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory, IoError> {
    const WHAT: &str = "trajectory";
    let mut comments = Vec::new();
    let lines: Vec<_> = content_lines(text, |c| {
        if format!("# {c}") != TRAJECTORY_HEADER && format!("# {c}") != TRAJECTORY_COLUMNS {
            comments.push(c.to_string());
        }
    })
    .collect();
    let mut poses: Vec<StampedPose> = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 8 {
            return Err(IoError::parse(WHAT, ln, format!("expected 8 fields, found {}", toks.len())));
        }
        let v = parse_fields(WHAT, ln, &toks)?;
        if let Some(prev) = poses.last() {
            if !(v[0] > prev.timestamp) {
                return Err(IoError::Unsorted { what: WHAT, line: ln, timestamp: v[0] });
            }
        }
        poses.push(StampedPose::new(v[0], parse_pose(WHAT, ln, &v[1..])?));
    }
    if poses.is_empty() {
        return Err(IoError::Empty(WHAT));
    }
    let mut traj = Trajectory::new(poses);
    traj.comments = comments;
    Ok(traj)
}

pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n{TRAJECTORY_COLUMNS}\n");
    for c in &traj.comments {
        let _ = writeln!(out, "# {c}");
    }
    for p in &traj.poses {
        let _ = writeln!(out, "{} {}", num(p.timestamp), pose_fields(&p.pose));
    }
    out
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory, IoError> {
    parse_trajectory(&read_text(path)?)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    write_file(path, format_trajectory(traj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrameFile {
    pub camera: CameraIntrinsics,
    pub keyframes: Vec<KeyFrame>,
}

fn parse_camera(what: &'static str, ln: usize, toks: &[&str]) -> Result<CameraIntrinsics, IoError> {
    if toks.len() != 6 {
        return Err(IoError::parse(what, ln, "camera needs fx fy cx cy width height"));
    }
    let v = parse_fields(what, ln, &toks[..4])?;
    let dim = |t: &str| t.parse::<u32>().map_err(|_| IoError::parse(what, ln, format!("`{t}` is not an image size")));
    CameraIntrinsics::new(v[0], v[1], v[2], v[3], dim(toks[4])?, dim(toks[5])?)
        .map_err(|e| IoError::parse(what, ln, e.to_string()))
}

pub fn parse_keyframes(text: &str) -> Result<KeyFrameFile, IoError> {
    const WHAT: &str = "keyframes";
    let mut lines = content_lines(text, |_| {});
    let Some((ln, first)) = lines.next() else {
        return Err(IoError::Empty(WHAT));
    };
    let toks: Vec<&str> = first.split_whitespace().collect();
    if toks.first() != Some(&"camera") {
        return Err(IoError::parse(WHAT, ln, "expected a `camera` line first"));
    }
    let camera = parse_camera(WHAT, ln, &toks[1..])?;
    let mut keyframes: Vec<KeyFrame> = Vec::new();
    let mut pending = 0usize;
    let mut last_ln = ln;
    for (ln, line) in lines {
        last_ln = ln;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if pending > 0 {
            if toks.len() != 3 {
                return Err(IoError::parse(WHAT, ln, "expected `u v d`"));
            }
            let px = |t: &str| t.parse::<u32>().map_err(|_| IoError::parse(WHAT, ln, format!("`{t}` is not a pixel index")));
            let (u, v) = (px(toks[0])?, px(toks[1])?);
            let d = parse_f64(WHAT, ln, toks[2])?;
            let kf = keyframes.last_mut().expect("pending implies a key-frame");
            let at = format!("key-frame {} sample {}", kf.id, kf.samples.len());
            if !camera.contains(u, v) {
                return Err(IoError::parse(WHAT, ln, format!("{at}: pixel ({u},{v}) outside the image")));
            }
            if !(d > 0.0) {
                return Err(IoError::parse(WHAT, ln, format!("{at}: depth {d} must be positive")));
            }
            kf.samples.push(DepthSample::new(u, v, d));
            pending -= 1;
            continue;
        }
        if toks.first() != Some(&"KF") || toks.len() != 11 {
            return Err(IoError::parse(WHAT, ln, "expected `KF id timestamp tx ty tz qx qy qz qw n_samples`"));
        }
        let id = toks[1].parse::<u64>().map_err(|_| IoError::parse(WHAT, ln, "bad key-frame id"))?;
        let v = parse_fields(WHAT, ln, &toks[2..10])?;
        let n = toks[10].parse::<usize>().map_err(|_| IoError::parse(WHAT, ln, "bad sample count"))?;
        keyframes.push(KeyFrame {
            id,
            timestamp: v[0],
            pose: parse_pose(WHAT, ln, &v[1..])?,
            samples: Vec::with_capacity(n.min(1 << 16)),
        });
        pending = n;
    }
    if pending > 0 {
        return Err(IoError::parse(WHAT, last_ln, format!("{pending} sample line(s) missing")));
    }
    Ok(KeyFrameFile { camera, keyframes })
}

pub fn format_keyframes(camera: &CameraIntrinsics, keyframes: &[KeyFrame]) -> String {
    let c = camera;
    let mut out = format!(
        "{KEYFRAME_HEADER}\ncamera {} {} {} {} {} {}\n",
        num(c.fx()),
        num(c.fy()),
        num(c.cx()),
        num(c.cy()),
        c.width(),
        c.height()
    );
    for kf in keyframes {
        let _ = writeln!(out, "KF {} {} {} {}", kf.id, num(kf.timestamp), pose_fields(&kf.pose), kf.samples.len());
        for s in &kf.samples {
            let _ = writeln!(out, "{} {} {}", s.u, s.v, num(s.d));
        }
    }
    out
}

pub fn read_keyframes(path: &Path) -> Result<KeyFrameFile, IoError> {
    parse_keyframes(&read_text(path)?)
}

/// `s tx ty tz qx qy qz qw` (whitespace or commas) or `identity`.
pub fn parse_transform(text: &str) -> Result<Sim3Transform, IoError> {
    const WHAT: &str = "transform";
    let mut lines = content_lines(text, |_| {});
    let Some((ln, line)) = lines.next() else {
        return Err(IoError::Empty(WHAT));
    };
    if let Some((extra, _)) = lines.next() {
        return Err(IoError::parse(WHAT, extra, "expected a single transform line"));
    }
    if line.eq_ignore_ascii_case("identity") {
        return Ok(Sim3Transform::identity());
    }
    let toks: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
    if toks.len() != 8 {
        return Err(IoError::parse(WHAT, ln, format!("expected 8 fields, found {}", toks.len())));
    }
    let v = parse_fields(WHAT, ln, &toks)?;
    let pose = parse_pose(WHAT, ln, &v[1..])?;
    Sim3Transform::new(v[0], *pose.rotation(), *pose.translation()).map_err(|e| IoError::parse(WHAT, ln, e.to_string()))
}

pub fn format_transform(t: &Sim3Transform) -> String {
    format!("{TRANSFORM_HEADER}\n# s tx ty tz qx qy qz qw\n{} {}\n", num(t.scale()), pose_fields(t))
}

pub fn parse_scene(text: &str) -> Result<Vec<SceneBox>, IoError> {
    const WHAT: &str = "scene";
    let mut boxes = Vec::new();
    for (ln, line) in content_lines(text, |_| {}) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() != Some(&"box") || toks.len() != 7 {
            return Err(IoError::parse(WHAT, ln, "expected `box minx miny minz maxx maxy maxz`"));
        }
        let v = parse_fields(WHAT, ln, &toks[1..])?;
        boxes.push(
            SceneBox::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]))
                .ok_or_else(|| IoError::parse(WHAT, ln, "box min must be below max"))?,
        );
    }
    if boxes.is_empty() {
        return Err(IoError::Empty(WHAT));
    }
    Ok(boxes)
}

pub fn format_scene(boxes: &[SceneBox]) -> String {
    let mut out = format!("{SCENE_HEADER}\n");
    for b in boxes {
        let _ = writeln!(
            out,
            "box {} {} {} {} {} {}",
            num(b.min.x),
            num(b.min.y),
            num(b.min.z),
            num(b.max.x),
            num(b.max.y),
            num(b.max.z)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

pub fn write_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let name = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let mut out = format!(
        "ply\nformat {name} 1.0\ncomment sim3-align point cloud\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    )
    .into_bytes();
    match format {
        PlyFormat::Ascii => {
            for p in &cloud.points {
                out.extend_from_slice(format!("{} {} {}\n", num(p.x), num(p.y), num(p.z)).as_bytes());
            }
        }
        PlyFormat::BinaryLittleEndian => {
            out.reserve(cloud.len() * 24);
            for p in &cloud.points {
                for c in p.iter() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(Scalar, String),
    List(Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn ply_err(msg: impl Into<String>) -> IoError {
    IoError::Ply(msg.into())
}

/// Reads the `x y z` vertex properties of an ascii or binary little-endian PLY.
/// Other elements and properties are skipped.
pub fn read_ply(bytes: &[u8]) -> Result<PointCloud, IoError> {
    let end = b"end_header";
    let header_end = bytes
        .windows(end.len())
        .position(|w| w == end)
        .ok_or_else(|| ply_err("missing end_header"))?;
    let mut body = header_end + end.len();
    // The header ends at the first newline after `end_header`.
    match bytes[body..].iter().position(|&b| b == b'\n') {
        Some(p) if bytes[body..body + p].iter().all(|b| b.is_ascii_whitespace()) => body += p + 1,
        _ => return Err(ply_err("malformed end_header line")),
    }
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| ply_err("header is not text"))?;
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(ply_err("missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", f, "1.0"] => {
                format = Some(match *f {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    other => return Err(ply_err(format!("unsupported format {other}"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| ply_err(format!("bad element count `{count}`")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, _] => {
                let el = elements.last_mut().ok_or_else(|| ply_err("property before element"))?;
                let ct = Scalar::parse(ct).ok_or_else(|| ply_err(format!("unknown type {ct}")))?;
                let it = Scalar::parse(it).ok_or_else(|| ply_err(format!("unknown type {it}")))?;
                el.props.push(Property::List(ct, it));
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| ply_err("property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| ply_err(format!("unknown type {ty}")))?;
                el.props.push(Property::Scalar(ty, name.to_string()));
            }
            _ => return Err(ply_err(format!("unrecognized header line `{line}`"))),
        }
    }
    let format = format.ok_or_else(|| ply_err("missing format line"))?;
    let vertex_idx = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| ply_err("no vertex element"))?;
    let vertex = &elements[vertex_idx];
    let slot = |axis: &str| {
        vertex
            .props
            .iter()
            .position(|p| matches!(p, Property::Scalar(_, n) if n == axis))
            .ok_or_else(|| ply_err(format!("vertex has no `{axis}` property")))
    };
    let slots = [slot("x")?, slot("y")?, slot("z")?];
    let data = &bytes[body..];
    let points = match format {
        PlyFormat::Ascii => read_ascii_body(data, &elements, vertex_idx, slots)?,
        PlyFormat::BinaryLittleEndian => read_binary_body(data, &elements, vertex_idx, slots)?,
    };
    Ok(PointCloud::new(points))
}

fn read_ascii_body(
    data: &[u8],
    elements: &[Element],
    vertex_idx: usize,
    slots: [usize; 3],
) -> Result<Vec<Vector3<f64>>, IoError> {
    let text = std::str::from_utf8(data).map_err(|_| ply_err("ascii body is not text"))?;
    let mut toks = text.split_ascii_whitespace();
    let mut next = || -> Result<f64, IoError> {
        let t = toks.next().ok_or_else(|| ply_err("unexpected end of data"))?;
        t.parse::<f64>().map_err(|_| ply_err(format!("`{t}` is not a number")))
    };
    let mut points = Vec::new();
    for (ei, el) in elements.iter().enumerate().take(vertex_idx + 1) {
        if el.props.is_empty() {
            continue;
        }
        if ei == vertex_idx {
            points.reserve(el.count.min(data.len() / 6 + 1));
        }
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            for (pi, p) in el.props.iter().enumerate() {
                match p {
                    Property::Scalar(..) => {
                        let v = next()?;
                        if let Some(axis) = slots.iter().position(|&s| s == pi) {
                            xyz[axis] = v;
                        }
                    }
                    Property::List(..) => {
                        let n = next()?;
                        if !(n >= 0.0 && n.fract() == 0.0) {
                            return Err(ply_err("bad list length"));
                        }
                        for _ in 0..n as u64 {
                            next()?;
                        }
                    }
                }
            }
            if ei == vertex_idx {
                points.push(finite_point(xyz, points.len())?);
            }
        }
    }
    Ok(points)
}

fn read_binary_body(
    data: &[u8],
    elements: &[Element],
    vertex_idx: usize,
    slots: [usize; 3],
) -> Result<Vec<Vector3<f64>>, IoError> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8], IoError> {
        let end = pos.checked_add(n).filter(|&e| e <= data.len()).ok_or_else(|| ply_err("unexpected end of data"))?;
        let s = &data[pos..end];
        pos = end;
        Ok(s)
    };
    let mut points = Vec::new();
    for (ei, el) in elements.iter().enumerate().take(vertex_idx + 1) {
        if el.props.is_empty() {
            continue;
        }
        if ei == vertex_idx {
            let min_size: usize = el.props.iter().map(|p| match p {
                Property::Scalar(t, _) => t.size(),
                Property::List(c, _) => c.size(),
            }).sum();
            points.reserve(el.count.min(data.len() / min_size.max(1)));
        }
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            for (pi, p) in el.props.iter().enumerate() {
                match p {
                    Property::Scalar(t, _) => {
                        let v = t.read_le(take(t.size())?);
                        if let Some(axis) = slots.iter().position(|&s| s == pi) {
                            xyz[axis] = v;
                        }
                    }
                    Property::List(c, it) => {
                        let n = c.read_le(take(c.size())?);
                        if !(n >= 0.0 && n.fract() == 0.0) {
                            return Err(ply_err("bad list length"));
                        }
                        let bytes = (n as usize).checked_mul(it.size()).ok_or_else(|| ply_err("list too long"))?;
                        take(bytes)?;
                    }
                }
            }
            if ei == vertex_idx {
                points.push(finite_point(xyz, points.len())?);
            }
        }
    }
    Ok(points)
}

fn finite_point(xyz: [f64; 3], index: usize) -> Result<Vector3<f64>, IoError> {
    if xyz.iter().all(|c| c.is_finite()) {
        Ok(Vector3::from(xyz))
    } else {
        Err(ply_err(format!("vertex {index} is not finite")))
    }
}

pub fn read_octree(path: &Path) -> Result<OccupancyOctree, IoError> {
    Ok(OccupancyOctree::from_bytes(&read_file(path)?)?)
}

pub fn write_octree(path: &Path, tree: &OccupancyOctree) -> Result<(), IoError> {
    write_file(path, tree.to_bytes()?)
}
