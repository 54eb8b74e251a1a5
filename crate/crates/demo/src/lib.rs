//! Browser front end for `sim3_align`.
//!
//! Every export runs a small synthetic scene and hands back flat numeric
//! arrays so the page can draw them on a canvas without any glue objects.

use sim3_align::alignment::{align, TrajectoryPair};
use sim3_align::octree::build_octree;
use sim3_align::projection::{back_project_all, transform_cloud};
use sim3_align::scale_series::{
    compute_factors, detect_stable_window, exclusion_prefix, DEFAULT_MIN_STEP, DEFAULT_REL_TOL, DEFAULT_WINDOW,
};
use sim3_align::synth::{generate, ScenarioConfig, SyntheticDataset};
use wasm_bindgen::prelude::*;

const FRAMES_MAX: u32 = 20_000;

fn scenario(seed: u32, frames: u32, transient: u32, drift: f64) -> Result<SyntheticDataset, String> {
    let n_frames = frames.clamp(200, FRAMES_MAX) as usize;
    let cfg = ScenarioConfig {
        seed: u64::from(seed),
        n_frames,
        n_keyframes: 24,
        transient_len: (transient as usize).min(n_frames / 2),
        transient_scale_drift: drift,
        sample_stride: 24,
        ..ScenarioConfig::benchmark_scene()
    };
    generate(&cfg).map_err(|e| e.to_string())
}

/// Result of one alignment run. Paths are interleaved `x, y` in metres,
/// viewed from above.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct AlignmentView {
    true_scale: f64,
    estimated_scale: f64,
    rotation_error_deg: f64,
    translation_error_m: f64,
    excluded_prefix: usize,
    rmse_m: f64,
    reference_xy: Vec<f64>,
    aligned_xy: Vec<f64>,
}

#[wasm_bindgen]
impl AlignmentView {
    #[wasm_bindgen(getter)]
    pub fn true_scale(&self) -> f64 {
        self.true_scale
    }
    #[wasm_bindgen(getter)]
    pub fn estimated_scale(&self) -> f64 {
        self.estimated_scale
    }
    #[wasm_bindgen(getter)]
    pub fn rotation_error_deg(&self) -> f64 {
        self.rotation_error_deg
    }
    #[wasm_bindgen(getter)]
    pub fn translation_error_m(&self) -> f64 {
        self.translation_error_m
    }
    #[wasm_bindgen(getter)]
    pub fn excluded_prefix(&self) -> usize {
        self.excluded_prefix
    }
    #[wasm_bindgen(getter)]
    pub fn rmse_m(&self) -> f64 {
        self.rmse_m
    }
    #[wasm_bindgen(getter)]
    pub fn reference_xy(&self) -> Vec<f64> {
        self.reference_xy.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn aligned_xy(&self) -> Vec<f64> {
        self.aligned_xy.clone()
    }
}

pub fn run_alignment(seed: u32, frames: u32, transient: u32, exclude: bool) -> Result<AlignmentView, String> {
    let d = scenario(seed, frames, transient, 2.0)?;
    let pair = TrajectoryPair::synchronized(d.slam.poses.clone(), d.ground_truth.poses.clone())
        .map_err(|e| e.to_string())?;
    let prefix = if exclude {
        let series = compute_factors(&pair, DEFAULT_MIN_STEP).map_err(|e| e.to_string())?;
        let det = detect_stable_window(&series, DEFAULT_WINDOW, DEFAULT_REL_TOL);
        exclusion_prefix(&series.labelled(&det)).prefix
    } else {
        0
    };
    let res = align(&pair, prefix).map_err(|e| e.to_string())?;
    let est = res.transform;
    let truth = d.true_transform;
    let step = (d.slam.poses.len() / 600).max(1);
    let mut reference_xy = Vec::new();
    let mut aligned_xy = Vec::new();
    for (g, s) in d.ground_truth.poses.iter().zip(&d.slam.poses).step_by(step) {
        let p = g.position();
        let q = est.apply(s.position());
        reference_xy.extend([p.x, p.y]);
        aligned_xy.extend([q.x, q.y]);
    }
    Ok(AlignmentView {
        true_scale: truth.scale(),
        estimated_scale: est.scale(),
        rotation_error_deg: est.rotation().angle_to(truth.rotation()).to_degrees(),
        translation_error_m: (est.translation() - truth.translation()).norm(),
        excluded_prefix: prefix,
        rmse_m: res.rmse_after,
        reference_xy,
        aligned_xy,
    })
}

/// Aligns a synthetic SLAM run to its ground truth.
#[wasm_bindgen]
pub fn alignment(seed: u32, frames: u32, transient: u32, exclude: bool) -> Result<AlignmentView, JsError> {
    run_alignment(seed, frames, transient, exclude).map_err(|e| JsError::new(&e))
}

/// Per-step scale estimates with stage labels.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ScaleCurve {
    scales: Vec<f64>,
    stages: Vec<u8>,
    stable_start: i32,
    true_scale: f64,
}

#[wasm_bindgen]
impl ScaleCurve {
    /// `sqrt(p_k)` for every association step.
    #[wasm_bindgen(getter)]
    pub fn scales(&self) -> Vec<f64> {
        self.scales.clone()
    }
    /// 0 transient, 1 converging, 2 stable.
    #[wasm_bindgen(getter)]
    pub fn stages(&self) -> Vec<u8> {
        self.stages.clone()
    }
    /// -1 when nothing settled.
    #[wasm_bindgen(getter)]
    pub fn stable_start(&self) -> i32 {
        self.stable_start
    }
    #[wasm_bindgen(getter)]
    pub fn true_scale(&self) -> f64 {
        self.true_scale
    }
}

pub fn run_scale_curve(seed: u32, frames: u32, transient: u32, drift: f64) -> Result<ScaleCurve, String> {
    if !(drift.is_finite() && drift > 0.0) {
        return Err(format!("drift must be positive, got {drift}"));
    }
    let d = scenario(seed, frames, transient, drift)?;
    let pair = TrajectoryPair::synchronized(d.slam.poses.clone(), d.ground_truth.poses.clone())
        .map_err(|e| e.to_string())?;
    let series = compute_factors(&pair, DEFAULT_MIN_STEP).map_err(|e| e.to_string())?;
    let det = detect_stable_window(&series, DEFAULT_WINDOW, DEFAULT_REL_TOL);
    let series = series.labelled(&det);
    Ok(ScaleCurve {
        scales: series.factors.iter().map(|f| f.scale()).collect(),
        stages: series.labels.iter().map(|l| *l as u8).collect(),
        stable_start: series.stable_start.map_or(-1, |k| k as i32),
        true_scale: d.true_transform.scale(),
    })
}

/// Scale-series curve for a synthetic run with an initialization transient.
#[wasm_bindgen]
pub fn scale_curve(seed: u32, frames: u32, transient: u32, drift: f64) -> Result<ScaleCurve, JsError> {
    run_scale_curve(seed, frames, transient, drift).map_err(|e| JsError::new(&e))
}

/// Occupied leaves as `cx, cy, cz, count` quadruples, plus the leaf edge
/// length as the final element.
pub fn run_octree_leaves(seed: u32, resolution: f64) -> Result<Vec<f64>, String> {
    let d = scenario(seed, 2000, 0, 1.0)?;
    let cloud = back_project_all(&d.keyframes, &d.camera).map_err(|e| e.to_string())?;
    let metric = transform_cloud(&d.true_transform, &cloud);
    let tree = build_octree(&metric, resolution).map_err(|e| e.to_string())?;
    let leaves = tree.leaves();
    let mut out = Vec::with_capacity(leaves.len() * 4 + 1);
    for l in &leaves {
        out.extend([l.center.x, l.center.y, l.center.z, l.count as f64]);
    }
    out.push(tree.leaf_edge());
    Ok(out)
}

/// Builds an occupancy octree over the metric key-frame cloud.
#[wasm_bindgen]
pub fn octree_leaves(seed: u32, resolution: f64) -> Result<Vec<f64>, JsError> {
    run_octree_leaves(seed, resolution).map_err(|e| JsError::new(&e))
}
