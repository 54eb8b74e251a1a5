//! Frame-to-frame length-ratio series and initialization-transient detection.
//!
//! For consecutive associated pairs `k, k+1` the factor
//!
//! ```text
//! p_k = |t'_{k+1} - t'_k|² / |t_{k+1} - t_k|²
//! ```
//!
//! is the squared ratio of reference to SLAM displacement. Once a monocular
//! run has settled, `p_k` hovers around `s²`; during initialization it jumps
//! around. Detection runs on the raw `p_k`; `√p_k` is exposed as the
//! per-frame scale estimate.

use std::fmt::{self, Write as _};

use crate::alignment::{AlignError, TrajectoryPair};

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_REL_TOL: f64 = 0.1;
pub const DEFAULT_MIN_STEP: f64 = 1e-6;

/// A window whose spread is within this multiple of `rel_tol` marks the end
/// of the transient stage.
pub const CONVERGING_TOL_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Transient,
    Converging,
    Stable,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Transient => "transient",
            Stage::Converging => "converging",
            Stage::Stable => "stable",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactor {
    /// Index of the first association of the displacement pair.
    pub k: usize,
    pub p: f64,
}

impl ScaleFactor {
    pub fn scale(&self) -> f64 {
        self.p.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSeries {
    pub factors: Vec<ScaleFactor>,
    /// Association indices skipped because a displacement was below `min_step`.
    pub skipped: Vec<usize>,
    pub min_step: f64,
    /// One label per factor; empty until a detection has been applied.
    pub labels: Vec<Stage>,
    pub stable_start: Option<usize>,
}

impl ScaleSeries {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.p).collect()
    }

    /// Attaches labels and stable start from a detection run on this series.
    pub fn labelled(mut self, detection: &Detection) -> Self {
        self.labels = detection.labels.clone();
        self.stable_start = detection.stable_start;
        self
    }

    pub fn stage_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for l in &self.labels {
            c[*l as usize] += 1;
        }
        c
    }
}

/// Result of [`detect_stable_window`]. Start values are association indices `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub stable_start: Option<usize>,
    pub converging_start: Option<usize>,
    pub labels: Vec<Stage>,
    pub window: usize,
    pub rel_tol: f64,
}

/// Computes `p_k` for every consecutive pair of associations.
pub fn compute_factors(pair: &TrajectoryPair, min_step: f64) -> Result<ScaleSeries, AlignError> {
    let pts = pair.point_pairs();
    if pts.len() < 2 {
        return Err(AlignError::InsufficientData(format!(
            "{} associated pairs; the scale series needs at least 2",
            pts.len()
        )));
    }
    let mut factors = Vec::with_capacity(pts.len() - 1);
    let mut skipped = Vec::new();
    for (k, w) in pts.windows(2).enumerate() {
        let ds = w[1].0 - w[0].0;
        let dr = w[1].1 - w[0].1;
        if ds.norm() < min_step || dr.norm() < min_step {
            skipped.push(k);
            continue;
        }
        factors.push(ScaleFactor { k, p: dr.norm_squared() / ds.norm_squared() });
    }
    Ok(ScaleSeries { factors, skipped, min_step, labels: Vec::new(), stable_start: None })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// `max |p - median| / median` over a window; infinite when the median is not positive.
pub fn relative_spread(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = median(&sorted);
    if !(m > 0.0) {
        return f64::INFINITY;
    }
    let lo = (m - sorted[0]).abs();
    let hi = (sorted[sorted.len() - 1] - m).abs();
    lo.max(hi) / m
}

/// Finds the first window of `window` factors whose relative spread is at
/// most `rel_tol`.
///
/// Labels: factors before the first window within `CONVERGING_TOL_FACTOR ·
/// rel_tol` are transient, those from there up to the stable start are
/// converging, the rest stable. With no stable window there is no stable run.
pub fn detect_stable_window(series: &ScaleSeries, window: usize, rel_tol: f64) -> Detection {
    let window = window.max(1);
    let values = series.values();
    let n = values.len();
    let mut stable_pos = None;
    let mut converging_pos = None;
    if n >= window {
        for i in 0..=n - window {
            let spread = relative_spread(&values[i..i + window]);
            if converging_pos.is_none() && spread <= CONVERGING_TOL_FACTOR * rel_tol {
                converging_pos = Some(i);
            }
            if spread <= rel_tol {
                stable_pos = Some(i);
                break;
            }
        }
    }
    let conv = converging_pos.unwrap_or(n);
    let stable = stable_pos.unwrap_or(n);
    let labels = (0..n)
        .map(|i| {
            if i >= stable {
                Stage::Stable
            } else if i >= conv {
                Stage::Converging
            } else {
                Stage::Transient
            }
        })
        .collect();
    Detection {
        stable_start: stable_pos.map(|i| series.factors[i].k),
        converging_start: converging_pos.map(|i| series.factors[i].k),
        labels,
        window,
        rel_tol,
    }
}

/// Number of leading associations to drop before alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exclusion {
    pub prefix: usize,
    /// Set when no stable window was found and nothing is excluded.
    pub no_stable_window: bool,
}

pub fn exclusion_prefix(series: &ScaleSeries) -> Exclusion {
    match series.stable_start {
        Some(prefix) => Exclusion { prefix, no_stable_window: false },
        None => Exclusion { prefix: 0, no_stable_window: true },
    }
}

/// CSV with header `k,p_k,sqrt_p_k,label`, one row per factor in order.
pub fn to_csv(series: &ScaleSeries) -> String {
    let mut out = String::from("k,p_k,sqrt_p_k,label\n");
    for (i, f) in series.factors.iter().enumerate() {
        let label = series.labels.get(i).map_or("", Stage::as_str);
        let _ = writeln!(out, "{},{},{},{}", f.k, f.p, f.scale(), label);
    }
    out
}
