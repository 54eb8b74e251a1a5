//! `sim3-align` command-line interface.
//!
//! Every command prints a human-readable summary on stdout (or the
//! `key=value` report with `--machine`) and can also write that report to
//! `--report PATH`. Errors go to stderr with a category exit code:
//!
//! | code | meaning            |
//! |------|--------------------|
//! | 0    | success            |
//! | 2    | usage              |
//! | 3    | parse              |
//! | 4    | insufficient data  |
//! | 5    | degenerate geometry|
//! | 6    | I/O                |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::alignment::{align_with, associate, AlignError, AlignOptions, AlignmentResult, DEFAULT_MAX_DT};
use crate::geometry::Sim3Transform;
use crate::io::{self, IoError, PlyFormat};
use crate::octree::{build_octree, OctreeError};
use crate::projection::{back_project_all, transform_cloud, ProjectionError};
use crate::scale_series::{
    compute_factors, detect_stable_window, exclusion_prefix, to_csv, Detection, ScaleSeries, DEFAULT_MIN_STEP,
    DEFAULT_REL_TOL, DEFAULT_WINDOW,
};
use crate::synth::{generate, ScenarioConfig, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_INSUFFICIENT: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;
pub const EXIT_IO: i32 = 6;

pub const REPORT_HEADER: &str = "# sim3-align v1 report";

#[derive(Debug, Parser)]
#[command(name = "sim3-align", version, about = "Metric alignment of monocular SLAM trajectories and point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the similarity transform from a SLAM trajectory to a metric reference.
    Align(AlignArgs),
    /// Write the frame-to-frame scale factor series as CSV.
    ScaleSeries(SeriesArgs),
    /// Back-project key-frame depth samples, transform them and write a PLY cloud.
    Cloud(CloudArgs),
    /// Voxelize a PLY cloud into an occupancy octree.
    Octree(OctreeArgs),
    /// Generate a synthetic dataset with a known ground-truth transform.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SeriesParams {
    /// Maximum timestamp difference for association, seconds.
    #[arg(long, default_value_t = DEFAULT_MAX_DT)]
    pub max_dt: f64,
    /// Number of consecutive factors in the stability window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Relative spread tolerance of a stable window.
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    /// Displacements shorter than this are skipped in the factor series.
    #[arg(long, default_value_t = DEFAULT_MIN_STEP)]
    pub min_step: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Print the key=value report instead of the human summary.
    #[arg(long)]
    pub machine: bool,
    /// Also write the key=value report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// SLAM trajectory file.
    pub slam: PathBuf,
    /// Metric reference trajectory file.
    pub reference: PathBuf,
    #[command(flatten)]
    pub params: SeriesParams,
    /// Fit on every association instead of dropping the detected transient.
    #[arg(long)]
    pub no_prefix_exclusion: bool,
    /// Rigid alignment with the scale pinned to 1.
    #[arg(long = "fix-scale-1")]
    pub fix_scale: bool,
    /// Write the aligned SLAM trajectory here.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the estimated transform here.
    #[arg(long)]
    pub transform_out: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// SLAM trajectory file
    pub slam: PathBuf,
    /// Metric reference trajectory file
    pub reference: PathBuf,
    #[command(flatten)]
    pub params: SeriesParams,
    /// CSV output path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CloudArgs {
    /// Key-frame file.
    pub keyframes: PathBuf,
    /// Transform file, or an inline `s tx ty tz qx qy qz qw` / `identity`.
    pub transform: String,
    /// PLY output path.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Write ascii PLY instead of binary little endian.
    #[arg(long)]
    pub ascii: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct OctreeArgs {
    /// PLY input cloud.
    pub cloud: PathBuf,
    /// Leaf edge length, meters.
    #[arg(long)]
    pub resolution: f64,
    /// Octree output path.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario config (`key = value` lines); defaults when absent.
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Io { .. } => EXIT_IO,
            IoError::Empty(_) => EXIT_INSUFFICIENT,
            IoError::Octree(o) => return CliError::from(o.clone()),
            IoError::Parse { .. } | IoError::Unsorted { .. } | IoError::Ply(_) => EXIT_PARSE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        let code = match e {
            AlignError::InsufficientData(_) => EXIT_INSUFFICIENT,
            AlignError::Unsorted(..) => EXIT_PARSE,
            _ => EXIT_DEGENERATE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<OctreeError> for CliError {
    fn from(e: OctreeError) -> Self {
        let code = match e {
            OctreeError::EmptyCloud => EXIT_INSUFFICIENT,
            OctreeError::InvalidResolution(_) => EXIT_USAGE,
            OctreeError::NonFinitePoint(_) | OctreeError::Malformed(_) => EXIT_PARSE,
            OctreeError::TooDeep { .. } | OctreeError::CountOverflow(_) => EXIT_DEGENERATE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ProjectionError> for CliError {
    fn from(e: ProjectionError) -> Self {
        let code = match e {
            ProjectionError::BehindCamera(_) => EXIT_DEGENERATE,
            _ => EXIT_PARSE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        let code = match e {
            SynthError::EmptyScene => EXIT_INSUFFICIENT,
            _ => EXIT_PARSE,
        };
        CliError::new(code, e.to_string())
    }
}

/// Ordered `key=value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn put_f(&mut self, key: &str, value: f64) {
        self.put(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Parses text produced by [`to_text`](Self::to_text).
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

/// Output of one command: the report plus the human summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: Report,
    pub human: String,
    /// Printed verbatim instead of the summary (scale-series CSV on stdout).
    pub stdout_override: Option<String>,
}

struct Timer {
    last: Instant,
    laps: Vec<(&'static str, f64)>,
}

impl Timer {
    fn new() -> Self {
        Self { last: Instant::now(), laps: Vec::new() }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        self.laps.push((name, (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn write(&self, r: &mut Report) {
        for (name, secs) in &self.laps {
            r.put(&format!("timing.{name}_s"), format!("{secs:.6}"));
        }
    }
}

fn put_params(r: &mut Report, p: &SeriesParams) {
    r.put_f("param.max_dt", p.max_dt);
    r.put("param.window", p.window);
    r.put_f("param.rel_tol", p.rel_tol);
    r.put_f("param.min_step", p.min_step);
}

fn check_params(p: &SeriesParams) -> Result<(), CliError> {
    if !(p.max_dt >= 0.0 && p.max_dt.is_finite()) {
        return Err(CliError::new(EXIT_USAGE, "--max-dt must be a non-negative number"));
    }
    if p.window == 0 {
        return Err(CliError::new(EXIT_USAGE, "--window must be at least 1"));
    }
    if !(p.rel_tol > 0.0 && p.rel_tol.is_finite()) {
        return Err(CliError::new(EXIT_USAGE, "--rel-tol must be positive"));
    }
    if !(p.min_step >= 0.0 && p.min_step.is_finite()) {
        return Err(CliError::new(EXIT_USAGE, "--min-step must be non-negative"));
    }
    Ok(())
}

fn put_transform(r: &mut Report, prefix: &str, t: &Sim3Transform) {
    let [x, y, z, w] = t.rotation().quaternion().xyzw();
    let tr = t.translation();
    r.put_f(&format!("{prefix}.scale"), t.scale());
    r.put(&format!("{prefix}.rotation_xyzw"), format!("{x:?} {y:?} {z:?} {w:?}"));
    r.put(&format!("{prefix}.translation"), format!("{:?} {:?} {:?}", tr.x, tr.y, tr.z));
}

fn put_series(r: &mut Report, series: &ScaleSeries, det: &Detection) {
    let opt = |v: Option<usize>| v.map_or("none".to_string(), |k| k.to_string());
    let [t, c, s] = series.stage_counts();
    r.put("series.factors", series.len());
    r.put("series.skipped", series.skipped.len());
    r.put("series.stable_start", opt(det.stable_start));
    r.put("series.converging_start", opt(det.converging_start));
    r.put("series.count_transient", t);
    r.put("series.count_converging", c);
    r.put("series.count_stable", s);
}

fn series_for(
    slam_path: &Path,
    ref_path: &Path,
    p: &SeriesParams,
    timer: &mut Timer,
) -> Result<(crate::trajectory::Trajectory, crate::trajectory::Trajectory, crate::alignment::TrajectoryPair, ScaleSeries, Detection), CliError> {
    check_params(p)?;
    let slam = io::read_trajectory(slam_path)?;
    let reference = io::read_trajectory(ref_path)?;
    timer.lap("read");
    let pair = associate(&slam, &reference, p.max_dt)?;
    timer.lap("associate");
    let series = compute_factors(&pair, p.min_step)?;
    let det = detect_stable_window(&series, p.window, p.rel_tol);
    let series = series.labelled(&det);
    timer.lap("scale_series");
    Ok((slam, reference, pair, series, det))
}

pub fn cmd_align(args: &AlignArgs) -> Result<Outcome, CliError> {
    let mut timer = Timer::new();
    let (slam, reference, pair, series, det) = series_for(&args.slam, &args.reference, &args.params, &mut timer)?;
    let exclusion = exclusion_prefix(&series);
    let prefix = if args.no_prefix_exclusion { 0 } else { exclusion.prefix };
    let result: AlignmentResult = align_with(&pair, &AlignOptions { exclude_prefix: prefix, fix_scale: args.fix_scale })?;
    timer.lap("align");

    let t = result.transform;
    if let Some(out) = &args.output {
        let mut aligned = slam.transformed(&t);
        aligned.comments.push(format!("aligned to {}", args.reference.display()));
        io::write_trajectory(out, &aligned)?;
    }
    if let Some(out) = &args.transform_out {
        io::write_file(out, io::format_transform(&t))?;
    }
    timer.lap("write");

    let slam_len = slam.path_length();
    let ref_len = reference.path_length();
    let mut r = Report::default();
    r.put("command", "align");
    r.put("input.slam", args.slam.display());
    r.put("input.reference", args.reference.display());
    put_params(&mut r, &args.params);
    r.put("param.prefix_exclusion", !args.no_prefix_exclusion);
    r.put("param.fix_scale_1", args.fix_scale);
    r.put("data.slam_poses", slam.len());
    r.put("data.reference_poses", reference.len());
    r.put("data.associated_pairs", pair.len());
    put_series(&mut r, &series, &det);
    r.put("alignment.no_stable_window", exclusion.no_stable_window);
    r.put("alignment.excluded_prefix", result.excluded_prefix);
    r.put("alignment.n_pairs_used", result.n_pairs_used);
    put_transform(&mut r, "alignment", &t);
    r.put_f("alignment.rmse_before", result.rmse_before);
    r.put_f("alignment.rmse_after", result.rmse_after);
    r.put_f("alignment.mean_rotation_error_rad", result.mean_rotation_error);
    r.put_f("path.slam_length_units", slam_len);
    r.put_f("path.slam_length_m", slam_len * t.scale());
    r.put_f("path.reference_length_m", ref_len);
    if let Some(out) = &args.output {
        r.put("output.trajectory", out.display());
    }
    if let Some(out) = &args.transform_out {
        r.put("output.transform", out.display());
    }
    timer.write(&mut r);

    let [x, y, z, w] = t.rotation().quaternion().xyzw();
    let tr = t.translation();
    let mut h = String::new();
    let _ = writeln!(h, "SLAM poses           {}", slam.len());
    let _ = writeln!(h, "reference poses      {}", reference.len());
    let _ = writeln!(h, "associated pairs     {}", pair.len());
    let _ = writeln!(
        h,
        "stable window start  {}",
        det.stable_start.map_or("none found".to_string(), |k| k.to_string())
    );
    let _ = writeln!(h, "excluded prefix      {}", result.excluded_prefix);
    let _ = writeln!(h, "pairs used           {}", result.n_pairs_used);
    let _ = writeln!(h, "scale                {:.6}", t.scale());
    let _ = writeln!(h, "rotation (xyzw)      {x:.6} {y:.6} {z:.6} {w:.6}  ({:.4} deg)", t.rotation().angle().to_degrees());
    let _ = writeln!(h, "translation          {:.6} {:.6} {:.6}", tr.x, tr.y, tr.z);
    let _ = writeln!(h, "RMSE before / after  {:.6} / {:.6}", result.rmse_before, result.rmse_after);
    let _ = writeln!(h, "SLAM path length     {slam_len:.4} units = {:.4} m", slam_len * t.scale());
    let _ = writeln!(h, "reference path       {ref_len:.4} m");
    Ok(Outcome { report: r, human: h, stdout_override: None })
}

pub fn cmd_scale_series(args: &SeriesArgs) -> Result<Outcome, CliError> {
    let mut timer = Timer::new();
    let (_, _, pair, series, det) = series_for(&args.slam, &args.reference, &args.params, &mut timer)?;
    let csv = to_csv(&series);
    let mut r = Report::default();
    r.put("command", "scale-series");
    r.put("input.slam", args.slam.display());
    r.put("input.reference", args.reference.display());
    put_params(&mut r, &args.params);
    r.put("data.associated_pairs", pair.len());
    put_series(&mut r, &series, &det);
    let stdout_override = match &args.output {
        Some(out) => {
            io::write_file(out, &csv)?;
            r.put("output.csv", out.display());
            None
        }
        None => Some(csv),
    };
    timer.lap("write");
    timer.write(&mut r);
    let human = format!(
        "{} factors, stable from k = {}\n",
        series.len(),
        det.stable_start.map_or("none".to_string(), |k| k.to_string())
    );
    Ok(Outcome { report: r, human, stdout_override })
}

/// Reads a transform from a file path, falling back to the inline form.
fn load_transform(arg: &str) -> Result<Sim3Transform, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(io::parse_transform(&io::read_text(path)?)?);
    }
    io::parse_transform(arg).map_err(|e| match e {
        IoError::Parse { .. } | IoError::Empty(_) => CliError::new(
            EXIT_PARSE,
            format!("`{arg}` is neither a readable file nor an inline transform: {e}"),
        ),
        other => other.into(),
    })
}

pub fn cmd_cloud(args: &CloudArgs) -> Result<Outcome, CliError> {
    let mut timer = Timer::new();
    let kf = io::read_keyframes(&args.keyframes)?;
    let t = load_transform(&args.transform)?;
    timer.lap("read");
    let cloud = transform_cloud(&t, &back_project_all(&kf.keyframes, &kf.camera)?);
    timer.lap("project");
    let format = if args.ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
    io::write_file(&args.output, io::write_ply(&cloud, format))?;
    timer.lap("write");

    let mut r = Report::default();
    r.put("command", "cloud");
    r.put("input.keyframes", args.keyframes.display());
    r.put("param.transform", &args.transform);
    r.put("param.ascii", args.ascii);
    put_transform(&mut r, "transform", &t);
    r.put("data.keyframes", kf.keyframes.len());
    r.put("cloud.points", cloud.len());
    r.put("output.ply", args.output.display());
    timer.write(&mut r);
    let human = format!(
        "{} points from {} key-frames written to {}\n",
        cloud.len(),
        kf.keyframes.len(),
        args.output.display()
    );
    Ok(Outcome { report: r, human, stdout_override: None })
}

pub fn cmd_octree(args: &OctreeArgs) -> Result<Outcome, CliError> {
    let mut timer = Timer::new();
    let cloud = io::read_ply(&io::read_file(&args.cloud)?)?;
    timer.lap("read");
    let tree = build_octree(&cloud, args.resolution)?;
    timer.lap("build");
    io::write_octree(&args.output, &tree)?;
    timer.lap("write");
    let stats = tree.stats();

    let mut r = Report::default();
    r.put("command", "octree");
    r.put("input.cloud", args.cloud.display());
    r.put_f("param.resolution", args.resolution);
    r.put("octree.points", stats.point_count);
    r.put("octree.leaf_count", stats.leaf_count);
    r.put("octree.node_count", stats.node_count);
    r.put("octree.depth", stats.depth);
    r.put_f("octree.root_size", tree.root_size());
    r.put("octree.memory_estimate_bytes", stats.memory_estimate_bytes);
    r.put("output.octree", args.output.display());
    timer.write(&mut r);
    let human = format!(
        "points {}\nleaves {}\nnodes  {}\ndepth  {}\nroot   {:.4} m\n",
        stats.point_count,
        stats.leaf_count,
        stats.node_count,
        stats.depth,
        tree.root_size()
    );
    Ok(Outcome { report: r, human, stdout_override: None })
}

pub const SYNTH_FILES: [&str; 6] =
    ["ground_truth.txt", "slam.txt", "keyframes.txt", "transform.txt", "scene.txt", "config.txt"];

pub fn cmd_synth(args: &SynthArgs) -> Result<Outcome, CliError> {
    let mut timer = Timer::new();
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_key_values(&io::read_text(path)?)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    timer.lap("read");
    let d = generate(&cfg)?;
    timer.lap("generate");
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", args.out_dir.display())))?;
    let dir = &args.out_dir;
    let mut gt = d.ground_truth.clone();
    gt.comments.push(format!("synthetic ground truth, seed {}", cfg.seed));
    let mut slam = d.slam.clone();
    slam.comments.push(format!("synthetic SLAM-like trajectory, seed {}", cfg.seed));
    io::write_trajectory(&dir.join(SYNTH_FILES[0]), &gt)?;
    io::write_trajectory(&dir.join(SYNTH_FILES[1]), &slam)?;
    io::write_file(&dir.join(SYNTH_FILES[2]), io::format_keyframes(&d.camera, &d.keyframes))?;
    io::write_file(&dir.join(SYNTH_FILES[3]), io::format_transform(&d.true_transform))?;
    io::write_file(&dir.join(SYNTH_FILES[4]), io::format_scene(&d.scene))?;
    io::write_file(&dir.join(SYNTH_FILES[5]), cfg.to_key_values())?;
    timer.lap("write");

    let samples: usize = d.keyframes.iter().map(|k| k.samples.len()).sum();
    let mut r = Report::default();
    r.put("command", "synth");
    r.put("input.config", args.config.as_ref().map_or("default".to_string(), |p| p.display().to_string()));
    r.put("param.seed", cfg.seed);
    r.put("param.generator", crate::synth::GENERATOR_VERSION);
    r.put("data.frames", d.ground_truth.len());
    r.put("data.keyframes", d.keyframes.len());
    r.put("data.depth_samples", samples);
    put_transform(&mut r, "truth", &d.true_transform);
    r.put_f("path.reference_length_m", d.ground_truth_path_length());
    r.put_f("path.slam_length_units", d.slam_path_length());
    r.put("output.dir", dir.display());
    timer.write(&mut r);
    let human = format!(
        "{} frames, {} key-frames, {} depth samples\nground-truth path {:.3} m, SLAM path {:.3} units, true scale {:.6}\nwritten to {}\n",
        d.ground_truth.len(),
        d.keyframes.len(),
        samples,
        d.ground_truth_path_length(),
        d.slam_path_length(),
        d.true_transform.scale(),
        dir.display()
    );
    Ok(Outcome { report: r, human, stdout_override: None })
}

fn report_args(cmd: &Command) -> Option<&ReportArgs> {
    match cmd {
        Command::Align(a) => Some(&a.report),
        Command::Cloud(a) => Some(&a.report),
        Command::Octree(a) => Some(&a.report),
        Command::Synth(a) => Some(&a.report),
        Command::ScaleSeries(_) => None,
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Align(a) => cmd_align(a),
        Command::ScaleSeries(a) => cmd_scale_series(a),
        Command::Cloud(a) => cmd_cloud(a),
        Command::Octree(a) => cmd_octree(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.message);
            return e.code;
        }
    };
    let ra = report_args(&cli.command);
    if let Some(path) = ra.and_then(|r| r.report.as_ref()) {
        if let Err(e) = io::write_file(path, outcome.report.to_text()) {
            let e = CliError::from(e);
            eprintln!("error: {}", e.message);
            return e.code;
        }
    }
    if let Some(text) = &outcome.stdout_override {
        print!("{text}");
    } else if ra.is_some_and(|r| r.machine) {
        print!("{}", outcome.report.to_text());
    } else {
        print!("{}", outcome.human);
    }
    EXIT_OK
}
