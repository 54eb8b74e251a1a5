//! Closed-form Sim(3) alignment of a SLAM trajectory onto a metric reference.
//!
//! The estimate minimizes `Σ |t'ᵢ - (s·R·tᵢ + r₀)|²` over the associated
//! translations only:
//!
//! 1. centroids of both translation sets,
//! 2. centroid-relative vectors,
//! 3. the nine product sums `S_ab = Σ t̂_a·t̂'_b`,
//! 4. rotation quaternion = eigenvector of the largest eigenvalue of the
//!    symmetric 4×4 matrix `N` built from `S`,
//! 5. scale `s = Σ t̂'·R(t̂) / Σ |t̂|²`,
//! 6. translation `r₀ = t̄' - s·R(t̄)`.
//!
//! Pose rotations are not used by the fit; they only feed the rotation
//! diagnostic reported alongside the result.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

use crate::eigen::{frobenius, jacobi_eigen};
use crate::geometry::{Rotation3, Sim3Transform, UnitQuaternion};
use crate::tolerances::{COLLINEAR_REL, EIGEN_GAP_REL, EIGEN_RESIDUAL_REL, SYMMETRY_TOL};
use crate::trajectory::{StampedPose, Trajectory};

/// Default association window: half the frame period of a 60 Hz camera.
pub const DEFAULT_MAX_DT: f64 = 0.02;

/// Minimum number of associated pairs for a unique similarity.
pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{0} trajectory timestamps are not strictly increasing at index {1}")]
    Unsorted(&'static str, usize),
    #[error("no motion: all source translations coincide with their centroid")]
    NoMotion,
    #[error("collinear motion: rotation about the motion axis is undetermined (variance ratio {ratio:e})")]
    Collinear { ratio: f64 },
    #[error("ambiguous rotation: top eigenvalue gap {gap:e} is within tolerance of |N| = {norm:e}")]
    AmbiguousRotation { gap: f64, norm: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigen-solver failed to converge")]
    NotConverged,
    #[error("estimated scale {0} is not positive: reflection or ill-posed data")]
    NonPositiveScale(f64),
}

/// Two trajectories and a monotone list of associated index pairs
/// `(slam index, reference index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub slam: Vec<StampedPose>,
    pub reference: Vec<StampedPose>,
    pub association: Vec<(usize, usize)>,
}

impl TrajectoryPair {
    /// Pairs equal-length trajectories index by index.
    pub fn synchronized(slam: Vec<StampedPose>, reference: Vec<StampedPose>) -> Result<Self, AlignError> {
        if slam.len() != reference.len() {
            return Err(AlignError::InsufficientData(format!(
                "synchronized trajectories differ in length ({} vs {})",
                slam.len(),
                reference.len()
            )));
        }
        let association = (0..slam.len()).map(|i| (i, i)).collect();
        Ok(Self { slam, reference, association })
    }

    /// Builds a pair straight from corresponded translations, timestamped by index.
    pub fn from_points(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Result<Self, AlignError> {
        let wrap = |pts: &[Vector3<f64>]| -> Vec<StampedPose> {
            pts.iter()
                .enumerate()
                .map(|(i, p)| StampedPose::new(i as f64, Sim3Transform::rigid(Rotation3::IDENTITY, *p)))
                .collect()
        };
        Self::synchronized(wrap(source), wrap(target))
    }

    pub fn len(&self) -> usize {
        self.association.len()
    }

    pub fn is_empty(&self) -> bool {
        self.association.is_empty()
    }

    /// Associated `(slam translation, reference translation)` pairs in order.
    pub fn point_pairs(&self) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        self.association
            .iter()
            .map(|&(i, j)| (*self.slam[i].position(), *self.reference[j].position()))
            .collect()
    }

    /// Associated `(slam pose, reference pose)` pairs in order.
    pub fn pose_pairs(&self) -> impl Iterator<Item = (&StampedPose, &StampedPose)> {
        self.association.iter().map(|&(i, j)| (&self.slam[i], &self.reference[j]))
    }
}

/// Greedy monotone nearest-timestamp matching.
///
/// Each SLAM pose, in order, is paired with the closest reference pose not
/// already passed by an earlier match, provided the time difference is at
/// most `max_dt`. Ties go to the earlier reference pose.
pub fn associate(slam: &Trajectory, reference: &Trajectory, max_dt: f64) -> Result<TrajectoryPair, AlignError> {
    if let Some(i) = slam.first_non_monotone() {
        return Err(AlignError::Unsorted("slam", i));
    }
    if let Some(i) = reference.first_non_monotone() {
        return Err(AlignError::Unsorted("reference", i));
    }
    let refs = &reference.poses;
    let mut association = Vec::new();
    let mut next = 0;
    for (i, s) in slam.poses.iter().enumerate() {
        if next >= refs.len() {
            break;
        }
        let rest = &refs[next..];
        let k = rest.partition_point(|r| r.timestamp < s.timestamp);
        let mut best: Option<(usize, f64)> = None;
        for c in [k.checked_sub(1), Some(k)].into_iter().flatten() {
            if let Some(r) = rest.get(c) {
                let dt = (r.timestamp - s.timestamp).abs();
                if best.is_none_or(|(_, b)| dt < b) {
                    best = Some((c, dt));
                }
            }
        }
        if let Some((c, dt)) = best {
            if dt <= max_dt {
                association.push((i, next + c));
                next += c + 1;
            }
        }
    }
    if association.len() < MIN_PAIRS {
        return Err(AlignError::InsufficientData(format!(
            "{} timestamp matches within {max_dt} s (need at least {MIN_PAIRS})",
            association.len()
        )));
    }
    Ok(TrajectoryPair { slam: slam.poses.clone(), reference: reference.poses.clone(), association })
}

/// The nine product sums of centroid-relative source and target vectors,
/// `s[a][b] = Σ t̂_a · t̂'_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCovariance {
    pub s: [[f64; 3]; 3],
}

impl CrossCovariance {
    pub fn sxx(&self) -> f64 {
        self.s[0][0]
    }
    pub fn sxy(&self) -> f64 {
        self.s[0][1]
    }
    pub fn sxz(&self) -> f64 {
        self.s[0][2]
    }
    pub fn syx(&self) -> f64 {
        self.s[1][0]
    }
    pub fn syy(&self) -> f64 {
        self.s[1][1]
    }
    pub fn syz(&self) -> f64 {
        self.s[1][2]
    }
    pub fn szx(&self) -> f64 {
        self.s[2][0]
    }
    pub fn szy(&self) -> f64 {
        self.s[2][1]
    }
    pub fn szz(&self) -> f64 {
        self.s[2][2]
    }

    pub fn as_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.s[a][b])
    }
}

/// Largest eigenvalue of the `N` matrix and its unit eigenvector as a
/// canonical quaternion `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEigenpair {
    pub value: f64,
    pub quaternion: UnitQuaternion,
    /// Distance to the second-largest eigenvalue.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResult {
    pub transform: Sim3Transform,
    /// RMSE of the used pairs with no transform applied (reference units).
    pub rmse_before: f64,
    /// RMSE of the used pairs after applying `transform` (reference units).
    pub rmse_after: f64,
    pub n_pairs_used: usize,
    pub excluded_prefix: usize,
    /// Mean angle between `R·R_slam` and `R_ref` over the used pairs (radians).
    pub mean_rotation_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlignOptions {
    /// Number of leading associations dropped before fitting.
    pub exclude_prefix: usize,
    /// Rigid SE(3) alignment: scale pinned to 1.
    pub fix_scale: bool,
}

type Pairs = [(Vector3<f64>, Vector3<f64>)];

fn centroids_of(pairs: &Pairs) -> Result<(Vector3<f64>, Vector3<f64>), AlignError> {
    if pairs.is_empty() {
        return Err(AlignError::InsufficientData("no associated pairs".into()));
    }
    let n = pairs.len() as f64;
    let (a, b) = pairs
        .iter()
        .fold((Vector3::zeros(), Vector3::zeros()), |(a, b), (p, q)| (a + p, b + q));
    Ok((a / n, b / n))
}

fn cross_covariance_of(pairs: &Pairs, c: &Vector3<f64>, c_ref: &Vector3<f64>) -> CrossCovariance {
    let mut s = [[0.0; 3]; 3];
    for (p, q) in pairs {
        let a = p - c;
        let b = q - c_ref;
        for (i, row) in s.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e += a[i] * b[j];
            }
        }
    }
    CrossCovariance { s }
}

fn scale_of(pairs: &Pairs, c: &Vector3<f64>, c_ref: &Vector3<f64>, r: &Rotation3) -> Result<f64, AlignError> {
    let rm = r.matrix();
    let (mut num, mut den) = (0.0, 0.0);
    for (p, q) in pairs {
        let a = p - c;
        num += (q - c_ref).dot(&(rm * a));
        den += a.norm_squared();
    }
    if den == 0.0 {
        return Err(AlignError::NoMotion);
    }
    let s = num / den;
    if !(s > 0.0) {
        return Err(AlignError::NonPositiveScale(s));
    }
    Ok(s)
}

fn check_spread(pairs: &Pairs, c: &Vector3<f64>) -> Result<(), AlignError> {
    let mut scatter = [[0.0; 3]; 3];
    for (p, _) in pairs {
        let a = p - c;
        for i in 0..3 {
            for j in 0..3 {
                scatter[i][j] += a[i] * a[j];
            }
        }
    }
    let eig = jacobi_eigen(&scatter);
    let order = eig.order_descending();
    let (l1, l2) = (eig.values[order[0]], eig.values[order[1]]);
    if !(l1 > 0.0) {
        return Err(AlignError::NoMotion);
    }
    let ratio = l2.max(0.0) / l1;
    if ratio <= COLLINEAR_REL {
        return Err(AlignError::Collinear { ratio });
    }
    Ok(())
}

fn rmse(pairs: &Pairs, t: &Sim3Transform) -> f64 {
    let sum: f64 = pairs.iter().map(|(p, q)| (q - t.apply(p)).norm_squared()).sum();
    (sum / pairs.len() as f64).sqrt()
}

/// Mean translation of each side of the association.
pub fn centroids(pair: &TrajectoryPair) -> Result<(Vector3<f64>, Vector3<f64>), AlignError> {
    centroids_of(&pair.point_pairs())
}

pub fn cross_covariance(pair: &TrajectoryPair, centroid: &Vector3<f64>, centroid_ref: &Vector3<f64>) -> CrossCovariance {
    cross_covariance_of(&pair.point_pairs(), centroid, centroid_ref)
}

/// The symmetric 4×4 matrix whose top eigenvector is the optimal rotation
/// quaternion.
pub fn build_n_matrix(s: &CrossCovariance) -> Matrix4<f64> {
    let a = s.sxx() + s.syy() + s.szz();
    let b = s.sxx() - s.syy() - s.szz();
    let c = -s.sxx() + s.syy() - s.szz();
    let d = -s.sxx() - s.syy() + s.szz();
    let e = s.syz() - s.szy();
    let f = s.sxy() + s.syx();
    let g = s.syz() + s.szy();
    let h = s.szx() - s.sxz();
    let i = s.szx() + s.sxz();
    let j = s.sxy() - s.syx();
    #[rustfmt::skip]
    let n = Matrix4::new(
        a, e, h, j,
        e, b, f, i,
        h, f, c, g,
        j, i, g, d,
    );
    n
}

/// Eigenvector of the algebraically largest eigenvalue of a symmetric 4×4
/// matrix, via cyclic Jacobi rotations.
pub fn max_eigenvector_sym4(n: &Matrix4<f64>) -> Result<TopEigenpair, AlignError> {
    let a: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| n[(i, j)]));
    let norm = frobenius(&a);
    let mut asym: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            asym = asym.max((a[i][j] - a[j][i]).abs());
        }
    }
    if !(asym <= SYMMETRY_TOL * norm.max(1.0)) {
        return Err(AlignError::NotSymmetric(asym));
    }
    let sym: [[f64; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (a[i][j] + a[j][i])));
    let eig = jacobi_eigen(&sym);
    if !eig.converged {
        return Err(AlignError::NotConverged);
    }
    let order = eig.order_descending();
    let value = eig.values[order[0]];
    let gap = value - eig.values[order[1]];
    if !(gap > EIGEN_GAP_REL * norm) {
        return Err(AlignError::AmbiguousRotation { gap, norm });
    }
    let v = eig.vector(order[0]);
    let quaternion = UnitQuaternion::normalize(v[0], v[1], v[2], v[3]).map_err(|_| AlignError::NotConverged)?;
    let e = quaternion.wxyz();
    let residual = (0..4)
        .map(|r| {
            let x = (0..4).map(|k| sym[r][k] * e[k]).sum::<f64>() - value * e[r];
            x * x
        })
        .sum::<f64>()
        .sqrt();
    if residual > EIGEN_RESIDUAL_REL * norm {
        return Err(AlignError::NotConverged);
    }
    Ok(TopEigenpair { value, quaternion, gap })
}

/// Least-squares scale for a fixed rotation: `Σ t̂'·R(t̂) / Σ |t̂|²`.
pub fn horn_scale(
    pair: &TrajectoryPair,
    centroid: &Vector3<f64>,
    centroid_ref: &Vector3<f64>,
    rotation: &Rotation3,
) -> Result<f64, AlignError> {
    scale_of(&pair.point_pairs(), centroid, centroid_ref, rotation)
}

/// `r₀ = t̄' - s·R(t̄)`.
pub fn horn_translation(centroid: &Vector3<f64>, centroid_ref: &Vector3<f64>, scale: f64, rotation: &Rotation3) -> Vector3<f64> {
    centroid_ref - rotation.apply(centroid) * scale
}

/// Fits the similarity on all associations after the first `exclude_prefix`.
pub fn align(pair: &TrajectoryPair, exclude_prefix: usize) -> Result<AlignmentResult, AlignError> {
    align_with(pair, &AlignOptions { exclude_prefix, fix_scale: false })
}

pub fn align_with(pair: &TrajectoryPair, opts: &AlignOptions) -> Result<AlignmentResult, AlignError> {
    let all = pair.point_pairs();
    if opts.exclude_prefix >= all.len() || all.len() - opts.exclude_prefix < MIN_PAIRS {
        return Err(AlignError::InsufficientData(format!(
            "{} pairs remain after excluding a prefix of {} (need at least {MIN_PAIRS})",
            all.len().saturating_sub(opts.exclude_prefix),
            opts.exclude_prefix
        )));
    }
    let used = &all[opts.exclude_prefix..];
    let transform = align_points(used, opts.fix_scale)?;

    let rmse_before = rmse(used, &Sim3Transform::identity());
    let rmse_after = rmse(used, &transform);
    let mean_rotation_error = pair
        .pose_pairs()
        .skip(opts.exclude_prefix)
        .map(|(s, r)| transform.rotation().compose(s.pose.rotation()).angle_to(r.pose.rotation()))
        .sum::<f64>()
        / used.len() as f64;
    Ok(AlignmentResult {
        transform,
        rmse_before,
        rmse_after,
        n_pairs_used: used.len(),
        excluded_prefix: opts.exclude_prefix,
        mean_rotation_error,
    })
}

/// Closed-form similarity mapping `pairs[i].0` onto `pairs[i].1`.
pub fn align_points(pairs: &Pairs, fix_scale: bool) -> Result<Sim3Transform, AlignError> {
    if pairs.len() < MIN_PAIRS {
        return Err(AlignError::InsufficientData(format!("{} pairs (need at least {MIN_PAIRS})", pairs.len())));
    }
    let (c, c_ref) = centroids_of(pairs)?;
    check_spread(pairs, &c)?;
    let s = cross_covariance_of(pairs, &c, &c_ref);
    let top = max_eigenvector_sym4(&build_n_matrix(&s))?;
    let rotation = Rotation3::from_quaternion(top.quaternion);
    let scale = if fix_scale { 1.0 } else { scale_of(pairs, &c, &c_ref, &rotation)? };
    let translation = horn_translation(&c, &c_ref, scale, &rotation);
    Sim3Transform::new(scale, rotation, translation).map_err(|_| AlignError::NonPositiveScale(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn traj(ts: &[f64]) -> Trajectory {
        Trajectory::new(
            ts.iter()
                .map(|&t| StampedPose::new(t, Sim3Transform::rigid(Rotation3::IDENTITY, Vector3::new(t, t * t, t.sin()))))
                .collect(),
        )
    }

    fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect()
    }

    #[test]
    fn associate_identical_timestamps() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let pair = associate(&traj(&t), &traj(&t), DEFAULT_MAX_DT).unwrap();
        assert_eq!(pair.association, (0..20).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn associate_mixed_rates_matches_brute_force() {
        let reference: Vec<f64> = (0..300).map(|i| i as f64 / 30.0).collect();
        let slam: Vec<f64> = (0..100).map(|i| i as f64 / 10.0 + 0.004).collect();
        let pair = associate(&traj(&slam), &traj(&reference), 0.02).unwrap();
        assert_eq!(pair.len(), slam.len());
        for &(i, j) in &pair.association {
            let brute = (0..reference.len())
                .min_by(|&a, &b| (reference[a] - slam[i]).abs().total_cmp(&(reference[b] - slam[i]).abs()))
                .unwrap();
            assert_eq!(j, brute);
        }
    }

    #[test]
    fn associate_respects_max_dt_and_monotonicity() {
        let reference: Vec<f64> = (0..50).map(|i| i as f64 * 0.05).collect();
        let slam: Vec<f64> = (0..200).map(|i| i as f64 * 0.0125).collect();
        let pair = associate(&traj(&slam), &traj(&reference), 0.004).unwrap();
        for w in pair.association.windows(2) {
            assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
        }
        for &(i, j) in &pair.association {
            assert!((slam[i] - reference[j]).abs() <= 0.004);
        }
    }

    #[test]
    fn associate_disjoint_ranges() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..10).map(|i| 100.0 + i as f64).collect();
        assert!(matches!(associate(&traj(&a), &traj(&b), 0.02), Err(AlignError::InsufficientData(_))));
    }

    #[test]
    fn associate_rejects_unsorted() {
        assert!(matches!(associate(&traj(&[0.0, 2.0, 1.0]), &traj(&[0.0, 1.0, 2.0]), 0.1), Err(AlignError::Unsorted("slam", 2))));
    }

    #[test]
    fn centroid_examples() {
        let pair = TrajectoryPair::from_points(&[Vector3::new(1.0, 2.0, 3.0)], &[Vector3::new(4.0, 5.0, 6.0)]).unwrap();
        assert_eq!(centroids(&pair).unwrap(), (Vector3::new(1.0, 2.0, 3.0), Vector3::new(4.0, 5.0, 6.0)));
        let sym = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0)];
        let pair = TrajectoryPair::from_points(&sym, &sym).unwrap();
        assert_eq!(centroids(&pair).unwrap().0, Vector3::zeros());
        let empty = TrajectoryPair::from_points(&[], &[]).unwrap();
        assert!(centroids(&empty).is_err());
    }

    #[test]
    fn centroid_matches_compensated_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a: Vec<_> = (0..5000).map(|_| Vector3::new(rng.random_range(-1e3..1e3), rng.random_range(0.0..1e-3), 1e6 + rng.random_range(-1.0..1.0))).collect();
        let pair = TrajectoryPair::from_points(&a, &a).unwrap();
        let (c, _) = centroids(&pair).unwrap();
        for k in 0..3 {
            // Neumaier summation.
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for p in &a {
                let t = sum + p[k];
                comp += if sum.abs() >= p[k].abs() { (sum - t) + p[k] } else { (p[k] - t) + sum };
                sum = t;
            }
            let want = (sum + comp) / a.len() as f64;
            assert!((c[k] - want).abs() <= 1e-12 * want.abs().max(1.0), "axis {k}: {} vs {want}", c[k]);
        }
    }

    #[test]
    fn cross_covariance_examples() {
        let same = vec![Vector3::new(1.0, 1.0, 1.0); 4];
        let pair = TrajectoryPair::from_points(&same, &same).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        assert_eq!(cross_covariance(&pair, &c, &cr).s, [[0.0; 3]; 3]);

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let pts = random_points(&mut rng, 40);
        let pair = TrajectoryPair::from_points(&pts, &pts).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        let m = cross_covariance(&pair, &c, &cr).as_matrix();
        assert_abs_diff_eq!(m, m.transpose(), epsilon = 1e-12);
        let eig = m.symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn cross_covariance_matches_outer_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let src = random_points(&mut rng, 100);
        let dst = random_points(&mut rng, 100);
        let pair = TrajectoryPair::from_points(&src, &dst).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        let oracle: Matrix3<f64> = src.iter().zip(&dst).map(|(a, b)| (a - c) * (b - cr).transpose()).sum();
        assert_abs_diff_eq!(cross_covariance(&pair, &c, &cr).as_matrix(), oracle, epsilon = 1e-10);

        // Bilinearity in the source.
        let scaled: Vec<_> = src.iter().map(|p| p * 3.5).collect();
        let pair2 = TrajectoryPair::from_points(&scaled, &dst).unwrap();
        let (c2, cr2) = centroids(&pair2).unwrap();
        assert_abs_diff_eq!(cross_covariance(&pair2, &c2, &cr2).as_matrix(), oracle * 3.5, epsilon = 1e-9);
    }

    #[test]
    fn n_matrix_examples() {
        let zero = CrossCovariance { s: [[0.0; 3]; 3] };
        assert_eq!(build_n_matrix(&zero), Matrix4::zeros());
        let id = CrossCovariance { s: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };
        assert_eq!(build_n_matrix(&id), Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, -1.0, -1.0, -1.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..200 {
            let s = CrossCovariance { s: std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-10.0..10.0))) };
            let n = build_n_matrix(&s);
            assert!(n.trace().abs() < 1e-12);
            assert_eq!(n, n.transpose());
        }
    }

    #[test]
    fn eigenvector_examples() {
        let n = Matrix4::from_diagonal(&nalgebra::Vector4::new(3.0, -1.0, -1.0, -1.0));
        let top = max_eigenvector_sym4(&n).unwrap();
        assert_eq!(top.value, 3.0);
        assert_eq!(top.quaternion, UnitQuaternion::IDENTITY);
        assert!(matches!(max_eigenvector_sym4(&Matrix4::zeros()), Err(AlignError::AmbiguousRotation { .. })));
        let degenerate = Matrix4::from_diagonal(&nalgebra::Vector4::new(2.0, 2.0, -1.0, -3.0));
        assert!(matches!(max_eigenvector_sym4(&degenerate), Err(AlignError::AmbiguousRotation { .. })));
        let mut asym = Matrix4::identity();
        asym[(0, 1)] = 1e-3;
        assert!(matches!(max_eigenvector_sym4(&asym), Err(AlignError::NotSymmetric(_))));
    }

    #[test]
    fn scale_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let src = random_points(&mut rng, 10);
        let doubled: Vec<_> = src.iter().map(|p| p * 2.0).collect();
        let pair = TrajectoryPair::from_points(&src, &doubled).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        assert_abs_diff_eq!(horn_scale(&pair, &c, &cr, &Rotation3::IDENTITY).unwrap(), 2.0, epsilon = 1e-14);
        let pair = TrajectoryPair::from_points(&src, &src).unwrap();
        assert_abs_diff_eq!(horn_scale(&pair, &c, &c, &Rotation3::IDENTITY).unwrap(), 1.0, epsilon = 1e-14);

        let still = vec![Vector3::new(1.0, 2.0, 3.0); 5];
        let pair = TrajectoryPair::from_points(&still, &src[..5]).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        assert_eq!(horn_scale(&pair, &c, &cr, &Rotation3::IDENTITY), Err(AlignError::NoMotion));

        let neg: Vec<_> = src.iter().map(|p| -p).collect();
        let pair = TrajectoryPair::from_points(&src, &neg).unwrap();
        let (c, cr) = centroids(&pair).unwrap();
        assert!(matches!(horn_scale(&pair, &c, &cr, &Rotation3::IDENTITY), Err(AlignError::NonPositiveScale(_))));
    }

    #[test]
    fn translation_examples() {
        assert_eq!(horn_translation(&Vector3::zeros(), &Vector3::zeros(), 3.0, &Rotation3::IDENTITY), Vector3::zeros());
        assert_eq!(
            horn_translation(&Vector3::new(1.0, 0.0, 0.0), &Vector3::new(3.0, 0.0, 0.0), 1.0, &Rotation3::IDENTITY),
            Vector3::new(2.0, 0.0, 0.0)
        );
        let r = Rotation3::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.7).unwrap();
        let (c, cr) = (Vector3::new(4.0, -1.0, 2.0), Vector3::new(-3.0, 8.0, 0.5));
        let t = horn_translation(&c, &cr, 2.5, &r);
        let lambda = Sim3Transform::new(2.5, r, t).unwrap();
        assert_abs_diff_eq!(lambda.apply(&c), cr, epsilon = 1e-13);
    }

    #[test]
    fn identical_trajectories_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let pts = random_points(&mut rng, 50);
        let res = align(&TrajectoryPair::from_points(&pts, &pts).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(res.transform.scale(), 1.0, epsilon = 1e-12);
        assert!(res.transform.rotation().angle() < 1e-12);
        assert!(res.transform.translation().norm() < 1e-12);
        assert!(res.rmse_after < 1e-12);
        assert_eq!(res.rmse_before, 0.0);
    }

    #[test]
    fn recovers_known_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let src = random_points(&mut rng, 30);
            let q = UnitQuaternion::normalize(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).unwrap();
            let gt = Sim3Transform::new(
                10f64.powf(rng.random_range(-2.0..2.0)),
                Rotation3::from_quaternion(q),
                Vector3::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3)),
            )
            .unwrap();
            let dst: Vec<_> = src.iter().map(|p| gt.apply(p)).collect();
            let res = align(&TrajectoryPair::from_points(&src, &dst).unwrap(), 0).unwrap();
            assert!(((res.transform.scale() - gt.scale()) / gt.scale()).abs() < 1e-9);
            assert!(res.transform.rotation().angle_to(gt.rotation()) < 1e-8);
            assert!((res.transform.translation() - gt.translation()).norm() < 1e-8);
            assert!(res.rmse_after <= res.rmse_before + 1e-12);
        }
    }

    #[test]
    fn fixed_scale_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let src = random_points(&mut rng, 30);
        let gt = Sim3Transform::new(1.0, Rotation3::from_axis_angle(&Vector3::z(), 1.0).unwrap(), Vector3::new(1.0, 2.0, 3.0)).unwrap();
        let dst: Vec<_> = src.iter().map(|p| gt.apply(p)).collect();
        let pair = TrajectoryPair::from_points(&src, &dst).unwrap();
        let res = align_with(&pair, &AlignOptions { exclude_prefix: 0, fix_scale: true }).unwrap();
        assert_eq!(res.transform.scale(), 1.0);
        assert!(res.rmse_after < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, 2.0 * i as f64, -(i as f64))).collect();
        let pair = TrajectoryPair::from_points(&line, &line).unwrap();
        assert!(matches!(align(&pair, 0), Err(AlignError::Collinear { .. })));

        let still = vec![Vector3::new(1.0, 1.0, 1.0); 10];
        let pair = TrajectoryPair::from_points(&still, &line).unwrap();
        assert_eq!(align(&pair, 0), Err(AlignError::NoMotion));

        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let pts = random_points(&mut rng, 5);
        let pair = TrajectoryPair::from_points(&pts, &pts).unwrap();
        assert!(matches!(align(&pair, 3), Err(AlignError::InsufficientData(_))));
        assert!(matches!(align(&pair, 10), Err(AlignError::InsufficientData(_))));

        // Target standing still: N = 0.
        let pair = TrajectoryPair::from_points(&pts, &[Vector3::new(2.0, 0.0, 0.0); 5]).unwrap();
        assert!(matches!(align(&pair, 0), Err(AlignError::AmbiguousRotation { .. })));
    }

    #[test]
    fn prefix_exclusion_drops_leading_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let src = random_points(&mut rng, 40);
        let gt = Sim3Transform::new(3.0, Rotation3::from_axis_angle(&Vector3::x(), 0.4).unwrap(), Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let mut dst: Vec<_> = src.iter().map(|p| gt.apply(p)).collect();
        for d in dst.iter_mut().take(10) {
            *d += Vector3::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0), 0.0);
        }
        let pair = TrajectoryPair::from_points(&src, &dst).unwrap();
        let full = align(&pair, 0).unwrap();
        let cut = align(&pair, 10).unwrap();
        assert_eq!(cut.n_pairs_used, 30);
        assert_eq!(cut.excluded_prefix, 10);
        assert!(cut.rmse_after < 1e-9);
        assert!(full.rmse_after > 1e-3);
    }
}
