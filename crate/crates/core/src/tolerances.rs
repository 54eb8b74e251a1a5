//! Numeric tolerances used across the library.
//!
//! Every threshold that decides whether an input is accepted or a result is
//! considered degenerate lives here, so the acceptance behaviour of the whole
//! toolkit can be audited in one file.

/// Maximum deviation of a quaternion norm from 1 accepted by
/// [`UnitQuaternion::new`](crate::geometry::UnitQuaternion::new).
pub const QUATERNION_NORM_TOL: f64 = 1e-6;

/// Maximum quaternion norm deviation accepted when reading trajectory files.
/// Values inside the band are renormalized.
pub const FILE_QUATERNION_NORM_TOL: f64 = 1e-3;

/// Orthogonality and determinant tolerance for matrices handed to
/// [`Rotation3::from_matrix`](crate::geometry::Rotation3::from_matrix).
pub const ROTATION_MATRIX_TOL: f64 = 1e-9;

/// Symmetry tolerance (relative to the Frobenius norm, floor 1) for matrices
/// passed to the symmetric eigen-solver.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this
/// fraction of the matrix norm.
pub const JACOBI_OFFDIAG_REL: f64 = 1e-14;

/// Upper bound on cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// A top eigenvalue whose gap to the runner-up is at most this fraction of
/// the matrix norm is treated as degenerate.
pub const EIGEN_GAP_REL: f64 = 1e-9;

/// Post-condition on the returned eigenpair: `|Ne - λe| <= EIGEN_RESIDUAL_REL * |N|`.
pub const EIGEN_RESIDUAL_REL: f64 = 1e-10;

/// Source translations are collinear when the second principal variance is
/// at most this fraction of the first.
pub const COLLINEAR_REL: f64 = 1e-12;
