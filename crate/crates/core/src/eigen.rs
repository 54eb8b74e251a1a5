//! Cyclic Jacobi eigen-decomposition for small dense symmetric matrices.

use crate::tolerances::{JACOBI_MAX_SWEEPS, JACOBI_OFFDIAG_REL};

/// Eigenvalues and column eigenvectors of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<const N: usize> {
    pub values: [f64; N],
    /// `vectors[i][k]` is component `i` of eigenvector `k`.
    pub vectors: [[f64; N]; N],
    pub sweeps: usize,
    pub converged: bool,
}

impl<const N: usize> SymEigen<N> {
    pub fn vector(&self, k: usize) -> [f64; N] {
        std::array::from_fn(|i| self.vectors[i][k])
    }

    /// Indices sorted by descending eigenvalue.
    pub fn order_descending(&self) -> [usize; N] {
        let mut idx: [usize; N] = std::array::from_fn(|i| i);
        idx.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]));
        idx
    }
}

pub fn frobenius<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                s += x * x;
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes `a` (assumed symmetric; only its upper triangle drives the
/// rotations) by cyclic Jacobi sweeps until the off-diagonal norm falls under
/// `JACOBI_OFFDIAG_REL · |a|` or `JACOBI_MAX_SWEEPS` is reached.
pub fn jacobi_eigen<const N: usize>(a: &[[f64; N]; N]) -> SymEigen<N> {
    let mut a = *a;
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let threshold = JACOBI_OFFDIAG_REL * frobenius(&a);
    let mut sweeps = 0;
    let mut converged = off_diagonal(&a) <= threshold;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    // Rotation angle below resolution; drop the element.
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_diagonal(&a) <= threshold;
    }
    SymEigen { values: std::array::from_fn(|i| a[i][i]), vectors: v, sweeps, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual<const N: usize>(a: &[[f64; N]; N], lambda: f64, e: &[f64; N]) -> f64 {
        (0..N)
            .map(|i| {
                let r = (0..N).map(|j| a[i][j] * e[j]).sum::<f64>() - lambda * e[i];
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn diagonal_is_untouched() {
        let a = [[3.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]];
        let e = jacobi_eigen(&a);
        assert_eq!(e.values, [3.0, -1.0, -1.0, -1.0]);
        assert_eq!(e.sweeps, 0);
        assert!(e.converged);
    }

    #[test]
    fn two_by_two_closed_form() {
        let e = jacobi_eigen(&[[2.0, 1.0], [1.0, 2.0]]);
        let mut vals = e.values;
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-15 && (vals[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn random_matrices_decompose() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let mut a = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in i..4 {
                    let x = rng.random_range(-10.0..10.0);
                    a[i][j] = x;
                    a[j][i] = x;
                }
            }
            let e = jacobi_eigen(&a);
            assert!(e.converged);
            assert!(e.sweeps <= 10, "took {} sweeps", e.sweeps);
            let norm = frobenius(&a);
            for k in 0..4 {
                assert!(residual(&a, e.values[k], &e.vector(k)) <= 1e-12 * norm);
            }
            // Orthonormal eigenvectors.
            for k in 0..4 {
                for l in 0..4 {
                    let dot: f64 = (0..4).map(|i| e.vectors[i][k] * e.vectors[i][l]).sum();
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-13);
                }
            }
            let trace: f64 = (0..4).map(|i| a[i][i]).sum();
            assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-12 * norm);
        }
    }
}
