//! Largest eigenpair of a symmetric 4×4 matrix through its characteristic
//! polynomial. Shares nothing with the Jacobi solver.

type M4 = [[f64; 4]; 4];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn trace(a: &M4) -> f64 {
    (0..4).map(|i| a[i][i]).sum()
}

/// Coefficients `[c0, c1, c2, c3]` of `λ⁴ + c3 λ³ + c2 λ² + c1 λ + c0 = det(λI - A)`
/// by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &M4) -> [f64; 4] {
    let mut c = [0.0; 5];
    c[4] = 1.0;
    let mut m = [[0.0; 4]; 4];
    for k in 1..=4 {
        let mut next = mul(a, &m);
        for i in 0..4 {
            next[i][i] += c[4 - k + 1];
        }
        m = next;
        c[4 - k] = -trace(&mul(a, &m)) / k as f64;
    }
    [c[0], c[1], c[2], c[3]]
}

fn eval(c: &[f64; 4], x: f64) -> (f64, f64) {
    let p = (((x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
    let dp = ((4.0 * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
    (p, dp)
}

/// Largest root, by Newton's method started above every eigenvalue
/// (Gershgorin bound), where the iteration decreases monotonically.
pub fn largest_eigenvalue(a: &M4) -> f64 {
    let c = char_poly(a);
    let mut x = (0..4)
        .map(|i| a[i][i] + (0..4).filter(|&j| j != i).map(|j| a[i][j].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for _ in 0..500 {
        let (p, dp) = eval(&c, x);
        if dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        if !(next < x) {
            break;
        }
        x = next;
    }
    x
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Unit eigenvector for `lambda`: the largest column of adj(A - λI).
pub fn eigenvector(a: &M4, lambda: f64) -> [f64; 4] {
    let mut b = *a;
    for i in 0..4 {
        b[i][i] -= lambda;
    }
    let minor = |r: usize, c: usize| {
        let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        let mut m = [[0.0; 3]; 3];
        for (i, &ri) in rows.iter().enumerate() {
            for (j, &cj) in cols.iter().enumerate() {
                m[i][j] = b[ri][cj];
            }
        }
        det3(m)
    };
    // adj[i][j] = (-1)^(i+j) * minor(j, i)
    let mut best = [0.0; 4];
    let mut best_norm = -1.0;
    for j in 0..4 {
        let col: [f64; 4] = std::array::from_fn(|i| if (i + j) % 2 == 0 { minor(j, i) } else { -minor(j, i) });
        let n = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > best_norm {
            best_norm = n;
            best = col;
        }
    }
    best.map(|x| x / best_norm)
}

/// Angle-free direction distance up to sign: `min(|a - b|, |a + b|)`.
pub fn direction_error(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let d = |s: f64| (0..4).map(|i| (a[i] - s * b[i]).powi(2)).sum::<f64>().sqrt();
    d(1.0).min(d(-1.0))
}
