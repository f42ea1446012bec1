//! Dense linear algebra over [`Scalar`] rings, plus SVD-based rank for `f64`.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Solves `a x = b` by Gaussian elimination with partial pivoting on the
/// constant parts. Returns `None` when a pivot vanishes relative to the
/// matrix scale.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S]) -> Option<Vec<S>> {
    let cols: Vec<Vec<S>> = vec![b.to_vec()];
    solve_many(a, &cols).map(|mut x| x.remove(0))
}

/// Solves `a X = B` for several right-hand sides given as columns.
pub fn solve_many<S: Scalar>(a: &[Vec<S>], rhs: &[Vec<S>]) -> Option<Vec<Vec<S>>> {
    let n = a.len();
    let scale = a.iter().flatten().map(|x| x.value().abs()).fold(0.0, f64::max);
    if n == 0 || scale == 0.0 {
        return None;
    }
    let mut m: Vec<Vec<S>> = a.to_vec();
    let mut r: Vec<Vec<S>> = (0..n).map(|i| rhs.iter().map(|c| c[i].clone()).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].value().abs().total_cmp(&m[j][col].value().abs()))?;
        if m[piv][col].value().abs() <= 1e-15 * scale {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        let inv = m[col][col].recip();
        for row in col + 1..n {
            let f = m[row][col].clone() * inv.clone();
            for k in col..n {
                let t = m[col][k].clone() * f.clone();
                m[row][k] = m[row][k].clone() - t;
            }
            for k in 0..r[row].len() {
                let t = r[col][k].clone() * f.clone();
                r[row][k] = r[row][k].clone() - t;
            }
        }
    }
    let ncols = rhs.len();
    let mut x: Vec<Vec<S>> = vec![Vec::with_capacity(n); ncols];
    for c in 0..ncols {
        let mut col = vec![r[0][c].zero_like(); n];
        for i in (0..n).rev() {
            let mut acc = r[i][c].clone();
            for k in i + 1..n {
                acc = acc - m[i][k].clone() * col[k].clone();
            }
            col[i] = acc / m[i][i].clone();
        }
        x[c] = col;
    }
    Some(x)
}

pub fn mat_vec<S: Scalar>(a: &[Vec<S>], v: &[S]) -> Vec<S> {
    a.iter().map(|row| crate::scalar::dot(row, v)).collect()
}

/// Determinant by elimination; zero when a pivot vanishes.
pub fn det<S: Scalar>(a: &[Vec<S>]) -> S {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = m[0][0].constant_like(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].value().abs().total_cmp(&m[j][col].value().abs()))
            .unwrap();
        if m[piv][col].value() == 0.0 {
            return acc.zero_like();
        }
        if piv != col {
            m.swap(col, piv);
            acc = -acc;
        }
        acc = acc * m[col][col].clone();
        let inv = m[col][col].recip();
        for row in col + 1..n {
            let f = m[row][col].clone() * inv.clone();
            for k in col..n {
                let t = m[col][k].clone() * f.clone();
                m[row][k] = m[row][k].clone() - t;
            }
        }
    }
    acc
}

/// Cholesky test on a symmetric matrix.
pub fn is_positive_definite(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j]).cholesky().is_some()
        && (0..n).all(|i| a[i][i] > 0.0)
}

/// Singular values in decreasing order.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() || rows[0].is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    let s = singular_values(rows);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// `|det V| / Π ‖v_i‖` for the matrix whose columns are `vs`; 1 for an
/// orthogonal set, 0 for a dependent one.
pub fn hadamard_ratio(vs: &[Vec<f64>]) -> f64 {
    let n = vs.len();
    let norms: f64 = vs.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
    if norms == 0.0 {
        return 0.0;
    }
    let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| vs[j][i]).collect()).collect();
    det(&m).abs() / norms
}
