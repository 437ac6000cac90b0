//! Reference implementations used as oracles. Deliberately naive: dense
//! row-major matrices, Taylor series, Lagrange interpolation.
#![allow(dead_code, clippy::needless_range_loop)]

use diovqa::matcore::{ComplexMatrix, C64};

pub type Mat = Vec<Vec<C64>>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn to_mat(m: &ComplexMatrix) -> Mat {
    let n = m.dim();
    (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
}

pub fn eye(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn zeros(n: usize) -> Mat {
    vec![vec![c(0.0, 0.0); n]; n]
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn mat_add_scaled(acc: &mut Mat, k: C64, b: &Mat) {
    for (ra, rb) in acc.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += k * y;
        }
    }
}

pub fn mat_vec(a: &Mat, v: &[C64]) -> Vec<C64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `⟨u, v⟩`, conjugate-linear in `u`.
pub fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `e^{kA}` by scaling and squaring a 30-term Taylor series.
pub fn expm(a: &Mat, k: C64) -> Mat {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * k.norm();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = k / 2f64.powi(s);
    let x: Mat = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut term = eye(n);
    let mut sum = eye(n);
    for j in 1..30 {
        term = mat_mul(&term, &x);
        let inv = 1.0 / j as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        mat_add_scaled(&mut sum, c(1.0, 0.0), &term);
    }
    for _ in 0..s {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

/// Monomial coefficients (constant first) of the interpolating polynomial
/// through `(x_i, e^{k x_i})`.
pub fn lagrange_kappas(xs: &[f64], k: C64) -> Vec<C64> {
    let n = xs.len();
    let mut out = vec![c(0.0, 0.0); n];
    for i in 0..n {
        // basis polynomial ∏_{j≠i} (x − x_j)/(x_i − x_j)
        let mut basis = vec![c(1.0, 0.0)];
        let mut denom = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut next = vec![c(0.0, 0.0); basis.len() + 1];
            for (p, &b) in basis.iter().enumerate() {
                next[p + 1] += b;
                next[p] -= b * xj;
            }
            basis = next;
            denom *= xs[i] - xj;
        }
        let w = (k * xs[i]).exp() / denom;
        for (o, b) in out.iter_mut().zip(&basis) {
            *o += w * b;
        }
    }
    out
}
