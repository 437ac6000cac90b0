//! Dense complex linear algebra: matrices, Hermitian operators, state vectors,
//! eigendecomposition, matrix exponentials and norms.
//!
//! Hermitian exponentials go through the eigendecomposition, everything else
//! through nalgebra's scaling-and-squaring Padé approximant.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Max-entry tolerance on `A - A^H` accepted by [`HermitianOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `| ||psi|| - 1 |` accepted by [`StateVector::new`].
pub const NORM_TOL: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if let Some(index) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * dim + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }

    /// In-place `self += k * other`.
    pub fn axpy(&mut self, k: C64, other: &Self) {
        assert_eq!(self.dim, other.dim, "axpy dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += k * b;
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "mul_vec dimension mismatch");
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.entries[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j).norm() <= tol))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Block-diagonal matrix with the given blocks on the diagonal.
    pub fn block_diag(blocks: &[ComplexMatrix]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut out = Self::zeros(dim);
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    out.set(offset + i, offset + j, b.get(i, j));
                }
            }
            offset += b.dim;
        }
        out
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(m[(i, j)]);
            }
        }
        Self { dim, entries }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.entries[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: n, entries: out }
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// On-disk matrix layout: `{"dim": n, "re": [...], "im": [...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixFile {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile {
            dim: self.dim,
            re: self.entries.iter().map(|z| z.re).collect(),
            im: self.entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = MatrixFile::deserialize(deserializer)?;
        if file.re.len() != file.im.len() {
            return Err(serde::de::Error::custom(format!(
                "re has {} entries but im has {}",
                file.re.len(),
                file.im.len()
            )));
        }
        let entries = file
            .re
            .iter()
            .zip(&file.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        ComplexMatrix::new(file.dim, entries).map_err(serde::de::Error::custom)
    }
}

/// A matrix equal to its adjoint. Construction symmetrizes `(A + A^H)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let sym = (&matrix + &matrix.adjoint()).scale_real(0.5);
        Ok(Self { matrix: sym })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self {
            matrix: ComplexMatrix::from_real_diag(diag),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Real diagonal, when the operator is diagonal within `tol`.
    pub fn real_diagonal(&self, tol: f64) -> Option<Vec<f64>> {
        if !self.matrix.is_diagonal(tol) {
            return None;
        }
        Some(self.matrix.diagonal().iter().map(|z| z.re).collect())
    }

    /// Real linear combination `sum_i w_i A_i`.
    pub fn linear_combination(ops: &[HermitianOperator], weights: &[f64]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::invalid("empty operator list"))?;
        if ops.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: ops.len(),
                actual: weights.len(),
            });
        }
        let mut acc = ComplexMatrix::zeros(first.dim());
        for (op, &w) in ops.iter().zip(weights) {
            if op.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: op.dim(),
                });
            }
            acc.axpy(C64::new(w, 0.0), &op.matrix);
        }
        Ok(Self { matrix: acc })
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        HermitianOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// Unit-norm complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state vector must be non-empty"));
        }
        if let Some(index) = amplitudes
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amplitudes.iter().map(|z| z / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile {
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = StateFile::deserialize(deserializer)?;
        if file.re.len() != file.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let amps = file
            .re
            .iter()
            .zip(&file.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        StateVector::new(amps).map_err(serde::de::Error::custom)
    }
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>` (conjugate-linear in the first argument).
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors.get(i, k)).collect()
    }

    /// `Q f(Λ) Q^H` for an arbitrary scalar function of the eigenvalues.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let q = &self.eigenvectors;
        let n = q.dim();
        let fl: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += q.get(i, k) * fl[k] * q.get(j, k).conj();
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// Spectral projectors `(λ, P_λ)`, grouping eigenvalues closer than `tol`.
    pub fn projectors(&self, tol: f64) -> Vec<(f64, ComplexMatrix)> {
        let n = self.eigenvectors.dim();
        let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some((first, members)) if (lambda - *first).abs() <= tol => members.push(k),
                _ => out.push((lambda, vec![k])),
            }
        }
        out.into_iter()
            .map(|(_, members)| {
                let mean =
                    members.iter().map(|&k| self.eigenvalues[k]).sum::<f64>() / members.len() as f64;
                let mut p = ComplexMatrix::zeros(n);
                for &k in &members {
                    let v = self.eigenvector(k);
                    for i in 0..n {
                        for j in 0..n {
                            let cur = p.get(i, j);
                            p.set(i, j, cur + v[i] * v[j].conj());
                        }
                    }
                }
                (mean, p)
            })
            .collect()
    }
}

pub fn eigen_hermitian(a: &HermitianOperator) -> Result<EigenDecomposition> {
    let m = a.matrix().to_nalgebra();
    let eig = SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::NonConvergence {
        iterations: EIGEN_MAX_ITER,
    })?;
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut q = ComplexMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            q.set(row, col, eig.eigenvectors[(row, k)]);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: q,
    })
}

/// `e^{kA}`. Hermitian inputs use the eigendecomposition; others use
/// scaling-and-squaring.
pub fn matrix_exp(a: &ComplexMatrix, k: C64) -> Result<ComplexMatrix> {
    if a.is_hermitian(HERMITIAN_TOL) {
        let h = HermitianOperator::new(a.clone())?;
        let eig = eigen_hermitian(&h)?;
        return Ok(eig.apply_function(|lambda| (k * lambda).exp()));
    }
    let scaled = a.scale(k).to_nalgebra();
    Ok(ComplexMatrix::from_nalgebra(&scaled.exp()))
}

/// `e^{-i φ H}` for a Hermitian generator.
pub fn unitary_evolution(h: &HermitianOperator, phi: f64) -> Result<ComplexMatrix> {
    let eig = eigen_hermitian(h)?;
    Ok(eig.apply_function(|lambda| (-I * phi * lambda).exp()))
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    if n == 1 {
        return a.get(0, 0).norm();
    }
    let gram = &a.adjoint() * a;
    let gram = HermitianOperator {
        matrix: (&gram + &gram.adjoint()).scale_real(0.5),
    };
    match eigen_hermitian(&gram) {
        Ok(eig) => eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => {
            let svd = a.to_nalgebra().svd(false, false);
            svd.singular_values.iter().copied().fold(0.0, f64::max)
        }
    }
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues_general(a: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = a.dim();
    if n == 1 {
        return Ok(vec![a.get(0, 0)]);
    }
    if n == 2 {
        return Ok(eigen_2x2(a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)).to_vec());
    }
    let schur = Schur::try_new(a.to_nalgebra(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or(
        Error::NonConvergence {
            iterations: EIGEN_MAX_ITER,
        },
    )?;
    let (_, t) = schur.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].norm() > 1e-13 * scale {
            out.extend(eigen_2x2(t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]));
            i += 2;
        } else {
            out.push(t[(i, i)]);
            i += 1;
        }
    }
    Ok(out)
}

fn eigen_2x2(a: C64, b: C64, c: C64, d: C64) -> [C64; 2] {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    [half_tr + root, half_tr - root]
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues_general(a)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}
