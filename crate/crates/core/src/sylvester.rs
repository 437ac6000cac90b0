//! Sylvester's formula `e^{kA} = Σ_{j<n} ϰ_j A^j` and its expansion over
//! commuting generator families into a matrix-coefficient polynomial in the
//! circuit angles.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{eigen_hermitian, ComplexMatrix, HermitianOperator, C64, I, ONE, ZERO};

/// Minimum accepted gap between eigenvalues before the Vandermonde system is
/// declared confluent.
pub const DEFAULT_EIGEN_GAP: f64 = 1e-8;
/// Max-entry tolerance on pairwise commutators.
pub const COMMUTE_TOL: f64 = 1e-10;
/// Residual bound on the solved Vandermonde system.
pub const VANDERMONDE_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SylvesterCoefficients {
    pub order: usize,
    pub kappas: Vec<C64>,
    pub eigenvalues: Vec<f64>,
    pub scalar_k: C64,
}

impl SylvesterCoefficients {
    /// `Σ_j ϰ_j x^j`.
    pub fn interpolant(&self, x: f64) -> C64 {
        self.kappas.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    /// Largest `|e^{k x_i} - Σ_j ϰ_j x_i^j|` over the stored eigenvalues.
    pub fn residual(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&x| ((self.scalar_k * x).exp() - self.interpolant(x)).norm())
            .fold(0.0, f64::max)
    }
}

pub fn min_gap(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

pub fn solve_kappas(eigenvalues: &[f64], k: C64) -> Result<SylvesterCoefficients> {
    solve_kappas_with_gap(eigenvalues, k, DEFAULT_EIGEN_GAP)
}

/// Solves `e^{k x_i} = Σ_j ϰ_j x_i^j` by partially pivoted elimination.
pub fn solve_kappas_with_gap(
    eigenvalues: &[f64],
    k: C64,
    gap_tolerance: f64,
) -> Result<SylvesterCoefficients> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::invalid("empty spectrum"));
    }
    if let Some(index) = eigenvalues.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let gap = min_gap(eigenvalues);
    if gap < gap_tolerance {
        return Err(Error::DegenerateSpectrum {
            gap,
            tolerance: gap_tolerance,
        });
    }

    let mut a: Vec<Vec<C64>> = eigenvalues
        .iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(n + 1);
            let mut p = 1.0;
            for _ in 0..n {
                row.push(C64::new(p, 0.0));
                p *= x;
            }
            row.push((k * x).exp());
            row
        })
        .collect();

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .expect("non-empty pivot range");
        a.swap(col, pivot);
        let p = a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] / p;
            if factor == ZERO {
                continue;
            }
            for c in col..=n {
                let v = a[col][c];
                a[row][c] -= factor * v;
            }
        }
    }
    let mut kappas = vec![ZERO; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for c in (row + 1)..n {
            acc -= a[row][c] * kappas[c];
        }
        kappas[row] = acc / a[row][row];
    }

    let coeffs = SylvesterCoefficients {
        order: n,
        kappas,
        eigenvalues: eigenvalues.to_vec(),
        scalar_k: k,
    };
    let scale = eigenvalues
        .iter()
        .map(|&x| (k * x).exp().norm())
        .fold(1.0, f64::max);
    let residual = coeffs.residual();
    if residual.is_nan() || residual > VANDERMONDE_RESIDUAL_TOL * scale {
        return Err(Error::IllConditioned { residual });
    }
    Ok(coeffs)
}

/// The `n` summands `ϰ_j A^j` of Sylvester's expansion of `e^{kA}`.
pub fn expand_single(a: &HermitianOperator, k: C64) -> Result<Vec<ComplexMatrix>> {
    let eig = eigen_hermitian(a)?;
    let coeffs = solve_kappas(&eig.eigenvalues, k)?;
    let mut power = ComplexMatrix::identity(a.dim());
    let mut out = Vec::with_capacity(coeffs.order);
    for (j, &kappa) in coeffs.kappas.iter().enumerate() {
        if j > 0 {
            power = &power * a.matrix();
        }
        out.push(power.scale(kappa));
    }
    Ok(out)
}

/// Exponent multi-index of a monomial in the circuit angles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MonomialIndex {
    exponents: Vec<u32>,
}

impl MonomialIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn zero(num_vars: usize) -> Self {
        Self::new(vec![0; num_vars])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn num_vars(&self) -> usize {
        self.exponents.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Multinomial coefficient `|a|! / Π a_l!`.
    pub fn multinomial(&self) -> f64 {
        let mut acc = 1.0;
        let mut running = 0u32;
        for &e in &self.exponents {
            for t in 1..=e {
                running += 1;
                acc *= running as f64 / t as f64;
            }
        }
        acc
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(point)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    /// Every multi-index in `num_vars` variables of total degree at most
    /// `max_degree`, in graded order.
    pub fn all_up_to(num_vars: usize, max_degree: u32) -> Vec<MonomialIndex> {
        let mut out = Vec::new();
        for degree in 0..=max_degree {
            let mut current = vec![0u32; num_vars];
            fill_degree(&mut out, &mut current, 0, degree);
        }
        out
    }
}

fn fill_degree(out: &mut Vec<MonomialIndex>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if current.is_empty() {
        if remaining == 0 {
            out.push(MonomialIndex::new(Vec::new()));
        }
        return;
    }
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(MonomialIndex::new(current.clone()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_degree(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// Graded order: total degree first, then larger leading exponents first, so
/// `x` precedes `y` and `x²` precedes `xy`.
impl Ord for MonomialIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MonomialIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `binomial(L + d, d)`: number of monomials of degree at most `d` in `L`
/// variables.
pub fn term_count(num_vars: u64, degree_cap: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=degree_cap as u128 {
        acc = acc * (num_vars as u128 + i) / i;
    }
    acc
}

/// Polynomial in the circuit angles with square-matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolynomial {
    num_vars: usize,
    degree_cap: u32,
    dim: usize,
    terms: BTreeMap<MonomialIndex, ComplexMatrix>,
}

impl MatrixPolynomial {
    pub fn new(num_vars: usize, degree_cap: u32, dim: usize) -> Self {
        Self {
            num_vars,
            degree_cap,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, index: MonomialIndex, coefficient: ComplexMatrix) -> Result<()> {
        if index.num_vars() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: index.num_vars(),
            });
        }
        if index.total_degree() > self.degree_cap {
            return Err(Error::DegreeOverflow {
                degree: index.total_degree() as u64,
                max_degree: self.degree_cap as u64,
            });
        }
        if coefficient.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: coefficient.dim(),
            });
        }
        self.terms.insert(index, coefficient);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialIndex, &ComplexMatrix)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Option<&ComplexMatrix> {
        self.terms.get(&MonomialIndex::new(exponents.to_vec()))
    }

    /// `Σ_a c_a b_a(φ)`.
    pub fn contract(&self, point: &[f64]) -> Result<ComplexMatrix> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                actual: point.len(),
            });
        }
        let mut acc = ComplexMatrix::zeros(self.dim);
        for (index, c) in &self.terms {
            acc.axpy(C64::new(index.evaluate(point), 0.0), c);
        }
        Ok(acc)
    }
}

#[derive(Serialize, Deserialize)]
struct PolynomialFile {
    num_vars: usize,
    degree_cap: u32,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
struct TermFile {
    exponents: Vec<u32>,
    matrix: ComplexMatrix,
}

impl Serialize for MatrixPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialFile {
            num_vars: self.num_vars,
            degree_cap: self.degree_cap,
            terms: self
                .terms
                .iter()
                .map(|(k, m)| TermFile {
                    exponents: k.exponents.clone(),
                    matrix: m.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MatrixPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = PolynomialFile::deserialize(deserializer)?;
        let dim = file.terms.first().map(|t| t.matrix.dim()).unwrap_or(1);
        let mut poly = MatrixPolynomial::new(file.num_vars, file.degree_cap, dim);
        for t in file.terms {
            poly.insert(MonomialIndex::new(t.exponents), t.matrix)
                .map_err(serde::de::Error::custom)?;
        }
        Ok(poly)
    }
}

pub fn check_commuting(generators: &[HermitianOperator]) -> Result<()> {
    for i in 0..generators.len() {
        for j in (i + 1)..generators.len() {
            let deviation = generators[i]
                .matrix()
                .commutator(generators[j].matrix())
                .max_abs();
            if deviation > COMMUTE_TOL {
                return Err(Error::NonCommutingFamily {
                    first: i,
                    second: j,
                    deviation,
                });
            }
        }
    }
    Ok(())
}

fn check_family(generators: &[HermitianOperator]) -> Result<usize> {
    let first = generators
        .first()
        .ok_or_else(|| Error::invalid("empty generator family"))?;
    let n = first.dim();
    for g in generators {
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: g.dim(),
            });
        }
    }
    Ok(n)
}

/// Expands `Σ_j ϰ_j (Σ_l φ_l H_l)^j` with the supplied `ϰ` into the
/// multi-index term map: the coefficient of `a` is
/// `ϰ_{|a|} · multinomial(a) · Π_l H_l^{a_l}`.
pub fn expand_with_kappas(
    generators: &[HermitianOperator],
    kappas: &[C64],
) -> Result<MatrixPolynomial> {
    let n = check_family(generators)?;
    if kappas.is_empty() {
        return Err(Error::invalid("empty kappa list"));
    }
    let num_vars = generators.len();
    let degree_cap = (kappas.len() - 1) as u32;

    // powers[l][e] = H_l^e
    let powers: Vec<Vec<ComplexMatrix>> = generators
        .iter()
        .map(|h| {
            let mut v = vec![ComplexMatrix::identity(n)];
            for e in 1..=degree_cap as usize {
                let next = &v[e - 1] * h.matrix();
                v.push(next);
            }
            v
        })
        .collect();

    let mut poly = MatrixPolynomial::new(num_vars, degree_cap, n);
    for index in MonomialIndex::all_up_to(num_vars, degree_cap) {
        let mut product = ComplexMatrix::identity(n);
        for (l, &e) in index.exponents().iter().enumerate() {
            if e > 0 {
                product = &product * &powers[l][e as usize];
            }
        }
        let scalar = kappas[index.total_degree() as usize] * index.multinomial();
        poly.insert(index, product.scale(scalar))?;
    }
    Ok(poly)
}

/// Sylvester expansion of `e^{-i Σ φ_l H_l}` over a commuting family, with
/// `ϰ` evaluated at the supplied `φ`.
pub fn expand_commuting_family(
    generators: &[HermitianOperator],
    phi: &[f64],
) -> Result<MatrixPolynomial> {
    check_family(generators)?;
    if phi.len() != generators.len() {
        return Err(Error::DimensionMismatch {
            expected: generators.len(),
            actual: phi.len(),
        });
    }
    check_commuting(generators)?;
    let sum = HermitianOperator::linear_combination(generators, phi)?;
    let eig = eigen_hermitian(&sum)?;
    let coeffs = solve_kappas(&eig.eigenvalues, -I)?;
    expand_with_kappas(generators, &coeffs.kappas)
}

/// `x_i = Σ_j φ_j (H_j)_{ii}` for diagonal generators.
pub fn eigenvalue_sums(generators: &[HermitianOperator], phi: &[f64]) -> Result<Vec<f64>> {
    let n = check_family(generators)?;
    if phi.len() != generators.len() {
        return Err(Error::DimensionMismatch {
            expected: generators.len(),
            actual: phi.len(),
        });
    }
    let mut x = vec![0.0; n];
    for (index, (h, &p)) in generators.iter().zip(phi).enumerate() {
        let diag = h
            .real_diagonal(0.0)
            .ok_or(Error::NotDiagonal { index })?;
        for (xi, d) in x.iter_mut().zip(diag) {
            *xi += p * d;
        }
    }
    Ok(x)
}

/// Sylvester summands reassembled: `Σ_j summands_j`.
pub fn sum_matrices(summands: &[ComplexMatrix]) -> Option<ComplexMatrix> {
    let first = summands.first()?;
    let mut acc = ComplexMatrix::zeros(first.dim());
    for s in summands {
        acc.axpy(ONE, s);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix_exp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn kappa_closed_form(x1: f64, x2: f64, k: C64) -> (C64, C64) {
        let e1 = (k * x1).exp();
        let e2 = (k * x2).exp();
        ((e2 * x1 - e1 * x2) / (x1 - x2), (e1 - e2) / (x1 - x2))
    }

    #[test]
    fn kappas_for_zero_one() {
        let c = solve_kappas(&[0.0, 1.0], ONE).unwrap();
        assert!((c.kappas[0] - ONE).norm() < 1e-15);
        assert!((c.kappas[1] - C64::new(E - 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kappas_two_by_two_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x1 = rng.random_range(-5.0..5.0);
            let x2 = x1 + rng.random_range(0.1..5.0);
            let k = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-2.0..2.0));
            let c = solve_kappas(&[x1, x2], k).unwrap();
            let (k0, k1) = kappa_closed_form(x1, x2, k);
            assert!((c.kappas[0] - k0).norm() <= 1e-12);
            assert!((c.kappas[1] - k1).norm() <= 1e-12);
        }
    }

    #[test]
    fn kappas_five_point_residual() {
        let c = solve_kappas(&[1.0, 2.0, 3.0, 4.0, 5.0], -I).unwrap();
        for &x in &c.eigenvalues {
            assert!(((-I * x).exp() - c.interpolant(x)).norm() <= 1e-9);
        }
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let err = solve_kappas(&[1.0, 1.0 + 1e-10, 2.0], -I).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        // gap tolerance is configurable
        assert!(solve_kappas_with_gap(&[1.0, 1.0 + 1e-6], -I, 1e-7).is_ok());
    }

    #[test]
    fn expand_single_two_by_two_formula() {
        let a = HermitianOperator::new(
            ComplexMatrix::from_real(2, &[0.3, 0.4, 0.4, -0.2]).unwrap(),
        )
        .unwrap();
        let eig = eigen_hermitian(&a).unwrap();
        let (p, q) = (eig.eigenvalues[0], eig.eigenvalues[1]);
        let summands = expand_single(&a, ONE).unwrap();
        let got = sum_matrices(&summands).unwrap();
        let expected = (&ComplexMatrix::identity(2).scale_real(q * p.exp() - p * q.exp())
            + &a.matrix().scale_real(q.exp() - p.exp()))
            .scale_real(1.0 / (q - p));
        assert!(got.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn expand_single_diagonal() {
        let a = HermitianOperator::from_real_diag(&[0.0, 1.0, 2.0]);
        let summands = expand_single(&a, -I).unwrap();
        assert_eq!(summands.len(), 3);
        let got = sum_matrices(&summands).unwrap();
        let expected = ComplexMatrix::from_diag(&[ONE, (-I).exp(), (-I * 2.0).exp()]);
        assert!(got.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn expand_single_random_diagonal_vs_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut d: Vec<f64> = (0..5).map(|i| i as f64 * 0.4 + rng.random_range(0.0..0.3)).collect();
            d.reverse();
            let a = HermitianOperator::from_real_diag(&d);
            let got = sum_matrices(&expand_single(&a, -I).unwrap()).unwrap();
            let want = matrix_exp(a.matrix(), -I).unwrap();
            assert!(got.max_abs_diff(&want) <= 1e-9);
        }
    }

    #[test]
    fn family_l2_n3_listing() {
        let x = HermitianOperator::from_real_diag(&[1.0, 2.0, -0.5]);
        let y = HermitianOperator::from_real_diag(&[0.3, -1.0, 0.7]);
        let phi = [0.8, 1.3];
        let poly = expand_commuting_family(&[x.clone(), y.clone()], &phi).unwrap();
        assert_eq!(poly.len(), 6);
        let sum = HermitianOperator::linear_combination(&[x.clone(), y.clone()], &phi).unwrap();
        let k = solve_kappas(&eigen_hermitian(&sum).unwrap().eigenvalues, -I).unwrap().kappas;
        let xm = x.matrix();
        let ym = y.matrix();
        let check = |e: [u32; 2], want: ComplexMatrix| {
            let got = poly.coefficient(&e).unwrap();
            assert!(got.max_abs_diff(&want) < 1e-12, "{e:?}");
        };
        check([0, 0], ComplexMatrix::identity(3).scale(k[0]));
        check([1, 0], xm.scale(k[1]));
        check([0, 1], ym.scale(k[1]));
        check([2, 0], (xm * xm).scale(k[2]));
        check([0, 2], (ym * ym).scale(k[2]));
        check([1, 1], (xm * ym).scale(k[2] * 2.0));
    }

    #[test]
    fn family_single_diagonal_generator() {
        let h = HermitianOperator::from_real_diag(&[1.0, -1.0]);
        let poly = expand_commuting_family(&[h], &[PI]).unwrap();
        let got = poly.contract(&[PI]).unwrap();
        let want = ComplexMatrix::from_diag(&[(-I * PI).exp(), (I * PI).exp()]);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn non_commuting_rejected() {
        let x = HermitianOperator::new(ComplexMatrix::pauli_x()).unwrap();
        let z = HermitianOperator::from_real_diag(&[1.0, -1.0]);
        let err = expand_commuting_family(&[x, z], &[0.1, 0.2]).unwrap_err();
        assert!(matches!(err, Error::NonCommutingFamily { first: 0, second: 1, .. }));
    }

    #[test]
    fn eigenvalue_sum_examples() {
        let h = HermitianOperator::from_real_diag(&[1.0, 2.0]);
        assert_eq!(eigenvalue_sums(&[h], &[3.0]).unwrap(), vec![3.0, 6.0]);
        let a = HermitianOperator::from_real_diag(&[1.0, -1.0]);
        let b = HermitianOperator::from_real_diag(&[2.0, 0.0]);
        assert_eq!(eigenvalue_sums(&[a, b], &[1.0, 1.0]).unwrap(), vec![3.0, -1.0]);
        let x = HermitianOperator::new(ComplexMatrix::pauli_x()).unwrap();
        assert!(matches!(
            eigenvalue_sums(&[HermitianOperator::identity(2), x], &[1.0, 1.0]),
            Err(Error::NotDiagonal { index: 1 })
        ));
    }

    #[test]
    fn eigenvalue_sums_match_direct_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let family: Vec<HermitianOperator> = (0..58)
            .map(|_| {
                let d: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                HermitianOperator::from_real_diag(&d)
            })
            .collect();
        let phi: Vec<f64> = (0..58).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = eigenvalue_sums(&family, &phi).unwrap();
        let direct = HermitianOperator::linear_combination(&family, &phi).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((direct.matrix().get(i, i).re - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn monomial_order_and_counts() {
        let all = MonomialIndex::all_up_to(2, 2);
        let exps: Vec<Vec<u32>> = all.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            exps,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert_eq!(MonomialIndex::all_up_to(2, 4).len(), 15);
        assert_eq!(term_count(2, 4), 15);
        assert_eq!(term_count(58, 4), 557_845);
        assert_eq!(MonomialIndex::all_up_to(0, 3).len(), 1);
        assert_eq!(MonomialIndex::new(vec![2, 2]).multinomial(), 6.0);
        assert_eq!(MonomialIndex::new(vec![2, 1]).multinomial(), 3.0);
        assert_eq!(MonomialIndex::new(vec![3, 1]).multinomial(), 4.0);
    }

    #[test]
    fn polynomial_json_round_trip() {
        let h = HermitianOperator::from_real_diag(&[0.5, -0.25, 1.0]);
        let poly = expand_commuting_family(&[h], &[0.7]).unwrap();
        let s = serde_json::to_string(&poly).unwrap();
        assert!(s.starts_with("{\"num_vars\":1,\"degree_cap\":2,\"terms\":[{\"exponents\":[0],\"matrix\":{\"dim\":3"));
        let back: MatrixPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, poly);
    }
}
