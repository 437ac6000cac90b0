//! Coefficient matching between the squared output norm of a commuting
//! diagonal circuit and a target polynomial, with a multistart least-squares
//! probe for solutions, pointwise verification, degree-of-freedom accounting
//! and export of the matching ideal as plain text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{inner, ComplexMatrix, HermitianOperator, StateVector, C64, I, ONE, ZERO};
use crate::sospoly::{evaluate_i64, IntPolynomial, SosPolynomial, DEFAULT_BIT_BUDGET};
use crate::sylvester::{expand_with_kappas, solve_kappas, MatrixPolynomial, MonomialIndex};
use crate::vqasim::{vqa_norm_objective, VqaInstance};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const STATIONARITY_TOL: f64 = 1e-8;
pub const VERIFY_TOL: f64 = 1e-6;
pub const DEFAULT_STARTS: usize = 64;
pub const DEFAULT_MAX_ITERATIONS: usize = 2_000;

/// Hermitian basis of `n × n` matrices: for each pair `j < k` the symmetric
/// and antisymmetric off-diagonal generators, then the `n − 1` traceless
/// diagonal generators, then the identity.
pub fn observable_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in j + 1..n {
            let mut s = ComplexMatrix::zeros(n);
            s.set(j, k, ONE);
            s.set(k, j, ONE);
            out.push(s);
            let mut a = ComplexMatrix::zeros(n);
            a.set(j, k, -I);
            a.set(k, j, I);
            out.push(a);
        }
    }
    for l in 1..n {
        let w = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = ComplexMatrix::zeros(n);
        for m in 0..l {
            d.set(m, m, C64::new(w, 0.0));
        }
        d.set(l, l, C64::new(-w * l as f64, 0.0));
        out.push(d);
    }
    out.push(ComplexMatrix::identity(n));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile")]
pub struct ObservableParams {
    n: usize,
    coords: Vec<f64>,
}

#[derive(Deserialize)]
struct ParamsFile {
    n: usize,
    coords: Vec<f64>,
}

impl TryFrom<ParamsFile> for ObservableParams {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        Self::new(f.n, f.coords)
    }
}

impl TryFrom<ParamsFile> for StateParams {
    type Error = Error;

    fn try_from(f: ParamsFile) -> Result<Self> {
        Self::new(f.n, f.coords)
    }
}

impl ObservableParams {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: coords.len(),
            });
        }
        Ok(Self { n, coords })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coords: vec![0.0; n * n],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(self.n);
        for (g, &c) in observable_basis(self.n).iter().zip(&self.coords) {
            m.axpy(C64::new(c, 0.0), g);
        }
        HermitianOperator::new(m).expect("real combination of Hermitian generators")
    }
}

/// Pure state chart `ψ = (1, z) / √(1 + |z|²)` with `z ∈ ℂ^{n−1}` stored as
/// interleaved real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile")]
pub struct StateParams {
    n: usize,
    coords: Vec<f64>,
}

impl StateParams {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || coords.len() != 2 * n - 2 {
            return Err(Error::DimensionMismatch {
                expected: (2 * n).saturating_sub(2),
                actual: coords.len(),
            });
        }
        Ok(Self { n, coords })
    }

    /// Chart coordinates of a state; fails when the first amplitude vanishes.
    pub fn from_state(state: &StateVector) -> Result<Self> {
        let amps = state.amplitudes();
        let first = amps[0];
        if first.norm() < 1e-12 {
            return Err(Error::invalid("first amplitude vanishes; state outside the chart"));
        }
        let coords = amps[1..]
            .iter()
            .flat_map(|a| {
                let z = a / first;
                [z.re, z.im]
            })
            .collect();
        Self::new(amps.len(), coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn unnormalized(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.n);
        v.push(ONE);
        for pair in self.coords.chunks(2) {
            v.push(C64::new(pair[0], pair[1]));
        }
        v
    }

    pub fn reconstruct(&self) -> StateVector {
        StateVector::normalized(self.unnormalized()).expect("first amplitude is 1")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaMode {
    /// `ϰ_j` fixed by the Vandermonde system at the anchor angles.
    Anchored,
    /// `ϰ_j` free, with the Vandermonde relations added as equations.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Equation {
    /// Coefficient of `φ^monomial` in `‖O c(φ) Ψ0‖²` equals `rhs`.
    Coefficient {
        monomial: MonomialIndex,
        part: Part,
        rhs: f64,
    },
    /// `Σ_j ϰ_j x_i^j = e^{−i x_i}` at the anchor.
    Vandermonde { level: usize, part: Part },
}

/// A point in the unknown space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unknowns {
    pub observable: ObservableParams,
    pub state: StateParams,
    /// Diagonal of `H_l` at `l * n + i`.
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<C64>>,
}

impl Unknowns {
    pub fn generators(&self, n: usize) -> Vec<HermitianOperator> {
        self.eigenvalues
            .chunks(n)
            .map(HermitianOperator::from_real_diag)
            .collect()
    }

    /// Adds `delta` to every observable coordinate.
    pub fn perturb_observable(&self, delta: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.observable.coords {
            *c += delta;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    pub monomial: MonomialIndex,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct EncodingSystem {
    num_vars: usize,
    n: usize,
    mode: KappaMode,
    anchor: Vec<f64>,
    target: IntPolynomial,
    /// All monomials of degree ≤ 2(n − 1), one complex equation each.
    monomials: Vec<MonomialIndex>,
    rhs: Vec<f64>,
    /// Monomials of the circuit expansion, degree ≤ n − 1.
    circuit: Vec<MonomialIndex>,
    /// For each equation monomial, the circuit index pairs `(a, b)` with `a + b = m`.
    pairs: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    target: IntPolynomial,
    n: usize,
    mode: KappaMode,
    anchor: Vec<f64>,
}

impl Serialize for EncodingSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemJson {
            target: self.target.clone(),
            n: self.n,
            mode: self.mode,
            anchor: self.anchor.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EncodingSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SystemJson::deserialize(d)?;
        EncodingSystem::from_polynomial(&j.target, j.n, j.mode, Some(j.anchor))
            .map_err(serde::de::Error::custom)
    }
}

/// Builds the matching system for `Σ_j q_j²` in a dimension-`n` circuit with
/// one generator per variable.
pub fn build_system(
    target: &SosPolynomial,
    n: usize,
    mode: KappaMode,
    anchor: Option<Vec<f64>>,
) -> Result<EncodingSystem> {
    EncodingSystem::from_polynomial(&target.expand(), n, mode, anchor)
}

impl EncodingSystem {
    pub fn from_polynomial(
        target: &IntPolynomial,
        n: usize,
        mode: KappaMode,
        anchor: Option<Vec<f64>>,
    ) -> Result<Self> {
        let num_vars = target.num_vars();
        if n < 2 {
            return Err(Error::invalid("circuit dimension must be at least 2"));
        }
        if num_vars == 0 {
            return Err(Error::invalid("target must have at least one variable"));
        }
        let max_degree = 2 * (n as u64 - 1);
        if let Some(deg) = target.degree() {
            if deg > BigUint::from(max_degree) {
                return Err(Error::DegreeOverflow {
                    degree: deg.to_u64().unwrap_or(u64::MAX),
                    max_degree,
                });
            }
        }
        let anchor = anchor.unwrap_or_else(|| vec![1.0; num_vars]);
        if anchor.len() != num_vars {
            return Err(Error::DimensionMismatch {
                expected: num_vars,
                actual: anchor.len(),
            });
        }
        if let Some(i) = anchor.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }

        let monomials = MonomialIndex::all_up_to(num_vars, max_degree as u32);
        let mut coeffs: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in target.small_terms()? {
            coeffs.insert(exps, c.to_f64().unwrap_or(f64::INFINITY));
        }
        let rhs = monomials
            .iter()
            .map(|m| coeffs.get(m.exponents()).copied().unwrap_or(0.0))
            .collect();
        let circuit = MonomialIndex::all_up_to(num_vars, n as u32 - 1);
        let position: BTreeMap<&MonomialIndex, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut pairs = vec![Vec::new(); monomials.len()];
        for (ia, a) in circuit.iter().enumerate() {
            for (ib, b) in circuit.iter().enumerate() {
                let m = a.add(b);
                pairs[position[&m]].push((ia, ib));
            }
        }
        Ok(Self {
            num_vars,
            n,
            mode,
            anchor,
            target: target.clone(),
            monomials,
            rhs,
            circuit,
            pairs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> KappaMode {
        self.mode
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn target(&self) -> &IntPolynomial {
        &self.target
    }

    pub fn monomials(&self) -> &[MonomialIndex] {
        &self.monomials
    }

    pub fn circuit_monomials(&self) -> &[MonomialIndex] {
        &self.circuit
    }

    /// Real equations: real parts of every coefficient equation, then the
    /// imaginary parts, then (free mode) the Vandermonde relations.
    pub fn equations(&self) -> Vec<Equation> {
        let mut out = Vec::with_capacity(self.num_equations());
        for part in [Part::Re, Part::Im] {
            for (m, &rhs) in self.monomials.iter().zip(&self.rhs) {
                out.push(Equation::Coefficient {
                    monomial: m.clone(),
                    part,
                    rhs: if part == Part::Re { rhs } else { 0.0 },
                });
            }
        }
        if self.mode == KappaMode::Free {
            for part in [Part::Re, Part::Im] {
                for level in 0..self.n {
                    out.push(Equation::Vandermonde { level, part });
                }
            }
        }
        out
    }

    pub fn num_equations(&self) -> usize {
        let extra = if self.mode == KappaMode::Free { 2 * self.n } else { 0 };
        2 * self.monomials.len() + extra
    }

    pub fn num_unknowns(&self) -> usize {
        let extra = if self.mode == KappaMode::Free { 2 * self.n } else { 0 };
        self.n * self.n + 2 * self.n - 2 + self.n * self.num_vars + extra
    }

    /// Summary view: the constant and linear coefficients, then the target's
    /// support by descending degree.
    pub fn shape(&self) -> Vec<ShapeRow> {
        let mut rows: Vec<ShapeRow> = self
            .monomials
            .iter()
            .zip(&self.rhs)
            .filter(|(m, _)| m.total_degree() <= 1)
            .map(|(m, &rhs)| ShapeRow {
                monomial: m.clone(),
                rhs,
            })
            .collect();
        let mut support: Vec<ShapeRow> = self
            .monomials
            .iter()
            .zip(&self.rhs)
            .filter(|(m, &rhs)| m.total_degree() > 1 && rhs != 0.0)
            .map(|(m, &rhs)| ShapeRow {
                monomial: m.clone(),
                rhs,
            })
            .collect();
        support.sort_by(|a, b| {
            b.monomial
                .total_degree()
                .cmp(&a.monomial.total_degree())
                .then_with(|| a.monomial.exponents().cmp(b.monomial.exponents()))
        });
        rows.extend(support);
        rows
    }

    /// Layout: observable coords, state coords, eigenvalues, then (free mode)
    /// interleaved real/imaginary `ϰ`.
    pub fn pack(&self, u: &Unknowns) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_unknowns());
        v.extend_from_slice(&u.observable.coords);
        v.extend_from_slice(&u.state.coords);
        v.extend_from_slice(&u.eigenvalues);
        if self.mode == KappaMode::Free {
            for k in u.kappas.as_deref().unwrap_or(&[]) {
                v.push(k.re);
                v.push(k.im);
            }
        }
        v
    }

    pub fn unpack(&self, v: &[f64]) -> Result<Unknowns> {
        if v.len() != self.num_unknowns() {
            return Err(Error::DimensionMismatch {
                expected: self.num_unknowns(),
                actual: v.len(),
            });
        }
        let n = self.n;
        let (o, rest) = v.split_at(n * n);
        let (s, rest) = rest.split_at(2 * n - 2);
        let (e, rest) = rest.split_at(n * self.num_vars);
        let kappas = match self.mode {
            KappaMode::Free => Some(rest.chunks(2).map(|p| C64::new(p[0], p[1])).collect()),
            KappaMode::Anchored => None,
        };
        Ok(Unknowns {
            observable: ObservableParams::new(n, o.to_vec())?,
            state: StateParams::new(n, s.to_vec())?,
            eigenvalues: e.to_vec(),
            kappas,
        })
    }

    fn check(&self, u: &Unknowns) -> Result<()> {
        for dim in [u.observable.n, u.state.n] {
            if dim != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    actual: dim,
                });
            }
        }
        if u.eigenvalues.len() != self.n * self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n * self.num_vars,
                actual: u.eigenvalues.len(),
            });
        }
        if self.mode == KappaMode::Free {
            let k = u.kappas.as_ref().map_or(0, Vec::len);
            if k != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    actual: k,
                });
            }
        }
        Ok(())
    }

    /// Eigenvalues `x_i = Σ_l anchor_l (H_l)_{ii}` of the anchored generator.
    pub fn anchor_levels(&self, eigenvalues: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.anchor
                    .iter()
                    .enumerate()
                    .map(|(l, a)| a * eigenvalues[l * self.n + i])
                    .sum()
            })
            .collect()
    }

    /// `ϰ` solved from the Vandermonde system at the anchor.
    pub fn anchored_kappas(&self, eigenvalues: &[f64]) -> Result<Vec<C64>> {
        Ok(solve_kappas(&self.anchor_levels(eigenvalues), -I)?.kappas)
    }

    pub fn kappas(&self, u: &Unknowns) -> Result<Vec<C64>> {
        match self.mode {
            KappaMode::Anchored => self.anchored_kappas(&u.eigenvalues),
            KappaMode::Free => Ok(u.kappas.clone().unwrap_or_default()),
        }
    }

    /// Circuit expansion `Σ_a c_a φ^a` at this point.
    pub fn circuit_expansion(&self, u: &Unknowns) -> Result<MatrixPolynomial> {
        self.check(u)?;
        expand_with_kappas(&u.generators(self.n), &self.kappas(u)?)
    }

    /// Coefficient of every equation monomial in `‖O c(φ) Ψ0‖²`.
    pub fn lhs(&self, u: &Unknowns) -> Result<Vec<C64>> {
        self.check(u)?;
        let n = self.n;
        let kappas = self.kappas(u)?;
        let o = u.observable.reconstruct();
        let psi = u.state.reconstruct();
        let psi = psi.amplitudes();
        let vectors: Vec<Vec<C64>> = self
            .circuit
            .iter()
            .map(|a| {
                let scale = kappas[a.total_degree() as usize] * a.multinomial();
                let v: Vec<C64> = (0..n)
                    .map(|i| {
                        let mono: f64 = a
                            .exponents()
                            .iter()
                            .enumerate()
                            .map(|(l, &e)| u.eigenvalues[l * n + i].powi(e as i32))
                            .product();
                        scale * mono * psi[i]
                    })
                    .collect();
                o.matrix().mul_vec(&v)
            })
            .collect();
        Ok(self
            .pairs
            .iter()
            .map(|ps| {
                ps.iter()
                    .map(|&(a, b)| inner(&vectors[a], &vectors[b]))
                    .sum()
            })
            .collect())
    }

    /// `g_i` in the order of [`EncodingSystem::equations`].
    pub fn residual_components(&self, u: &Unknowns) -> Result<Vec<f64>> {
        let lhs = self.lhs(u)?;
        let mut out = Vec::with_capacity(self.num_equations());
        out.extend(lhs.iter().zip(&self.rhs).map(|(l, r)| l.re - r));
        out.extend(lhs.iter().map(|l| l.im));
        if self.mode == KappaMode::Free {
            let kappas = self.kappas(u)?;
            let levels = self.anchor_levels(&u.eigenvalues);
            let vals: Vec<C64> = levels
                .iter()
                .map(|&x| {
                    let mut acc = ZERO;
                    let mut p = 1.0;
                    for k in &kappas {
                        acc += k * p;
                        p *= x;
                    }
                    acc - C64::from_polar(1.0, -x)
                })
                .collect();
            out.extend(vals.iter().map(|v| v.re));
            out.extend(vals.iter().map(|v| v.im));
        }
        Ok(out)
    }

    /// `Σ_i g_i²`.
    pub fn residual(&self, u: &Unknowns) -> Result<f64> {
        Ok(self.residual_components(u)?.iter().map(|g| g * g).sum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub stationarity: f64,
    pub seed: u64,
    /// Half-width of the uniform box initial points are drawn from.
    pub init_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            stationarity: STATIONARITY_TOL,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingPoint {
    pub unknowns: Unknowns,
    pub residual: f64,
    pub gradient_norm: f64,
    /// Start index; `None` for the zero-observable candidate.
    pub start: Option<usize>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SolveOutcome {
    Solution(EncodingPoint),
    /// No start reached the tolerance; the point is the lowest-residual
    /// start whose gradient norm certifies local stationarity.
    BestEffort(EncodingPoint),
}

impl SolveOutcome {
    pub fn point(&self) -> &EncodingPoint {
        match self {
            SolveOutcome::Solution(p) | SolveOutcome::BestEffort(p) => p,
        }
    }
}

fn cost_vector(sys: &EncodingSystem, x: &[f64]) -> Option<Vec<f64>> {
    let u = sys.unpack(x).ok()?;
    let r = sys.residual_components(&u).ok()?;
    r.iter().all(|v| v.is_finite()).then_some(r)
}

/// Central-difference Jacobian of the residual components.
fn jacobian(sys: &EncodingSystem, x: &[f64], m: usize) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-6 * x[k].abs().max(1.0);
        probe[k] = x[k] + h;
        let plus = cost_vector(sys, &probe)?;
        probe[k] = x[k] - h;
        let minus = cost_vector(sys, &probe)?;
        probe[k] = x[k];
        for i in 0..m {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

/// Norm of `∇ Σ g_i² = 2 Jᵀ g` by central differences.
pub fn gradient_norm(sys: &EncodingSystem, u: &Unknowns) -> Result<f64> {
    let x = sys.pack(u);
    let r = sys.residual_components(u)?;
    let jac = jacobian(sys, &x, r.len())
        .ok_or_else(|| Error::invalid("residual undefined near the point"))?;
    let g = jac.transpose() * DVector::from_vec(r);
    Ok(2.0 * g.norm())
}

struct LmRun {
    x: Vec<f64>,
    cost: f64,
    gradient_norm: f64,
    iterations: usize,
}

fn levenberg_marquardt(sys: &EncodingSystem, x0: Vec<f64>, cfg: &SolverConfig) -> Option<LmRun> {
    let mut x = x0;
    let mut r = cost_vector(sys, &x)?;
    let m = r.len();
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let jac = jacobian(sys, &x, m)?;
        let rv = DVector::from_vec(r.clone());
        let g = jac.transpose() * &rv;
        grad_norm = 2.0 * g.norm();
        if cost <= cfg.tolerance || grad_norm <= cfg.stationarity {
            return Some(LmRun {
                x,
                cost,
                gradient_norm: grad_norm,
                iterations,
            });
        }
        let jtj = jac.transpose() * &jac;
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(rc) = cost_vector(sys, &candidate) {
                let c: f64 = rc.iter().map(|v| v * v).sum();
                if c < cost {
                    x = candidate;
                    r = rc;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let jac = jacobian(sys, &x, m)?;
    grad_norm = grad_norm.min(2.0 * (jac.transpose() * DVector::from_vec(r)).norm());
    Some(LmRun {
        x,
        cost,
        gradient_norm: grad_norm,
        iterations,
    })
}

fn random_start(sys: &EncodingSystem, cfg: &SolverConfig, start: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start as u64);
    let s = cfg.init_scale;
    let mut x: Vec<f64> = (0..sys.num_unknowns())
        .map(|_| rng.random_range(-s..=s))
        .collect();
    if sys.mode == KappaMode::Free {
        // start the free kappas on the Vandermonde solution when it exists
        let n = sys.n;
        let off = n * n + 2 * n - 2;
        let eigs = x[off..off + n * sys.num_vars].to_vec();
        if let Ok(k) = sys.anchored_kappas(&eigs) {
            let base = off + n * sys.num_vars;
            for (j, kj) in k.iter().enumerate() {
                x[base + 2 * j] = kj.re;
                x[base + 2 * j + 1] = kj.im;
            }
        }
    }
    x
}

/// Multistart Levenberg–Marquardt search for a common zero of the matching
/// equations. Starts run in parallel; the reported point is chosen by lowest
/// residual with ties broken by start index, so results do not depend on
/// scheduling.
pub fn solve_system(sys: &EncodingSystem, cfg: &SolverConfig) -> Result<SolveOutcome> {
    if cfg.starts == 0 {
        return Err(Error::invalid("at least one start is required"));
    }
    // zero observable with start 0's remaining coordinates
    let mut zero = random_start(sys, cfg, 0);
    for c in &mut zero[..sys.n * sys.n] {
        *c = 0.0;
    }
    if let Some(r) = cost_vector(sys, &zero) {
        let cost: f64 = r.iter().map(|v| v * v).sum();
        if cost <= cfg.tolerance {
            let unknowns = sys.unpack(&zero)?;
            let gradient_norm = gradient_norm(sys, &unknowns)?;
            return Ok(SolveOutcome::Solution(EncodingPoint {
                unknowns,
                residual: cost,
                gradient_norm,
                start: None,
                iterations: 0,
            }));
        }
    }

    let runs: Vec<Option<LmRun>> = (0..cfg.starts)
        .into_par_iter()
        .map(|s| levenberg_marquardt(sys, random_start(sys, cfg, s), cfg))
        .collect();
    let ranked = |pred: &dyn Fn(&LmRun) -> bool| {
        runs.iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().filter(|r| pred(r)).map(|r| (i, r)))
            .min_by(|(ia, a), (ib, b)| a.cost.total_cmp(&b.cost).then(ia.cmp(ib)))
    };
    let to_point = |(i, r): (usize, &LmRun)| -> Result<EncodingPoint> {
        Ok(EncodingPoint {
            unknowns: sys.unpack(&r.x)?,
            residual: r.cost,
            gradient_norm: r.gradient_norm,
            start: Some(i),
            iterations: r.iterations,
        })
    };
    if let Some(best) = ranked(&|r| r.cost <= cfg.tolerance) {
        return Ok(SolveOutcome::Solution(to_point(best)?));
    }
    if let Some(best) = ranked(&|r| r.gradient_norm <= cfg.stationarity) {
        return Ok(SolveOutcome::BestEffort(to_point(best)?));
    }
    let overall = ranked(&|_| true);
    Err(Error::BudgetExhausted {
        starts: cfg.starts,
        best_residual: overall.map_or(f64::INFINITY, |(_, r)| r.cost),
        gradient_norm: overall.map_or(f64::INFINITY, |(_, r)| r.gradient_norm),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub points: usize,
    pub max_deviation: f64,
    pub worst_point: Vec<i64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Every point of `{lo, …, hi}^L`, first coordinate most significant.
pub fn integer_grid(num_vars: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..num_vars {
        out = out
            .into_iter()
            .flat_map(|p| {
                (lo..=hi).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Compares the simulated `‖O U(φ) Ψ0‖²` with the exact target value at
/// every grid point.
pub fn verify_encoding(
    sys: &EncodingSystem,
    u: &Unknowns,
    grid: &[Vec<i64>],
) -> Result<VerificationReport> {
    sys.check(u)?;
    let inst = VqaInstance::new(
        u.state.reconstruct(),
        u.generators(sys.n),
        u.observable.reconstruct(),
        None,
    )?;
    let mut max_deviation = 0.0f64;
    let mut worst_point = Vec::new();
    for p in grid {
        let phi: Vec<f64> = p.iter().map(|&v| v as f64).collect();
        let sim = vqa_norm_objective(&inst, &phi)?;
        let exact = evaluate_i64(&sys.target, p, DEFAULT_BIT_BUDGET)?
            .to_f64()
            .unwrap_or(f64::INFINITY);
        let dev = (sim - exact).abs();
        if dev > max_deviation || worst_point.is_empty() {
            max_deviation = max_deviation.max(dev);
            worst_point = p.clone();
        }
    }
    Ok(VerificationReport {
        points: grid.len(),
        max_deviation,
        worst_point,
        tolerance: VERIFY_TOL,
        passed: max_deviation <= VERIFY_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofRow {
    pub object: String,
    pub space: String,
    pub dof: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofReport {
    pub layers: u64,
    pub dim: u64,
    pub rows: Vec<DofRow>,
}

impl DofReport {
    pub fn get(&self, object: &str) -> Option<u64> {
        self.rows.iter().find(|r| r.object == object).map(|r| r.dof)
    }
}

/// Real degrees of freedom: pure state `2n − 2`, observable `n²`, one
/// diagonal generator `n`, the family `nL`.
pub fn dof_report(layers: u64, n: u64) -> Result<DofReport> {
    if layers == 0 || n == 0 {
        return Err(Error::invalid("L and n must be positive"));
    }
    let row = |object: &str, space: String, dof: u64| DofRow {
        object: object.to_string(),
        space,
        dof,
    };
    Ok(DofReport {
        layers,
        dim: n,
        rows: vec![
            row("Psi0", format!("CP^{}", n - 1), 2 * n - 2),
            row("O", format!("Herm(C^{n})"), n * n),
            row("H_i", format!("Herm(C^{n}) diagonal"), n),
            row("{H_i}", format!("Herm(C^{n}) diagonal x {layers}"), n * layers),
        ],
    })
}

// Sparse polynomial over real symbols with complex coefficients.
#[derive(Clone, Debug, Default)]
struct SymPoly {
    terms: BTreeMap<Vec<u16>, C64>,
}

impl SymPoly {
    fn constant(c: C64) -> Self {
        let mut p = Self::default();
        p.push(Vec::new(), c);
        p
    }

    fn symbol(index: usize, c: C64) -> Self {
        let mut e = vec![0u16; index + 1];
        e[index] = 1;
        let mut p = Self::default();
        p.push(e, c);
        p
    }

    fn push(&mut self, mut exps: Vec<u16>, c: C64) {
        while exps.last() == Some(&0) {
            exps.pop();
        }
        if c == ZERO {
            return;
        }
        let e = self.terms.entry(exps).or_insert(ZERO);
        *e += c;
    }

    fn add_assign(&mut self, other: &SymPoly) {
        for (k, &v) in &other.terms {
            self.push(k.clone(), v);
        }
    }

    fn mul(&self, other: &SymPoly) -> SymPoly {
        let mut out = SymPoly::default();
        for (ka, &va) in &self.terms {
            for (kb, &vb) in &other.terms {
                let len = ka.len().max(kb.len());
                let k: Vec<u16> = (0..len)
                    .map(|i| ka.get(i).copied().unwrap_or(0) + kb.get(i).copied().unwrap_or(0))
                    .collect();
                out.push(k, va * vb);
            }
        }
        out
    }

    fn conj(&self) -> SymPoly {
        SymPoly {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v.conj())).collect(),
        }
    }

    fn render(&self, names: &[String], part: Part) -> String {
        let mut out = String::new();
        for (k, v) in &self.terms {
            let c = match part {
                Part::Re => v.re,
                Part::Im => v.im,
            };
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { '-' } else { '+' };
            if !out.is_empty() || sign == '-' {
                out.push(sign);
            }
            write!(out, "{:e}", c.abs()).expect("string write");
            for (i, &e) in k.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(out, "*{}", names[i]).expect("string write"),
                    _ => write!(out, "*{}^{}", names[i], e).expect("string write"),
                }
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Symbol names in export order: `a1…a{n²}` observable, `b1…b{2n−2}` state
/// chart, `h1…h{nL}` eigenvalues, `kr0…`, `ki0…` real and imaginary `ϰ`.
pub fn ideal_symbols(sys: &EncodingSystem) -> Vec<String> {
    let n = sys.n;
    let mut names: Vec<String> = (1..=n * n).map(|i| format!("a{i}")).collect();
    names.extend((1..=2 * n - 2).map(|i| format!("b{i}")));
    names.extend((1..=n * sys.num_vars).map(|i| format!("h{i}")));
    names.extend((0..n).map(|j| format!("kr{j}")));
    names.extend((0..n).map(|j| format!("ki{j}")));
    names
}

/// The coefficient equations as explicit polynomials, one per line, real
/// parts first. Each line is `(1 + |z|²) g_i`, which clears the state
/// normalization; `ϰ_j = kr_j + i ki_j` appear as symbols.
pub fn export_ideal(sys: &EncodingSystem) -> String {
    let n = sys.n;
    let names = ideal_symbols(sys);
    let a0 = 0;
    let b0 = n * n;
    let h0 = b0 + 2 * n - 2;
    let k0 = h0 + n * sys.num_vars;

    let basis = observable_basis(n);
    let o: Vec<Vec<SymPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut p = SymPoly::default();
                    for (k, g) in basis.iter().enumerate() {
                        p.add_assign(&SymPoly::symbol(a0 + k, g.get(i, j)));
                    }
                    p
                })
                .collect()
        })
        .collect();
    let v: Vec<SymPoly> = (0..n)
        .map(|i| {
            if i == 0 {
                SymPoly::constant(ONE)
            } else {
                let mut p = SymPoly::symbol(b0 + 2 * (i - 1), ONE);
                p.add_assign(&SymPoly::symbol(b0 + 2 * (i - 1) + 1, I));
                p
            }
        })
        .collect();
    // W_ij = conj(v_i) (O²)_ij v_j
    let w: Vec<Vec<SymPoly>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut o2 = SymPoly::default();
                    for k in 0..n {
                        o2.add_assign(&o[i][k].mul(&o[k][j]));
                    }
                    v[i].conj().mul(&o2).mul(&v[j])
                })
                .collect()
        })
        .collect();
    let kappa: Vec<SymPoly> = (0..n)
        .map(|j| {
            let mut p = SymPoly::symbol(k0 + j, ONE);
            p.add_assign(&SymPoly::symbol(k0 + n + j, I));
            p
        })
        .collect();
    // D_{a,i} = ϰ_{|a|} multinomial(a) Π_l h_{l,i}^{a_l}
    let d: Vec<Vec<SymPoly>> = sys
        .circuit
        .iter()
        .map(|a| {
            (0..n)
                .map(|i| {
                    let mut exps = vec![0u16; h0 + n * sys.num_vars];
                    for (l, &e) in a.exponents().iter().enumerate() {
                        exps[h0 + l * n + i] = e as u16;
                    }
                    let mut mono = SymPoly::default();
                    mono.push(exps, C64::new(a.multinomial(), 0.0));
                    kappa[a.total_degree() as usize].mul(&mono)
                })
                .collect()
        })
        .collect();
    let mut norm = SymPoly::constant(ONE);
    for k in 0..2 * n - 2 {
        let mut e = vec![0u16; b0 + k + 1];
        e[b0 + k] = 2;
        norm.push(e, ONE);
    }

    let lines: Vec<SymPoly> = sys
        .pairs
        .iter()
        .zip(&sys.rhs)
        .map(|(ps, &rhs)| {
            let mut acc = SymPoly::default();
            for &(ia, ib) in ps {
                for i in 0..n {
                    let left = d[ia][i].conj();
                    for j in 0..n {
                        acc.add_assign(&left.mul(&d[ib][j]).mul(&w[i][j]));
                    }
                }
            }
            let mut shifted = norm.clone();
            shifted.terms.values_mut().for_each(|c| *c *= -rhs);
            acc.add_assign(&shifted);
            acc
        })
        .collect();

    let mut out = String::new();
    writeln!(out, "# coefficient-matching ideal: L={} n={} equations={}", sys.num_vars, n, 2 * lines.len())
        .expect("string write");
    writeln!(out, "# symbols: {}", names.join(",")).expect("string write");
    writeln!(
        out,
        "# line i = (1 + b1^2 + ... + b{}^2) * g_i; real parts then imaginary parts, monomials in graded order",
        2 * n - 2
    )
    .expect("string write");
    match sys.mode {
        KappaMode::Anchored => writeln!(
            out,
            "# kappa fixed by sum_j kappa_j x_i^j = exp(-i x_i), x_i = sum_l {:?}[l] h_(l*n+i)",
            sys.anchor
        ),
        KappaMode::Free => writeln!(
            out,
            "# kappa free; Vandermonde relations at anchor {:?} are transcendental and omitted",
            sys.anchor
        ),
    }
    .expect("string write");
    for part in [Part::Re, Part::Im] {
        for l in &lines {
            writeln!(out, "{}", l.render(&names, part)).expect("string write");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn quartic_target(ex: i64, ey: i64, exy: i64) -> IntPolynomial {
        IntPolynomial::from_terms(2, [(vec![2u32, 0], ex), (vec![0, 2], ey), (vec![2, 2], exy)])
            .unwrap()
    }

    fn random_unknowns(sys: &EncodingSystem, seed: u64) -> Unknowns {
        let cfg = SolverConfig {
            seed,
            ..Default::default()
        };
        sys.unpack(&random_start(sys, &cfg, 3)).unwrap()
    }

    #[test]
    fn basis_has_n_squared_hermitian_members() {
        for n in 2..6 {
            let b = observable_basis(n);
            assert_eq!(b.len(), n * n);
            assert!(b.iter().all(|g| g.is_hermitian(0.0)));
            assert!(b[..n * n - 1].iter().all(|g| g.trace().norm() < 1e-14));
        }
    }

    #[test]
    fn state_chart_quotients_global_phase() {
        let w = StateParams::new(3, vec![0.3, -0.2, 1.1, 0.4]).unwrap();
        let psi = w.reconstruct();
        assert!(psi.amplitudes()[0].im == 0.0 && psi.amplitudes()[0].re > 0.0);
        let rotated: Vec<C64> = psi
            .amplitudes()
            .iter()
            .map(|a| a * C64::from_polar(1.0, 0.77))
            .collect();
        let back = StateParams::from_state(&StateVector::new(rotated).unwrap()).unwrap();
        for (a, b) in back.coords().iter().zip(w.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn equation_counts() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(1, 1, 1), 3, KappaMode::Anchored, None).unwrap();
        assert_eq!(sys.monomials().len(), 15);
        assert_eq!(sys.num_equations(), 30);
        let x2 = IntPolynomial::from_terms(1, [(vec![2u32], 5)]).unwrap();
        let sys = EncodingSystem::from_polynomial(&x2, 2, KappaMode::Anchored, None).unwrap();
        assert_eq!(sys.monomials().len(), 3);
        let free = EncodingSystem::from_polynomial(&x2, 2, KappaMode::Free, None).unwrap();
        assert_eq!(free.num_equations(), 6 + 4);
        assert_eq!(free.num_unknowns(), 4 + 2 + 2 + 4);
    }

    #[test]
    fn degree_overflow() {
        let p = IntPolynomial::from_terms(1, [(vec![3u32], 1)]).unwrap();
        assert!(matches!(
            EncodingSystem::from_polynomial(&p, 2, KappaMode::Anchored, None),
            Err(Error::DegreeOverflow { degree: 3, max_degree: 2 })
        ));
    }

    #[test]
    fn six_row_shape() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(2, 3, 5), 3, KappaMode::Anchored, None).unwrap();
        let shape = sys.shape();
        let rhs: Vec<f64> = shape.iter().map(|r| r.rhs).collect();
        assert_eq!(rhs, vec![0.0, 0.0, 0.0, 5.0, 3.0, 2.0]);
        let exps: Vec<Vec<u32>> = shape.iter().map(|r| r.monomial.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 2], vec![0, 2], vec![2, 0]]);
    }

    #[test]
    fn zero_observable_residual_is_target_energy() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(1, 2, 3), 3, KappaMode::Anchored, None).unwrap();
        let mut u = random_unknowns(&sys, 1);
        u.observable = ObservableParams::zeros(3);
        assert!((sys.residual(&u).unwrap() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn lhs_is_real() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(1, 1, 1), 3, KappaMode::Anchored, None).unwrap();
        let u = random_unknowns(&sys, 9);
        for v in sys.lhs(&u).unwrap() {
            assert!(v.im.abs() < 1e-12 * (1.0 + v.re.abs()));
        }
    }

    #[test]
    fn zero_target_is_solved_by_zero_observable() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(0, 0, 0), 3, KappaMode::Anchored, None).unwrap();
        let out = solve_system(&sys, &SolverConfig::default()).unwrap();
        match &out {
            SolveOutcome::Solution(p) => {
                assert_eq!(p.residual, 0.0);
                assert!(p.unknowns.observable.coords().iter().all(|&c| c == 0.0));
                let grid = integer_grid(2, -2, 2);
                assert!(verify_encoding(&sys, &p.unknowns, &grid).unwrap().passed);
                let bad = p.unknowns.perturb_observable(0.1);
                assert!(!verify_encoding(&sys, &bad, &grid).unwrap().passed);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_enumeration() {
        let g = integer_grid(2, -2, 2);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], vec![-2, -2]);
        assert_eq!(g[1], vec![-2, -1]);
    }

    #[test]
    fn dof_rows() {
        let r = dof_report(58, 5).unwrap();
        let dofs: Vec<u64> = r.rows.iter().map(|r| r.dof).collect();
        assert_eq!(dofs, vec![8, 25, 5, 290]);
        let dofs: Vec<u64> = dof_report(1, 2).unwrap().rows.iter().map(|r| r.dof).collect();
        assert_eq!(dofs, vec![2, 4, 2, 2]);
        let dofs: Vec<u64> = dof_report(2, 3).unwrap().rows.iter().map(|r| r.dof).collect();
        assert_eq!(dofs, vec![4, 9, 3, 6]);
    }

    #[test]
    fn export_zero_target_header_and_lines() {
        let zero = IntPolynomial::zero(1);
        let sys = EncodingSystem::from_polynomial(&zero, 2, KappaMode::Anchored, None).unwrap();
        let text = export_ideal(&sys);
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), 6);
        assert!(text.contains("# symbols: a1,a2,a3,a4,b1,b2,h1,h2,kr0,kr1,ki0,ki1"));
    }

    #[test]
    fn system_json_round_trip() {
        let sys = EncodingSystem::from_polynomial(&quartic_target(1, 1, 1), 3, KappaMode::Free, Some(vec![0.5, 1.5])).unwrap();
        let s = serde_json::to_string(&sys).unwrap();
        let back: EncodingSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back.anchor(), sys.anchor());
        assert_eq!(back.mode(), KappaMode::Free);
        assert_eq!(back.target().coefficient(&[2, 2]), BigInt::from(1));
    }

    #[test]
    fn free_mode_with_vandermonde_kappas_matches_anchored() {
        let p = quartic_target(1, 0, 2);
        let anch = EncodingSystem::from_polynomial(&p, 3, KappaMode::Anchored, None).unwrap();
        let free = EncodingSystem::from_polynomial(&p, 3, KappaMode::Free, None).unwrap();
        let mut u = random_unknowns(&anch, 4);
        let ra = anch.residual(&u).unwrap();
        u.kappas = Some(anch.anchored_kappas(&u.eigenvalues).unwrap());
        let rf = free.residual(&u).unwrap();
        assert!((ra - rf).abs() < 1e-9 * (1.0 + ra));
    }
}
