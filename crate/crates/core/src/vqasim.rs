//! Dense statevector simulators: VQA objectives, digitized decision search,
//! the QAOA ansatz (optionally with additive noise) and the barren
//! mixer/cost construction with its closed-form landscape.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    eigen_hermitian, inner, unitary_evolution, vec_norm, ComplexMatrix, HermitianOperator,
    StateVector, C64, ZERO,
};

/// Largest imaginary part tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-10;
/// Default cap on `|𝔻|^L` for exhaustive decision search.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;
/// Tolerance for `psi0` being a ground state of the mixer.
pub const GROUND_STATE_TOL: f64 = 1e-8;
/// Agreement required between closed-form and simulated landscapes.
pub const LANDSCAPE_TOL: f64 = 1e-8;

/// `⟨ψ|A|ψ⟩`, asserting the imaginary part is negligible.
pub fn expectation(a: &ComplexMatrix, psi: &[C64]) -> Result<f64> {
    if a.dim() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: psi.len(),
        });
    }
    let v = inner(psi, &a.mul_vec(psi));
    if v.im.abs() > IMAG_TOL {
        return Err(Error::NumericIntegrity { imag: v.im });
    }
    Ok(v.re)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VqaInstance {
    psi0: StateVector,
    generators: Vec<HermitianOperator>,
    observable: HermitianOperator,
    digit_set: Option<Vec<f64>>,
}

impl VqaInstance {
    pub fn new(
        psi0: StateVector,
        generators: Vec<HermitianOperator>,
        observable: HermitianOperator,
        digit_set: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = psi0.dim();
        for g in generators.iter().chain(std::iter::once(&observable)) {
            if g.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: g.dim(),
                });
            }
        }
        if let Some(digits) = &digit_set {
            if digits.is_empty() {
                return Err(Error::invalid("digit set is empty"));
            }
            if let Some(i) = digits.iter().position(|d| !d.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            if digits.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(
                    "digit set must be sorted ascending without duplicates",
                ));
            }
        }
        Ok(Self {
            psi0,
            generators,
            observable,
            digit_set,
        })
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn digit_set(&self) -> Option<&[f64]> {
        self.digit_set.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.psi0.dim()
    }

    pub fn layers(&self) -> usize {
        self.generators.len()
    }

    fn check_phi(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.layers() {
            return Err(Error::DimensionMismatch {
                expected: self.layers(),
                actual: phi.len(),
            });
        }
        if let Some(i) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct VqaInstanceJson {
    psi0: StateVector,
    generators: Vec<HermitianOperator>,
    observable: HermitianOperator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    digit_set: Option<Vec<f64>>,
}

impl Serialize for VqaInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VqaInstanceJson {
            psi0: self.psi0.clone(),
            generators: self.generators.clone(),
            observable: self.observable.clone(),
            digit_set: self.digit_set.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VqaInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = VqaInstanceJson::deserialize(d)?;
        VqaInstance::new(j.psi0, j.generators, j.observable, j.digit_set)
            .map_err(serde::de::Error::custom)
    }
}

/// `U_L(φ_L)⋯U_1(φ_1)|Ψ0⟩` with `U_l(φ) = e^{−iφH_l}`.
pub fn vqa_state(inst: &VqaInstance, phi: &[f64]) -> Result<Vec<C64>> {
    inst.check_phi(phi)?;
    let mut psi = inst.psi0.amplitudes().to_vec();
    for (h, &p) in inst.generators.iter().zip(phi) {
        psi = unitary_evolution(h, p)?.mul_vec(&psi);
    }
    Ok(psi)
}

pub fn vqa_objective(inst: &VqaInstance, phi: &[f64]) -> Result<f64> {
    let psi = vqa_state(inst, phi)?;
    expectation(inst.observable.matrix(), &psi)
}

/// `‖O U(φ)|Ψ0⟩‖²`.
pub fn vqa_norm_objective(inst: &VqaInstance, phi: &[f64]) -> Result<f64> {
    let psi = vqa_state(inst, phi)?;
    Ok(vec_norm(&inst.observable.matrix().mul_vec(&psi)).powi(2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "UPPERCASE")]
pub enum Decision {
    Yes { witness: Vec<f64>, value: f64 },
    No { evaluated: u64 },
}

pub fn digitized_decision(inst: &VqaInstance, a: f64) -> Result<Decision> {
    digitized_decision_with_cap(inst, a, DEFAULT_ENUMERATION_CAP)
}

/// Exhaustive search of `𝔻^L` in lexicographic order (first parameter most
/// significant). The smallest qualifying index is returned regardless of
/// how the work is split across threads.
pub fn digitized_decision_with_cap(inst: &VqaInstance, a: f64, cap: u64) -> Result<Decision> {
    let digits = inst
        .digit_set
        .as_deref()
        .ok_or_else(|| Error::invalid("decision search requires a digit set"))?;
    let base = digits.len() as u64;
    let layers = inst.layers() as u32;
    let requested = (base as f64).powi(layers as i32);
    let total = match base.checked_pow(layers) {
        Some(t) if t <= cap => t,
        _ => return Err(Error::EnumerationCapExceeded { requested, cap }),
    };
    // U_l(d) for every layer and digit
    let table: Vec<Vec<ComplexMatrix>> = inst
        .generators
        .iter()
        .map(|h| {
            digits
                .iter()
                .map(|&d| unitary_evolution(h, d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let digits_of = |mut idx: u64| -> Vec<usize> {
        let mut out = vec![0usize; layers as usize];
        for slot in out.iter_mut().rev() {
            *slot = (idx % base) as usize;
            idx /= base;
        }
        out
    };
    let eval = |idx: u64| -> Result<f64> {
        let choice = digits_of(idx);
        let mut psi = inst.psi0.amplitudes().to_vec();
        for (l, &c) in choice.iter().enumerate() {
            psi = table[l][c].mul_vec(&psi);
        }
        expectation(inst.observable.matrix(), &psi)
    };
    let hit = (0..total)
        .into_par_iter()
        .map(|idx| (idx, eval(idx)))
        .find_first(|(_, r)| r.is_err() || matches!(r, Ok(v) if *v <= a));
    match hit {
        None => Ok(Decision::No { evaluated: total }),
        Some((_, Err(e))) => Err(e),
        Some((idx, Ok(value))) => Ok(Decision::Yes {
            witness: digits_of(idx).into_iter().map(|c| digits[c]).collect(),
            value,
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaoaInstance {
    h_b: HermitianOperator,
    h_c: HermitianOperator,
    layers: usize,
    noise_b: Option<ComplexMatrix>,
    noise_c: Option<ComplexMatrix>,
    psi0: StateVector,
}

impl QaoaInstance {
    pub fn new(
        h_b: HermitianOperator,
        h_c: HermitianOperator,
        layers: usize,
        noise_b: Option<ComplexMatrix>,
        noise_c: Option<ComplexMatrix>,
        psi0: StateVector,
    ) -> Result<Self> {
        let n = h_b.dim();
        let dims = [
            Some(h_c.dim()),
            noise_b.as_ref().map(ComplexMatrix::dim),
            noise_c.as_ref().map(ComplexMatrix::dim),
            Some(psi0.dim()),
        ];
        for actual in dims.into_iter().flatten() {
            if actual != n {
                return Err(Error::DimensionMismatch { expected: n, actual });
            }
        }
        let eig = eigen_hermitian(&h_b)?;
        let lambda_min = eig.eigenvalues[0];
        let hv = h_b.matrix().mul_vec(psi0.amplitudes());
        let residual = vec_norm(
            &hv.iter()
                .zip(psi0.amplitudes())
                .map(|(a, b)| a - b * lambda_min)
                .collect::<Vec<_>>(),
        );
        if residual > GROUND_STATE_TOL {
            return Err(Error::invalid(format!(
                "psi0 is not a ground state of h_b (residual {residual:e})"
            )));
        }
        Ok(Self {
            h_b,
            h_c,
            layers,
            noise_b,
            noise_c,
            psi0,
        })
    }

    /// Uses the lowest eigenvector of `h_b` as the initial state.
    pub fn with_ground_state(
        h_b: HermitianOperator,
        h_c: HermitianOperator,
        layers: usize,
        noise_b: Option<ComplexMatrix>,
        noise_c: Option<ComplexMatrix>,
    ) -> Result<Self> {
        let psi0 = StateVector::normalized(eigen_hermitian(&h_b)?.eigenvector(0))?;
        Self::new(h_b, h_c, layers, noise_b, noise_c, psi0)
    }

    pub fn h_b(&self) -> &HermitianOperator {
        &self.h_b
    }

    pub fn h_c(&self) -> &HermitianOperator {
        &self.h_c
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn noise_b(&self) -> Option<&ComplexMatrix> {
        self.noise_b.as_ref()
    }

    pub fn noise_c(&self) -> Option<&ComplexMatrix> {
        self.noise_c.as_ref()
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn dim(&self) -> usize {
        self.h_b.dim()
    }

    pub fn with_noise(mut self, noise_b: Option<ComplexMatrix>, noise_c: Option<ComplexMatrix>) -> Result<Self> {
        for m in noise_b.iter().chain(noise_c.iter()) {
            if m.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    actual: m.dim(),
                });
            }
        }
        self.noise_b = noise_b;
        self.noise_c = noise_c;
        Ok(self)
    }

    /// `e^{−iθH} + η`.
    pub fn layer_operator(h: &HermitianOperator, theta: f64, noise: Option<&ComplexMatrix>) -> Result<ComplexMatrix> {
        let u = unitary_evolution(h, theta)?;
        Ok(match noise {
            Some(eta) => &u + eta,
            None => u,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct QaoaInstanceJson {
    h_b: HermitianOperator,
    h_c: HermitianOperator,
    layers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_b: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_c: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    psi0: Option<StateVector>,
}

impl Serialize for QaoaInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QaoaInstanceJson {
            h_b: self.h_b.clone(),
            h_c: self.h_c.clone(),
            layers: self.layers,
            noise_b: self.noise_b.clone(),
            noise_c: self.noise_c.clone(),
            psi0: Some(self.psi0.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QaoaInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = QaoaInstanceJson::deserialize(d)?;
        match j.psi0 {
            Some(psi0) => QaoaInstance::new(j.h_b, j.h_c, j.layers, j.noise_b, j.noise_c, psi0),
            None => QaoaInstance::with_ground_state(j.h_b, j.h_c, j.layers, j.noise_b, j.noise_c),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// `U_b(β_L)U_c(γ_L)⋯U_b(β_1)U_c(γ_1)|Ψ0⟩`; not normalized when noise is
/// present.
pub fn qaoa_state(inst: &QaoaInstance, beta: &[f64], gamma: &[f64]) -> Result<Vec<C64>> {
    for v in [beta, gamma] {
        if v.len() != inst.layers {
            return Err(Error::DimensionMismatch {
                expected: inst.layers,
                actual: v.len(),
            });
        }
    }
    let mut psi = inst.psi0.amplitudes().to_vec();
    for (&b, &g) in beta.iter().zip(gamma) {
        psi = QaoaInstance::layer_operator(&inst.h_c, g, inst.noise_c.as_ref())?.mul_vec(&psi);
        psi = QaoaInstance::layer_operator(&inst.h_b, b, inst.noise_b.as_ref())?.mul_vec(&psi);
    }
    Ok(psi)
}

/// `⟨Ψ(β,γ)|H_c|Ψ(β,γ)⟩`.
pub fn qaoa_expectation(inst: &QaoaInstance, beta: &[f64], gamma: &[f64]) -> Result<f64> {
    expectation(inst.h_c.matrix(), &qaoa_state(inst, beta, gamma)?)
}

/// Two-level noise realization `[[z, w], [−e^{i(θ+ε)} w*, e^{iθ} z*]]`.
pub fn noise_eta_b(z: C64, w: C64, theta: f64, epsilon: f64) -> ComplexMatrix {
    let phase = C64::from_polar(1.0, theta);
    let phase_eps = C64::from_polar(1.0, theta + epsilon);
    ComplexMatrix::from_rows(&[vec![z, w], vec![-phase_eps * w.conj(), phase * z.conj()]])
        .expect("2x2 matrix")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BkFile")]
pub struct BkInstance {
    energies: Vec<f64>,
    adjacency: Vec<Vec<u8>>,
    tau: f64,
}

#[derive(Deserialize)]
struct BkFile {
    energies: Vec<f64>,
    adjacency: Vec<Vec<u8>>,
    tau: f64,
}

impl TryFrom<BkFile> for BkInstance {
    type Error = Error;

    fn try_from(f: BkFile) -> Result<Self> {
        BkInstance::new(f.energies, f.adjacency, f.tau)
    }
}

impl BkInstance {
    pub fn new(energies: Vec<f64>, adjacency: Vec<Vec<u8>>, tau: f64) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::invalid("at least one energy is required"));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite() || e.abs() >= 1.0) {
            return Err(Error::invalid(format!(
                "energy E_{} = {} must satisfy |E| < 1",
                i + 1,
                energies[i]
            )));
        }
        if !tau.is_finite() {
            return Err(Error::invalid("tau must be finite"));
        }
        if adjacency.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: adjacency.len(),
            });
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 {
                    return Err(Error::invalid("adjacency entries must be 0 or 1"));
                }
                if a != adjacency[j][i] {
                    return Err(Error::invalid("adjacency must be symmetric"));
                }
            }
            if row[i] != 0 {
                return Err(Error::invalid("adjacency must have a zero diagonal"));
            }
        }
        Ok(Self {
            energies,
            adjacency,
            tau,
        })
    }

    pub fn d(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn hilbert_dim(&self) -> usize {
        2 * self.d() + 1
    }

    /// `O` on the first `2d` levels: off-diagonal entries of
    /// `(d/8) A ⊗ [[1,1],[1,1]]`, diagonal set so every column sums to zero.
    pub fn observable(&self) -> ComplexMatrix {
        let d = self.d();
        let w = d as f64 / 8.0;
        let m = 2 * d;
        let mut o = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                o[r * m + c] = w * f64::from(self.adjacency[r / 2][c / 2]);
            }
        }
        for c in 0..m {
            let col: f64 = (0..m).map(|r| o[r * m + c]).sum();
            o[c * m + c] = -col;
        }
        ComplexMatrix::from_real(m, &o).expect("finite entries")
    }
}

pub fn bk_build(inst: &BkInstance) -> QaoaInstance {
    let d = inst.d();
    let n = inst.hilbert_dim();
    let mut diag = Vec::with_capacity(n);
    for &e in &inst.energies {
        diag.push(e);
        diag.push(-e);
    }
    // ground state |2d+1⟩ with eigenvalue −1
    diag.push(-1.0);
    let h_b = HermitianOperator::from_real_diag(&diag);

    let o = inst.observable();
    let mut h_c = ComplexMatrix::zeros(n);
    for r in 0..2 * d {
        for c in 0..2 * d {
            h_c.set(r, c, o.get(r, c));
        }
    }
    let amp = C64::new(inst.tau / ((2 * d) as f64).sqrt(), 0.0);
    for j in 0..2 * d {
        h_c.set(j, n - 1, amp);
        h_c.set(n - 1, j, amp);
    }
    let h_c = HermitianOperator::new(h_c).expect("real symmetric");
    QaoaInstance::new(h_b, h_c, 1, None, None, StateVector::basis(n, n - 1))
        .expect("|2d+1> is the mixer ground state")
}

pub fn bk_f(inst: &BkInstance, beta: f64) -> f64 {
    let e = &inst.energies;
    let mut acc = 0.0;
    for (i, row) in inst.adjacency.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a == 1 {
                acc += (e[i] * beta).cos() * (e[j] * beta).cos() - 1.0;
            }
        }
    }
    acc / 4.0
}

pub fn bk_g(inst: &BkInstance, beta: f64) -> f64 {
    let s: f64 = inst.energies.iter().map(|e| (e * beta).cos()).sum();
    -beta.sin() / inst.d() as f64 * s
}

/// `sin²(τγ) f(β) + 2τ cos(τγ) sin(τγ) g(β)`.
pub fn bk_energy_closed_form(inst: &BkInstance, beta: f64, gamma: f64) -> f64 {
    let (s, c) = (inst.tau * gamma).sin_cos();
    s * s * bk_f(inst, beta) + 2.0 * inst.tau * c * s * bk_g(inst, beta)
}

pub fn bk_energy_direct(inst: &BkInstance, beta: f64, gamma: f64) -> Result<f64> {
    qaoa_expectation(&bk_build(inst), &[beta], &[gamma])
}

/// Single-layer state in closed form:
/// `cos(τγ) e^{iβ}|2d+1⟩ − i sin(τγ)/√(2d) Σ_j (e^{−iE_jβ}|2j−1⟩ + e^{iE_jβ}|2j⟩)`.
pub fn bk_state_formula(inst: &BkInstance, beta: f64, gamma: f64) -> Vec<C64> {
    let d = inst.d();
    let (s, c) = (inst.tau * gamma).sin_cos();
    let pref = C64::new(0.0, -s / ((2 * d) as f64).sqrt());
    let mut psi = vec![ZERO; 2 * d + 1];
    for (j, &e) in inst.energies.iter().enumerate() {
        psi[2 * j] = pref * C64::from_polar(1.0, -e * beta);
        psi[2 * j + 1] = pref * C64::from_polar(1.0, e * beta);
    }
    psi[2 * d] = C64::from_polar(c, beta);
    psi
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub beta: f64,
    pub gamma: f64,
    pub e_closed: f64,
    pub e_direct: f64,
}

/// Closed form against simulation on the grid `beta_grid × gamma_grid`.
pub fn bk_landscape(inst: &BkInstance, beta_grid: &[f64], gamma_grid: &[f64]) -> Result<Vec<LandscapeRow>> {
    if let Some(i) = beta_grid.iter().chain(gamma_grid).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i });
    }
    let qaoa = bk_build(inst);
    let mut rows = Vec::with_capacity(beta_grid.len() * gamma_grid.len());
    for &beta in beta_grid {
        let f = bk_f(inst, beta);
        if f > 0.0 {
            return Err(Error::invalid(format!("f({beta}) = {f} is positive")));
        }
        let u_b = unitary_evolution(qaoa.h_b(), beta)?;
        for &gamma in gamma_grid {
            let psi = unitary_evolution(qaoa.h_c(), gamma)?.mul_vec(qaoa.psi0().amplitudes());
            let e_direct = expectation(qaoa.h_c().matrix(), &u_b.mul_vec(&psi))?;
            let e_closed = bk_energy_closed_form(inst, beta, gamma);
            if (e_closed - e_direct).abs() > LANDSCAPE_TOL {
                return Err(Error::invalid(format!(
                    "closed form {e_closed} disagrees with simulation {e_direct} at beta={beta}, gamma={gamma}"
                )));
            }
            rows.push(LandscapeRow {
                beta,
                gamma,
                e_closed,
                e_direct,
            });
        }
    }
    Ok(rows)
}

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn landscape_csv(rows: &[LandscapeRow]) -> String {
    let mut out = String::from("beta,gamma,E_closed,E_direct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig17(r.beta),
            sig17(r.gamma),
            sig17(r.e_closed),
            sig17(r.e_direct)
        ));
    }
    out
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
