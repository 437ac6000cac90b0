//! Joint spectral radius bounds by branch-and-bound over matrix words, the
//! convergence classifier for digitized noisy QAOA, and the reduction of an
//! L-matrix vocabulary to two block matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{operator_norm, spectral_radius, ComplexMatrix};
use crate::vqasim::QaoaInstance;

pub const DEFAULT_MARGIN: f64 = 0.01;
pub const DEFAULT_PRODUCT_CAP: u64 = 50_000_000;
// relative slack so words tying the incumbent are still explored
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixVocabulary {
    matrices: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl MatrixVocabulary {
    pub fn new(matrices: Vec<ComplexMatrix>, labels: Option<Vec<String>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::invalid("vocabulary is empty"))?;
        for m in &matrices {
            if m.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: m.dim(),
                });
            }
        }
        let labels =
            labels.unwrap_or_else(|| (1..=matrices.len()).map(|i| format!("A{i}")).collect());
        if labels.len() != matrices.len() {
            return Err(Error::DimensionMismatch {
                expected: matrices.len(),
                actual: labels.len(),
            });
        }
        Ok(Self { matrices, labels })
    }

    pub fn matrices(&self) -> &[ComplexMatrix] {
        &self.matrices
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            matrices: self.matrices.iter().map(|m| m.scale_real(c)).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VocabularyJson {
    matrices: Vec<ComplexMatrix>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl Serialize for MatrixVocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VocabularyJson {
            matrices: self.matrices.clone(),
            labels: Some(self.labels.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixVocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = VocabularyJson::deserialize(d)?;
        MatrixVocabulary::new(j.matrices, j.labels).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    /// Labels of the witness product, leftmost factor first.
    pub witness_word: Vec<String>,
    pub products: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Converges,
    Diverges,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsrReport {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    pub witness_word: Vec<String>,
    pub classification: Classification,
}

impl JsrReport {
    pub fn new(bounds: &JsrBounds, margin: f64) -> Self {
        Self {
            lower: bounds.lower,
            upper: bounds.upper,
            depth: bounds.depth,
            witness_word: bounds.witness_word.clone(),
            classification: classify_convergence(bounds, margin),
        }
    }
}

/// Incumbent lower bound with its word (letters in multiplication order:
/// the last letter is the leftmost factor).
#[derive(Clone, Debug)]
struct Incumbent {
    value: f64,
    word: Vec<usize>,
}

impl Incumbent {
    fn beats(&self, other: &Incumbent) -> bool {
        let tol = PRUNE_SLACK * other.value.abs().max(f64::MIN_POSITIVE);
        if self.value > other.value + tol {
            return true;
        }
        if self.value < other.value - tol {
            return false;
        }
        (self.word.len(), &self.word) < (other.word.len(), &other.word)
    }
}

struct Branch<'a> {
    mats: &'a [ComplexMatrix],
    depth: usize,
    max_norm: f64,
    cap: u64,
    incumbent: Incumbent,
    level_max: Vec<f64>,
    products: u64,
}

impl Branch<'_> {
    fn prunable(&self, norm: f64, s: usize) -> bool {
        if s >= self.depth {
            return true;
        }
        let limit = self.incumbent.value * (1.0 - PRUNE_SLACK);
        // (norm · M^{t−s})^{1/t} is monotone in t, so the endpoints suffice
        [s + 1, self.depth].iter().all(|&t| {
            let bound = (norm * self.max_norm.powi((t - s) as i32)).powf(1.0 / t as f64);
            bound < limit
        })
    }

    fn visit(&mut self, w: &ComplexMatrix, word: &mut Vec<usize>) -> Result<()> {
        self.products += 1;
        if self.products > self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        let s = word.len();
        let norm = operator_norm(w);
        let root = norm.powf(1.0 / s as f64);
        if root > self.level_max[s] {
            self.level_max[s] = root;
        }
        if root >= self.incumbent.value * (1.0 - PRUNE_SLACK) {
            let rho = spectral_radius(w)?.powf(1.0 / s as f64);
            let candidate = Incumbent {
                value: rho,
                word: word.clone(),
            };
            if candidate.beats(&self.incumbent) {
                self.incumbent = candidate;
            }
        }
        if self.prunable(norm, s) {
            return Ok(());
        }
        for (i, a) in self.mats.iter().enumerate() {
            word.push(i);
            let next = a * w;
            self.visit(&next, word)?;
            word.pop();
        }
        Ok(())
    }
}

/// Sandwich `max ρ(W)^{1/|W|} ≤ ρ̂(𝒜) ≤ min_t max_{|W|=t} ‖W‖₂^{1/t}` over
/// words of length at most `depth`. Subtrees whose norm bound cannot beat the
/// incumbent lower bound are skipped; the top-level branches run in parallel
/// from a common initial incumbent, so the result does not depend on
/// scheduling.
pub fn jsr_bounds(v: &MatrixVocabulary, depth: usize, cap: u64) -> Result<JsrBounds> {
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    let mats = &v.matrices;
    let max_norm = mats.iter().map(operator_norm).fold(0.0, f64::max);
    let mut start = Incumbent {
        value: 0.0,
        word: vec![0],
    };
    for (i, a) in mats.iter().enumerate() {
        let c = Incumbent {
            value: spectral_radius(a)?,
            word: vec![i],
        };
        if c.beats(&start) {
            start = c;
        }
    }
    let branches: Vec<Result<Branch>> = (0..mats.len())
        .into_par_iter()
        .map(|i| {
            let mut b = Branch {
                mats,
                depth,
                max_norm,
                cap,
                incumbent: start.clone(),
                level_max: vec![0.0; depth + 1],
                products: 0,
            };
            let mut word = vec![i];
            b.visit(&mats[i], &mut word)?;
            Ok(b)
        })
        .collect();
    let mut incumbent = start;
    let mut level_max = vec![0.0f64; depth + 1];
    let mut products = 0u64;
    for b in branches {
        let b = b?;
        products += b.products;
        if products > cap {
            return Err(Error::CapExceeded { cap });
        }
        if b.incumbent.beats(&incumbent) {
            incumbent = b.incumbent;
        }
        for (acc, v) in level_max.iter_mut().zip(&b.level_max) {
            *acc = acc.max(*v);
        }
    }
    let lower = incumbent.value;
    let upper = level_max[1..]
        .iter()
        .map(|&m| m.max(lower))
        .fold(f64::INFINITY, f64::min);
    Ok(JsrBounds {
        lower,
        upper,
        depth,
        witness_word: incumbent
            .word
            .iter()
            .rev()
            .map(|&i| v.labels[i].clone())
            .collect(),
        products,
    })
}

pub fn classify_convergence(bounds: &JsrBounds, margin: f64) -> Classification {
    if bounds.upper < 1.0 - margin {
        Classification::Converges
    } else if bounds.lower > 1.0 + margin {
        Classification::Diverges
    } else {
        Classification::Undecided
    }
}

/// One member `U_b(β) U_c(γ)` per pair in `betas × gammas`, with the
/// instance's noise added to each factor.
pub fn build_qaoa_vocabulary(
    inst: &QaoaInstance,
    betas: &[f64],
    gammas: &[f64],
) -> Result<MatrixVocabulary> {
    if betas.is_empty() || gammas.is_empty() {
        return Err(Error::invalid("digit sets must be nonempty"));
    }
    let mut matrices = Vec::with_capacity(betas.len() * gammas.len());
    let mut labels = Vec::with_capacity(matrices.capacity());
    for (i, &b) in betas.iter().enumerate() {
        let u_b = QaoaInstance::layer_operator(inst.h_b(), b, inst.noise_b())?;
        for (j, &g) in gammas.iter().enumerate() {
            let u_c = QaoaInstance::layer_operator(inst.h_c(), g, inst.noise_c())?;
            matrices.push(&u_b * &u_c);
            labels.push(format!("b{}g{}", i + 1, j + 1));
        }
    }
    MatrixVocabulary::new(matrices, Some(labels))
}

/// `{U, T}` with `U = blockdiag(U_1, …, U_L)` and the block cyclic shift
/// `T = [[0, 𝟙_{n(L−1)}], [𝟙_n, 0]]`.
pub fn block_reduce(v: &MatrixVocabulary) -> MatrixVocabulary {
    let n = v.dim();
    let l = v.len();
    let u = ComplexMatrix::block_diag(&v.matrices);
    let big = n * l;
    let mut t = ComplexMatrix::zeros(big);
    for r in 0..big {
        // row r of the top block picks column r + n; the last block wraps
        let c = (r + n) % big;
        t.set(r, c, crate::matcore::ONE);
    }
    MatrixVocabulary::new(vec![u, t], Some(vec!["U".into(), "T".into()]))
        .expect("two matrices of equal dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::C64;

    fn real(dim: usize, e: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(dim, e).unwrap()
    }

    #[test]
    fn golden_pair() {
        let v = MatrixVocabulary::new(
            vec![real(2, &[1.0, 1.0, 0.0, 1.0]), real(2, &[1.0, 0.0, 1.0, 1.0])],
            None,
        )
        .unwrap();
        let b = jsr_bounds(&v, 16, DEFAULT_PRODUCT_CAP).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(b.lower >= phi - 1e-3, "{b:?}");
        assert!(b.upper <= 1.62, "{b:?}");
        assert!(b.lower <= b.upper);
        assert_eq!(b.witness_word.len(), 2);
        assert_eq!(classify_convergence(&b, DEFAULT_MARGIN), Classification::Diverges);
    }

    #[test]
    fn single_and_zero() {
        let a = real(2, &[0.5, 0.0, 0.0, -0.9]);
        let b = jsr_bounds(&MatrixVocabulary::new(vec![a], None).unwrap(), 8, 1000).unwrap();
        assert!((b.lower - 0.9).abs() < 1e-9 && (b.upper - 0.9).abs() < 1e-9);
        let z = jsr_bounds(&MatrixVocabulary::new(vec![ComplexMatrix::zeros(3)], None).unwrap(), 5, 1000)
            .unwrap();
        assert_eq!((z.lower, z.upper), (0.0, 0.0));
    }

    #[test]
    fn classification_thresholds() {
        let mk = |lower, upper| JsrBounds {
            lower,
            upper,
            depth: 1,
            witness_word: vec![],
            products: 0,
        };
        assert_eq!(classify_convergence(&mk(0.5, 0.8), 0.01), Classification::Converges);
        assert_eq!(classify_convergence(&mk(1.2, 1.6), 0.01), Classification::Diverges);
        assert_eq!(classify_convergence(&mk(0.97, 1.03), 0.01), Classification::Undecided);
    }

    #[test]
    fn cap_is_enforced() {
        let v = MatrixVocabulary::new(vec![ComplexMatrix::identity(2), ComplexMatrix::pauli_x()], None)
            .unwrap();
        assert!(matches!(jsr_bounds(&v, 12, 100), Err(Error::CapExceeded { cap: 100 })));
    }

    #[test]
    fn reduction_shapes() {
        let a = real(2, &[0.1, 0.2, 0.3, 0.4]);
        let b = real(2, &[0.0, 1.0, -1.0, 0.0]);
        let v = MatrixVocabulary::new(vec![a.clone(), b], None).unwrap();
        let r = block_reduce(&v);
        assert_eq!(r.len(), 2);
        assert_eq!(r.dim(), 4);
        let t = &r.matrices()[1];
        assert!((t * t).max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
        let single = block_reduce(&MatrixVocabulary::new(vec![a.clone()], None).unwrap());
        assert_eq!(single.matrices()[0], a);
        assert_eq!(single.matrices()[1], ComplexMatrix::identity(2));
    }

    #[test]
    fn vocabulary_json_round_trip() {
        let v = MatrixVocabulary::new(
            vec![ComplexMatrix::from_diag(&[C64::new(0.0, 1.0), C64::new(2.0, 0.0)])],
            Some(vec!["X".into()]),
        )
        .unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: MatrixVocabulary = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
