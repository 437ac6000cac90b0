//! Integer multivariate polynomials with arbitrary-precision coefficients and
//! exponents, sum-of-squares containers, the 28-variable universal
//! Diophantine equation and budget-guarded exact evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default evaluation budget, in bits, for any intermediate power.
pub const DEFAULT_BIT_BUDGET: u64 = 1_000_000;

type Exponents = Vec<BigUint>;

/// Polynomial in `num_vars` variables with integer coefficients. Zero
/// coefficients are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct IntPolynomial {
    num_vars: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl IntPolynomial {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(vec![BigUint::zero(); num_vars], c.into());
        p
    }

    pub fn var(num_vars: usize, index: usize) -> Self {
        Self::var_pow(num_vars, index, BigUint::one())
    }

    pub fn var_pow(num_vars: usize, index: usize, exponent: BigUint) -> Self {
        assert!(index < num_vars, "variable index out of range");
        let mut exps = vec![BigUint::zero(); num_vars];
        exps[index] = exponent;
        let mut p = Self::zero(num_vars);
        p.add_term(exps, BigInt::one());
        p
    }

    /// Builds from `(exponents, coefficient)` pairs, merging duplicates.
    pub fn from_terms<I, E, C>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<E>, C)>,
        E: Into<BigUint>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero(num_vars);
        for (exps, c) in terms {
            let exps: Exponents = exps.into_iter().map(Into::into).collect();
            if exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    actual: exps.len(),
                });
            }
            p.add_term(exps, c.into());
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Exponents, c: BigInt) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[BigUint], &BigInt)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn coefficient(&self, exponents: &[u64]) -> BigInt {
        let key: Exponents = exponents.iter().map(|&e| BigUint::from(e)).collect();
        self.terms.get(&key).cloned().unwrap_or_default()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<BigUint> {
        self.terms
            .keys()
            .map(|k| k.iter().fold(BigUint::zero(), |acc, e| acc + e))
            .max()
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms
            .get(&vec![BigUint::zero(); self.num_vars])
            .cloned()
            .unwrap_or_default()
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, 1);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        let mut p = Self::zero(self.num_vars);
        for (k, v) in &self.terms {
            p.add_term(k.clone(), v * c);
        }
        p
    }

    /// Iterates `(exponents, coefficient)` with exponents converted to `u32`,
    /// failing when some exponent does not fit.
    pub fn small_terms(&self) -> Result<Vec<(Vec<u32>, BigInt)>> {
        self.terms
            .iter()
            .map(|(k, v)| {
                let exps = k
                    .iter()
                    .map(|e| {
                        e.to_u32().ok_or_else(|| {
                            Error::invalid(format!("exponent {e} too large for dense expansion"))
                        })
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Ok((exps, v.clone()))
            })
            .collect()
    }

    pub fn monomial_string(exps: &[BigUint], names: Option<&[String]>) -> String {
        let parts: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(|(i, e)| {
                let name = names
                    .and_then(|n| n.get(i).cloned())
                    .unwrap_or_else(|| format!("x{i}"));
                if e.is_one() {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Debug for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, v)| format!("{v}*{}", IntPolynomial::monomial_string(k, None)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'a> Add<&'a IntPolynomial> for &'a IntPolynomial {
    type Output = IntPolynomial;

    fn add(self, rhs: &'a IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }
}

impl<'a> Sub<&'a IntPolynomial> for &'a IntPolynomial {
    type Output = IntPolynomial;

    fn sub(self, rhs: &'a IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), -v.clone());
        }
        out
    }
}

impl<'a> Mul<&'a IntPolynomial> for &'a IntPolynomial {
    type Output = IntPolynomial;

    fn mul(self, rhs: &'a IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "polynomial arity mismatch");
        let mut out = IntPolynomial::zero(self.num_vars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &rhs.terms {
                let k: Exponents = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.add_term(k, va * vb);
            }
        }
        out
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;

    fn neg(self) -> IntPolynomial {
        self.scale(&BigInt::from(-1))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<IntPolynomial> for IntPolynomial {
            type Output = IntPolynomial;
            fn $method(self, rhs: IntPolynomial) -> IntPolynomial {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a IntPolynomial> for IntPolynomial {
            type Output = IntPolynomial;
            fn $method(self, rhs: &'a IntPolynomial) -> IntPolynomial {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for IntPolynomial {
    type Output = IntPolynomial;

    fn neg(self) -> IntPolynomial {
        -&self
    }
}

/// Bits needed for `|base|^exponent`, as a float estimate.
fn power_bits(base: &BigInt, exponent: &BigUint) -> f64 {
    let mag = base.magnitude();
    let bits = mag.bits();
    let log2 = if bits <= 1000 {
        mag.to_f64().unwrap_or(f64::INFINITY).log2()
    } else {
        // leading 64 bits give plenty of precision
        let shift = bits - 64;
        let top = (mag >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.log2() + shift as f64
    };
    exponent.to_f64().unwrap_or(f64::INFINITY) * log2
}

fn guarded_pow(
    base: &BigInt,
    exponent: &BigUint,
    budget: u64,
    exps: &[BigUint],
) -> Result<BigInt> {
    if exponent.is_zero() {
        return Ok(BigInt::one());
    }
    if base.is_zero() {
        return Ok(BigInt::zero());
    }
    if base.magnitude().is_one() {
        let odd = exponent.bit(0);
        return Ok(if base.sign() == Sign::Minus && odd {
            BigInt::from(-1)
        } else {
            BigInt::one()
        });
    }
    // |x|^e occupies floor(e log2|x|) + 1 bits
    if power_bits(base, exponent).floor() + 1.0 > budget as f64 {
        return Err(Error::BudgetExceeded {
            budget,
            monomial: IntPolynomial::monomial_string(exps, None),
        });
    }
    Ok(Pow::pow(base, exponent))
}

/// Exact value at an integer point; every intermediate power is checked
/// against `bit_budget` before it is formed.
pub fn evaluate(p: &IntPolynomial, point: &[BigInt], bit_budget: u64) -> Result<BigInt> {
    if point.len() != p.num_vars {
        return Err(Error::DimensionMismatch {
            expected: p.num_vars,
            actual: point.len(),
        });
    }
    if bit_budget == 0 {
        return Err(Error::invalid("bit budget must be positive"));
    }
    let mut acc = BigInt::zero();
    for (exps, coef) in &p.terms {
        let mut term = coef.clone();
        for (x, e) in point.iter().zip(exps) {
            if term.is_zero() {
                break;
            }
            let factor = guarded_pow(x, e, bit_budget, exps)?;
            term *= factor;
            if term.bits() > bit_budget {
                return Err(Error::BudgetExceeded {
                    budget: bit_budget,
                    monomial: IntPolynomial::monomial_string(exps, None),
                });
            }
        }
        acc += term;
    }
    Ok(acc)
}

pub fn evaluate_i64(p: &IntPolynomial, point: &[i64], bit_budget: u64) -> Result<BigInt> {
    let point: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
    evaluate(p, &point, bit_budget)
}

/// Sum of squares `Σ_j q_j²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SosPolynomial {
    num_vars: usize,
    summands: Vec<IntPolynomial>,
}

impl SosPolynomial {
    pub fn new(num_vars: usize, summands: Vec<IntPolynomial>) -> Result<Self> {
        for q in &summands {
            if q.num_vars != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    actual: q.num_vars,
                });
            }
        }
        Ok(Self { num_vars, summands })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn summands(&self) -> &[IntPolynomial] {
        &self.summands
    }

    /// Expanded polynomial `Σ_j q_j²`.
    pub fn expand(&self) -> IntPolynomial {
        self.summands
            .iter()
            .fold(IntPolynomial::zero(self.num_vars), |acc, q| acc + q.square())
    }
}

pub fn evaluate_sos(s: &SosPolynomial, point: &[BigInt], bit_budget: u64) -> Result<BigInt> {
    let mut acc = BigInt::zero();
    for q in &s.summands {
        let v = evaluate(q, point, bit_budget)?;
        if 2 * v.bits() > bit_budget {
            return Err(Error::BudgetExceeded {
                budget: bit_budget,
                monomial: format!("({:?})^2", q),
            });
        }
        acc += &v * &v;
    }
    Ok(acc)
}

pub fn evaluate_sos_i64(s: &SosPolynomial, point: &[i64], bit_budget: u64) -> Result<BigInt> {
    let point: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
    evaluate_sos(s, &point, bit_budget)
}

/// Floating-point value of `p` at a real point.
pub fn evaluate_f64(p: &IntPolynomial, x: &[f64]) -> f64 {
    p.terms
        .iter()
        .map(|(exps, coef)| {
            let c = coef.to_f64().unwrap_or(if coef.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            });
            exps.iter().zip(x).fold(c, |acc, (e, &xi)| {
                if e.is_zero() {
                    acc
                } else if let Some(small) = e.to_i32() {
                    acc * xi.powi(small)
                } else {
                    acc * xi.powf(e.to_f64().unwrap_or(f64::INFINITY))
                }
            })
        })
        .sum()
}

/// `p(x) + Σ_i sin²(π x_i)`: zero exactly at integer roots of `p` when `p ≥ 0`.
pub fn polyplussin_objective(p: &IntPolynomial, x: &[f64]) -> Result<f64> {
    if x.len() != p.num_vars {
        return Err(Error::DimensionMismatch {
            expected: p.num_vars,
            actual: x.len(),
        });
    }
    let trig: f64 = x
        .iter()
        .map(|&xi| (std::f64::consts::PI * xi).sin().powi(2))
        .sum();
    Ok(evaluate_f64(p, x) + trig)
}

/// `binomial(L + d, d)`, exact.
pub fn count_monomials(num_vars: u64, degree: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 1..=degree {
        acc = acc * BigUint::from(num_vars + i) / BigUint::from(i);
    }
    acc
}

/// Variables of the 28-variable universal equation, in storage order.
pub const UDE_VARIABLES: [&str; 28] = [
    "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "o", "p", "q", "r", "s",
    "t", "w", "alpha", "gamma", "nu", "theta", "lambda", "tau", "varphi",
];

/// Values of the parameters `u, x, y, z` that encode the machine.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdeParameters {
    #[serde(with = "bigint_string")]
    pub u: BigInt,
    #[serde(with = "bigint_string")]
    pub x: BigInt,
    #[serde(with = "bigint_string")]
    pub y: BigInt,
    #[serde(with = "bigint_string")]
    pub z: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UdeInstance {
    pub variables: Vec<String>,
    pub parameters: UdeParameters,
    pub tower_exponent: BigUint,
    pub body: SosPolynomial,
}

impl UdeInstance {
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// `evaluate_sos` with monomials in error messages spelled with variable
    /// names.
    pub fn evaluate(&self, point: &[BigInt], bit_budget: u64) -> Result<BigInt> {
        evaluate_sos(&self.body, point, bit_budget).map_err(|e| match e {
            Error::BudgetExceeded { budget, monomial } => Error::BudgetExceeded {
                budget,
                monomial: rename_monomial(&monomial, &self.variables),
            },
            other => other,
        })
    }
}

fn rename_monomial(monomial: &str, names: &[String]) -> String {
    // x12 -> names[12]; longest indices first so x1 does not clobber x12
    let mut out = monomial.to_string();
    for i in (0..names.len()).rev() {
        out = out.replace(&format!("x{i}"), &names[i]);
    }
    out
}

/// The literal tower exponent `5^60`.
pub fn tower_exponent() -> BigUint {
    Pow::pow(BigUint::from(5u32), 60u32)
}

/// The 18-clause sum-of-squares universal equation in 28 variables with the
/// parameters substituted. `exponent_cap` replaces the `5^60` tower.
pub fn ude_d28(parameters: &UdeParameters, exponent_cap: Option<BigUint>) -> UdeInstance {
    const N: usize = 28;
    let v = |name: &str| {
        let idx = UDE_VARIABLES
            .iter()
            .position(|&n| n == name)
            .expect("known variable");
        IntPolynomial::var(N, idx)
    };
    let k = |c: i64| IntPolynomial::constant(N, c);
    let par = |c: &BigInt| IntPolynomial::constant(N, c.clone());

    let (a, b, c, d, e, f, g, h) = (v("a"), v("b"), v("c"), v("d"), v("e"), v("f"), v("g"), v("h"));
    let (i, j, kk, l, m, n, o, p) = (v("i"), v("j"), v("k"), v("l"), v("m"), v("n"), v("o"), v("p"));
    let (q, r, s, t, w) = (v("q"), v("r"), v("s"), v("t"), v("w"));
    let (alpha, gamma, nu, theta) = (v("alpha"), v("gamma"), v("nu"), v("theta"));
    let (lambda, tau, varphi) = (v("lambda"), v("tau"), v("varphi"));
    let (pu, px, py, pz) = (
        par(&parameters.u),
        par(&parameters.x),
        par(&parameters.y),
        par(&parameters.z),
    );

    let tower = exponent_cap.unwrap_or_else(tower_exponent);
    let b_tower = IntPolynomial::var_pow(N, 1, tower.clone());
    let b5 = b.pow(5);
    let n2 = n.square();

    let clauses = vec![
        // e l g^2 + alpha - (b - x y) q^2
        &(&(&e * &l) * &g.square()) + &alpha - (&b - &(&px * &py)) * q.square(),
        // q - b^(5^60)
        &q - &b_tower,
        // lambda + q^4 - 1 - lambda b^5
        &(&(&lambda + &q.pow(4)) - &k(1)) - &(&lambda * &b5),
        // theta + 2z - b^5
        &(&theta + &(&k(2) * &pz)) - &b5,
        // u + t theta - l
        &(&pu + &(&t * &theta)) - &l,
        // y + m theta - e
        &(&py + &(&m * &theta)) - &e,
        // q^16 - n
        &q.pow(16) - &n,
        // [g + e q^3 + l q^5 + (2(e - z lambda)(1 + x b^5 + g)^4 + lambda b^5 + lambda b^5 q^4) q^4][n^2 - n]
        //   + [q^3 - b l + 1 + theta lambda q^3 + (b^5 - 2) q^5][n^2 - 1] - r
        {
            let inner = &(&k(1) + &(&px * &b5)) + &g;
            let big = &(&(&k(2) * &(&e - &(&pz * &lambda))) * &inner.pow(4)) + &(&lambda * &b5);
            let big = &big + &(&(&lambda * &b5) * &q.pow(4));
            let first = &(&(&g + &(&e * &q.pow(3))) + &(&l * &q.pow(5))) + &(&big * &q.pow(4));
            let second = &(&(&(&q.pow(3) - &(&b * &l)) + &k(1)) + &(&(&theta * &lambda) * &q.pow(3)))
                + &(&(&b5 - &k(2)) * &q.pow(5));
            &(&(&first * &(&n2 - &n)) + &(&second * &(&n2 - &k(1)))) - &r
        },
        // 2 w s^2 r^2 n^2 - p
        &(&(&(&(&k(2) * &w) * &s.square()) * &r.square()) * &n2) - &p,
        // p^2 k^2 - k^2 + 1 - tau^2
        &(&(&(&p.square() * &kk.square()) - &kk.square()) + &k(1)) - &tau.square(),
        // 4(c - k s n^2)^2 + nu - k^2
        &(&(&k(4) * &(&c - &(&(&kk * &s) * &n2)).square()) + &nu) - &kk.square(),
        // r + 1 + h p - h - k
        &(&(&(&r + &k(1)) + &(&h * &p)) - &h) - &kk,
        // (w n^2 + 1) r s n^2 - a
        &(&(&(&(&w * &n2) + &k(1)) * &r) * &(&s * &n2)) - &a,
        // 2r + 1 + varphi - c
        &(&(&(&k(2) * &r) + &k(1)) + &varphi) - &c,
        // b w + c a - 2c + 4 a gamma - 5 gamma - d
        &(&(&(&(&(&b * &w) + &(&c * &a)) - &(&k(2) * &c)) + &(&(&k(4) * &a) * &gamma))
            - &(&k(5) * &gamma))
            - &d,
        // (a^2 - 1) c^2 + 1 - d^2
        &(&(&(&a.square() - &k(1)) * &c.square()) + &k(1)) - &d.square(),
        // (a^2 - 1) i^2 c^4 + 1 - f^2
        &(&(&(&(&a.square() - &k(1)) * &i.square()) * &c.pow(4)) + &k(1)) - &f.square(),
        // ((a + f^2 (d^2 - a))^2 - 1)(2r + 1 + j c)^2 + 1 - (d + o f)^2
        {
            let left = &(&a + &(&f.square() * &(&d.square() - &a))).square() - &k(1);
            let right = (&(&(&k(2) * &r) + &k(1)) + &(&j * &c)).square();
            &(&(&left * &right) + &k(1)) - &(&d + &(&o * &f)).square()
        },
    ];

    UdeInstance {
        variables: UDE_VARIABLES.iter().map(|s| s.to_string()).collect(),
        parameters: parameters.clone(),
        tower_exponent: tower,
        body: SosPolynomial::new(N, clauses).expect("clauses share arity"),
    }
}

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// JSON exponent: a plain number when it fits, a decimal string otherwise.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentJson {
    Small(u64),
    Big(String),
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<ExponentJson>,
    coef: String,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    num_vars: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct SosJson {
    num_vars: usize,
    summands: Vec<PolyJson>,
}

impl From<&IntPolynomial> for PolyJson {
    fn from(p: &IntPolynomial) -> Self {
        PolyJson {
            num_vars: p.num_vars,
            terms: p
                .terms
                .iter()
                .map(|(k, v)| TermJson {
                    exp: k
                        .iter()
                        .map(|e| match e.to_u64() {
                            Some(small) => ExponentJson::Small(small),
                            None => ExponentJson::Big(e.to_string()),
                        })
                        .collect(),
                    coef: v.to_string(),
                })
                .collect(),
        }
    }
}

impl TryFrom<PolyJson> for IntPolynomial {
    type Error = Error;

    fn try_from(j: PolyJson) -> Result<Self> {
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in j.terms {
            let exps = t
                .exp
                .into_iter()
                .map(|e| match e {
                    ExponentJson::Small(v) => Ok(BigUint::from(v)),
                    ExponentJson::Big(s) => s
                        .parse::<BigUint>()
                        .map_err(|err| Error::Parse(format!("exponent {s:?}: {err}"))),
                })
                .collect::<Result<Vec<BigUint>>>()?;
            let coef: BigInt = t
                .coef
                .parse()
                .map_err(|err| Error::Parse(format!("coefficient {:?}: {err}", t.coef)))?;
            terms.push((exps, coef));
        }
        IntPolynomial::from_terms(j.num_vars, terms)
    }
}

impl Serialize for IntPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        IntPolynomial::try_from(PolyJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for SosPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SosJson {
            num_vars: self.num_vars,
            summands: self.summands.iter().map(PolyJson::from).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SosPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SosJson::deserialize(d)?;
        let summands = j
            .summands
            .into_iter()
            .map(IntPolynomial::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        SosPolynomial::new(j.num_vars, summands).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn xy(coeffs: &[(u64, u64, i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(2, coeffs.iter().map(|&(a, b, c)| (vec![a, b], c))).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let p = xy(&[(2, 0, 1), (0, 2, 1)]);
        assert_eq!(evaluate_i64(&p, &[3, 4], DEFAULT_BIT_BUDGET).unwrap(), BigInt::from(25));
        let p = xy(&[(1, 0, 1), (0, 1, -1)]);
        assert_eq!(evaluate_i64(&p, &[7, 7], DEFAULT_BIT_BUDGET).unwrap(), BigInt::zero());
        let p = xy(&[(0, 0, -13), (3, 1, 5), (0, 4, 2)]);
        assert_eq!(evaluate_i64(&p, &[0, 0], DEFAULT_BIT_BUDGET).unwrap(), BigInt::from(-13));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = xy(&[(1, 0, 3), (1, 0, -3), (0, 1, 2)]);
        assert_eq!(p.len(), 1);
        let q = &p - &p;
        assert!(q.is_zero());
    }

    #[test]
    fn sos_quartic_examples() {
        // η = (1,1,1): x² + y² + x²y² = x² + y² + (xy)²
        let s = SosPolynomial::new(2, vec![xy(&[(1, 0, 1)]), xy(&[(0, 1, 1)]), xy(&[(1, 1, 1)])])
            .unwrap();
        assert_eq!(evaluate_sos_i64(&s, &[0, 0], DEFAULT_BIT_BUDGET).unwrap(), BigInt::zero());
        assert_eq!(evaluate_sos_i64(&s, &[1, 2], DEFAULT_BIT_BUDGET).unwrap(), BigInt::from(9));
        assert_eq!(s.expand(), xy(&[(2, 0, 1), (0, 2, 1), (2, 2, 1)]));
    }

    #[test]
    fn budget_exceeded_instead_of_wrapping() {
        let p = IntPolynomial::var_pow(1, 0, tower_exponent());
        for b in [-1i64, 0, 1] {
            assert!(evaluate_i64(&p, &[b], DEFAULT_BIT_BUDGET).is_ok());
        }
        // 5^60 is odd
        assert_eq!(evaluate_i64(&p, &[-1], 10).unwrap(), BigInt::from(-1));
        let err = evaluate_i64(&p, &[2], DEFAULT_BIT_BUDGET).unwrap_err();
        match err {
            Error::BudgetExceeded { budget, monomial } => {
                assert_eq!(budget, DEFAULT_BIT_BUDGET);
                assert!(monomial.contains(&tower_exponent().to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
        // small budgets bite on ordinary powers too
        let q = IntPolynomial::var_pow(1, 0, BigUint::from(100u32));
        assert!(evaluate_i64(&q, &[2], 101).is_ok());
        assert!(matches!(evaluate_i64(&q, &[2], 100), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(evaluate_i64(&q, &[3], 101), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn polyplussin_examples() {
        let x2 = IntPolynomial::var_pow(1, 0, BigUint::from(2u32));
        assert!(polyplussin_objective(&x2, &[0.0]).unwrap().abs() < 1e-15);
        assert!((polyplussin_objective(&x2, &[0.5]).unwrap() - 1.25).abs() < 1e-15);
        let shifted = IntPolynomial::from_terms(1, [(vec![2u32], 1), (vec![1], -4), (vec![0], 4)]).unwrap();
        assert!(polyplussin_objective(&shifted, &[2.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(count_monomials(2, 2), BigUint::from(6u32));
        assert_eq!(count_monomials(58, 4), BigUint::from(557_845u32));
        assert_eq!(count_monomials(1, 0), BigUint::one());
    }

    #[test]
    fn json_round_trip_with_tower_exponent() {
        let ude = ude_d28(&UdeParameters::default(), None);
        let s = serde_json::to_string(&ude.body).unwrap();
        assert!(s.contains(&format!("\"{}\"", tower_exponent())));
        let back: SosPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ude.body);
        let p: IntPolynomial =
            serde_json::from_str(r#"{"num_vars":2,"terms":[{"exp":[1,0],"coef":"-123456789012345678901234567890"}]}"#)
                .unwrap();
        assert_eq!(p.coefficient(&[1, 0]), "-123456789012345678901234567890".parse::<BigInt>().unwrap());
    }

    #[test]
    fn ude_has_eighteen_clauses_and_origin_value() {
        let ude = ude_d28(&UdeParameters::default(), None);
        assert_eq!(ude.body.summands().len(), 18);
        assert_eq!(ude.body.num_vars(), 28);
        let origin = vec![BigInt::zero(); 28];
        // constants of clauses 3, 8, 10, 12, 14, 16, 17 are ±1, the rest vanish
        assert_eq!(ude.evaluate(&origin, DEFAULT_BIT_BUDGET).unwrap(), BigInt::from(7));
        let consts: Vec<BigInt> = ude.body.summands().iter().map(|q| q.constant_term()).collect();
        let expected: Vec<i64> = vec![0, 0, -1, 0, 0, 0, 0, -1, 0, 1, 0, 1, 0, 1, 0, 1, 1, 0];
        assert_eq!(consts, expected.into_iter().map(BigInt::from).collect::<Vec<_>>());
    }

    #[test]
    fn ude_clause_shapes() {
        let ude = ude_d28(&UdeParameters::default(), None);
        let b = ude.variable_index("b").unwrap();
        let q = ude.variable_index("q").unwrap();
        let mut tower = vec![0u64; 28];
        tower[b] = 0;
        // clause 2 is exactly q - b^(5^60)
        let clause2 = &ude.body.summands()[1];
        assert_eq!(clause2.len(), 2);
        let mut expected = IntPolynomial::var(28, q);
        expected = &expected - &IntPolynomial::var_pow(28, b, tower_exponent());
        assert_eq!(clause2, &expected);
        // clause 4 with z = 0 is theta - b^5
        let theta = ude.variable_index("theta").unwrap();
        let clause4 = &ude.body.summands()[3];
        let expected4 =
            &IntPolynomial::var(28, theta) - &IntPolynomial::var_pow(28, b, BigUint::from(5u32));
        assert_eq!(clause4, &expected4);
        let with_z = ude_d28(
            &UdeParameters {
                z: BigInt::from(3),
                ..Default::default()
            },
            None,
        );
        assert_eq!(with_z.body.summands()[3].constant_term(), BigInt::from(6));
    }

    #[test]
    fn uncapped_tower_with_large_b_exceeds_budget() {
        let ude = ude_d28(&UdeParameters::default(), None);
        let mut point = vec![BigInt::zero(); 28];
        point[ude.variable_index("b").unwrap()] = BigInt::from(2);
        match ude.evaluate(&point, DEFAULT_BIT_BUDGET) {
            Err(Error::BudgetExceeded { monomial, .. }) => assert!(monomial.starts_with("b^")),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    fn small_poly() -> impl Strategy<Value = IntPolynomial> {
        prop::collection::vec(((0u32..4, 0u32..4, 0u32..3), -5i64..6), 0..6).prop_map(|terms| {
            IntPolynomial::from_terms(
                3,
                terms.into_iter().map(|((a, b, c), k)| (vec![a, b, c], k)),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_an_evaluation_homomorphism(
            p in small_poly(), q in small_poly(), pt in prop::collection::vec(-6i64..7, 3)
        ) {
            let lhs = evaluate_i64(&(&p * &q), &pt, DEFAULT_BIT_BUDGET).unwrap();
            let rhs = evaluate_i64(&p, &pt, DEFAULT_BIT_BUDGET).unwrap()
                * evaluate_i64(&q, &pt, DEFAULT_BIT_BUDGET).unwrap();
            prop_assert_eq!(lhs, rhs);
            let sum = evaluate_i64(&(&p + &q), &pt, DEFAULT_BIT_BUDGET).unwrap();
            prop_assert_eq!(
                sum,
                evaluate_i64(&p, &pt, DEFAULT_BIT_BUDGET).unwrap() + evaluate_i64(&q, &pt, DEFAULT_BIT_BUDGET).unwrap()
            );
        }

        #[test]
        fn sos_nonnegative_and_zero_iff_common_root(
            qs in prop::collection::vec(small_poly(), 1..4), pt in prop::collection::vec(-4i64..5, 3)
        ) {
            let s = SosPolynomial::new(3, qs.clone()).unwrap();
            let v = evaluate_sos_i64(&s, &pt, DEFAULT_BIT_BUDGET).unwrap();
            prop_assert!(v >= BigInt::zero());
            let all_zero = qs.iter().all(|q| evaluate_i64(q, &pt, DEFAULT_BIT_BUDGET).unwrap().is_zero());
            prop_assert_eq!(v.is_zero(), all_zero);
            if !all_zero {
                prop_assert!(v >= BigInt::one());
            }
            prop_assert_eq!(evaluate_i64(&s.expand(), &pt, DEFAULT_BIT_BUDGET).unwrap(), v);
        }
    }
}
