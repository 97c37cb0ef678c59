//! Finite stages of a subgroup chain in Q/Z.
//!
//! A [`GeneratorChain`] `k_0, k_1, ..., k_J` defines `γ_j = 1 / (k_0 ⋯ k_j)`
//! and the cyclic groups `Γ_j = ⟨γ_j⟩`. Every element of `Γ_J` has a unique
//! mixed-radix expansion `Σ a_j γ_j` with `0 ≤ a_j < k_j`; a [`DigitVector`]
//! stores a contiguous run of those digits.
//!
//! Arithmetic is exact. Fractions are reduced big integers; digits are `u64`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QzError {
    #[error("level {level} out of range for chain of length {len}")]
    LevelOutOfRange { level: usize, len: usize },
    #[error("radix k_{level} = {k} must be at least 2")]
    BadRadix { level: usize, k: u64 },
    #[error("{0} is not in the chain's top subgroup")]
    NotInSubgroup(String),
    #[error("malformed digits: {0}")]
    MalformedDigits(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// An element of Q/Z as a reduced fraction `num/den` with `0 ≤ num < den`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QZ {
    num: BigUint,
    den: BigUint,
}

impl QZ {
    pub fn zero() -> Self {
        QZ { num: BigUint::zero(), den: BigUint::one() }
    }

    /// The class of `num/den` modulo 1.
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self, QzError> {
        let den = den.into();
        if den.is_zero() {
            return Err(QzError::ZeroDenominator);
        }
        let num = num.into() % &den;
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: BigUint, den: BigUint) -> Self {
        let g = num.gcd(&den);
        if g.is_zero() {
            return QZ::zero();
        }
        QZ { num: num / &g, den: den / g }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Order of the element in Q/Z.
    pub fn order(&self) -> &BigUint {
        &self.den
    }

    pub fn add(&self, other: &QZ) -> QZ {
        let den = self.den.lcm(&other.den);
        let num = &self.num * (&den / &self.den) + &other.num * (&den / &other.den);
        Self::reduced(num % &den, den)
    }

    pub fn neg(&self) -> QZ {
        if self.num.is_zero() {
            return self.clone();
        }
        QZ { num: &self.den - &self.num, den: self.den.clone() }
    }

    pub fn sub(&self, other: &QZ) -> QZ {
        self.add(&other.neg())
    }

    /// `n·γ`, the n-th power in multiplicative notation.
    pub fn times(&self, n: impl Into<BigUint>) -> QZ {
        let num = (&self.num * n.into()) % &self.den;
        Self::reduced(num, self.den.clone())
    }

    /// The value in `[0, 1)` as a float. Exactness is lost only here.
    pub fn to_f64(&self) -> f64 {
        let bits = self.den.bits();
        if bits <= 1000 {
            return self.num.to_f64().unwrap() / self.den.to_f64().unwrap();
        }
        let shift = bits - 64;
        let n = (&self.num >> shift).to_f64().unwrap();
        let d = (&self.den >> shift).to_f64().unwrap();
        n / d
    }

    /// Angle `2π·num/den` reduced to `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        std::f64::consts::TAU * self.to_f64()
    }
}

impl fmt::Display for QZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for QZ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The radices `k_0, ..., k_J` of a nested chain of cyclic subgroups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct GeneratorChain {
    ks: Vec<u64>,
}

impl TryFrom<Vec<u64>> for GeneratorChain {
    type Error = QzError;
    fn try_from(ks: Vec<u64>) -> Result<Self, QzError> {
        GeneratorChain::new(ks)
    }
}

impl From<GeneratorChain> for Vec<u64> {
    fn from(c: GeneratorChain) -> Vec<u64> {
        c.ks
    }
}

impl GeneratorChain {
    pub fn new(ks: Vec<u64>) -> Result<Self, QzError> {
        if ks.is_empty() {
            return Err(QzError::MalformedDigits("empty chain".into()));
        }
        if let Some((level, &k)) = ks.iter().enumerate().find(|(_, &k)| k < 2) {
            return Err(QzError::BadRadix { level, k });
        }
        Ok(GeneratorChain { ks })
    }

    pub fn ks(&self) -> &[u64] {
        &self.ks
    }

    /// Number of levels, `J + 1`.
    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Index of the top level `J`.
    pub fn top(&self) -> usize {
        self.ks.len() - 1
    }

    fn check(&self, j: usize) -> Result<(), QzError> {
        if j < self.ks.len() {
            Ok(())
        } else {
            Err(QzError::LevelOutOfRange { level: j, len: self.ks.len() })
        }
    }

    /// `k_{≤j} = k_0 ⋯ k_j`.
    pub fn cumulative(&self, j: usize) -> Result<BigUint, QzError> {
        self.check(j)?;
        Ok(self.ks[..=j].iter().fold(BigUint::one(), |acc, &k| acc * k))
    }

    /// `γ_j = 1/k_{≤j}`.
    pub fn gamma(&self, j: usize) -> Result<QZ, QzError> {
        Ok(QZ { num: BigUint::one(), den: self.cumulative(j)? })
    }

    pub fn contains(&self, g: &QZ) -> bool {
        (self.cumulative(self.top()).unwrap() % &g.den).is_zero()
    }

    /// The element `m·γ_J` for an integer `0 ≤ m < |Γ_J|`.
    pub fn element(&self, m: impl Into<BigUint>) -> QZ {
        QZ::new(m, self.cumulative(self.top()).unwrap()).unwrap()
    }
}

/// `|Γ_j| = k_{≤j}`.
pub fn chain_subgroup_order(chain: &GeneratorChain, j: usize) -> Result<BigUint, QzError> {
    chain.cumulative(j)
}

/// Mixed-radix digits for levels `start .. start + digits.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitVector {
    pub start: usize,
    pub digits: Vec<u64>,
}

impl DigitVector {
    pub fn zeros(start: usize, len: usize) -> Self {
        DigitVector { start, digits: vec![0; len] }
    }

    /// Levels covered, as a half-open range.
    pub fn levels(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.digits.len()
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&a| a == 0)
    }

    /// Digit at an absolute level; levels outside the run read as 0.
    pub fn at(&self, level: usize) -> u64 {
        if self.levels().contains(&level) {
            self.digits[level - self.start]
        } else {
            0
        }
    }

    pub fn validate(&self, chain: &GeneratorChain) -> Result<(), QzError> {
        if self.start + self.digits.len() > chain.len() {
            return Err(QzError::MalformedDigits(format!(
                "levels {:?} exceed chain length {}",
                self.levels(),
                chain.len()
            )));
        }
        for (i, &a) in self.digits.iter().enumerate() {
            let k = chain.ks[self.start + i];
            if a >= k {
                return Err(QzError::MalformedDigits(format!("a_{} = {a} ≥ k = {k}", self.start + i)));
            }
        }
        Ok(())
    }
}

/// The unique digits `a_0..a_J` with `γ = Σ a_j γ_j`.
pub fn decompose(g: &QZ, chain: &GeneratorChain) -> Result<DigitVector, QzError> {
    let big_k = chain.cumulative(chain.top())?;
    if !(&big_k % &g.den).is_zero() {
        return Err(QzError::NotInSubgroup(g.to_string()));
    }
    // γ = n / K with n written in the mixed radix whose least significant place is k_J
    let mut n = &g.num * (&big_k / &g.den);
    let mut digits = vec![0u64; chain.len()];
    for j in (0..chain.len()).rev() {
        let (q, r) = n.div_rem(&BigUint::from(chain.ks[j]));
        digits[j] = r.to_u64().unwrap();
        n = q;
    }
    debug_assert!(n.is_zero());
    Ok(DigitVector { start: 0, digits })
}

/// `Σ a_i γ_i` over the levels present in `dv`.
pub fn recompose(dv: &DigitVector, chain: &GeneratorChain) -> Result<QZ, QzError> {
    dv.validate(chain)?;
    let end = dv.start + dv.digits.len();
    if end == 0 {
        return Ok(QZ::zero());
    }
    let top = end - 1;
    let mut n = BigUint::zero();
    for level in 0..=top {
        n = n * chain.ks[level] + dv.at(level);
    }
    QZ::new(n, chain.cumulative(top)?)
}

/// Splits `γ = γ_{≤j} + γ_{>j}` into the head in `Γ_j` and the tail digits on levels `> j`.
pub fn split_at(g: &QZ, chain: &GeneratorChain, j: usize) -> Result<(QZ, DigitVector), QzError> {
    chain.check(j)?;
    let dv = decompose(g, chain)?;
    let head = DigitVector { start: 0, digits: dv.digits[..=j].to_vec() };
    let tail = DigitVector { start: j + 1, digits: dv.digits[j + 1..].to_vec() };
    Ok((recompose(&head, chain)?, tail))
}

/// Adds two digit runs over the same radices, least significant last.
///
/// Returns the carry out of the most significant place together with the sum
/// digits. Each place sees at most `2(k-1) + 1 < 2k`, so the carry is 0 or 1.
pub fn add_digits(ks: &[u64], a: &[u64], b: &[u64]) -> (u8, Vec<u64>) {
    let mut out = vec![0u64; ks.len()];
    let mut carry = 0u64;
    for i in (0..ks.len()).rev() {
        let s = a[i] as u128 + b[i] as u128 + carry as u128;
        let k = ks[i] as u128;
        if s >= k {
            out[i] = (s - k) as u64;
            carry = 1;
        } else {
            out[i] = s as u64;
            carry = 0;
        }
    }
    (carry as u8, out)
}

/// Product of two tails supported above level `j`, written as `γ_j^{c_j}` times a tail.
pub fn tail_product_with_carry(
    t1: &DigitVector,
    t2: &DigitVector,
    chain: &GeneratorChain,
    j: usize,
) -> Result<(u8, DigitVector), QzError> {
    chain.check(j)?;
    t1.validate(chain)?;
    t2.validate(chain)?;
    for t in [t1, t2] {
        if !t.is_zero() && t.digits.iter().enumerate().any(|(i, &a)| a != 0 && t.start + i <= j) {
            return Err(QzError::MalformedDigits(format!("tail has support at or below level {j}")));
        }
    }
    let lo = j + 1;
    let ks = &chain.ks[lo..];
    let a: Vec<u64> = (lo..chain.len()).map(|l| t1.at(l)).collect();
    let b: Vec<u64> = (lo..chain.len()).map(|l| t2.at(l)).collect();
    let (c, digits) = add_digits(ks, &a, &b);
    Ok((c, DigitVector { start: lo, digits }))
}
