//! Quaternions on S³, the weighted Hopf circle actions on S³×S³, and the
//! equivariant diffeomorphisms built from them.
//!
//! A quaternion is stored as the complex pair `(u1, u2)` meaning `u1 + u2·j`,
//! so that left multiplication by `e^{iθ}` is the Hopf rotation
//! `(u1, u2) ↦ (e^{iθ}u1, e^{iθ}u2)`.

use crate::qz::QZ;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn cis(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Complex { re: c, im: s }
    }

    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, s: f64) -> Self {
        Complex { re: self.re * s, im: self.im * s }
    }

    pub fn powu(self, k: u32) -> Self {
        let mut acc = Complex::ONE;
        let mut base = self;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex { re: -self.re, im: -self.im }
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// A unit quaternion `u1 + u2·j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitQuaternion {
    pub u1: Complex,
    pub u2: Complex,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { u1: Complex::ONE, u2: Complex::ZERO };

    /// Normalises the complex pair onto S³.
    pub fn new(u1: Complex, u2: Complex) -> Self {
        let n = (u1.norm_sqr() + u2.norm_sqr()).sqrt();
        assert!(n > 0.0, "zero quaternion");
        UnitQuaternion { u1: u1.scale(1.0 / n), u2: u2.scale(1.0 / n) }
    }

    pub fn identity() -> Self {
        UnitQuaternion { u1: Complex::new(1.0, 0.0), u2: Complex::new(0.0, 0.0) }
    }

    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(Complex::new(w, x), Complex::new(y, z))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.u1.re, self.u1.im, self.u2.re, self.u2.im]
    }

    pub fn norm(&self) -> f64 {
        (self.u1.norm_sqr() + self.u2.norm_sqr()).sqrt()
    }

    fn renormalized(self) -> Self {
        let n = self.norm();
        UnitQuaternion { u1: self.u1.scale(1.0 / n), u2: self.u2.scale(1.0 / n) }
    }

    /// The inverse, which on S³ is the conjugate `ū1 - u2·j`.
    pub fn inverse(&self) -> Self {
        UnitQuaternion { u1: self.u1.conj(), u2: -self.u2 }
    }

    /// Product in the complex-pair form `(a,b)(c,d) = (ac - b d̄, ad + b c̄)`.
    pub fn mul(&self, o: &UnitQuaternion) -> Self {
        UnitQuaternion {
            u1: self.u1 * o.u1 - self.u2 * o.u2.conj(),
            u2: self.u1 * o.u2 + self.u2 * o.u1.conj(),
        }
        .renormalized()
    }

    /// Hamilton product on `(w, x, y, z)`; kept separate so the two forms can be compared.
    pub fn mul_hamilton(&self, o: &UnitQuaternion) -> Self {
        let [a1, b1, c1, d1] = self.wxyz();
        let [a2, b2, c2, d2] = o.wxyz();
        UnitQuaternion::from_wxyz(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }

    /// Euclidean distance in R⁴.
    pub fn dist(&self, o: &UnitQuaternion) -> f64 {
        ((self.u1 - o.u1).norm_sqr() + (self.u2 - o.u2).norm_sqr()).sqrt()
    }

    /// Uniformly distributed point of S³.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 > 1e-4 && n2 <= 1.0 {
                return Self::from_wxyz(v[0], v[1], v[2], v[3]);
            }
        }
    }
}

/// Left Hopf rotation by the unit complex number `e^{iθ}`.
pub fn hopf_act(theta: f64, p: &UnitQuaternion) -> UnitQuaternion {
    let c = Complex::cis(theta);
    UnitQuaternion { u1: c * p.u1, u2: c * p.u2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct S3Pair {
    pub first: UnitQuaternion,
    pub second: UnitQuaternion,
}

impl S3Pair {
    pub fn new(first: UnitQuaternion, second: UnitQuaternion) -> Self {
        S3Pair { first, second }
    }

    pub fn dist(&self, o: &S3Pair) -> f64 {
        self.first.dist(&o.first).max(self.second.dist(&o.second))
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        S3Pair { first: UnitQuaternion::random(rng), second: UnitQuaternion::random(rng) }
    }
}

/// Speeds `(a, b)` of the circle action on the two sphere factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ActionWeights {
    pub a: i64,
    pub b: i64,
}

impl ActionWeights {
    pub fn new(a: i64, b: i64) -> Self {
        ActionWeights { a, b }
    }
}

/// `θ·(g1, g2) = (aθ·g1, bθ·g2)`.
pub fn act_ab(theta: f64, p: &S3Pair, w: ActionWeights) -> S3Pair {
    S3Pair { first: hopf_act(w.a as f64 * theta, &p.first), second: hopf_act(w.b as f64 * theta, &p.second) }
}

/// Acts by a Q/Z element. The weighted angle is reduced mod 1 exactly before
/// conversion, so `γ^{k}` and `γ'` with equal classes give identical floats.
pub fn act_qz(g: &QZ, p: &S3Pair, w: ActionWeights) -> S3Pair {
    let speed = |s: i64| -> f64 {
        let m = g.times(s.unsigned_abs());
        let m = if s < 0 { m.neg() } else { m };
        m.angle()
    };
    S3Pair { first: hopf_act(speed(w.a), &p.first), second: hopf_act(speed(w.b), &p.second) }
}

/// `(s1, s2) ↦ (s1, s1⁻¹ s2)`, intertwining the (1,1)- and (1,0)-actions.
pub fn phi_1(p: &S3Pair) -> S3Pair {
    S3Pair { first: p.first, second: p.first.inverse().mul(&p.second) }
}

/// The unit quaternion `(ū1^k, -u2^k) / √(|u1|^{2k} + |u2|^{2k})`.
pub fn phi_k_factor(k: u32, u: &UnitQuaternion) -> UnitQuaternion {
    let a = u.u1.conj().powu(k);
    let b = -u.u2.powu(k);
    let n = (u.u1.norm_sqr().powi(k as i32) + u.u2.norm_sqr().powi(k as i32)).sqrt();
    UnitQuaternion { u1: a.scale(1.0 / n), u2: b.scale(1.0 / n) }.renormalized()
}

/// `(u, z) ↦ (u, P_k(u)·z)`, intertwining the (1,k)- and (1,0)-actions.
pub fn phi_k(k: u32, p: &S3Pair) -> S3Pair {
    assert!(k >= 1, "phi_k needs k >= 1");
    S3Pair { first: p.first, second: phi_k_factor(k, &p.first).mul(&p.second) }
}

pub fn phi_k_inverse(k: u32, p: &S3Pair) -> S3Pair {
    assert!(k >= 1, "phi_k needs k >= 1");
    S3Pair { first: p.first, second: phi_k_factor(k, &p.first).inverse().mul(&p.second) }
}

/// Right translation of the second factor, `(u, z) ↦ (u, z·g)`.
pub fn right_translate(p: &S3Pair, g: &UnitQuaternion) -> S3Pair {
    S3Pair { first: p.first, second: p.second.mul(g) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Generator {
    /// `(g1, g2) ↦ (g1, g1 g2)`
    P1,
    /// `(g1, g2) ↦ (g1 g2⁻¹, g2)`
    P2,
    /// `(g1, g2) ↦ (g1, g2 g1⁻¹)`
    P3,
    /// `(g1, g2) ↦ (g2 g1, g2)`
    P4,
    /// `(g1, g2) ↦ (g2 g1 g2⁻¹, g2)`
    K1,
    /// `(g1, g2) ↦ (g1, g1 g2 g1⁻¹)`
    K2,
    /// The twisting map [`phi_k`].
    Phi(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Letter {
    pub gen: Generator,
    pub inverse: bool,
}

impl Letter {
    pub fn apply(&self, p: &S3Pair) -> S3Pair {
        let (g1, g2) = (p.first, p.second);
        let inv = self.inverse;
        let pair = |a, b| S3Pair::new(a, b);
        match (self.gen, inv) {
            (Generator::P1, false) => pair(g1, g1.mul(&g2)),
            (Generator::P1, true) => pair(g1, g1.inverse().mul(&g2)),
            (Generator::P2, false) => pair(g1.mul(&g2.inverse()), g2),
            (Generator::P2, true) => pair(g1.mul(&g2), g2),
            (Generator::P3, false) => pair(g1, g2.mul(&g1.inverse())),
            (Generator::P3, true) => pair(g1, g2.mul(&g1)),
            (Generator::P4, false) => pair(g2.mul(&g1), g2),
            (Generator::P4, true) => pair(g2.inverse().mul(&g1), g2),
            (Generator::K1, false) => pair(g2.mul(&g1).mul(&g2.inverse()), g2),
            (Generator::K1, true) => pair(g2.inverse().mul(&g1).mul(&g2), g2),
            (Generator::K2, false) => pair(g1, g1.mul(&g2).mul(&g1.inverse())),
            (Generator::K2, true) => pair(g1, g1.inverse().mul(&g2).mul(&g1)),
            (Generator::Phi(k), false) => phi_k(k, p),
            (Generator::Phi(k), true) => phi_k_inverse(k, p),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gen {
            Generator::P1 => write!(f, "p1"),
            Generator::P2 => write!(f, "p2"),
            Generator::P3 => write!(f, "p3"),
            Generator::P4 => write!(f, "p4"),
            Generator::K1 => write!(f, "K1"),
            Generator::K2 => write!(f, "K2"),
            Generator::Phi(k) => write!(f, "f{k}"),
        }?;
        if self.inverse {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

/// A composite of generator letters, applied left to right.
///
/// Grammar: letters `p1 p2 p3 p4 K1 K2 f<k>` joined by `.`, each optionally
/// followed by `^-1`. Example: `p1.p3.K1^-1` applies `p1`, then `p3`, then the
/// inverse of `K1`. The empty string is the identity word.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct DiffeoWord {
    pub letters: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse word letter {0:?}")]
pub struct WordParseError(pub String);

impl FromStr for DiffeoWord {
    type Err = WordParseError;
    fn from_str(s: &str) -> Result<Self, WordParseError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(DiffeoWord::default());
        }
        let letters = s
            .split('.')
            .map(|tok| {
                let tok = tok.trim();
                let (base, inverse) = match tok.strip_suffix("^-1") {
                    Some(b) => (b, true),
                    None => (tok, false),
                };
                let gen = match base {
                    "p1" => Generator::P1,
                    "p2" => Generator::P2,
                    "p3" => Generator::P3,
                    "p4" => Generator::P4,
                    "K1" => Generator::K1,
                    "K2" => Generator::K2,
                    _ => match base.strip_prefix('f').and_then(|k| k.parse::<u32>().ok()) {
                        Some(k) if k >= 1 => Generator::Phi(k),
                        _ => return Err(WordParseError(tok.to_string())),
                    },
                };
                Ok(Letter { gen, inverse })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DiffeoWord { letters })
    }
}

impl fmt::Display for DiffeoWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl DiffeoWord {
    pub fn single(gen: Generator) -> Self {
        DiffeoWord { letters: vec![Letter { gen, inverse: false }] }
    }

    pub fn apply(&self, p: &S3Pair) -> S3Pair {
        self.letters.iter().fold(*p, |acc, l| l.apply(&acc))
    }

    /// Reversed word with every letter inverted.
    pub fn inverse(&self) -> Self {
        DiffeoWord {
            letters: self.letters.iter().rev().map(|l| Letter { gen: l.gen, inverse: !l.inverse }).collect(),
        }
    }

    pub fn then(&self, other: &DiffeoWord) -> Self {
        DiffeoWord { letters: self.letters.iter().chain(&other.letters).copied().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("gluing index {a} out of range 0..{k}")]
pub struct GlueIndexError {
    pub a: u64,
    pub k: u64,
}

/// `φ_a = γ_j^a · φ`: apply `φ`, then act by `a·γ_j` with weights `w`.
pub fn glue_map(gamma_j: &QZ, k_j: u64, a: u64, w: ActionWeights, phi: &DiffeoWord, p: &S3Pair) -> Result<S3Pair, GlueIndexError> {
    if a >= k_j {
        return Err(GlueIndexError { a, k: k_j });
    }
    Ok(glue_map_any(gamma_j, a, w, phi, p))
}

/// [`glue_map`] without the range check, used for the wrap-around relation
/// `φ_{a + k_j} = γ_{j-1} · φ_a`.
pub fn glue_map_any(gamma_j: &QZ, a: u64, w: ActionWeights, phi: &DiffeoWord, p: &S3Pair) -> S3Pair {
    act_qz(&gamma_j.times(a), &phi.apply(p), w)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointWitness {
    pub order: u64,
    pub m: u64,
    pub point: S3Pair,
    pub displacement: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreenessReport {
    pub weights: ActionWeights,
    pub orders: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    /// No sampled point was fixed by any nonidentity element.
    pub free_on_samples: bool,
    /// Exact criterion: `m/n` fixes a point iff `n | a·m` and `n | b·m`.
    pub free_exact: bool,
    pub min_displacement: f64,
    pub witness: Option<FixedPointWitness>,
}

/// Displacement below this counts as a fixed point.
const FIXED_TOL: f64 = 1e-9;

/// Tests every nonidentity element `m/n` of the cyclic groups of the given
/// orders for fixed points among random samples.
pub fn freeness_check(w: ActionWeights, samples: usize, orders: &[u64], seed: u64) -> FreenessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<S3Pair> = (0..samples).map(|_| S3Pair::random(&mut rng)).collect();
    let mut witness = None;
    let mut min_disp = f64::INFINITY;
    let mut free_exact = true;
    for &n in orders {
        for m in 1..n {
            let g = QZ::new(m, n).unwrap();
            let fixes = |s: i64| (s.unsigned_abs() as u128 * m as u128) % n as u128 == 0;
            if fixes(w.a) && fixes(w.b) {
                free_exact = false;
            }
            for p in &points {
                let d = act_qz(&g, p, w).dist(p);
                min_disp = min_disp.min(d);
                if d < FIXED_TOL && witness.is_none() {
                    witness = Some(FixedPointWitness { order: n, m, point: *p, displacement: d });
                }
            }
        }
    }
    FreenessReport {
        weights: w,
        orders: orders.to_vec(),
        samples,
        seed,
        free_on_samples: witness.is_none(),
        free_exact,
        min_displacement: min_disp,
        witness,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub k: u32,
    pub samples: usize,
    pub seed: u64,
    pub left_residual: f64,
    pub right_residual: f64,
    pub inverse_residual: f64,
    pub phi1_formula_residual: f64,
}

/// Samples the left (1,k)→(1,0) and right S³ equivariance of [`phi_k`].
pub fn equivariance_residuals(k: u32, samples: usize, seed: u64) -> EquivarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = EquivarianceReport {
        k,
        samples,
        seed,
        left_residual: 0.0,
        right_residual: 0.0,
        inverse_residual: 0.0,
        phi1_formula_residual: 0.0,
    };
    let wk = ActionWeights::new(1, k as i64);
    let w0 = ActionWeights::new(1, 0);
    for _ in 0..samples {
        let p = S3Pair::random(&mut rng);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let g = UnitQuaternion::random(&mut rng);
        let lhs = phi_k(k, &act_ab(theta, &p, wk));
        let rhs = act_ab(theta, &phi_k(k, &p), w0);
        rep.left_residual = rep.left_residual.max(lhs.dist(&rhs));
        let lhs = phi_k(k, &right_translate(&p, &g));
        let rhs = right_translate(&phi_k(k, &p), &g);
        rep.right_residual = rep.right_residual.max(lhs.dist(&rhs));
        rep.inverse_residual = rep.inverse_residual.max(phi_k_inverse(k, &phi_k(k, &p)).dist(&p));
        if k == 1 {
            rep.phi1_formula_residual = rep.phi1_formula_residual.max(phi_k(1, &p).dist(&phi_1(&p)));
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn hopf_half_turn_negates() {
        let p = UnitQuaternion::IDENTITY;
        let q = hopf_act(PI, &p);
        assert!(q.dist(&UnitQuaternion::from_wxyz(-1.0, 0.0, 0.0, 0.0)) < 1e-15);
        assert_eq!(hopf_act(0.0, &p), p);
    }

    #[test]
    fn phi1_examples() {
        let mut r = rng();
        let q = UnitQuaternion::random(&mut r);
        let e = UnitQuaternion::IDENTITY;
        assert!(phi_1(&S3Pair::new(e, q)).dist(&S3Pair::new(e, q)) < 1e-15);
        assert!(phi_1(&S3Pair::new(q, q)).dist(&S3Pair::new(q, e)) < 1e-15);
        assert!(phi_k(1, &S3Pair::new(e, q)).dist(&S3Pair::new(e, q)) < 1e-15);
    }

    #[test]
    fn weights_examples() {
        let mut r = rng();
        let p = S3Pair::random(&mut r);
        let q = act_ab(1.3, &p, ActionWeights::new(1, 0));
        assert_eq!(q.second, p.second);
        assert_eq!(act_ab(0.7, &p, ActionWeights::new(0, 0)), p);
        let k = 5;
        let q = act_ab(2.0 * PI / k as f64, &p, ActionWeights::new(1, k));
        assert!(q.second.dist(&p.second) < 1e-14);
        assert!(q.first.dist(&hopf_act(2.0 * PI / k as f64, &p.first)) < 1e-15);
    }

    #[test]
    fn word_parse_roundtrip() {
        let w: DiffeoWord = "p1.p3.K1^-1.f3".parse().unwrap();
        assert_eq!(w.to_string(), "p1.p3.K1^-1.f3");
        assert!("p5".parse::<DiffeoWord>().is_err());
        assert!("f0".parse::<DiffeoWord>().is_err());
    }

    #[test]
    fn p1_inverse_is_phi1() {
        let mut r = rng();
        let p = S3Pair::random(&mut r);
        let w: DiffeoWord = "p1^-1".parse().unwrap();
        assert!(w.apply(&p).dist(&phi_1(&p)) < 1e-15);
    }

    #[test]
    fn freeness_examples() {
        let rep = freeness_check(ActionWeights::new(1, 0), 50, &[2], 1);
        assert!(rep.free_on_samples && rep.free_exact);
        let rep = freeness_check(ActionWeights::new(0, 2), 5, &[2], 1);
        assert!(!rep.free_on_samples && !rep.free_exact);
        assert!(rep.witness.is_some());
    }
}
