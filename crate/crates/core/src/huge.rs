//! Positive numbers far outside `f64` range.
//!
//! A [`Tower`] is either an ordinary interval or `±exp^depth(x)` with
//! `x.lo > EXP_LIMIT`, so that every tower of depth `d ≥ 1` exceeds `f64::MAX`
//! and towers of different depth compare by depth alone. A [`Pos`] stores a
//! positive number through its logarithm, which keeps quantities such as
//! `exp(-10¹²)` meaningful.
//!
//! All operations are outward rounded; results that cannot be enclosed
//! without catastrophic cancellation return [`HugeError::Cancellation`].

use crate::interval::Interval;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// `ln(f64::MAX)` rounded down; `exp(x)` overflows for `x` above this.
pub const EXP_LIMIT: f64 = 709.78;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HugeError {
    #[error("adding towers of opposite sign cancels")]
    Cancellation,
    #[error("logarithm of a nonpositive quantity")]
    NonPositive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tower {
    Fin(Interval),
    Exp { depth: u32, x: Interval, neg: bool },
}

/// `exp^d(x)` as an interval, saturating at `[MAX, ∞]`.
fn iterate_exp(d: u32, x: Interval) -> Interval {
    (0..d).fold(x, |acc, _| acc.exp())
}

impl Tower {
    pub fn fin(x: impl Into<Interval>) -> Self {
        Tower::Fin(x.into())
    }

    /// `exp^depth(x)`, normalised.
    pub fn exp_n(depth: u32, x: Interval) -> Self {
        (0..depth).fold(Tower::Fin(x), |t, _| t.exp())
    }

    pub fn depth(&self) -> u32 {
        match self {
            Tower::Fin(_) => 0,
            Tower::Exp { depth, .. } => *depth,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Tower::Fin(x) => x.hi < 0.0,
            Tower::Exp { neg, .. } => *neg,
        }
    }

    /// Enclosure as an ordinary interval (`[MAX, ∞]` for positive towers).
    pub fn to_interval(&self) -> Interval {
        match self {
            Tower::Fin(x) => *x,
            Tower::Exp { neg: false, .. } => Interval::new(f64::MAX, f64::INFINITY),
            Tower::Exp { neg: true, .. } => Interval::new(f64::NEG_INFINITY, f64::MIN),
        }
    }

    /// The value as a float when it is representable.
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Tower::Fin(x) if x.lo.is_finite() && x.hi.is_finite() => Some(x.mid()),
            _ => None,
        }
    }

    pub fn neg(self) -> Self {
        match self {
            Tower::Fin(x) => Tower::Fin(-x),
            Tower::Exp { depth, x, neg } => Tower::Exp { depth, x, neg: !neg },
        }
    }

    pub fn exp(self) -> Self {
        match self {
            Tower::Fin(x) if x.lo > EXP_LIMIT => Tower::Exp { depth: 1, x, neg: false },
            Tower::Fin(x) => Tower::Fin(x.exp()),
            Tower::Exp { depth, x, neg: false } => Tower::Exp { depth: depth + 1, x, neg: false },
            // exp of a huge negative number: below the smallest subnormal
            Tower::Exp { neg: true, .. } => Tower::Fin(Interval::new(0.0, f64::from_bits(1))),
        }
    }

    pub fn ln(self) -> Result<Self, HugeError> {
        match self {
            Tower::Fin(x) if x.lo > 0.0 => Ok(Tower::Fin(x.ln())),
            Tower::Fin(_) => Err(HugeError::NonPositive),
            Tower::Exp { neg: true, .. } => Err(HugeError::NonPositive),
            Tower::Exp { depth: 1, x, .. } => Ok(Tower::Fin(x)),
            Tower::Exp { depth, x, .. } => Ok(Tower::Exp { depth: depth - 1, x, neg: false }),
        }
    }

    /// `self + b` for an ordinary interval `b`.
    pub fn add_fin(self, b: Interval) -> Self {
        match self {
            Tower::Fin(x) => Tower::Fin(x + b),
            Tower::Exp { depth, x, neg } => {
                let b = if neg { -b } else { b };
                Tower::Exp { depth, x: shift(depth, x, b), neg }
            }
        }
    }

    /// `self · c` for an interval `c > 0`.
    pub fn scale(self, c: Interval) -> Self {
        assert!(c.lo > 0.0, "scale factor must be positive");
        match self {
            Tower::Fin(x) => Tower::Fin(x * c),
            Tower::Exp { depth, x, neg } => Tower::Exp { depth, x: shift(depth - 1, x, c.ln()), neg },
        }
    }

    /// Sum of two towers. Same-sign huge terms are bounded by `max·[1, 2]`.
    pub fn add(self, o: Tower) -> Result<Self, HugeError> {
        match (self, o) {
            (Tower::Fin(a), Tower::Fin(b)) => Ok(Tower::Fin(a + b)),
            (Tower::Fin(a), t) | (t, Tower::Fin(a)) => Ok(t.add_fin(a)),
            (a, b) => {
                if a.is_negative() != b.is_negative() {
                    return Err(HugeError::Cancellation);
                }
                let big = match a.abs_cmp(&b) {
                    Some(Ordering::Less) => b,
                    Some(_) => a,
                    // undecided at equal height: the hull bounds the larger term
                    None => match (a, b) {
                        (Tower::Exp { depth, x, neg }, Tower::Exp { depth: d2, x: y, .. }) if depth == d2 => {
                            Tower::Exp { depth, x: x.hull(y), neg }
                        }
                        _ => return Err(HugeError::Cancellation),
                    },
                };
                let neg = big.is_negative();
                let mag = if neg { big.neg() } else { big };
                let s = mag.scale(Interval::new(1.0, 2.0));
                Ok(if neg { s.neg() } else { s })
            }
        }
    }

    fn abs_cmp(&self, o: &Tower) -> Option<Ordering> {
        let (a, b) = (self.abs(), o.abs());
        a.partial_cmp_pos(&b)
    }

    fn abs(self) -> Self {
        if self.is_negative() {
            self.neg()
        } else {
            self
        }
    }

    fn partial_cmp_pos(&self, o: &Tower) -> Option<Ordering> {
        match self.depth().cmp(&o.depth()) {
            Ordering::Equal => {
                let (x, y) = match (self, o) {
                    (Tower::Fin(x), Tower::Fin(y)) => (x, y),
                    (Tower::Exp { x, .. }, Tower::Exp { x: y, .. }) => (x, y),
                    _ => unreachable!(),
                };
                if x.hi < y.lo {
                    Some(Ordering::Less)
                } else if x.lo > y.hi {
                    Some(Ordering::Greater)
                } else {
                    None
                }
            }
            ord => {
                // the shallower one must be a finite-valued interval below MAX
                let shallow = if ord == Ordering::Less { self } else { o };
                match shallow {
                    Tower::Fin(x) if x.hi.is_finite() => Some(ord),
                    Tower::Fin(_) => None,
                    Tower::Exp { x, .. } => {
                        // exp^(d+1)(x') > exp^d(y) needs exp(x') > y
                        let deep = if ord == Ordering::Less { o } else { self };
                        let Tower::Exp { x: xd, .. } = deep else { unreachable!() };
                        let gap = deep.depth() - shallow.depth();
                        (iterate_exp(gap, *xd).lo > x.hi).then_some(ord)
                    }
                }
            }
        }
    }

    /// Ordering when it can be decided rigorously.
    pub fn compare(&self, o: &Tower) -> Option<Ordering> {
        match (self.is_negative(), o.is_negative()) {
            (false, true) => Some(Ordering::Greater),
            (true, false) => Some(Ordering::Less),
            (false, false) => self.partial_cmp_pos(o),
            (true, true) => o.abs().partial_cmp_pos(&self.abs()),
        }
    }

    /// Representative midpoint of the innermost argument, for display.
    fn core_mid(&self) -> f64 {
        match self {
            Tower::Fin(x) | Tower::Exp { x, .. } => x.mid(),
        }
    }
}

/// Inner argument `x'` with `exp^d(x') = exp^d(x) + b`.
fn shift(d: u32, x: Interval, b: Interval) -> Interval {
    if d == 0 {
        return x + b;
    }
    // exp^d(x) + b = exp(exp^{d-1}(x) + ln(1 + b / exp^d(x)))
    let inv = (-iterate_exp(d - 1, x)).exp();
    let ratio = b * inv;
    let lo = ratio.lo.max(-0.5);
    let inner = Interval::new(lo, ratio.hi.max(lo)).ln_1p();
    shift(d - 1, x, inner)
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tower::Fin(x) => write!(f, "{:.6e}", x.mid()),
            Tower::Exp { depth, neg, .. } => {
                let sign = if *neg { "-" } else { "" };
                if *depth == 1 {
                    write!(f, "{sign}exp({:.6e})", self.core_mid())
                } else {
                    write!(f, "{sign}exp^{depth}({:.6e})", self.core_mid())
                }
            }
        }
    }
}

impl Serialize for Tower {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Tower", 3)?;
        let (depth, x, neg) = match self {
            Tower::Fin(x) => (0, x, false),
            Tower::Exp { depth, x, neg } => (*depth, x, *neg),
        };
        st.serialize_field("depth", &depth)?;
        st.serialize_field("x", &[x.lo, x.hi])?;
        st.serialize_field("neg", &neg)?;
        st.end()
    }
}

/// A positive number `exp(ln)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pos {
    pub ln: Tower,
}

impl Pos {
    pub fn from_f64(v: f64) -> Self {
        assert!(v > 0.0, "Pos needs a positive value");
        Pos { ln: Tower::Fin(Interval::point(v).ln()) }
    }

    pub fn from_interval(v: Interval) -> Self {
        assert!(v.lo > 0.0, "Pos needs a positive value");
        Pos { ln: Tower::Fin(v.ln()) }
    }

    pub fn from_ln(ln: Tower) -> Self {
        Pos { ln }
    }

    pub fn from_ln_interval(ln: Interval) -> Self {
        Pos { ln: Tower::Fin(ln) }
    }

    /// Enclosure of the value; saturates to `[MAX, ∞]` or `[0, tiny]`.
    pub fn value(&self) -> Interval {
        self.ln.exp().to_interval()
    }

    /// The value as a float when it is neither overflowing nor underflowing.
    pub fn to_f64(&self) -> Option<f64> {
        match self.ln {
            Tower::Fin(x) if x.hi < EXP_LIMIT && x.lo > -708.0 => Some(x.mid().exp()),
            _ => None,
        }
    }

    /// `ln` as an interval when finite.
    /// True when `ln` is an ordinary interval (no tower).
    pub fn is_finite(&self) -> bool {
        matches!(self.ln, Tower::Fin(_))
    }

    pub fn ln_interval(&self) -> Option<Interval> {
        match self.ln {
            Tower::Fin(x) => Some(x),
            _ => None,
        }
    }

    pub fn mul(&self, o: &Pos) -> Result<Pos, HugeError> {
        Ok(Pos { ln: self.ln.add(o.ln)? })
    }

    pub fn div(&self, o: &Pos) -> Result<Pos, HugeError> {
        Ok(Pos { ln: self.ln.add(o.ln.neg())? })
    }

    pub fn scale(&self, c: Interval) -> Pos {
        Pos { ln: self.ln.add_fin(c.ln()) }
    }

    pub fn powf(&self, p: f64) -> Pos {
        assert!(p > 0.0);
        Pos { ln: self.ln.scale(Interval::point(p)) }
    }

    pub fn compare(&self, o: &Pos) -> Option<Ordering> {
        self.ln.compare(&o.ln)
    }

    /// Human-readable form such as `exp^3(3.1e4)`.
    pub fn text(&self) -> String {
        match self.to_f64() {
            Some(v) => format!("{v:.6e}"),
            None => match self.ln {
                Tower::Fin(x) => format!("exp({:.6e})", x.mid()),
                Tower::Exp { depth, x, neg: false } => format!("exp^{}({:.6e})", depth + 1, x.mid()),
                Tower::Exp { depth, x, neg: true } => format!("exp(-exp^{}({:.6e}))", depth, x.mid()),
            },
        }
    }
}

impl Serialize for Pos {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Pos", 3)?;
        st.serialize_field("value", &self.to_f64())?;
        st.serialize_field("ln", &self.ln)?;
        st.serialize_field("text", &self.text())?;
        st.end()
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_numbers_stay_finite() {
        let t = Tower::fin(3.0).exp();
        assert!(t.to_interval().contains(3f64.exp()));
        assert!(t.ln().unwrap().to_interval().contains(3.0));
    }

    #[test]
    fn triple_exponential() {
        let t = Tower::exp_n(3, Interval::point(3.1e4));
        assert_eq!(t.depth(), 3);
        let l = t.ln().unwrap();
        assert_eq!(l.depth(), 2);
        assert_eq!(t.to_string(), "exp^3(3.100000e4)");
        assert!(t.compare(&l) == Some(Ordering::Greater));
    }

    #[test]
    fn adding_small_terms_barely_moves_the_core() {
        let l = Tower::exp_n(2, Interval::point(3.1e4));
        let s = l.add_fin(Interval::point(1e12));
        match s {
            Tower::Exp { depth: 2, x, .. } => assert!(x.contains(3.1e4) && x.width() < 1e-10),
            _ => panic!(),
        }
    }

    #[test]
    fn moderate_shift_is_exact_enough() {
        // exp(1000) + exp(999) = exp(1000 + ln(1 + 1/e))
        let t2 = Tower::fin(1000.0).exp().scale(Interval::point(1.0 + (-1f64).exp()));
        let want = 1000.0 + (1.0 + (-1f64).exp()).ln();
        match t2 {
            Tower::Exp { x, .. } => assert!(x.contains(want) && x.width() < 1e-9),
            _ => panic!(),
        }
    }

    #[test]
    fn scaling_tower() {
        let l = Tower::exp_n(2, Interval::point(800.0));
        let half = l.scale(Interval::point(0.5));
        assert_eq!(half.depth(), 2);
        assert_ne!(half.compare(&l), Some(Ordering::Greater));
    }

    #[test]
    fn cancellation_is_an_error() {
        let a = Tower::exp_n(2, Interval::point(800.0));
        assert_eq!(a.add(a.neg()), Err(HugeError::Cancellation));
    }

    #[test]
    fn doubling_an_undecided_pair() {
        let a = Tower::exp_n(2, Interval::new(800.0, 800.5));
        let b = Tower::exp_n(2, Interval::new(800.25, 801.0));
        let s = a.add(b).unwrap();
        assert_eq!(s.depth(), 2);
        // the sum is at least the larger term and at most twice it
        assert_ne!(s.compare(&b), Some(Ordering::Less));
        assert_ne!(s.compare(&b.scale(Interval::point(2.0))), Some(Ordering::Greater));
    }

    #[test]
    fn pos_roundtrip() {
        let p = Pos::from_f64(0.01);
        assert!((p.to_f64().unwrap() - 0.01).abs() < 1e-16);
        let tiny = Pos::from_ln_interval(Interval::point(-1.9e12));
        assert_eq!(tiny.to_f64(), None);
        assert_eq!(tiny.value().lo, 0.0);
        assert!(tiny.text().starts_with("exp(-1.9"));
        let v = serde_json::to_value(tiny).unwrap();
        assert!(v["value"].is_null());
    }
}
