//! Closed real intervals with outward rounding.
//!
//! Field operations (`+ - * /`, `sqrt`) are rounded exactly to the enclosing
//! floats using error-free transforms, so every result contains the true image.
//! Transcendental functions go through the platform `libm`, which is not
//! correctly rounded; those results are widened by [`TRANSCENDENTAL_ULPS`].
//!
//! Infinite endpoints stand for unbounded finite values: `0 * inf = 0`, and a
//! lower bound that overflows saturates at `f64::MAX` instead of jumping to
//! infinity.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Outward widening applied to `exp`, `ln`, `sin`, `cos` and `powf`.
pub const TRANSCENDENTAL_ULPS: u32 = 4;

/// Results whose magnitude falls below this are treated as inexact in both
/// directions, since the `fma` residual is no longer exact there.
const TINY: f64 = 1e-290;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_down();
    }
    x
}

fn up_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = x.next_up();
    }
    x
}

fn sat_down(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::MAX
    } else {
        x
    }
}

/// `a + b` rounded toward negative infinity.
pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if a.is_finite() && b.is_finite() { sat_down(s) } else { s };
    }
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    if err < 0.0 {
        s.next_down()
    } else {
        s
    }
}

/// `a + b` rounded toward positive infinity.
pub fn add_up(a: f64, b: f64) -> f64 {
    -add_down(-a, -b)
}

/// `a * b` rounded toward negative infinity, with `0 * inf = 0`.
pub fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return if a.is_finite() && b.is_finite() { sat_down(p) } else { p };
    }
    if p.abs() < TINY {
        return p.next_down();
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

/// `a * b` rounded toward positive infinity, with `0 * inf = 0`.
pub fn mul_up(a: f64, b: f64) -> f64 {
    -mul_down(-a, b)
}

/// `a / b` rounded toward negative infinity; `b` must be nonzero.
pub fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() {
        return if a.is_finite() && b.is_finite() { sat_down(q) } else { q };
    }
    if b.is_infinite() {
        return if (a > 0.0) == (b > 0.0) { 0.0 } else { -f64::from_bits(1) };
    }
    if q.abs() < TINY {
        return q.next_down();
    }
    // a = q*b + r exactly; the true quotient is q + r/b
    let r = (-q).mul_add(b, a);
    if (r < 0.0) != (b < 0.0) && r != 0.0 {
        q.next_down()
    } else {
        q
    }
}

/// `a / b` rounded toward positive infinity; `b` must be nonzero.
pub fn div_up(a: f64, b: f64) -> f64 {
    -div_down(-a, b)
}

fn sqrt_down(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let s = a.sqrt();
    if !s.is_finite() || s < TINY {
        return if s.is_finite() { s.next_down().max(0.0) } else { s };
    }
    if (-s).mul_add(s, a) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn sqrt_up(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let s = a.sqrt();
    if !s.is_finite() || s < TINY {
        return if s.is_finite() { s.next_up() } else { s };
    }
    if (-s).mul_add(s, a) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            self.lo + 0.5 * (self.hi - self.lo)
        } else if self.lo.is_finite() {
            f64::MAX
        } else if self.hi.is_finite() {
            f64::MIN
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval { lo: 0.0, hi: (-self.lo).max(self.hi) }
        }
    }

    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval { lo: mul_down(a.lo, a.lo), hi: mul_up(a.hi, a.hi) }
    }

    pub fn sqrt(self) -> Interval {
        assert!(self.hi >= 0.0, "sqrt of negative interval");
        Interval { lo: sqrt_down(self.lo.max(0.0)), hi: sqrt_up(self.hi) }
    }

    pub fn recip(self) -> Interval {
        if self.lo > 0.0 || self.hi < 0.0 {
            Interval { lo: div_down(1.0, self.hi), hi: div_up(1.0, self.lo) }
        } else if self.lo == 0.0 && self.hi > 0.0 {
            Interval { lo: div_down(1.0, self.hi), hi: f64::INFINITY }
        } else if self.hi == 0.0 && self.lo < 0.0 {
            Interval { lo: f64::NEG_INFINITY, hi: div_up(1.0, self.lo) }
        } else {
            Interval::ENTIRE
        }
    }

    pub fn powi(self, n: u32) -> Interval {
        match n {
            0 => Interval::ONE,
            1 => self,
            _ if n % 2 == 0 => self.powi(n / 2).sqr(),
            _ => self * self.powi(n - 1),
        }
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == f64::NEG_INFINITY { 0.0 } else { sat_down(down_n(self.lo.exp(), TRANSCENDENTAL_ULPS)).max(0.0) };
        let hi = if self.hi == f64::INFINITY { f64::INFINITY } else { up_n(self.hi.exp(), TRANSCENDENTAL_ULPS) };
        Interval { lo, hi }
    }

    /// Natural log; the interval must be nonnegative (`ln 0 = -inf`).
    pub fn ln(self) -> Interval {
        assert!(self.lo >= 0.0, "ln of interval with negative part [{}, {}]", self.lo, self.hi);
        let lo = if self.lo == 0.0 {
            f64::NEG_INFINITY
        } else if self.lo == f64::INFINITY {
            f64::MAX
        } else {
            down_n(self.lo.ln(), TRANSCENDENTAL_ULPS)
        };
        let hi = if self.hi == f64::INFINITY {
            f64::INFINITY
        } else if self.hi == 0.0 {
            f64::MIN
        } else {
            up_n(self.hi.ln(), TRANSCENDENTAL_ULPS)
        };
        Interval { lo, hi }
    }

    /// `ln(1 + x)`, accurate for tiny `x`; requires `x > -1`.
    pub fn ln_1p(self) -> Interval {
        assert!(self.lo > -1.0, "ln_1p below -1");
        let f = |x: f64| if x == f64::INFINITY { f64::INFINITY } else { x.ln_1p() };
        let lo = f(self.lo);
        let hi = f(self.hi);
        let lo = if lo == 0.0 && self.lo == 0.0 { 0.0 } else { sat_down(down_n(lo, TRANSCENDENTAL_ULPS)) };
        let hi = if hi == 0.0 && self.hi == 0.0 { 0.0 } else if hi.is_infinite() { hi } else { up_n(hi, TRANSCENDENTAL_ULPS) };
        Interval { lo, hi }
    }

    /// `x^p` for a nonnegative interval and real exponent.
    pub fn powf(self, p: f64) -> Interval {
        assert!(self.lo >= 0.0, "powf of negative interval");
        if p == 0.0 {
            return Interval::ONE;
        }
        let f = |x: f64| x.powf(p);
        let (a, b) = if p > 0.0 { (f(self.lo), f(self.hi)) } else { (f(self.hi), f(self.lo)) };
        let lo = if a == 0.0 { 0.0 } else { sat_down(down_n(a, TRANSCENDENTAL_ULPS)).max(0.0) };
        let hi = if b.is_infinite() { b } else { up_n(b, TRANSCENDENTAL_ULPS) };
        Interval { lo, hi }
    }

    pub fn sin(self) -> Interval {
        self.trig(f64::sin, std::f64::consts::FRAC_PI_2)
    }

    pub fn cos(self) -> Interval {
        self.trig(f64::cos, 0.0)
    }

    // `peak` is the phase where the function attains +1; -1 sits half a period later.
    fn trig(self, f: fn(f64) -> f64, peak: f64) -> Interval {
        use std::f64::consts::{PI, TAU};
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.width() >= TAU || self.lo.abs().max(self.hi.abs()) > 1e9 {
            return Interval::new(-1.0, 1.0);
        }
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        let hits = |phase: f64| {
            let n0 = ((self.lo - slack - phase) / TAU).ceil();
            let c = phase + n0 * TAU;
            c <= self.hi + slack
        };
        let a = f(self.lo);
        let b = f(self.hi);
        let mut lo = down_n(a.min(b), TRANSCENDENTAL_ULPS);
        let mut hi = up_n(a.max(b), TRANSCENDENTAL_ULPS);
        // libm error on small results is relative; add an absolute floor
        lo -= 1e-300;
        hi += 1e-300;
        if hits(peak) {
            hi = 1.0;
        }
        if hits(peak + PI) {
            lo = -1.0;
        }
        Interval { lo: lo.max(-1.0), hi: hi.min(1.0) }
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Split at `x`, which must lie strictly inside.
    pub fn split_at(&self, x: f64) -> (Interval, Interval) {
        (Interval::new(self.lo, x), Interval::new(x, self.hi))
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        self + (-o)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b) in c {
            lo = lo.min(mul_down(a, b));
            hi = hi.max(mul_up(a, b));
        }
        Interval { lo, hi }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        if o.lo > 0.0 || o.hi < 0.0 {
            let c = [(self.lo, o.lo), (self.lo, o.hi), (self.hi, o.lo), (self.hi, o.hi)];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (a, b) in c {
                if a.is_infinite() && b.is_infinite() {
                    // inf/inf: the ratio of unbounded values is unbounded in sign of a*b
                    if (a > 0.0) == (b > 0.0) {
                        lo = lo.min(0.0);
                        hi = f64::INFINITY;
                    } else {
                        lo = f64::NEG_INFINITY;
                        hi = hi.max(0.0);
                    }
                    continue;
                }
                lo = lo.min(div_down(a, b));
                hi = hi.max(div_up(a, b));
            }
            Interval { lo, hi }
        } else {
            self * o.recip()
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Interval {
            type Output = Interval;
            fn $m(self, o: f64) -> Interval { $tr::$m(self, Interval::point(o)) }
        }
        impl $tr<Interval> for f64 {
            type Output = Interval;
            fn $m(self, o: Interval) -> Interval { $tr::$m(Interval::point(self), o) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn third_is_bracketed() {
        let t = Interval::ONE / 3.0;
        assert!(t.lo < t.hi);
        assert_eq!(t.hi, t.lo.next_up());
    }

    #[test]
    fn exact_ops_stay_thin() {
        let x = Interval::point(1.5) + Interval::point(2.25);
        assert_eq!(x, Interval::point(3.75));
        assert_eq!(Interval::point(3.0) * 4.0, Interval::point(12.0));
        assert_eq!(Interval::point(4.0).sqrt(), Interval::point(2.0));
    }

    #[test]
    fn zero_times_unbounded_is_zero() {
        let z = Interval::new(0.0, 0.0) * Interval::new(1.0, f64::INFINITY);
        assert_eq!(z, Interval::ZERO);
    }

    #[test]
    fn recip_of_half_open() {
        let r = Interval::new(0.0, 2.0).recip();
        assert_eq!(r.lo, 0.5);
        assert_eq!(r.hi, f64::INFINITY);
        let r = Interval::new(4.0, f64::INFINITY).recip();
        assert_eq!(r.lo, 0.0);
        assert_eq!(r.hi, 0.25);
    }

    #[test]
    fn overflow_saturates_lower_bound() {
        let big = Interval::point(f64::MAX) * 2.0;
        assert_eq!(big.lo, f64::MAX);
        assert_eq!(big.hi, f64::INFINITY);
        let e = Interval::point(1000.0).exp();
        assert!(e.lo > 1e300 && e.hi == f64::INFINITY);
    }

    #[test]
    fn sine_sees_interior_peak() {
        let s = Interval::new(1.0, 2.0).sin();
        assert_eq!(s.hi, 1.0);
        assert!(s.lo < 1.0f64.sin());
        let c = Interval::new(3.0, 3.5).cos();
        assert_eq!(c.lo, -1.0);
    }

    #[test]
    fn even_power_of_straddling_interval() {
        let s = Interval::new(-2.0, 1.0).sqr();
        assert_eq!(s, Interval::new(0.0, 4.0));
    }
}

/// Scalars that the curvature formulas can be evaluated over: plain floats
/// for point evaluation and [`Interval`] for enclosures.
pub trait Real:
    Copy
    + fmt::Debug
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn sqr(self) -> Self {
        self * self
    }
    fn exp(self) -> Self;
    fn ln(self) -> Self;
}

impl Real for f64 {
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
}

impl Real for Interval {
    fn sqr(self) -> Self {
        Interval::sqr(self)
    }
    fn exp(self) -> Self {
        Interval::exp(self)
    }
    fn ln(self) -> Self {
        Interval::ln(self)
    }
}
