//! Sine caps: pieces `R·sin((r - r_R)/R)` meeting straight lines
//! tangentially.
//!
//! The two-line cap bridges `h₁ = (1-ε')r` and `h₃ = (1-ε)(r + r_ε)`, the two
//! lines meeting at `r = 10²k`. Tangency at `sᵢ` forces
//! `(sᵢ - r_R)/R = θᵢ = arccos(1 - εᵢ)`, which leaves the single equation
//! `R(tan θ₁ - θ₁) = R(tan θ₂ - θ₂) - r_ε` in `R`.
//!
//! Domination `h₂ ≤ hᵢ` is certified through the Lagrange form of the
//! tangent-line gap: with `φ = (r - r_R)/R`,
//! `hᵢ - h₂ = R(φ-θᵢ)²/2 · sin ξ` for some `ξ` between `φ` and `θᵢ`.

use super::PipelineError;
use crate::certify::{certify_nonneg, sampling_audit, CertificationResult, CertifyOptions, SamplingAudit};
use crate::interval::Interval;
use serde::Serialize;

/// Root of `g` in `[lo, hi]` by bisection, with Newton steps accepted when
/// they stay inside the current bracket.
pub(crate) fn bracketed_newton(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Option<f64> {
    let (mut glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return Some(x);
        }
        if gx.signum() == glo.signum() {
            lo = x;
            glo = gx;
        } else {
            hi = x;
        }
        let d = dg(x);
        let newton = x - gx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    Some(x)
}

/// `arccos(1 - e)` as a root of `cos θ - (1 - e)` on `[0, π/2]`.
fn tangency_angle(e: f64) -> Option<f64> {
    bracketed_newton(|t| t.cos() - (1.0 - e), |t| -t.sin(), 0.0, std::f64::consts::FRAC_PI_2)
}

/// `tan θ - θ`.
fn involute(t: f64) -> f64 {
    t.tan() - t
}

/// Enclosure of `(φ - θ)²/2 · sin(hull(Φ, θ))` intersected with the direct
/// difference `sin θ + cos θ (φ - θ) - sin φ`; both contain the true gap.
fn tangent_gap(phi: Interval, theta: f64) -> Interval {
    let t = Interval::point(theta);
    let direct = t.sin() + t.cos() * (phi - t) - phi.sin();
    let xi = phi.hull(t);
    let mut sin_xi = xi.sin();
    // sin ≥ 0 on [0, π]; the enclosure may dip below zero by rounding
    if xi.lo >= 0.0 && xi.hi <= 3.14159 {
        sin_xi.lo = sin_xi.lo.max(0.0);
    }
    let lagrange = (phi - t).sqr() * 0.5 * sin_xi;
    direct.intersect(lagrange).unwrap_or(lagrange)
}

/// Certificate that `h₂` stays below one tangent line on `φ ∈ [0, φ_max]`.
fn certify_below_tangent(theta: f64, phi_max: f64, opts: &CertifyOptions) -> CertificationResult {
    let o = CertifyOptions { margin: 0.0, ..opts.clone() }.with_seams(vec![theta]);
    certify_nonneg(|phi| tangent_gap(phi, theta), Interval::new(0.0, phi_max), &o)
}

/// Upper end of the certified `φ` range: past the second tangency, short of
/// the sine's zero.
const PHI_MAX: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct BandCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BandCheck {
    fn le(name: &str, value: f64, bound: f64) -> Self {
        BandCheck { name: name.into(), value, bound, holds: value <= bound }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SineCap {
    pub eps: f64,
    pub eps_prime: f64,
    pub k: u32,
    pub big_r: f64,
    pub r_r: f64,
    pub s1: f64,
    pub s2: f64,
    /// Offset of `h₃`: `(ε-ε')/(1-ε)·10²k`.
    pub r_eps: f64,
    pub r_hat: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Value and slope mismatches at `s₁` and `s₂`.
    pub residuals: [f64; 4],
    pub bands: Vec<BandCheck>,
    pub below_h1: CertificationResult,
    pub below_h3: CertificationResult,
    pub below_chord: CertificationResult,
    /// Direct sampling of `min(h₁, h₃) - h₂` as an independent check.
    pub domination_audit: SamplingAudit,
}

impl SineCap {
    pub fn h1(&self, r: f64) -> f64 {
        (1.0 - self.eps_prime) * r
    }

    pub fn h2(&self, r: f64) -> f64 {
        self.big_r * ((r - self.r_r) / self.big_r).sin()
    }

    pub fn h3(&self, r: f64) -> f64 {
        (1.0 - self.eps) * (r + self.r_eps)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn bands_hold(&self) -> bool {
        self.bands.iter().all(|b| b.holds)
    }

    pub fn certified(&self) -> bool {
        self.below_h1.status.is_certified() && self.below_h3.status.is_certified() && self.below_chord.status.is_certified()
    }
}

/// Solves the two-line cap at level `k`.
pub fn solve_sine_cap(eps: f64, eps_prime: f64, k: u32, opts: &CertifyOptions) -> Result<SineCap, PipelineError> {
    if !(eps < 1.0 && eps_prime > 0.0 && k >= 1) {
        return Err(PipelineError::InvalidParameter(format!("need 0 < eps' < eps < 1, k >= 1 (got {eps}, {eps_prime}, {k})")));
    }
    if !(eps - eps_prime > 0.0 && eps - eps_prime <= eps / 1e2) {
        return Err(PipelineError::InvalidParameter(format!("need 0 < eps - eps' <= eps/100 (got {eps}, {eps_prime})")));
    }
    let (se, sp) = (eps.sqrt(), eps_prime.sqrt());
    if se - sp > 0.1 * se {
        return Err(PipelineError::InvalidParameter("need sqrt(eps) - sqrt(eps') <= sqrt(eps)/10".into()));
    }
    let kk = k as f64;
    let orbit = 1e2 * kk;
    let r_eps = (eps - eps_prime) / (1.0 - eps) * orbit;
    let solve = |e| tangency_angle(e).ok_or_else(|| PipelineError::Solver(format!("no tangency angle for {e}")));
    let (t1, t2) = (solve(eps_prime)?, solve(eps)?);
    let (i1, i2) = (involute(t1), involute(t2));
    // r_R from each tangency, as functions of R
    let g = |r: f64| r * i1 - (r * i2 - r_eps);
    let dg = |_r: f64| i1 - i2;
    let guess = orbit / (2.0 * eps).sqrt();
    let (mut lo, mut hi) = (0.5 * guess, 2.0 * guess);
    let mut widen = 0;
    while g(lo).signum() == g(hi).signum() {
        lo *= 0.5;
        hi *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(PipelineError::Solver("sine cap: no bracket for R".into()));
        }
    }
    let big_r = bracketed_newton(g, dg, lo, hi).ok_or_else(|| PipelineError::Solver("sine cap: root finder failed".into()))?;
    let r_r = big_r * i1;
    let (s1, s2) = (r_r + big_r * t1, r_r + big_r * t2);
    if !(s1 - r_r > 0.0 && s1 - r_r <= 2.0 * std::f64::consts::PI * big_r) {
        return Err(PipelineError::Solver("sine cap: tangency outside the admissible branch".into()));
    }

    let h2 = |r: f64| big_r * ((r - r_r) / big_r).sin();
    let h2p = |r: f64| ((r - r_r) / big_r).cos();
    let h1 = |r: f64| (1.0 - eps_prime) * r;
    let h3 = |r: f64| (1.0 - eps) * (r + r_eps);
    let scale = big_r.max(1.0);
    let residuals = [
        (h2(s1) - h1(s1)).abs() / scale,
        (h2p(s1) - (1.0 - eps_prime)).abs(),
        (h2(s2) - h3(s2)).abs() / scale,
        (h2p(s2) - (1.0 - eps)).abs(),
    ];

    let bands = vec![
        BandCheck::le("|R - 1e2 k/sqrt(2 eps)|", (big_r - guess).abs(), 1e3 * kk * (se + (se - sp) / se)),
        BandCheck::le("r_R", r_r, orbit * eps_prime),
    ];

    let below_h1 = certify_below_tangent(t1, PHI_MAX, opts);
    let below_h3 = certify_below_tangent(t2, PHI_MAX, opts);
    let chord_opts = CertifyOptions { margin: 0.0, ..opts.clone() };
    let below_chord = certify_nonneg(|phi| tangent_gap(phi, 0.0), Interval::new(0.0, PHI_MAX), &chord_opts);
    let domination_audit = sampling_audit(
        |r| (h1(r).min(h3(r)) - h2(r)) / scale,
        Interval::new(r_r, r_r + PHI_MAX * big_r),
        10_000,
        7,
        0.0,
        1e-12,
    );

    Ok(SineCap {
        eps,
        eps_prime,
        k,
        big_r,
        r_r,
        s1,
        s2,
        r_eps,
        r_hat: (se - sp) / se * kk,
        theta1: t1,
        theta2: t2,
        residuals,
        bands,
        below_h1,
        below_h3,
        below_chord,
        domination_audit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HatCap {
    pub big_r: f64,
    pub eps_hat_requested: f64,
    /// The `ε̂` actually used after shrinking.
    pub eps_hat: f64,
    pub halvings: u32,
    pub theta: f64,
    pub s_hat: f64,
    pub r_hat_r: f64,
    /// `|h₁(ŝ) - h₂(ŝ)| + |h₁'(ŝ) - h₂'(ŝ)|`, relative to `R` for values.
    pub residual: f64,
    pub bands: Vec<BandCheck>,
    pub below_line: CertificationResult,
}

impl HatCap {
    pub fn h2(&self, r: f64) -> f64 {
        self.big_r * ((r - self.r_hat_r) / self.big_r).sin()
    }

    pub fn bands_hold(&self) -> bool {
        self.bands.iter().all(|b| b.holds)
    }
}

fn hat_at(big_r: f64, e: f64) -> Result<(f64, f64, f64), PipelineError> {
    let t = tangency_angle(e).ok_or_else(|| PipelineError::Solver(format!("hat cap: no tangency angle for {e}")))?;
    let s = big_r * t.tan();
    Ok((t, s, big_r * involute(t)))
}

/// Caps the line `(1-ε̂)r` by a sine of radius `R`. With `r_hat` given, `ε̂`
/// is halved until `ŝ ≤ r̂/2`.
pub fn solve_hat_cap(big_r: f64, eps_hat: f64, r_hat: Option<f64>, opts: &CertifyOptions) -> Result<HatCap, PipelineError> {
    if !(big_r > 0.0) {
        return Err(PipelineError::InvalidParameter(format!("R = {big_r} must be positive")));
    }
    super::check_unit_open("eps_hat", eps_hat)?;
    let mut e = eps_hat;
    let mut halvings = 0;
    let (mut t, mut s, mut rr) = hat_at(big_r, e)?;
    if let Some(rh) = r_hat {
        while s > 0.5 * rh {
            e *= 0.5;
            halvings += 1;
            if halvings > 1000 || e < f64::MIN_POSITIVE {
                return Err(PipelineError::EmptyWindow(format!("no eps_hat gives s_hat <= {rh}/2 at R = {big_r}")));
            }
            (t, s, rr) = hat_at(big_r, e)?;
        }
    }
    let h2 = |r: f64| big_r * ((r - rr) / big_r).sin();
    let h2p = |r: f64| ((r - rr) / big_r).cos();
    let residual = (h2(s) - (1.0 - e) * s).abs() / big_r + (h2p(s) - (1.0 - e)).abs();
    let bands = vec![
        BandCheck::le("|s_hat - sqrt(2 eps_hat) R|", (s - (2.0 * e).sqrt() * big_r).abs(), (e + 2f64.sqrt() * e.powf(1.5)) * big_r),
        BandCheck::le("r_hat_R", rr, 2.0 * e * big_r),
    ];
    let below_line = certify_below_tangent(t, PHI_MAX, opts);
    Ok(HatCap {
        big_r,
        eps_hat_requested: eps_hat,
        eps_hat: e,
        halvings,
        theta: t,
        s_hat: s,
        r_hat_r: rr,
        residual,
        bands,
        below_line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_cap_matches_closed_form() {
        let c = solve_sine_cap(0.5, 0.4996, 1, &CertifyOptions::default()).unwrap();
        let closed = c.r_eps / (involute(c.theta2) - involute(c.theta1));
        assert!((c.big_r - closed).abs() < 1e-9 * closed);
        assert!((c.big_r - 57.7).abs() < 0.5, "{}", c.big_r);
        assert!(c.max_residual() < 1e-10);
        assert!(c.bands_hold(), "{:?}", c.bands);
        assert!(c.certified(), "{:?} {:?} {:?}", c.below_h1, c.below_h3, c.below_chord);
        assert_eq!(c.domination_audit.violations, 0);
    }

    #[test]
    fn degenerate_caps_rejected() {
        assert!(solve_sine_cap(0.5, 0.5, 1, &CertifyOptions::default()).is_err());
        assert!(solve_sine_cap(0.5, 0.4, 1, &CertifyOptions::default()).is_err());
    }

    #[test]
    fn hat_cap_sample() {
        let h = solve_hat_cap(100.0, 0.01, None, &CertifyOptions::default()).unwrap();
        assert!((h.s_hat - 14.14).abs() < 0.2, "{}", h.s_hat);
        assert!(h.residual < 1e-10 && h.bands_hold());
        assert!(h.below_line.status.is_certified());
    }

    #[test]
    fn hat_cap_shrinks() {
        let h = solve_hat_cap(100.0, 0.01, Some(10.0), &CertifyOptions::default()).unwrap();
        assert!(h.s_hat <= 5.0 && h.halvings > 0 && h.eps_hat < 0.01);
    }
}
