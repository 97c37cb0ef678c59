//! The twisting stage. Its radial profile has three regimes:
//!
//! * A, `r ∈ [11 R₃, 10⁴ R₃]`: the unit line bends onto the log-log line at
//!   `10³ R₃`; the cross-section metric is a fixed product of spheres.
//! * B, `r ∈ [10⁴ R₃, R₄]`: the cross-section metric moves along the twisting
//!   family with `t = (lnlnln r - w₀)/L`. Only the scalar sufficient
//!   conditions are checked, in the variable `w = lnlnln r`, for a family
//!   bounded by the constant `M`.
//! * C, `ρ = r/R₄ ∈ [1, 10³]`: the log-log line (now `0.75ρ` up to far
//!   sub-`f64` terms) bends onto the slope-1/2 line at `ρ = 10`.
//!
//! `R₄ = exp(exp(exp(W)))` where `W` is the smallest (plus one) value making
//! the regime-B system hold at its worst point `r = 10⁴ R₃`.

use super::{rep, Constant, PipelineError, Stage, StageField};
use crate::curvature::Jet;
use crate::huge::{Pos, Tower};
use crate::interval::{Interval, Real};
use crate::profile::{JoinSpec, Piece, WarpProfile};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Inputs and solution of the regime-B condition system.
#[derive(Clone, Debug, Serialize)]
pub struct X4Window {
    pub m: f64,
    pub c0: f64,
    pub r3: f64,
    /// `ln ln (15 R₃)`.
    pub lambda0: f64,
    /// `lnlnln(10⁴ R₃)`.
    pub w0: f64,
    /// `lnlnln R₄`.
    pub w: f64,
    /// `W - w₀`.
    pub l: f64,
    pub r4: Pos,
    /// The condition that was last to hold during the bisection.
    pub binding: String,
}

/// Values of the regime-B conditions at one radius, each `≥ 0` when satisfied.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RegionB<T> {
    pub h_over_r_lo: T,
    pub h_over_r_hi: T,
    pub slope_lo: T,
    pub slope_hi: T,
    pub concavity: T,
    pub radial: T,
    pub cross_section: T,
    pub cross_term: T,
    pub case_small_b: T,
    pub case_large_b: T,
}

pub(crate) const REGION_B_NAMES: [&str; 10] = [
    "h/r >= 1/2",
    "h/r <= 1",
    "h' >= 0",
    "h' <= 1",
    "-E >= 0.16 h/r (h''/h bound)",
    "L^2 >= 20 M^2/(lambda0 ln r) (ric_rr bound)",
    "3.5 G/r + G^2/2 <= 1/2 (ric_ii >= 1/2)",
    "L >= 2 (M+1)^2 (cross term)",
    "L > 0.4 (M+1)^2/lambda0 (b small)",
    "L > 8e3 (M+1)^2/ln r (b large)",
];

impl<T: Copy> RegionB<T> {
    pub(crate) fn get(&self, i: usize) -> T {
        [
            self.h_over_r_lo,
            self.h_over_r_hi,
            self.slope_lo,
            self.slope_hi,
            self.concavity,
            self.radial,
            self.cross_section,
            self.cross_term,
            self.case_small_b,
            self.case_large_b,
        ][i]
    }
}

/// Regime-B conditions at `w = lnlnln r`, with `r₀ = 10³ R₃` and `L` fixed.
/// `1/r`, `r₀/r` and `1/ln r` are formed as exponentials of `-ln r` and `-ℓ`
/// so they underflow gracefully instead of overflowing.
pub(crate) fn region_b<T: Real>(w: T, r0: f64, lambda0: f64, m: f64, l: f64) -> RegionB<T> {
    let c = |v: f64| T::from(v);
    let ell = w.exp();
    let lnr = ell.exp();
    let inv_lnr = (-ell).exp();
    let inv_r = (-lnr).exp();
    let xr = c(r0) * inv_r;
    let one = c(1.0);
    let g = c(lambda0) / (c(16.0) * ell);
    let h_over_r = xr + (c(0.75) + g) * (one - xr);
    let slope = c(0.75) + g - c(lambda0) * (one - xr) * inv_lnr / (c(16.0) * ell.sqr());
    let e = -one - xr + (one - xr) * (inv_lnr + c(2.0) * inv_lnr / ell);
    let big_g = c(m) * inv_r * inv_lnr / (ell * c(l));
    let mp = (m + 1.0) * (m + 1.0);
    RegionB {
        h_over_r_lo: h_over_r - c(0.5),
        h_over_r_hi: one - h_over_r,
        slope_lo: slope,
        slope_hi: one - slope,
        concavity: -e - c(0.16) * h_over_r,
        radial: c(l * l) - c(20.0 * m * m / lambda0) * inv_lnr,
        cross_section: c(0.5) - c(3.5) * big_g * inv_r - c(0.5) * big_g.sqr(),
        cross_term: c(l - 2.0 * mp),
        case_small_b: c(l - 0.4 * mp / lambda0),
        case_large_b: c(l) - c(8e3 * mp) * inv_lnr,
    }
}

fn lnlnln(x: f64) -> f64 {
    x.ln().ln().ln()
}

/// Smallest `W` (plus one, for strictness) such that every regime-B
/// condition holds at `r = 10⁴ R₃`, found by bisection. All conditions are
/// monotone in `W`, so the bisection predicate is monotone.
pub fn solve_x4_window(m: f64, c0: f64, r3: f64) -> Result<X4Window, PipelineError> {
    if !(m > 0.0 && c0 > 0.0 && r3 > 1e2) {
        return Err(PipelineError::InvalidParameter(format!("need M > 0, c0 > 0, R3 > 100 (got {m}, {c0}, {r3})")));
    }
    let lambda0 = (15.0 * r3).ln().ln();
    let rb = 1e4 * r3;
    let w0 = lnlnln(rb);
    let r0 = 1e3 * r3;
    let holds = |w: f64| {
        let c = region_b(w0, r0, lambda0, m, w - w0);
        (0..10).all(|i| c.get(i) > 0.0)
    };
    let (mut lo, mut hi) = (w0, w0 + 1.0);
    while !holds(hi) {
        lo = hi;
        hi = w0 + 2.0 * (hi - w0);
        if hi - w0 > 1e15 {
            return Err(PipelineError::Solver("regime-B window bisection found no upper bracket".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let binding = {
        let c = region_b(w0, r0, lambda0, m, lo - w0);
        (0..10).find(|&i| c.get(i) <= 0.0).map(|i| REGION_B_NAMES[i]).unwrap_or("none")
    };
    let w = hi + 1.0;
    let r4 = Pos::from_ln(Tower::exp_n(2, Interval::point(w)));
    Ok(X4Window { m, c0, r3, lambda0, w0, w, l: w - w0, r4, binding: binding.into() })
}

/// `r²·Ric` of `dr² + h²(δ₃² g + g/64)` in a scaled variable `x`.
fn product_fiber<T: Real>(x: T, h: &Jet<T>, sf: T) -> [T; 3] {
    let c = |v: f64| T::from(v);
    let xh = x / h.v;
    let hpp = x.sqr() * h.d2 / h.v;
    let slope = (x * h.d1 / h.v).sqr();
    [
        -(c(6.0) * hpp),
        c(2.0) * sf * xh.sqr() - hpp - c(5.0) * slope,
        c(128.0) * xh.sqr() - hpp - c(5.0) * slope,
    ]
}

fn product_fields(domain: Interval, h: &Arc<WarpProfile>, sf: Interval) -> Vec<StageField> {
    let names = ["ric_rr", "ric_aa", "ric_ii"];
    (0..3)
        .map(|i| {
            let (hi, hp) = (h.clone(), h.clone());
            let sfp = rep(sf);
            StageField::new(
                names[i],
                domain,
                h.seams(),
                move |x| product_fiber(x, &hi.enclose(x), sf)[i],
                move |x| product_fiber(x, &hp.jet(x), sfp)[i],
            )
        })
        .collect()
}

fn product_sampler(h: Arc<WarpProfile>, f_ratio: f64) -> super::Sampler {
    Arc::new(move |x| {
        let j = h.jet(x);
        [f_ratio * j.v, f_ratio * j.d1, f_ratio * j.d2, j.v / 8.0, j.d1 / 8.0, j.d2 / 8.0]
    })
}

pub(crate) struct X4Stages {
    pub window: X4Window,
    pub stages: Vec<Stage>,
}

/// The three regimes as stages. `delta3` is the first sphere's radius ratio;
/// `sf3 = 1/δ₃²` as an enclosure.
pub(crate) fn build_x4(m: f64, c0: f64, r3: f64, delta3: &Pos, sf3: Interval) -> Result<X4Stages, PipelineError> {
    let win = solve_x4_window(m, c0, r3)?;
    let conditional = format!("twisting family bounded by M = {m}, c0 = {c0} (assumed)");
    let d3 = delta3.to_f64().unwrap_or(0.0);

    // regime A
    let r0 = 1e3 * r3;
    let dom_a = Interval::new(11.0 * r3, 1e4 * r3);
    let h_a = Arc::new(WarpProfile::chain(
        "h",
        (dom_a.lo, dom_a.hi),
        vec![Piece::linear(0.0, 0.0, 1.0), Piece::LogLogLine { r0, lambda0: win.lambda0 }],
        &[JoinSpec::min(1e2 * r3, 1e4 * r3)],
    )?);
    let mut fields_a = product_fields(dom_a, &h_a, sf3);
    fields_a.extend(super::curvature_sign_fields(&h_a));
    let mut consts_a = BTreeMap::new();
    consts_a.insert("R3".into(), Constant::Num(r3));
    consts_a.insert("lambda0".into(), Constant::Num(win.lambda0));
    let stage_a = Stage {
        name: "X4.A".into(),
        variable: "r".into(),
        domain: dom_a,
        profiles: vec![(*h_a).clone()],
        fields: fields_a,
        constants: consts_a,
        conditional_on: None,
        notes: vec!["fields are r^2 Ric; f = delta3 h and the second sphere has radius h/8".into()],
        columns: super::PROFILE_COLUMNS,
        sample: product_sampler(h_a, d3),
    };

    // regime B
    let dom_b = Interval::new(win.w0, win.w);
    let (lambda0, l) = (win.lambda0, win.l);
    let fields_b = (0..10)
        .map(|i| {
            StageField::new(
                REGION_B_NAMES[i],
                dom_b,
                vec![],
                move |w| region_b(w, r0, lambda0, m, l).get(i),
                move |w| region_b(w, r0, lambda0, m, l).get(i),
            )
        })
        .collect();
    let mut consts_b = BTreeMap::new();
    consts_b.insert("M".into(), Constant::Num(m));
    consts_b.insert("c0".into(), Constant::Num(c0));
    consts_b.insert("w0".into(), Constant::Num(win.w0));
    consts_b.insert("W".into(), Constant::Num(win.w));
    consts_b.insert("L".into(), Constant::Num(win.l));
    consts_b.insert("R4".into(), Constant::Big(win.r4));
    let stage_b = Stage {
        name: "X4.B".into(),
        variable: "w = lnlnln r".into(),
        domain: dom_b,
        profiles: vec![],
        fields: fields_b,
        constants: consts_b,
        conditional_on: Some(conditional.clone()),
        notes: vec![format!("binding condition: {}", win.binding)],
        columns: ["h/r", "h'", "E", "1/ln r", "1/lnln r", "r0/r"],
        sample: Arc::new(move |w| {
            let ell = w.exp();
            let lnr = ell.exp();
            let xr = r0 * (-lnr).exp();
            let g = lambda0 / (16.0 * ell);
            let e = -1.0 - xr + (1.0 - xr) * (1.0 / lnr + 2.0 / (ell * lnr));
            let slope = 0.75 + g - lambda0 * (1.0 - xr) / (16.0 * ell * ell * lnr);
            [xr + (0.75 + g) * (1.0 - xr), slope, e, 1.0 / lnr, 1.0 / ell, xr]
        }),
    };

    // regime C: h₂/R₄ = 0.75ρ + ρλ₀/(16ℓ) + O(R₃/R₄) with ℓ ≥ e^W; the
    // corrections and their derivatives are below 10³·λ₀·e^{-W}, and h₂'' ≤ 0
    // by the concavity condition of regime B, which holds for all r ≥ 10⁴R₃.
    // h₃ is exactly linear through h₂(10R₄).
    let tiny = (Interval::point(1e3 * lambda0.max(1.0)) * (-Interval::point(win.w)).exp()).hi.max(f64::from_bits(1));
    let h2 = Piece::Perturbed { base: Box::new(Piece::linear(0.0, 0.0, 0.75)), dv: tiny, d1: tiny, d2: tiny, concave: true };
    let h3 = Piece::Perturbed { base: Box::new(Piece::linear(10.0, 7.5, 0.5)), dv: tiny, d1: 0.0, d2: 0.0, concave: true };
    let dom_c = Interval::new(1.0, 1e3);
    let h_c = Arc::new(WarpProfile::chain(
        "h/R4",
        (dom_c.lo, dom_c.hi),
        vec![h2, h3],
        &[JoinSpec::min(1.0, 1e2)],
    )?);
    let mut fields_c = product_fields(dom_c, &h_c, sf3);
    fields_c.extend(super::curvature_sign_fields(&h_c));
    let mut consts_c = BTreeMap::new();
    consts_c.insert("R4".into(), Constant::Big(win.r4));
    consts_c.insert("perturbation_bound".into(), Constant::Num(tiny));
    let stage_c = Stage {
        name: "X4.C".into(),
        variable: "rho = r/R4".into(),
        domain: dom_c,
        profiles: vec![(*h_c).clone()],
        fields: fields_c,
        constants: consts_c,
        conditional_on: None,
        notes: vec!["fields are rho^2 Ric in units of R4".into()],
        columns: super::PROFILE_COLUMNS,
        sample: product_sampler(h_c, d3),
    };

    Ok(X4Stages { window: win, stages: vec![stage_a, stage_b, stage_c] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_solution_is_tight() {
        let win = solve_x4_window(10.0, 1.0, 3e9).unwrap();
        assert!(win.w > 3e4 && win.w < 3.3e4, "{}", win.w);
        assert!(win.binding.contains("b large"));
        let c = region_b(win.w0, 1e3 * 3e9, win.lambda0, 10.0, win.l);
        assert!((0..10).all(|i| c.get(i) > 0.0));
        let c = region_b(win.w0, 1e3 * 3e9, win.lambda0, 10.0, win.l - 2.0);
        assert!((0..10).any(|i| c.get(i) <= 0.0));
        assert_eq!(win.r4.text(), format!("exp^3({:.6e})", win.w));
    }

    #[test]
    fn region_b_enclosures_contain_points() {
        let (r0, l0) = (3e12, 3.2);
        for w in [3.5, 5.0, 6.5, 7.0, 100.0] {
            let p = region_b(w, r0, l0, 10.0, 3.1e4);
            let i = region_b(Interval::point(w), r0, l0, 10.0, 3.1e4);
            for k in 0..10 {
                assert!(i.get(k).contains(p.get(k)) || (p.get(k) - i.get(k).mid()).abs() < 1e-12, "{w} {k}");
            }
        }
    }
}
