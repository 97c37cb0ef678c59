//! The seven-stage chain that converts the base cone into one whose
//! cross-section carries a twisted round-sphere metric, then grows the radius
//! until the second sphere is a cone of angle `1 - ε̂`.
//!
//! Each stage lives on its own variable and units:
//!
//! | stage | variable | units of `f`, `h` |
//! |-------|----------|-------------------|
//! | X1, X2 | `r` | `f/δ`, `h` |
//! | X3 | `r`, fields times `r²` | `f/δ`, `h` |
//! | X4 | see [`super::x4`] | |
//! | X5 | `ρ = r/R₄`, fields times `ρ²` | `f/(δ₄R₄)`, `h/R₄` |
//! | X6 | `u = ln(r/R₅)`, fields times `r²` | closed form |
//! | X7 | `σ = r/R₆`, fields times `σ²` | `f/δ̂`, `h/R₆` |
//!
//! Where a stage begins on a line `a + b r` and the previous one ended on
//! `b r`, the radial coordinate is translated; Ricci is unaffected.
//!
//! From `R₄` on every radius is beyond `f64`, so `R₄…R₇`, `c₅` and `δ̂` are
//! [`Pos`] towers; the stage fields only ever see ratios of them.

use super::x4::{build_x4, X4Window};
use super::{
    curvature_sign_fields, doubly_warped_fields, jets_sampler, rep, warped_ricci, Constant,
    PipelineError, Stage, StageField, StageReport, PROFILE_COLUMNS,
};
use crate::certify::CertifyOptions;
use crate::curvature::Jet;
use crate::huge::{Pos, Tower};
use crate::interval::{Interval, Real};
use crate::profile::{JoinSpec, Piece, WarpProfile};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// `R₂`.
pub const R2: f64 = 1e4;
/// Upper bound on `δ₂/δ`.
pub const DELTA2_RATIO_CAP: f64 = 1e-9;
/// Bound on `r h''` along the X6 ramp, as a multiple of `ε̂`.
pub const RAMP_CURVATURE: f64 = 0.9e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Step2Params {
    pub eps: f64,
    pub eps_hat: f64,
    pub delta: Pos,
    pub k: u32,
    /// Bound on the twisting family (assumed).
    pub m: f64,
    /// Non-degeneracy constant of the twisting family (assumed).
    pub c0: f64,
}

impl Step2Params {
    pub fn new(eps: f64, eps_hat: f64, delta: f64, k: u32) -> Self {
        Step2Params { eps, eps_hat, delta: Pos::from_f64(delta), k, m: 10.0, c0: 1.0 }
    }

    pub fn with_delta(mut self, delta: Pos) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_family(mut self, m: f64, c0: f64) -> Self {
        self.m = m;
        self.c0 = c0;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Step2Constants {
    pub r2: f64,
    /// `δ(k)` of the twisting windows.
    pub delta_k: f64,
    /// `δ₂/δ`.
    pub rho2: f64,
    pub delta2: Pos,
    pub c2: f64,
    pub r3: f64,
    pub delta4: Pos,
    pub x4: X4Window,
    pub r4: Pos,
    pub r5: Pos,
    pub alpha: f64,
    pub c5: Pos,
    /// Length `U` of the X6 ramp in `ln r`.
    pub ramp_length: f64,
    /// Intercept of `h` after the ramp, in units of `R₆`.
    pub tail_intercept: f64,
    pub r6: Pos,
    pub r7: Pos,
    /// `c₅(10³R₆)^α`, the final sphere radius.
    pub delta_hat: Pos,
}

#[derive(Clone, Serialize)]
pub struct Step2Chain {
    pub params: Step2Params,
    pub constants: Step2Constants,
    #[serde(skip)]
    pub stages: Vec<Stage>,
    pub reports: Vec<StageReport>,
    /// Outer radius `R = R₇`.
    pub big_r: Pos,
    /// Sphere ratio at the outer radius after rescaling by `1/R`: `δ̂/R₇`.
    pub delta_hat: Pos,
    pub certified: bool,
}

impl Step2Chain {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn report(&self, name: &str) -> Option<&StageReport> {
        self.reports.iter().find(|s| s.stage == name)
    }
}

fn ln_i(x: f64) -> Interval {
    Interval::point(x).ln()
}

fn consts(items: &[(&str, Constant)]) -> BTreeMap<String, Constant> {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// `ii - (2ε-ε²)/h²` for `f` constant.
fn x1_bound<T: Real>(h: &Jet<T>, eps: f64) -> T {
    let c = T::from;
    (c(2.0) * (c(1.0) - h.d1.sqr()) - c(2.0 * eps - eps * eps)) / h.v.sqr() - h.d2 / h.v
}

fn x1_stage(eps: f64, inv_sq: Interval) -> Result<Stage, PipelineError> {
    let domain = Interval::new(1e-2, 1e2);
    let h = Arc::new(WarpProfile::chain(
        "h",
        (domain.lo, domain.hi),
        vec![Piece::linear(0.0, 0.0, 1.0 - eps), Piece::linear(1.0, 1.0 - eps, 0.25)],
        &[JoinSpec::min(0.1, 10.0)],
    )?);
    let f = Arc::new(WarpProfile::single("f/delta", Piece::Constant { c: 1.0 }, domain.lo, domain.hi));
    let mut fields = doubly_warped_fields(domain, &f, &h, inv_sq, Interval::ONE, false);
    let (hi, hp) = (h.clone(), h.clone());
    fields.push(StageField::new(
        "ric_ii - (2eps-eps^2)/h^2",
        domain,
        h.seams(),
        move |x| x1_bound(&hi.enclose(x), eps),
        move |x| x1_bound(&hp.jet(x), eps),
    ));
    fields.extend(curvature_sign_fields(&h));
    Ok(Stage {
        name: "X1".into(),
        variable: "r".into(),
        domain,
        profiles: vec![(*h).clone()],
        fields,
        constants: consts(&[("eps", eps.into())]),
        conditional_on: None,
        notes: vec!["h bends from slope 1-eps onto slope 1/4 at r = 1".into()],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    })
}

/// The three lower bounds displayed for X2, as `component - bound`.
fn x2_bounds<T: Real>(f: &Jet<T>, h: &Jet<T>, sf: T, rho2: f64) -> [T; 3] {
    let c = T::from;
    let ric = warped_ricci(f, h, sf, c(1.0));
    [
        ric.rr - c(3.0 / R2 * (4e-4 / (7.0 * R2) - rho2)),
        // aa - (sf - b)/F with the sf terms collected, so a saturated sf
        // never meets itself: sf(2-F)/F² - 2F'²/F² - F''/F - 3(F'/F)(H'/H) + b/F
        sf * (c(2.0) - f.v) / f.v.sqr() - c(2.0) * f.d1.sqr() / f.v.sqr() - f.d2 / f.v - c(3.0) * (f.d1 / f.v) * (h.d1 / h.v)
            + c(61.0 * rho2 / R2 + 200.0 * rho2 * rho2) / f.v,
        ric.ii - c(15.0 / (14.0 * R2) + 1e-4 / R2 - 7.5 * rho2) / h.v,
    ]
}

fn x2_stage(rho2: f64, inv_sq: Interval) -> Result<Stage, PipelineError> {
    let domain = Interval::new(20.0, 1e2 * R2);
    let f = Arc::new(WarpProfile::chain(
        "f/delta",
        (domain.lo, domain.hi),
        vec![Piece::Constant { c: 1.0 }, Piece::linear(R2, 1.0, rho2)],
        &[JoinSpec::max(0.01 * R2, 10.0 * R2).with_half_width(0.95 * R2)],
    )?);
    let h = Arc::new(WarpProfile::chain(
        "h",
        (domain.lo, domain.hi),
        vec![Piece::linear(0.0, 0.0, 0.25), Piece::linear(R2, R2 / 4.0, 1.0 / 6.0)],
        &[JoinSpec::min(50.0, 1e2 * R2).with_half_width(0.99 * R2)],
    )?);
    let mut fields = doubly_warped_fields(domain, &f, &h, inv_sq, Interval::ONE, false);
    let names = ["ric_rr - displayed bound", "ric_aa - displayed bound", "ric_ii - displayed bound"];
    let window = Interval::new(0.1 * R2, 1.9 * R2);
    let mut seams = f.seams();
    seams.extend(h.seams());
    for (i, name) in names.iter().enumerate() {
        let (fi, hi, fp, hp) = (f.clone(), h.clone(), f.clone(), h.clone());
        let sfp = rep(inv_sq);
        fields.push(StageField::new(
            *name,
            window,
            seams.clone(),
            move |x| x2_bounds(&fi.enclose(x), &hi.enclose(x), inv_sq, rho2)[i],
            move |x| x2_bounds(&fp.jet(x), &hp.jet(x), sfp, rho2)[i],
        ));
    }
    fields.extend(curvature_sign_fields(&f));
    fields.extend(curvature_sign_fields(&h));
    Ok(Stage {
        name: "X2".into(),
        variable: "r".into(),
        domain,
        profiles: vec![(*f).clone(), (*h).clone()],
        fields,
        constants: consts(&[("R2", R2.into()), ("delta2/delta", rho2.into())]),
        conditional_on: None,
        notes: vec![
            "f/delta bends convexly from 1 onto slope delta2/delta at R2".into(),
            "displayed bounds certified on [0.1 R2, 1.9 R2]".into(),
        ],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    })
}

/// `r²` times the displayed lower bound of the X3 `aa` component.
pub(crate) fn x3_display<T: Real>(r: T, sf: T, rho2: f64, c2: f64) -> T {
    let c = T::from;
    let rc = r + c(c2);
    r.sqr() / rc * (c(2.0) * sf / (c(rho2 * rho2) * rc) - c(2.0) / rc - c(6.0) / r)
}

/// `r²(aa - display)` with the `1/δ²` terms cancelled by hand.
pub(crate) fn x3_gap<T: Real>(r: T, h: &Jet<T>, c2: f64) -> T {
    let c = T::from;
    c(3.0) * r / (r + c(c2)) * (c(2.0) - r * h.d1 / h.v)
}

fn x3_stage(rho2: f64, c2: f64, r3: f64, inv_sq: Interval) -> Result<Stage, PipelineError> {
    let domain = Interval::new(10.0 * R2, 1e2 * r3);
    let f = Arc::new(WarpProfile::single("f/delta", Piece::linear(-c2, 0.0, rho2), domain.lo, domain.hi));
    let h = Arc::new(WarpProfile::chain(
        "h",
        (domain.lo, domain.hi),
        vec![Piece::linear(R2, R2 / 4.0, 1.0 / 6.0), Piece::linear(-c2, 0.0, 0.125)],
        &[JoinSpec::min(0.1 * r3, 10.0 * r3)],
    )?);
    let mut fields = doubly_warped_fields(domain, &f, &h, inv_sq, Interval::ONE, true);
    let (hi, hp) = (h.clone(), h.clone());
    let sfp = rep(inv_sq);
    // the 1/δ² terms cancel exactly, leaving 3r/(r+c₂)·(2 - rh'/h)
    fields.push(StageField::new(
        "r^2 (ric_aa - displayed bound)",
        domain,
        h.seams(),
        move |x| x3_gap(x, &hi.enclose(x), c2),
        move |x| x3_gap(x, &hp.jet(x), c2),
    ));
    fields.push(StageField::new(
        "r^2 displayed aa bound",
        domain,
        vec![],
        move |x| x3_display(x, inv_sq, rho2, c2),
        move |x| x3_display(x, sfp, rho2, c2),
    ));
    fields.extend(curvature_sign_fields(&h));
    Ok(Stage {
        name: "X3".into(),
        variable: "r (fields times r^2)".into(),
        domain,
        profiles: vec![(*h).clone()],
        fields,
        constants: consts(&[("c2", c2.into()), ("R3", r3.into())]),
        conditional_on: None,
        notes: vec!["f = delta2 (r + c2); h bends onto (r + c2)/8 at R3".into()],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    })
}

fn x5_stage(alpha: f64, sf: Interval) -> Result<Stage, PipelineError> {
    let domain = Interval::new(10.0, 1e5);
    let f = Arc::new(WarpProfile::chain(
        "f/(delta4 R4)",
        (domain.lo, domain.hi),
        vec![Piece::linear(0.0, 0.0, 1.0), Piece::Power { c: 1e2, x0: 1e2, alpha }],
        &[JoinSpec::min(10.0, 1e3)],
    )?);
    let h = Arc::new(WarpProfile::single("h/R4", Piece::linear(0.0, 0.0, 1.0 / 16.0), domain.lo, domain.hi));
    let mut fields = doubly_warped_fields(domain, &f, &h, sf, Interval::ONE, true);
    fields.extend(curvature_sign_fields(&f));
    Ok(Stage {
        name: "X5".into(),
        variable: "rho = r/R4 (fields times rho^2)".into(),
        domain,
        profiles: vec![(*f).clone()],
        fields,
        constants: consts(&[("alpha", alpha.into())]),
        conditional_on: None,
        notes: vec!["f bends from the line onto 1e2 (rho/1e2)^alpha at rho = 1e2".into()],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    })
}

/// The X6 ramp: `h' = s(u)` climbs from `1/16` to `1 - ε̂` along the quintic
/// smoothstep over `u ∈ [u₀, u₀+U]`, and `h/r = q(u)` solves `q + q_u = s`.
#[derive(Clone, Copy, Debug)]
struct Ramp {
    u0: f64,
    len: f64,
    ds: f64,
    c: f64,
    d: f64,
    alpha: f64,
    eps_hat: f64,
}

#[derive(Clone, Copy)]
enum RampPart {
    Before,
    RampLow,
    RampHigh,
    After,
}

impl Ramp {
    fn new(eps_hat: f64, alpha: f64) -> Ramp {
        let ds = 1.0 - eps_hat - 1.0 / 16.0;
        let len = 15.0 * ds / (8.0 * RAMP_CURVATURE * eps_hat);
        let u0 = 10f64.ln();
        let c = ds * (60.0 / len.powi(3) + 360.0 / len.powi(4) + 720.0 / len.powi(5));
        let mut r = Ramp { u0, len, ds, c, d: 0.0, alpha, eps_hat };
        // q(u_end-) - s_end, kept exact: the s-terms of q telescope to the
        // odd derivatives at t = 1.
        let s_terms = -ds * (60.0 / len.powi(3) - 360.0 / len.powi(4) + 720.0 / len.powi(5));
        r.d = s_terms + c * (-len).exp();
        r
    }

    fn end(&self) -> f64 {
        self.u0 + self.len
    }

    fn s_end(&self) -> f64 {
        1.0 - self.eps_hat
    }

    /// `(s, s_u, q, 1 - s)` on one part. On the upper half `1 - s` is
    /// formed from `1 - t`, so the margin near `s = 1 - ε̂` survives.
    fn eval<T: Real>(&self, u: T, part: RampPart) -> [T; 4] {
        let c = T::from;
        let smooth = |x: T| x.sqr() * x * (c(10.0) - c(15.0) * x + c(6.0) * x.sqr());
        match part {
            RampPart::Before => [c(1.0 / 16.0), c(0.0), c(1.0 / 16.0), c(15.0 / 16.0)],
            RampPart::After => {
                let s = c(self.s_end());
                [s, c(0.0), s + c(self.d) * (c(self.end()) - u).exp(), c(self.eps_hat)]
            }
            RampPart::RampLow | RampPart::RampHigh => {
                let t = (u - c(self.u0)) / c(self.len);
                let om = (c(self.end()) - u) / c(self.len);
                let l = self.len;
                let (s, oms) = match part {
                    RampPart::RampLow => {
                        let s = c(1.0 / 16.0) + c(self.ds) * smooth(t);
                        (s, c(1.0) - s)
                    }
                    _ => {
                        let oms = c(self.eps_hat) + c(self.ds) * smooth(om);
                        (c(1.0) - oms, oms)
                    }
                };
                let sm = [
                    s,
                    c(30.0 * self.ds / l) * (t * om).sqr(),
                    c(60.0 * self.ds / (l * l)) * t * om * (c(1.0) - c(2.0) * t),
                    c(60.0 * self.ds / l.powi(3)) * (c(1.0) - c(6.0) * t + c(6.0) * t.sqr()),
                    c(360.0 * self.ds / l.powi(4)) * (c(2.0) * t - c(1.0)),
                    c(720.0 * self.ds / l.powi(5)),
                ];
                let q = sm[0] - sm[1] + sm[2] - sm[3] + sm[4] - sm[5] + c(self.c) * (c(self.u0) - u).exp();
                [sm[0], sm[1], q, oms]
            }
        }
    }

    fn mid(&self) -> f64 {
        self.u0 + 0.5 * self.len
    }

    fn part_at(&self, u: f64) -> RampPart {
        if u <= self.u0 {
            RampPart::Before
        } else if u >= self.end() {
            RampPart::After
        } else if u < self.mid() {
            RampPart::RampLow
        } else {
            RampPart::RampHigh
        }
    }

    /// Fields `[rr, aa, ii, 1 - 0.1ε̂ - h', 1e-10 ε̂ - r h'']`, times `r²`,
    /// from `(s, s_u, q)` and `ln(r/f)`.
    fn fields<T: Real>(&self, sq: [T; 4], ln_rf: T) -> [T; 5] {
        let c = T::from;
        let [s, su, q, oms] = sq;
        let a = self.alpha;
        [
            c(3.0 * a * (1.0 - a)) - c(3.0) * su / q,
            c(2.0) * (c(2.0) * ln_rf).exp() + c(a * (1.0 - a) - 2.0 * a * a) - c(3.0 * a) * s / q,
            c(2.0) * oms * (c(2.0) - oms) / q.sqr() - su / q - c(3.0 * a) * s / q,
            oms - c(0.1 * self.eps_hat),
            c(1e-10 * self.eps_hat) - su,
        ]
    }

    /// Interval fields, hulled over the parts `u` meets.
    fn fields_interval(&self, u: Interval, ln_rf0: Interval) -> [Interval; 5] {
        let ln_rf = ln_rf0 + (1.0 - self.alpha) * u;
        let parts = [
            (Interval::new(f64::NEG_INFINITY, self.u0), RampPart::Before),
            (Interval::new(self.u0, self.mid()), RampPart::RampLow),
            (Interval::new(self.mid(), self.end()), RampPart::RampHigh),
            (Interval::new(self.end(), f64::INFINITY), RampPart::After),
        ];
        let mut out: Option<[Interval; 5]> = None;
        for (range, part) in parts {
            if let Some(sub) = u.intersect(range) {
                let v = self.fields(self.eval(sub, part), ln_rf);
                out = Some(match out {
                    None => v,
                    Some(o) => std::array::from_fn(|i| o[i].hull(v[i])),
                });
            }
        }
        out.expect("u is nonempty")
    }
}

fn x6_stage(ramp: Ramp, ln_rf0: Interval) -> Stage {
    let domain = Interval::new(0.0, ramp.end() + 1e2f64.ln());
    let names = ["ric_rr", "ric_aa", "ric_ii", "1 - eps_hat/10 - h'", "1e-10 eps_hat - r h''"];
    let ln_rf0_p = rep(ln_rf0);
    let fields = (0..5)
        .map(|i| {
            StageField::new(
                names[i],
                domain,
                vec![ramp.u0, ramp.mid(), ramp.end()],
                move |u| ramp.fields_interval(u, ln_rf0)[i],
                move |u| {
                    let ln_rf = ln_rf0_p + (1.0 - ramp.alpha) * u;
                    ramp.fields(ramp.eval(u, ramp.part_at(u)), ln_rf)[i]
                },
            )
        })
        .collect();
    let a = ramp.alpha;
    Stage {
        name: "X6".into(),
        variable: "u = ln(r/R5) (fields times r^2)".into(),
        domain,
        profiles: vec![],
        fields,
        constants: consts(&[
            ("u0", ramp.u0.into()),
            ("U", ramp.len.into()),
            ("ramp_constant", ramp.c.into()),
            ("tail_constant", ramp.d.into()),
        ]),
        conditional_on: None,
        notes: vec![
            "f = c5 r^alpha; h' follows a quintic smoothstep in ln r from 1/16 to 1 - eps_hat".into(),
            "after the ramp h = (1 - eps_hat) r + (negative intercept of relative size |tail_constant|)".into(),
        ],
        columns: ["f/f(R5)", "rf'/f", "r^2 f''/f", "h/r", "h'", "rh''"],
        sample: Arc::new(move |u| {
            let [s, su, q, _] = ramp.eval(u, ramp.part_at(u));
            [(a * u).exp(), a, a * (a - 1.0), q, s, su]
        }),
    }
}

fn x7_stage(alpha: f64, eps_hat: f64, intercept: f64, sf: Interval) -> Result<Stage, PipelineError> {
    let domain = Interval::new(1.0, 1e5);
    let f = Arc::new(WarpProfile::chain(
        "f/delta_hat",
        (domain.lo, domain.hi),
        vec![Piece::Power { c: 1.0, x0: 1e3, alpha }, Piece::Constant { c: 1.0 }],
        &[JoinSpec::min(10.0, 1e4)],
    )?);
    let h = Arc::new(WarpProfile::single("h/R6", Piece::linear(0.0, intercept, 1.0 - eps_hat), domain.lo, domain.hi));
    let mut fields = doubly_warped_fields(domain, &f, &h, sf, Interval::ONE, true);
    fields.extend(curvature_sign_fields(&f));
    Ok(Stage {
        name: "X7".into(),
        variable: "sigma = r/R6 (fields times sigma^2)".into(),
        domain,
        profiles: vec![(*f).clone()],
        fields,
        constants: consts(&[("h intercept / R6", intercept.into())]),
        conditional_on: None,
        notes: vec!["f bends from c5 r^alpha onto the constant delta_hat at 1e3 R6".into()],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    })
}

/// Builds all stages and constants without certifying.
pub fn step2_stages(p: &Step2Params) -> Result<(Step2Constants, Vec<Stage>), PipelineError> {
    super::check_unit_open("eps", p.eps)?;
    super::check_unit_open("eps_hat", p.eps_hat)?;
    if p.eps >= 0.75 {
        return Err(PipelineError::InvalidParameter(format!("eps = {} must be below 3/4 for the slope-1/4 bend", p.eps)));
    }
    if p.eps_hat >= 15.0 / 16.0 {
        return Err(PipelineError::InvalidParameter(format!("eps_hat = {} leaves no ramp above 1/16", p.eps_hat)));
    }
    if p.k == 0 {
        return Err(PipelineError::InvalidParameter("k must be at least 1".into()));
    }
    let ln_delta = p
        .delta
        .ln_interval()
        .ok_or_else(|| PipelineError::InvalidParameter(format!("delta = {} has no finite logarithm", p.delta.text())))?;
    let inv_sq = (-2.0 * ln_delta).exp();

    let delta_k = super::windows::delta_k(p.k);
    let ln_ratio = ln_i(delta_k) - ln_delta;
    let rho2 = if ln_ratio.lo >= ln_i(DELTA2_RATIO_CAP).hi {
        DELTA2_RATIO_CAP
    } else {
        let v = ln_ratio.mid().exp();
        if !(v > 0.0 && v.is_normal()) {
            return Err(PipelineError::EmptyWindow(format!("delta2/delta = {v:e} is not representable")));
        }
        v
    };
    let c2 = 1.0 / rho2 - R2;
    let r3 = 3.0 * c2 - 2.0 * R2;
    if !(c2 > 1e2 * R2) {
        return Err(PipelineError::EmptyWindow(format!("c2 = {c2:e} does not clear 1e2 R2")));
    }
    let ln_rho2 = ln_i(rho2);
    let delta2 = Pos::from_ln_interval(ln_delta + ln_rho2);
    let ln_delta4 = ln_delta + ln_rho2 - ln_i(2.0);
    let delta4 = Pos::from_ln_interval(ln_delta4);
    let inv_sq3 = inv_sq / Interval::point(rho2).sqr();

    let x1 = x1_stage(p.eps, inv_sq)?;
    let x2 = x2_stage(rho2, inv_sq)?;
    let x3 = x3_stage(rho2, c2, r3, inv_sq)?;
    let x4 = build_x4(p.m, p.c0, r3, &delta2, inv_sq3)?;

    let alpha = 1e-3 * p.eps_hat;
    let x5 = x5_stage(alpha, 4.0 * inv_sq3)?;

    let ramp = Ramp::new(p.eps_hat, alpha);
    let u_len = Interval::point(ramp.len);
    let ln_100d4 = ln_i(1e2) + ln_delta4;
    // ln(r/f) at R5 = (1-α) ln 1e4 - ln(1e2 δ₄) + α ln 1e2
    let ln_rf0 = (1.0 - alpha) * ln_i(1e4) - ln_100d4 + alpha * ln_i(1e2);
    let x6 = x6_stage(ramp, ln_rf0);

    // ln(R6/δ̂) = ln 1e6 + (1-α)U - ln(1e2 δ₄) - α ln 1e7
    let ln_r6_over_dhat = ln_i(1e6) + (1.0 - alpha) * u_len - ln_100d4 - alpha * ln_i(1e7);
    // h intercept after the ramp is D·R5·e^{u_end}; R5 e^{u_end}/R6 = 1/10.
    let intercept = 0.1 * ramp.d;
    let x7 = x7_stage(alpha, p.eps_hat, intercept, (2.0 * ln_r6_over_dhat).exp())?;

    let big_l = x4.window.r4.ln;
    let r5 = Pos::from_ln(big_l.add_fin(ln_i(1e4)));
    let r6 = Pos::from_ln(big_l.add_fin(ln_i(1e6) + u_len));
    let r7 = Pos::from_ln(big_l.add_fin(ln_i(1e11) + u_len));
    let c5 = Pos::from_ln(big_l.scale(Interval::point(1.0 - alpha)).add_fin(ln_100d4 - alpha * ln_i(1e2)));
    let delta_hat = Pos::from_ln(big_l.add_fin(ln_100d4 + alpha * (ln_i(1e7) + u_len)));

    let constants = Step2Constants {
        r2: R2,
        delta_k,
        rho2,
        delta2,
        c2,
        r3,
        delta4,
        r4: x4.window.r4,
        x4: x4.window,
        r5,
        alpha,
        c5,
        ramp_length: ramp.len,
        tail_intercept: intercept,
        r6,
        r7,
        delta_hat,
    };
    let mut stages = vec![x1, x2, x3];
    stages.extend(x4.stages);
    stages.extend([x5, x6, x7]);
    Ok((constants, stages))
}

/// `ln(δ̂/R₇) = ln(1e2 δ₄) + α ln 1e7 - ln 1e11 - (1-α)U`, formed without
/// the towers so it stays a plain interval.
fn ln_delta_hat_over_r7(c: &Step2Constants) -> Result<Interval, PipelineError> {
    let ln_d4 = c.delta4.ln_interval().ok_or_else(|| PipelineError::Inconsistent("delta4 is not finite".into()))?;
    let a = c.alpha;
    Ok(ln_i(1e2) + ln_d4 + a * ln_i(1e7) - ln_i(1e11) - (1.0 - a) * Interval::point(c.ramp_length))
}

/// Builds and certifies the chain. The output pair is `(R₇, δ̂/R₇)`: the
/// outer radius and the sphere ratio seen after rescaling by `1/R₇`.
pub fn build_step2_chain(p: &Step2Params, opts: &CertifyOptions) -> Result<Step2Chain, PipelineError> {
    let (constants, stages) = step2_stages(p)?;
    let reports: Vec<StageReport> = stages.iter().map(|s| s.certify(opts)).collect();
    let certified = reports.iter().all(|r| r.certified);
    let delta_hat = Pos::from_ln(Tower::Fin(ln_delta_hat_over_r7(&constants)?));
    Ok(Step2Chain { params: p.clone(), big_r: constants.r7, delta_hat, constants, stages, reports, certified })
}
