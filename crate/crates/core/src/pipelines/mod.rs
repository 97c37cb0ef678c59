//! Staged constructions: the base model, the seven-stage twisting chain, the
//! action-extension caps and the level-by-level parameter schedule.
//!
//! Every stage is a [`Stage`]: profiles plus a list of scalar [`StageField`]s
//! that must be nonnegative. Fields carry an interval extension for the
//! certifier and a plain point evaluation for audits. Certifying a stage
//! yields a serializable [`StageReport`].

pub mod base;
pub mod caps;
pub mod schedule;
pub mod step2;
pub mod step3;
pub mod windows;
pub mod x4;

use crate::certify::{certify_nonneg, sampling_audit, CertificationResult, CertifyOptions, SamplingAudit};
use crate::curvature::{Jet, RicciComponents};
use crate::huge::{HugeError, Pos};
use crate::interval::{Interval, Real};
use crate::profile::{JoinKind, ProfileError, SeamResidual, WarpProfile};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

pub use base::{base_profile, base_stage, build_base_model, BaseModel};
pub use caps::{solve_hat_cap, solve_sine_cap, BandCheck, HatCap, SineCap};
pub use step3::{build_step3_assembly, GluingChecks, Puncture, Step3Assembly, Step3Params};
pub use schedule::{schedule_induction, ScheduleRow, ScheduleTable};
pub use step2::{build_step2_chain, step2_stages, Step2Chain, Step2Constants, Step2Params};
pub use windows::{refined_twisting_windows, RefinedWindows};
pub use x4::{solve_x4_window, X4Window};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameter window is empty: {0}")]
    EmptyWindow(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("profile construction failed: {0}")]
    Profile(#[from] ProfileError),
    #[error("huge-number arithmetic failed: {0}")]
    Huge(#[from] HugeError),
    #[error("construction inconsistency: {0}")]
    Inconsistent(String),
}

pub type IntervalField = Arc<dyn Fn(Interval) -> Interval + Send + Sync>;
pub type PointField = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar inequality `field ≥ margin` on one variable.
#[derive(Clone)]
pub struct StageField {
    pub component: String,
    pub domain: Interval,
    pub seams: Vec<f64>,
    pub margin: f64,
    pub enclose: IntervalField,
    pub point: PointField,
}

impl StageField {
    pub fn new(
        component: impl Into<String>,
        domain: Interval,
        seams: Vec<f64>,
        enclose: impl Fn(Interval) -> Interval + Send + Sync + 'static,
        point: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let seams = seams.into_iter().filter(|s| *s > domain.lo && *s < domain.hi).collect();
        StageField {
            component: component.into(),
            domain,
            seams,
            margin: 0.0,
            enclose: Arc::new(enclose),
            point: Arc::new(point),
        }
    }

    pub fn certify(&self, base: &CertifyOptions) -> CertificationResult {
        let opts = base.clone().with_seams(self.seams.clone()).with_margin(base.margin.max(self.margin));
        let f = self.enclose.clone();
        certify_nonneg(move |x| f(x), self.domain, &opts)
    }

    pub fn audit(&self, samples: usize, seed: u64) -> SamplingAudit {
        let p = self.point.clone();
        sampling_audit(move |x| p(x), self.domain, samples, seed, self.margin, 1e-12)
    }
}

/// A number that may or may not fit in a float.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Constant {
    Num(f64),
    Big(Pos),
}

impl Constant {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Constant::Num(v) => Some(*v),
            Constant::Big(p) => p.to_f64(),
        }
    }
}

impl From<f64> for Constant {
    fn from(v: f64) -> Self {
        Constant::Num(v)
    }
}

impl From<Pos> for Constant {
    fn from(p: Pos) -> Self {
        Constant::Big(p)
    }
}

/// Column names of [`Stage::sample`].
pub const PROFILE_COLUMNS: [&str; 6] = ["f", "f'", "f''", "h", "h'", "h''"];

pub type Sampler = Arc<dyn Fn(f64) -> [f64; 6] + Send + Sync>;

/// One stage of a construction, ready to certify.
#[derive(Clone)]
pub struct Stage {
    pub name: String,
    /// Name of the independent variable, with its scaling.
    pub variable: String,
    pub domain: Interval,
    pub profiles: Vec<WarpProfile>,
    pub fields: Vec<StageField>,
    pub constants: BTreeMap<String, Constant>,
    pub conditional_on: Option<String>,
    pub notes: Vec<String>,
    pub columns: [&'static str; 6],
    pub sample: Sampler,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub component: String,
    pub domain: [f64; 2],
    pub margin: f64,
    #[serde(flatten)]
    pub result: CertificationResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileSeams {
    pub profile: String,
    pub max_c1_residual: f64,
    pub seams: Vec<SeamResidual>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub variable: String,
    pub domain: [f64; 2],
    pub constants: BTreeMap<String, Constant>,
    pub verdicts: Vec<Verdict>,
    pub seam_residuals: Vec<ProfileSeams>,
    /// Every verdict came back certified.
    pub certified: bool,
    pub conditional_on: Option<String>,
    pub notes: Vec<String>,
}

impl Stage {
    pub fn certify(&self, opts: &CertifyOptions) -> StageReport {
        let verdicts: Vec<Verdict> = self
            .fields
            .iter()
            .map(|f| Verdict {
                component: f.component.clone(),
                domain: [f.domain.lo, f.domain.hi],
                margin: opts.margin.max(f.margin),
                result: f.certify(opts),
            })
            .collect();
        let certified = verdicts.iter().all(|v| v.result.status.is_certified());
        StageReport {
            stage: self.name.clone(),
            variable: self.variable.clone(),
            domain: [self.domain.lo, self.domain.hi],
            constants: self.constants.clone(),
            seam_residuals: self
                .profiles
                .iter()
                .map(|p| ProfileSeams {
                    profile: p.name.clone(),
                    max_c1_residual: p.max_c1_residual(),
                    seams: p.seam_residuals(),
                })
                .collect(),
            verdicts,
            certified,
            conditional_on: self.conditional_on.clone(),
            notes: self.notes.clone(),
        }
    }

    /// `n` rows of `(x, columns...)`, geometrically spaced on wide domains.
    pub fn samples(&self, n: usize) -> Vec<[f64; 7]> {
        let (lo, hi) = (self.domain.lo, self.domain.hi);
        let log = lo > 0.0 && hi / lo > 4.0;
        (0..n)
            .map(|i| {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let x = if log { lo * (hi / lo).powf(t) } else { lo + t * (hi - lo) };
                let c = (self.sample)(x);
                [x, c[0], c[1], c[2], c[3], c[4], c[5]]
            })
            .collect()
    }
}

/// Ricci of `dr² + (u_f F)² g + (u_h H)² g` in factored form, with
/// `sf = 1/u_f²` and `sh = 1/u_h²`:
///
/// ```text
/// rr = -3F''/F - 3H''/H
/// aa = 2(sf - F'²)/F² - F''/F - 3(F'/F)(H'/H)
/// ii = 2(sh - H'²)/H² - H''/H - 3(H'/H)(F'/F)
/// ```
///
/// Keeping `1 - h'²` together avoids the cancellation `2/h² - 2(h'/h)²`
/// suffers on exact cones.
pub fn warped_ricci<T: Real>(f: &Jet<T>, h: &Jet<T>, sf: T, sh: T) -> RicciComponents<T> {
    let three = T::from(3.0);
    let two = T::from(2.0);
    let lf = f.d1 / f.v;
    let lh = h.d1 / h.v;
    RicciComponents {
        rr: -(three * f.d2 / f.v) - three * h.d2 / h.v,
        aa: two * (sf - f.d1.sqr()) / f.v.sqr() - f.d2 / f.v - three * lf * lh,
        ii: two * (sh - h.d1.sqr()) / h.v.sqr() - h.d2 / h.v - three * lh * lf,
    }
}

/// Same as [`warped_ricci`] multiplied through by `x²`.
pub fn warped_ricci_scaled<T: Real>(x: T, f: &Jet<T>, h: &Jet<T>, sf: T, sh: T) -> RicciComponents<T> {
    let x2 = x.sqr();
    let three = T::from(3.0);
    let two = T::from(2.0);
    let (xf, xh) = (x / f.v, x / h.v);
    let (lf, lh) = (x * f.d1 / f.v, x * h.d1 / h.v);
    RicciComponents {
        rr: -(three * x2 * f.d2 / f.v) - three * x2 * h.d2 / h.v,
        aa: two * (sf - f.d1.sqr()) * xf.sqr() - x2 * f.d2 / f.v - three * lf * lh,
        ii: two * (sh - h.d1.sqr()) * xh.sqr() - x2 * h.d2 / h.v - three * lh * lf,
    }
}

/// Which component of a [`RicciComponents`] a field certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Comp {
    Rr,
    Aa,
    Ii,
}

impl Comp {
    pub(crate) const ALL: [Comp; 3] = [Comp::Rr, Comp::Aa, Comp::Ii];

    pub(crate) fn name(self) -> &'static str {
        match self {
            Comp::Rr => "ric_rr",
            Comp::Aa => "ric_aa",
            Comp::Ii => "ric_ii",
        }
    }

    pub(crate) fn pick<T>(self, r: RicciComponents<T>) -> T {
        match self {
            Comp::Rr => r.rr,
            Comp::Aa => r.aa,
            Comp::Ii => r.ii,
        }
    }
}

/// Point value standing in for an enclosure: the lower end when the upper
/// end has overflowed.
pub(crate) fn rep(x: Interval) -> f64 {
    if x.hi.is_finite() {
        x.mid()
    } else {
        x.lo
    }
}

/// The three Ricci fields of a doubly warped stage with profiles `f`, `h`.
pub(crate) fn doubly_warped_fields(
    domain: Interval,
    f: &Arc<WarpProfile>,
    h: &Arc<WarpProfile>,
    sf: Interval,
    sh: Interval,
    scaled: bool,
) -> Vec<StageField> {
    let mut seams = f.seams();
    seams.extend(h.seams());
    seams.sort_by(f64::total_cmp);
    Comp::ALL
        .iter()
        .map(|&c| {
            let (fi, hi) = (f.clone(), h.clone());
            let (fp, hp) = (f.clone(), h.clone());
            let (sfp, shp) = (rep(sf), rep(sh));
            StageField::new(
                c.name(),
                domain,
                seams.clone(),
                move |x| {
                    let (jf, jh) = (fi.enclose(x), hi.enclose(x));
                    let r = if scaled { warped_ricci_scaled(x, &jf, &jh, sf, sh) } else { warped_ricci(&jf, &jh, sf, sh) };
                    c.pick(r)
                },
                move |x| {
                    let (jf, jh) = (fp.jet(x), hp.jet(x));
                    let r = if scaled { warped_ricci_scaled(x, &jf, &jh, sfp, shp) } else { warped_ricci(&jf, &jh, sfp, shp) };
                    c.pick(r)
                },
            )
        })
        .collect()
}

/// `∓h'' ≥ 0` on each segment the profile flags as a concave (convex) join.
pub(crate) fn curvature_sign_fields(p: &Arc<WarpProfile>) -> Vec<StageField> {
    p.segments
        .iter()
        .filter_map(|s| s.curvature_sign.map(|k| (s.lo, s.hi, k)))
        .map(|(lo, hi, kind)| {
            let sign = if kind == JoinKind::Min { -1.0 } else { 1.0 };
            let (pi, pp) = (p.clone(), p.clone());
            let label = if kind == JoinKind::Min { "concave" } else { "convex" };
            StageField::new(
                format!("{}_{label}_on_[{lo:.6e},{hi:.6e}]", p.name),
                Interval::new(lo, hi),
                vec![],
                move |x| sign * pi.enclose(x).d2,
                move |x| sign * pp.jet(x).d2,
            )
        })
        .collect()
}

pub(crate) fn jets_sampler(f: Arc<WarpProfile>, h: Arc<WarpProfile>) -> Sampler {
    Arc::new(move |x| {
        let (a, b) = (f.jet(x), h.jet(x));
        [a.v, a.d1, a.d2, b.v, b.d1, b.d2]
    })
}

pub(crate) fn check_unit_open(name: &str, v: f64) -> Result<(), PipelineError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(PipelineError::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{ricci_doubly_warped, DoublyWarpedMetric};

    #[test]
    fn factored_form_matches_general_formula() {
        let f = Jet::new(0.3, 0.02, -0.01);
        let h = Jet::new(2.0, 0.7, -0.05);
        let a = warped_ricci(&f, &h, 1.0, 1.0);
        let b = ricci_doubly_warped(&DoublyWarpedMetric::S3_S3, &f, &h);
        assert!((a.rr - b.rr).abs() < 1e-12);
        assert!((a.aa - b.aa).abs() < 1e-12);
        assert!((a.ii - b.ii).abs() < 1e-12);
        let x = 3.0;
        let s = warped_ricci_scaled(x, &f, &h, 1.0, 1.0);
        assert!((s.aa - x * x * a.aa).abs() < 1e-10);
    }

    #[test]
    fn exact_cone_has_zero_ii_enclosure() {
        let h = Jet::new(Interval::new(1.0, 2.0), Interval::ONE, Interval::ZERO);
        let f = Jet::constant(Interval::ONE);
        let r = warped_ricci(&f, &h, Interval::ONE, Interval::ONE);
        assert!(r.ii.lo >= 0.0);
    }
}
