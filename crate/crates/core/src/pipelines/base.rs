//! The base model: `dr² + δ² g + h(r)² g` with `h` bending the unit cone down
//! to a cone of aperture `1 - ε`.

use super::{curvature_sign_fields, doubly_warped_fields, jets_sampler, Constant, PipelineError, Stage, StageReport, PROFILE_COLUMNS};
use crate::certify::CertifyOptions;
use crate::curvature::{ricci_doubly_warped, DoublyWarpedMetric, Jet};
use crate::interval::Interval;
use crate::profile::{JoinSpec, Piece, WarpProfile};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Corner of the two lines.
pub const CORNER: f64 = 1e-4;
/// `h = r` below this radius.
pub const INNER: f64 = 1e-5;
/// `h` is the outer line above this radius.
pub const OUTER: f64 = 1e-3;
/// Beyond this radius the model is an exact product with a cone.
pub const ISOMETRIC_TAIL: f64 = 1e-2;
/// Certification domain.
pub const DOMAIN: (f64, f64) = (1e-6, 1e3);

/// Smoothed `min{r, 1e-4 + (1-ε)(r - 1e-4)}`.
pub fn base_profile(eps: f64) -> Result<WarpProfile, PipelineError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(PipelineError::InvalidParameter(format!("eps = {eps} must lie in [0, 1)")));
    }
    Ok(WarpProfile::chain(
        "h",
        DOMAIN,
        vec![Piece::linear(0.0, 0.0, 1.0), Piece::linear(CORNER, CORNER, 1.0 - eps)],
        &[JoinSpec::min(INNER, OUTER)],
    )?)
}

pub fn base_stage(eps: f64, delta: f64) -> Result<Stage, PipelineError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(PipelineError::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let h = Arc::new(base_profile(eps)?);
    let f = Arc::new(WarpProfile::single("f/delta", Piece::Constant { c: 1.0 }, DOMAIN.0, DOMAIN.1));
    let domain = Interval::new(DOMAIN.0, DOMAIN.1);
    let inv_sq = Interval::point(delta).sqr().recip();
    let mut fields = doubly_warped_fields(domain, &f, &h, inv_sq, Interval::ONE, false);
    fields.extend(curvature_sign_fields(&h));
    let mut constants = BTreeMap::new();
    constants.insert("eps".into(), Constant::Num(eps));
    constants.insert("delta".into(), Constant::Num(delta));
    constants.insert("isometric_tail_radius".into(), Constant::Num(ISOMETRIC_TAIL));
    constants.insert("ric_aa".into(), Constant::Num(2.0 / (delta * delta)));
    let sample_f = Arc::new(WarpProfile::single("f", Piece::Constant { c: delta }, DOMAIN.0, DOMAIN.1));
    Ok(Stage {
        name: "base".into(),
        variable: "r".into(),
        domain,
        profiles: vec![(*h).clone()],
        fields,
        constants,
        conditional_on: None,
        notes: vec![format!("h = r for r <= {INNER:e}; outer line for r >= {OUTER:e}")],
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(sample_f, h),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BaseModel {
    pub h: WarpProfile,
    pub report: StageReport,
    /// `Ric_aa` from the general formula equals `2/δ²` bit for bit.
    pub aa_exact: bool,
    /// `max |h'|` over a dense sample.
    pub max_abs_slope: f64,
}

/// Builds and certifies the base model.
pub fn build_base_model(eps: f64, delta: f64, opts: &CertifyOptions) -> Result<BaseModel, PipelineError> {
    let stage = base_stage(eps, delta)?;
    let report = stage.certify(opts);
    let h = stage.profiles[0].clone();
    let aa_exact = h.samples(64).iter().all(|(_, jh)| {
        let r = ricci_doubly_warped(&DoublyWarpedMetric::S3_S3, &Jet::constant(delta), jh);
        r.aa == 2.0 / (delta * delta)
    });
    let max_abs_slope = h.samples(4000).iter().map(|(_, j)| j.d1.abs()).fold(0.0, f64::max);
    Ok(BaseModel { h, report, aa_exact, max_abs_slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_model_certifies() {
        let m = build_base_model(0.5, 0.01, &CertifyOptions::default()).unwrap();
        assert!(m.report.certified, "{:#?}", m.report.verdicts);
        assert!(m.aa_exact);
        assert!(m.max_abs_slope <= 1.0);
    }

    #[test]
    fn zero_eps_is_the_flat_cone() {
        let h = base_profile(0.0).unwrap();
        assert_eq!(h.segments.len(), 1);
        let j = h.jet(0.5);
        assert_eq!((j.v, j.d1, j.d2), (0.5, 1.0, 0.0));
    }
}
