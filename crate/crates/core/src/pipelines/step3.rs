//! Extending the action from `Γ̂ = ⟨γ̂⟩` to `Γ = ⟨γ⟩` with `γ^k = γ̂`.
//!
//! `Ã₁` bends the cone `(1-ε')r` onto `(1-ε)(r + r_ε)` through a sine cap of
//! radius `R`, so a neighbourhood of `r = 10²k` is a piece of `S³_δ × S⁴_R`.
//! `Â` caps the cone `(1-ε̂)r` with a sine of the same `R`, so its outer
//! collar is also a piece of `S³_δ × S⁴_R`. `k` copies of `Â` replace balls
//! of radius `r̃ = 2ŝ - r̂_R` around the points `xᵃ` at radius `10²k` and
//! cross-section angle `2πa/k`, glued by `φᵃ = γᵃ·φ⁰`.
//!
//! `γ` acts with weights `(1, |γ̂|)`: the `S³_δ` factor turns by `2π/|γ|` and
//! the cone cross-section by `2π/k`.

use super::caps::{solve_hat_cap, solve_sine_cap, HatCap, SineCap};
use super::{doubly_warped_fields, jets_sampler, Constant, PipelineError, Stage, StageReport, PROFILE_COLUMNS};
use crate::certify::CertifyOptions;
use crate::hopf::{act_qz, freeness_check, glue_map, glue_map_any, hopf_act, ActionWeights, DiffeoWord, FreenessReport, S3Pair, UnitQuaternion};
use crate::huge::Pos;
use crate::interval::Interval;
use crate::profile::{JoinKind, Piece, Segment, WarpProfile};
use crate::qz::QZ;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct Step3Params {
    pub eps: f64,
    pub eps_prime: f64,
    pub delta: Pos,
    pub k: u32,
    pub eps_hat: f64,
    /// `|γ̂|`, the order of the group being extended.
    pub gamma_hat_order: u64,
    /// Collar points used by the gluing checks.
    pub samples: usize,
    pub seed: u64,
}

impl Step3Params {
    pub fn new(eps: f64, eps_prime: f64, delta: f64, k: u32, eps_hat: f64) -> Self {
        Step3Params { eps, eps_prime, delta: Pos::from_f64(delta), k, eps_hat, gamma_hat_order: 1, samples: 200, seed: 1 }
    }

    pub fn with_gamma_hat_order(mut self, n: u64) -> Self {
        self.gamma_hat_order = n;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Puncture {
    pub a: u32,
    pub radius: f64,
    pub angle: f64,
    /// Cross-section position `(2πa/k)·e`.
    pub direction: UnitQuaternion,
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingChecks {
    pub weights: ActionWeights,
    pub gamma: QZ,
    pub gamma_hat: QZ,
    /// `max |γ·xᵃ - x^{a+1}|` over punctures (indices mod k).
    pub puncture_action: f64,
    /// `max |γ·φᵃ(p) - φ^{a+1}(p)|` for `a < k-1`.
    pub action_table: f64,
    /// `max |φᵏ(p) - γ̂·φ⁰(p)|`.
    pub wrap_around: f64,
    /// `max |γ̂·p - p|` on the cross-section factor.
    pub gamma_hat_cross_section: f64,
    /// `max |γ̂·φᵃ(p) - φᵃ(γ̂·p)|`.
    pub gamma_hat_commutes: f64,
    /// `max |d(φᵃ(p), φᵃ(q)) - d(p, q)|`.
    pub isometry: f64,
    pub freeness: FreenessReport,
}

impl GluingChecks {
    pub fn max_residual(&self) -> f64 {
        [self.puncture_action, self.action_table, self.wrap_around, self.gamma_hat_cross_section, self.gamma_hat_commutes, self.isometry]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Serialize)]
pub struct Step3Assembly {
    pub params: Step3Params,
    pub sine: SineCap,
    pub hat: HatCap,
    pub r_hat: f64,
    pub r_tilde: f64,
    pub punctures: Vec<Puncture>,
    /// `[10²k - r̂, 10²k + r̂] ⊆ [s₁, s₂]`.
    pub window_in_cap: bool,
    /// `max |Ã₁(r) - R sin((r-r_R)/R)|` on the puncture window and
    /// `max |Â(r̂_R + ρ) - R sin(ρ/R)|` on Â's collar.
    pub collar_residual: f64,
    pub gluing: GluingChecks,
    #[serde(skip)]
    pub stages: Vec<Stage>,
    pub reports: Vec<StageReport>,
    pub certified: bool,
}

/// Collar points tolerance.
pub const COLLAR_TOL: f64 = 1e-10;

fn segment(lo: f64, hi: f64, piece: Piece, concave: bool) -> Segment {
    Segment { lo, hi, piece, curvature_sign: concave.then_some(JoinKind::Min) }
}

fn profile_stage(name: &str, h: WarpProfile, inv_sq: Interval, notes: Vec<String>, constants: BTreeMap<String, Constant>) -> Stage {
    let (lo, hi) = h.domain();
    let domain = Interval::new(lo, hi);
    let h = Arc::new(h);
    let f = Arc::new(WarpProfile::single("f/delta", Piece::Constant { c: 1.0 }, lo, hi));
    let mut fields = doubly_warped_fields(domain, &f, &h, inv_sq, Interval::ONE, false);
    fields.extend(super::curvature_sign_fields(&h));
    Stage {
        name: name.into(),
        variable: "r".into(),
        domain,
        profiles: vec![(*h).clone()],
        fields,
        constants,
        conditional_on: None,
        notes,
        columns: PROFILE_COLUMNS,
        sample: jets_sampler(f, h),
    }
}

fn gluing_checks(p: &Step3Params, punctures: &[Puncture]) -> Result<GluingChecks, PipelineError> {
    let k = p.k as u64;
    let order = k * p.gamma_hat_order;
    let gamma = QZ::new(1u64, order).map_err(|e| PipelineError::InvalidParameter(e.to_string()))?;
    let gamma_hat = gamma.times(k);
    let w = ActionWeights::new(1, p.gamma_hat_order as i64);
    let id = DiffeoWord::default();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let pts: Vec<S3Pair> = (0..p.samples).map(|_| S3Pair::random(&mut rng)).collect();
    let glue = |a: u64, q: &S3Pair| glue_map(&gamma, k, a, w, &id, q).map_err(|e| PipelineError::Inconsistent(e.to_string()));

    let mut puncture_action: f64 = 0.0;
    for (i, x) in punctures.iter().enumerate() {
        let next = &punctures[(i + 1) % punctures.len()];
        let moved = act_qz(&gamma, &S3Pair::new(UnitQuaternion::identity(), x.direction), w).second;
        puncture_action = puncture_action.max(moved.dist(&next.direction));
    }
    let (mut table, mut wrap, mut cross, mut commutes, mut iso) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, q) in pts.iter().enumerate() {
        let q2 = &pts[(i + 1) % pts.len()];
        for a in 0..k {
            let pa = glue(a, q)?;
            if a + 1 < k {
                table = table.max(act_qz(&gamma, &pa, w).dist(&glue(a + 1, q)?));
            }
            commutes = commutes.max(act_qz(&gamma_hat, &pa, w).dist(&glue(a, &act_qz(&gamma_hat, q, w))?));
            iso = iso.max((pa.dist(&glue(a, q2)?) - q.dist(q2)).abs());
        }
        let wrapped = glue_map_any(&gamma, k, w, &id, q);
        wrap = wrap.max(wrapped.dist(&act_qz(&gamma_hat, &glue(0, q)?, w)));
        cross = cross.max(act_qz(&gamma_hat, q, w).second.dist(&q.second));
    }
    let freeness = freeness_check(w, p.samples.min(64), &[order], p.seed);
    Ok(GluingChecks {
        weights: w,
        gamma,
        gamma_hat,
        puncture_action,
        action_table: table,
        wrap_around: wrap,
        gamma_hat_cross_section: cross,
        gamma_hat_commutes: commutes,
        isometry: iso,
        freeness,
    })
}

/// Builds `Ã₁`, `Â`, the punctures and the gluing maps, and certifies
/// `Ric ≥ 0` for both profiles.
pub fn build_step3_assembly(p: &Step3Params, opts: &CertifyOptions) -> Result<Step3Assembly, PipelineError> {
    if p.gamma_hat_order == 0 {
        return Err(PipelineError::InvalidParameter("|gamma_hat| must be positive".into()));
    }
    let ln_delta = p
        .delta
        .ln_interval()
        .ok_or_else(|| PipelineError::InvalidParameter(format!("delta = {} has no finite logarithm", p.delta.text())))?;
    let inv_sq = (-2.0 * ln_delta).exp();
    let sine = solve_sine_cap(p.eps, p.eps_prime, p.k, opts)?;
    let r_hat = sine.r_hat;
    let hat = solve_hat_cap(sine.big_r, p.eps_hat, Some(r_hat), opts)?;
    let r_tilde = 2.0 * hat.s_hat - hat.r_hat_r;
    if !(r_tilde < sine.r_r) {
        return Err(PipelineError::Inconsistent(format!("r_tilde = {r_tilde} is not below r_R = {}", sine.r_r)));
    }
    let kk = p.k as f64;
    let orbit = 1e2 * kk;
    let big_r = sine.big_r;

    let a1 = WarpProfile::from_segments(
        "h (A1)",
        vec![
            segment(1e-2 * sine.s1, sine.s1, Piece::linear(0.0, 0.0, 1.0 - p.eps_prime), false),
            segment(sine.s1, sine.s2, Piece::SineCap { big_r, r0: sine.r_r }, true),
            segment(sine.s2, 1e3 * kk, Piece::linear(-sine.r_eps, 0.0, 1.0 - p.eps), false),
        ],
    );
    let e_hat = hat.eps_hat;
    let a_hat = WarpProfile::from_segments(
        "h (A hat)",
        vec![
            segment(1e-3 * hat.s_hat, hat.s_hat, Piece::linear(0.0, 0.0, 1.0 - e_hat), false),
            segment(hat.s_hat, 2.0 * hat.s_hat, Piece::SineCap { big_r, r0: hat.r_hat_r }, true),
        ],
    );

    let window_in_cap = sine.s1 <= orbit - r_hat && orbit + r_hat <= sine.s2;
    let mut collar_residual: f64 = 0.0;
    for i in 0..=64 {
        let t = i as f64 / 64.0;
        let r = orbit - r_tilde + 2.0 * r_tilde * t;
        collar_residual = collar_residual.max((a1.value(r) - big_r * ((r - sine.r_r) / big_r).sin()).abs());
        let rho = (hat.s_hat - hat.r_hat_r) + t * (r_tilde - (hat.s_hat - hat.r_hat_r));
        collar_residual = collar_residual.max((a_hat.value(hat.r_hat_r + rho) - big_r * (rho / big_r).sin()).abs());
    }

    let punctures: Vec<Puncture> = (0..p.k)
        .map(|a| {
            let angle = 2.0 * PI * a as f64 / kk;
            Puncture { a, radius: orbit, angle, direction: hopf_act(angle, &UnitQuaternion::identity()) }
        })
        .collect();
    let gluing = gluing_checks(p, &punctures)?;

    let c = |items: &[(&str, f64)]| items.iter().map(|(k, v)| (k.to_string(), Constant::Num(*v))).collect();
    let stages = vec![
        profile_stage(
            "A1",
            a1,
            inv_sq,
            vec!["sine-cap seams are C1; each piece is certified on its own closed segment".into()],
            c(&[("R", big_r), ("r_R", sine.r_r), ("s1", sine.s1), ("s2", sine.s2), ("r_eps", sine.r_eps)]),
        ),
        profile_stage(
            "A_hat",
            a_hat,
            inv_sq,
            vec![format!("eps_hat used: {e_hat:e} after {} halvings", hat.halvings)],
            c(&[("R", big_r), ("r_hat_R", hat.r_hat_r), ("s_hat", hat.s_hat), ("r_tilde", r_tilde)]),
        ),
    ];
    let reports: Vec<StageReport> = stages.iter().map(|s| s.certify(opts)).collect();
    let certified = reports.iter().all(|r| r.certified)
        && sine.certified()
        && hat.below_line.status.is_certified()
        && window_in_cap
        && collar_residual < COLLAR_TOL
        && gluing.max_residual() < 1e-12
        && gluing.freeness.free_exact;
    Ok(Step3Assembly {
        params: p.clone(),
        sine,
        hat,
        r_hat,
        r_tilde,
        punctures,
        window_in_cap,
        collar_residual,
        gluing,
        stages,
        reports,
        certified,
    })
}
