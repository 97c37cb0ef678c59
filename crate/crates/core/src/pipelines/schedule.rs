//! Level-by-level parameter propagation.
//!
//! Level 1 is the base model `B(ε₁, δ₁)` at scale `r₁ = 1`. Passing from
//! level `j` to `j+1`:
//!
//! 1. the two-line cap at level `j+1` fixes `R` and `r̂`;
//! 2. the hat cap picks `ε̂_j` with `ŝ ≤ r̂/2`;
//! 3. the step-2 chain with `(ε_j, ε̂_j, δ_j)` yields `(R_j, δ̂_j)`;
//! 4. the step-3 assembly glues `k_{j+1}` copies;
//! 5. `r_{j+1} = 10²k_{j+1}·R_j r_j` (the orbit scale of the new generator,
//!    a proxy for its displacement) and `δ_{j+1} r_{j+1} = δ̂_j R_j r_j`.

use super::step2::{build_step2_chain, Step2Params};
use super::step3::{build_step3_assembly, Step3Params};
use super::{build_base_model, solve_hat_cap, solve_sine_cap, PipelineError};
use crate::certify::CertifyOptions;
use crate::huge::{Pos, Tower};
use crate::interval::Interval;
use serde::Serialize;
use std::cmp::Ordering;

/// `ε'_j = EPS_PRIME_RATIO · ε_j`.
pub const EPS_PRIME_RATIO: f64 = 0.995;
/// Starting `ε̂` before the hat cap shrinks it.
pub const EPS_HAT_START: f64 = 1e-2;

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleRow {
    pub j: usize,
    pub k: u64,
    pub eps: f64,
    pub eps_prime: f64,
    /// Scale `r_j` (orbit-scale proxy for `j ≥ 2`).
    pub r: Pos,
    pub delta: Pos,
    pub eps_hat: Option<f64>,
    pub big_r: Option<Pos>,
    pub delta_hat: Option<Pos>,
    /// `r_{j+1}/(k_{j+1} r_j)`.
    pub growth: Option<Pos>,
    pub base_certified: Option<bool>,
    pub step2_certified: Option<bool>,
    pub step3_certified: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleTable {
    pub ks: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub delta1: f64,
    pub rows: Vec<ScheduleRow>,
    /// Every growth factor is decided `> 1`.
    pub growth_exceeds_one: bool,
    /// `r_j` strictly increasing, decided on the step ratios
    /// `r_{j+1}/r_j = k_{j+1}·growth_j`: towers of equal height for `r_j`
    /// and `r_{j+1}` are not comparable directly.
    pub r_increasing: bool,
    /// Growth factors non-decreasing from level to level; `None` where
    /// the comparison is below tower precision.
    pub growth_trend: Vec<Option<bool>>,
    pub all_certified: bool,
    pub notes: Vec<String>,
}

fn tower_add(a: Tower, b: Tower) -> Result<Tower, PipelineError> {
    Ok(a.add(b)?)
}

/// Runs the schedule for `ks[j-1] = k_j`, `epsilons[j-1] = ε_j`.
pub fn schedule_induction(
    ks: &[u64],
    epsilons: &[f64],
    delta1: f64,
    family: (f64, f64),
    opts: &CertifyOptions,
) -> Result<ScheduleTable, PipelineError> {
    if ks.is_empty() || ks.len() != epsilons.len() {
        return Err(PipelineError::InvalidParameter(format!("need one eps per level ({} ks, {} eps)", ks.len(), epsilons.len())));
    }
    if ks.iter().any(|&k| k == 0 || k > u32::MAX as u64) {
        return Err(PipelineError::InvalidParameter("every k_j must be a positive 32-bit integer".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PipelineError::InvalidParameter("eps_j must be decreasing in (0, 1)".into()));
    }
    if !(delta1 > 0.0) {
        return Err(PipelineError::InvalidParameter(format!("delta1 = {delta1} must be positive")));
    }
    let n = ks.len();
    let mut rows = Vec::with_capacity(n);
    let mut r = Pos::from_f64(1.0);
    let mut delta = Pos::from_f64(delta1);
    let mut gamma_order: u64 = ks[0];
    let base = build_base_model(epsilons[0], delta1, opts)?;

    for j in 0..n {
        let (k, eps) = (ks[j], epsilons[j]);
        let mut row = ScheduleRow {
            j: j + 1,
            k,
            eps,
            eps_prime: EPS_PRIME_RATIO * eps,
            r,
            delta,
            eps_hat: None,
            big_r: None,
            delta_hat: None,
            growth: None,
            base_certified: (j == 0).then_some(base.report.certified),
            step2_certified: None,
            step3_certified: None,
        };
        if j + 1 < n {
            let (k1, e1) = (ks[j + 1], epsilons[j + 1]);
            let e1p = EPS_PRIME_RATIO * e1;
            let cap = solve_sine_cap(e1, e1p, k1 as u32, opts)?;
            let hat = solve_hat_cap(cap.big_r, EPS_HAT_START, Some(cap.r_hat), opts)?;
            let eps_hat = hat.eps_hat;
            let p2 = Step2Params::new(eps, eps_hat, 1.0, k1 as u32).with_delta(delta).with_family(family.0, family.1);
            let chain = build_step2_chain(&p2, opts)?;
            let next_delta = Pos::from_ln(
                tower_add(chain.delta_hat.ln, Tower::fin(-Interval::point(1e2 * k1 as f64).ln()))?,
            );
            let p3 = Step3Params {
                eps: e1,
                eps_prime: e1p,
                delta: next_delta,
                k: k1 as u32,
                eps_hat,
                gamma_hat_order: gamma_order,
                samples: 64,
                seed: j as u64 + 1,
            };
            let s3 = build_step3_assembly(&p3, opts)?;
            let growth = chain.big_r.scale(Interval::point(1e2));
            let next_r = Pos::from_ln(tower_add(tower_add(r.ln, growth.ln)?, Tower::fin(Interval::point(k1 as f64).ln()))?);
            row.eps_hat = Some(eps_hat);
            row.big_r = Some(chain.big_r);
            row.delta_hat = Some(chain.delta_hat);
            row.growth = Some(growth);
            row.step2_certified = Some(chain.certified);
            row.step3_certified = Some(s3.certified);
            r = next_r;
            delta = next_delta;
            gamma_order = gamma_order
                .checked_mul(k1)
                .ok_or_else(|| PipelineError::InvalidParameter("group order exceeds 64 bits".into()))?;
        }
        rows.push(row);
    }

    let one = Pos::from_f64(1.0);
    let growth_exceeds_one = rows.iter().filter_map(|r| r.growth.as_ref()).all(|g| g.compare(&one) == Some(Ordering::Greater));
    let r_increasing = rows.windows(2).all(|w| match &w[0].growth {
        Some(g) => g.scale(Interval::point(w[1].k as f64)).compare(&one) == Some(Ordering::Greater),
        None => false,
    });
    let growths: Vec<&Pos> = rows.iter().filter_map(|r| r.growth.as_ref()).collect();
    let growth_trend = growths.windows(2).map(|w| w[1].compare(w[0]).map(|o| o != Ordering::Less)).collect();
    let all_certified = rows.iter().all(|r| {
        r.base_certified.unwrap_or(true) && r.step2_certified.unwrap_or(true) && r.step3_certified.unwrap_or(true)
    });
    Ok(ScheduleTable {
        ks: ks.to_vec(),
        epsilons: epsilons.to_vec(),
        delta1,
        rows,
        growth_exceeds_one,
        r_increasing,
        growth_trend,
        all_certified,
        notes: vec![
            "r_{j+1} is the orbit scale 1e2 k_{j+1} R_j r_j, a proxy for the displacement of the new generator".into(),
            "the top row has no outgoing step".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_chain() {
        let t = schedule_induction(&[2, 3], &[0.5, 0.25], 0.01, (10.0, 1.0), &CertifyOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.all_certified, "{:#?}", t.rows);
        assert!(t.growth_exceeds_one && t.r_increasing);
        assert!(t.rows[1].big_r.is_none());
        assert!(t.rows[0].delta_hat.unwrap().ln_interval().is_some());
    }

    #[test]
    fn single_level_is_base_model() {
        let t = schedule_induction(&[2], &[0.5], 0.01, (10.0, 1.0), &CertifyOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].base_certified, Some(true));
        assert!(t.rows[0].eps_hat.is_none());
    }
}
