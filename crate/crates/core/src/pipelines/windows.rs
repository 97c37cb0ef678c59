//! Parameter windows for the twisting family `(λ_t, f_t, ε_t, δ)`.
//!
//! The cross-section metric is `h_t = λ²(ρ ⊗ ρ) + λ⁻² g` perturbed by a
//! connection form of size `f_t` and an extension of size `ε_t`. With
//! `|Ω|, |div Ω| ≤ M` and `|ω|² ≥ c₀` away from the degenerate set, each
//! window below is the solution set of one scalar inequality, solved in the
//! order the construction needs them.

use super::PipelineError;
use serde::Serialize;
use std::f64::consts::PI;

/// Scale of the smaller round factor in the sample cross-section.
pub const A_TILDE: f64 = 0.3;

/// `a_{1/3} = ã/(4π⁴)^{1/6}`, the radius parameter of the sample product with
/// `Ric > 6`.
pub fn sample_a_one_third() -> f64 {
    A_TILDE / (4.0 * PI.powi(4)).powf(1.0 / 6.0)
}

/// Largest admissible sphere ratio at level `k`: `8 a²_{1/3}`. The sample
/// cross-section does not depend on `k`.
pub fn delta_k(_k: u32) -> f64 {
    let a = sample_a_one_third();
    8.0 * a * a
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowEntry {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub chosen: f64,
    pub inequality: String,
    /// The inequality re-evaluated at the chosen value.
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinedWindows {
    pub k: u32,
    pub m: f64,
    pub c0: f64,
    pub tau: f64,
    pub entries: Vec<WindowEntry>,
    pub nonempty: bool,
}

impl RefinedWindows {
    pub fn get(&self, name: &str) -> Option<&WindowEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// `Ric_{h_t} - 1` lower bound as a 2×2 form in the `(ρ, g)` split.
fn lambda_form(lambda: f64, m: f64) -> (f64, f64, f64) {
    let l2 = lambda * lambda;
    (2.0 / l2 - 1.0, lambda * m, 3.0 - l2 * m * m)
}

fn lambda_ok(lambda: f64, m: f64) -> bool {
    let (a, b, c) = lambda_form(lambda, m);
    a > 0.0 && c > 0.0 && a * c > b * b
}

/// Largest `x` in `(0, hi)` with `ok(x)`, assuming `ok` holds on an initial
/// segment.
fn bisect_sup(hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves the windows at level `k` for bound `M`, non-degeneracy `c₀` and
/// target `Ric > τ` on the horizontal directions.
pub fn refined_twisting_windows(k: u32, m: f64, c0: f64, tau: f64) -> Result<RefinedWindows, PipelineError> {
    if !(m > 0.0 && c0 > 0.0 && k >= 2) {
        return Err(PipelineError::InvalidParameter(format!("need k >= 2, M > 0, c0 > 0 (got {k}, {m}, {c0})")));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(PipelineError::EmptyWindow(format!("tau = {tau} must lie in [0, 1)")));
    }
    let mut entries = Vec::new();

    let lam_max = bisect_sup((3.0f64).sqrt() / m, |l| lambda_ok(l, m));
    let lambda = 0.5 * lam_max;
    entries.push(WindowEntry {
        name: "lambda".into(),
        lo: 0.0,
        hi: lam_max,
        chosen: lambda,
        inequality: "(2/l^2 - 1)(3 - l^2 M^2) > l^2 M^2, l^2 < 2, l < sqrt(3)/M".into(),
        satisfied: lambda_ok(lambda, m),
    });

    let kappa = c0 * c0 / (20.0 * m * m).powi(2);
    let f_hor = (2.0 * (1.0 - tau)).sqrt() / m;
    let f_deg = kappa / (3.0 * m * m);
    let f = 0.5 * f_hor.min(f_deg);
    entries.push(WindowEntry {
        name: "f_horizontal".into(),
        lo: 0.0,
        hi: f_hor,
        chosen: f,
        inequality: "1 - f^2 M^2/2 > tau".into(),
        satisfied: 1.0 - f * f * m * m / 2.0 > tau,
    });
    entries.push(WindowEntry {
        name: "f_degenerate".into(),
        lo: 0.0,
        hi: f_deg,
        chosen: f,
        inequality: "eps c0^2 (20 M^2)^-2/(2 f) > (3/2) M^2 eps".into(),
        satisfied: kappa / (2.0 * f) > 1.5 * m * m,
    });

    let hh = |e: f64| 1.0 - f * f * m * m / 2.0 - 4.0 * m * e / f - tau;
    let e_ext = f / (2.0 * m);
    let tt1 = |e: f64| f * f * c0 / 400.0 - e / f;
    let ok1 = |e: f64| tt1(e) > 0.0 && hh(e) > 0.0 && tt1(e) * hh(e) > (1.5 * m * m * e).powi(2);
    let e_reg1 = bisect_sup(f.powi(3) * c0 / 400.0, ok1);
    let e_reg2 = (kappa * (1.0 - f * f * m * m / 2.0 - tau) / (2.0 * f)) / (2.25 * m.powi(4) + 2.0 * m * kappa / (f * f));
    let ok2 = |e: f64| {
        let tt = e * kappa / (2.0 * f);
        hh(e) > 0.0 && tt * hh(e) > (1.5 * m * m * e).powi(2)
    };
    let eps = 0.5 * e_ext.min(e_reg1).min(e_reg2);
    entries.push(WindowEntry {
        name: "eps_extension".into(),
        lo: 0.0,
        hi: e_ext,
        chosen: eps,
        inequality: "eps < f/(2M)".into(),
        satisfied: eps < e_ext,
    });
    entries.push(WindowEntry {
        name: "eps_nondegenerate".into(),
        lo: 0.0,
        hi: e_reg1,
        chosen: eps,
        inequality: "(f^2 c0/400 - eps/f)(HH - tau) > (1.5 M^2 eps)^2, HH = 1 - f^2 M^2/2 - 4 M eps/f".into(),
        satisfied: ok1(eps),
    });
    entries.push(WindowEntry {
        name: "eps_degenerate".into(),
        lo: 0.0,
        hi: e_reg2,
        chosen: eps,
        inequality: "(eps kappa/(2f))(HH - tau) > (1.5 M^2 eps)^2, kappa = c0^2 (20 M^2)^-2".into(),
        satisfied: ok2(eps),
    });

    let d_max = delta_k(k);
    entries.push(WindowEntry {
        name: "delta".into(),
        lo: 0.0,
        hi: d_max,
        chosen: d_max,
        inequality: "delta <= 8 a_{1/3}^2".into(),
        satisfied: d_max <= 8.0 * sample_a_one_third().powi(2),
    });

    let nonempty = entries.iter().all(|e| e.hi > e.lo && e.satisfied);
    Ok(RefinedWindows { k, m, c0, tau, entries, nonempty })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_sample_value() {
        assert!((delta_k(3) - 0.0987).abs() < 1e-3, "{}", delta_k(3));
    }

    #[test]
    fn windows_nonempty_and_tight() {
        let w = refined_twisting_windows(3, 10.0, 1.0, 0.5).unwrap();
        assert!(w.nonempty, "{w:#?}");
        let l = w.get("lambda").unwrap();
        assert!(lambda_ok(l.hi * 0.999, 10.0) && !lambda_ok(l.hi * 1.001, 10.0));
    }

    #[test]
    fn tau_zero_is_nonnegative_case() {
        let w = refined_twisting_windows(3, 2.0, 1.0, 0.0).unwrap();
        assert!((w.get("f_horizontal").unwrap().hi - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(refined_twisting_windows(3, 2.0, 1.0, 1.0).is_err());
    }
}
