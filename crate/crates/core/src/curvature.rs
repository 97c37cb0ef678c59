//! Closed-form Ricci curvature.
//!
//! * [`ricci_doubly_warped`]: `dr² + f1² g1 + f2² g2` over two Einstein fibers.
//! * [`ricci_frame`]: the metric declaring a frame with constant brackets orthonormal.
//! * [`s1_bundle_ricci`]: scalar components for a circle bundle with fiber length `f`.
//!
//! The fiber terms carry `λ/f²`: with fiber metric `f² g` and `Ric_g = λ g`,
//! the unit-vector component is `λ/f²`.

use crate::interval::Real;
use serde::Serialize;

/// Value and first two radial derivatives of a warping function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jet<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet<T> {
    pub fn new(v: T, d1: T, d2: T) -> Self {
        Jet { v, d1, d2 }
    }

    pub fn constant(c: T) -> Self {
        Jet { v: c, d1: T::from(0.0), d2: T::from(0.0) }
    }

    /// `y0 + s (r - r0)` at radius `r`.
    pub fn linear(r: T, r0: f64, y0: f64, s: f64) -> Self {
        Jet { v: T::from(y0) + T::from(s) * (r - T::from(r0)), d1: T::from(s), d2: T::from(0.0) }
    }

    pub fn scale(self, c: T) -> Self {
        Jet { v: self.v * c, d1: self.d1 * c, d2: self.d2 * c }
    }
}

/// Fiber dimensions and Einstein constants of the unit fibers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoublyWarpedMetric {
    pub n1: u32,
    pub n2: u32,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl DoublyWarpedMetric {
    /// Two round unit 3-spheres.
    pub const S3_S3: DoublyWarpedMetric = DoublyWarpedMetric { n1: 3, n2: 3, lambda1: 2.0, lambda2: 2.0 };
}

/// Diagonal Ricci components in the unit frame `∂_r, X/f1, Y/f2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RicciComponents<T> {
    pub rr: T,
    pub aa: T,
    pub ii: T,
}

impl<T: Real> RicciComponents<T> {
    pub fn map<U>(self, g: impl Fn(T) -> U) -> RicciComponents<U> {
        RicciComponents { rr: g(self.rr), aa: g(self.aa), ii: g(self.ii) }
    }
}

fn fiber_term<T: Real>(n: u32, lambda: f64, me: &Jet<T>, other: &Jet<T>, n_other: u32) -> T {
    let l = me.d1 / me.v;
    let lo = other.d1 / other.v;
    let nn = T::from(n as f64);
    let no = T::from(n_other as f64);
    T::from(lambda) / me.v.sqr() - me.d2 / me.v + l.sqr() - l * (nn * l + no * lo)
}

/// Ricci of `dr² + f1² g1 + f2² g2`. Callers guarantee `f1, f2 > 0`.
pub fn ricci_doubly_warped<T: Real>(m: &DoublyWarpedMetric, f1: &Jet<T>, f2: &Jet<T>) -> RicciComponents<T> {
    let rr = -(T::from(m.n1 as f64) * f1.d2 / f1.v) - T::from(m.n2 as f64) * f2.d2 / f2.v;
    let aa = fiber_term(m.n1, m.lambda1, f1, f2, m.n2);
    let ii = fiber_term(m.n2, m.lambda2, f2, f1, m.n1);
    RicciComponents { rr, aa, ii }
}

/// Structure constants `c[i][j][k] = ⟨[e_i, e_j], e_k⟩` of a frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameAlgebra {
    pub dim: usize,
    pub c: Vec<f64>,
}

impl FrameAlgebra {
    pub fn zero(dim: usize) -> Self {
        FrameAlgebra { dim, c: vec![0.0; dim * dim * dim] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[self.idx(i, j, k)]
    }

    /// Records `[e_i, e_j] ∋ v·e_k` and its antisymmetric partner.
    pub fn set_bracket(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let a = self.idx(i, j, k);
        let b = self.idx(j, i, k);
        self.c[a] = v;
        self.c[b] = -v;
    }

    pub fn max_antisymmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    m = m.max((self.get(i, j, k) + self.get(j, i, k)).abs());
                }
            }
        }
        m
    }

    /// The same algebra with frame indices relabelled by `perm` (new `i` = old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.dim;
        let mut out = FrameAlgebra::zero(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let v = self.get(perm[i], perm[j], perm[k]);
                    let at = out.idx(i, j, k);
                    out.c[at] = v;
                }
            }
        }
        out
    }

    /// Unit 3-sphere: `[e_i, e_j] = 2 ε_ijk e_k`.
    pub fn unit_s3() -> Self {
        let mut a = FrameAlgebra::zero(3);
        a.set_bracket(0, 1, 2, 2.0);
        a.set_bracket(1, 2, 0, 2.0);
        a.set_bracket(2, 0, 1, 2.0);
        a
    }
}

/// Ricci matrix of the left-invariant style metric in which the frame is orthonormal.
pub fn ricci_frame(fa: &FrameAlgebra) -> Vec<Vec<f64>> {
    let d = fa.dim;
    // gam[i][j][k] = ⟨∇_{e_i} e_j, e_k⟩
    let mut gam = vec![0.0; d * d * d];
    let at = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                gam[at(i, j, k)] = 0.5 * (fa.get(i, j, k) + fa.get(k, i, j) - fa.get(j, k, i));
            }
        }
    }
    // ⟨R(e_a, e_b) e_c, e_e⟩ = Σ_m Γ_bcm Γ_ame - Γ_acm Γ_bme - c_abm Γ_mce
    let riem = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut s = 0.0;
        for m in 0..d {
            s += gam[at(b, c, m)] * gam[at(a, m, e)] - gam[at(a, c, m)] * gam[at(b, m, e)]
                - fa.get(a, b, m) * gam[at(m, c, e)];
        }
        s
    };
    let mut ric = vec![vec![0.0; d]; d];
    for b in 0..d {
        for c in 0..d {
            ric[b][c] = (0..d).map(|i| riem(i, b, c, i)).sum();
        }
    }
    ric
}

/// Frame indices used by [`brackets_s3s3`].
pub mod frame {
    pub const T: usize = 0;
    pub const X2: usize = 1;
    pub const X3: usize = 2;
    pub const W1: usize = 3;
    pub const W2: usize = 4;
    pub const W3: usize = 5;
}

/// Brackets of `T = (U1 + kV1)/f, X2 = U2, X3 = U3, W1 = (V1 - kU1)/a,
/// W2 = V2/(ab), W3 = V3/(ab)` on S³×S³, where `U`, `V` are the standard
/// left-invariant frames of the two factors.
pub fn brackets_s3s3(k: i64, f: f64, a: f64, b: f64) -> FrameAlgebra {
    use frame::*;
    let k = k as f64;
    let q = 1.0 + k * k;
    let mut fa = FrameAlgebra::zero(6);
    fa.set_bracket(T, X2, X3, 2.0 / f);
    fa.set_bracket(X3, T, X2, 2.0 / f);
    fa.set_bracket(X2, X3, T, 2.0 * f / q);
    fa.set_bracket(X2, X3, W1, -2.0 * k * a / q);
    fa.set_bracket(T, W2, W3, 2.0 * k / f);
    fa.set_bracket(W3, T, W2, 2.0 * k / f);
    fa.set_bracket(W1, W2, W3, 2.0 / a);
    fa.set_bracket(W3, W1, W2, 2.0 / a);
    fa.set_bracket(W2, W3, T, 2.0 * k * f / (q * a * a * b * b));
    fa.set_bracket(W2, W3, W1, 2.0 / (q * a * b * b));
    fa.set_bracket(W1, X2, X3, -2.0 * k / a);
    fa.set_bracket(X3, W1, X2, -2.0 * k / a);
    fa
}

/// Pointwise data for a circle bundle with fiber length `f` over a base `B`,
/// evaluated against a unit horizontal vector `X`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct S1BundleData<T> {
    pub f: T,
    /// `Δ_B f`
    pub lap_f: T,
    /// `∇²f(X, X)`
    pub hess_f_xx: T,
    /// `|ω|²` of the curvature 2-form
    pub omega_sq: T,
    /// `|ω[X]|² = Σ_Y ω(X, Y)²`
    pub omega_x_sq: T,
    /// `(div_B ω)(X)`
    pub div_omega_x: T,
    /// `ω(X, ∇f)`
    pub omega_x_grad_f: T,
    /// `Ric_B(X, X)`
    pub ric_base_xx: T,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct S1BundleRicci<T> {
    pub uu: T,
    pub ux: T,
    pub xx: T,
}

/// Ricci of the total space in the unit fiber direction `U` and horizontal `X`.
pub fn s1_bundle_ricci<T: Real>(d: &S1BundleData<T>) -> S1BundleRicci<T> {
    let f = d.f;
    let f2 = f.sqr();
    S1BundleRicci {
        uu: -(d.lap_f / f) + f2 * d.omega_sq / T::from(4.0),
        ux: (-(f * d.div_omega_x) + T::from(3.0) * d.omega_x_grad_f) / T::from(2.0),
        xx: d.ric_base_xx - f2 * d.omega_x_sq / T::from(2.0) - d.hess_f_xx / f,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev_from(m: &[Vec<f64>], c: f64) -> f64 {
        let mut e: f64 = 0.0;
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { c } else { 0.0 };
                e = e.max((v - want).abs());
            }
        }
        e
    }

    #[test]
    fn flat_cone_times_small_sphere() {
        let d = 0.01;
        let f1 = Jet::constant(d);
        let f2 = Jet::linear(3.7, 0.0, 0.0, 1.0);
        let r = ricci_doubly_warped(&DoublyWarpedMetric::S3_S3, &f1, &f2);
        assert_eq!(r.rr, 0.0);
        assert!((r.aa - 2.0 / (d * d)).abs() < 1e-9);
        assert!(r.ii.abs() < 1e-14);
    }

    #[test]
    fn round_four_sphere() {
        let m = DoublyWarpedMetric { n1: 0, n2: 3, lambda1: 0.0, lambda2: 2.0 };
        let x = std::f64::consts::FRAC_PI_4;
        let f2 = Jet::new(x.sin(), x.cos(), -x.sin());
        let r = ricci_doubly_warped(&m, &Jet::constant(1.0), &f2);
        assert!((r.rr - 3.0).abs() < 1e-14);
        assert!((r.ii - 3.0).abs() < 1e-14);
    }

    #[test]
    fn abelian_frame_is_flat() {
        let r = ricci_frame(&FrameAlgebra::zero(6));
        assert_eq!(max_dev_from(&r, 0.0), 0.0);
    }

    #[test]
    fn unit_s3_frame() {
        assert!(max_dev_from(&ricci_frame(&FrameAlgebra::unit_s3()), 2.0) < 1e-14);
    }

    #[test]
    fn round_product_frame_entry() {
        let s = 2f64.sqrt();
        let fa = brackets_s3s3(1, s, s, 1.0 / s);
        assert!((fa.get(frame::T, frame::X2, frame::X3) - s).abs() < 1e-15);
        assert_eq!(fa.max_antisymmetry_defect(), 0.0);
        assert!(max_dev_from(&ricci_frame(&fa), 2.0) < 1e-12);
    }

    #[test]
    fn hopf_bundle_values() {
        let d = S1BundleData {
            f: 1.0,
            lap_f: 0.0,
            hess_f_xx: 0.0,
            omega_sq: 8.0,
            omega_x_sq: 4.0,
            div_omega_x: 0.0,
            omega_x_grad_f: 0.0,
            ric_base_xx: 4.0,
        };
        let r = s1_bundle_ricci(&d);
        assert_eq!((r.uu, r.ux, r.xx), (2.0, 0.0, 2.0));
    }
}
