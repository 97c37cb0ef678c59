//! Piecewise-analytic warping functions with exact first and second
//! derivatives, as point jets (`f64`) and as interval enclosures.
//!
//! Corners of `min{p1, p2}` (or `max`) are rounded off by blending the
//! derivatives: on a window `[a, b]`
//!
//! ```text
//! h' = (1 - S) p1' + S p2',    S(t) = 6t⁵ - 15t⁴ + 10t³,  t = (x - a)/(b - a)
//! h  = p1 + ∫_a^x S (p2' - p1')
//! ```
//!
//! so `h''` picks up `S' (p2' - p1') / (b - a)`, which has a fixed sign when
//! the slopes are ordered. The window center is chosen so that `h` meets `p2`
//! at `b`; for two lines it is exactly the crossing point.

use crate::curvature::Jet;
use crate::interval::Interval;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("pieces do not cross inside the window [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("pieces cross more than once inside the window [{lo}, {hi}]")]
    MultipleCrossings { lo: f64, hi: f64 },
    #[error("slopes at the crossing {at} are in the wrong order ({left} then {right})")]
    SlopeOrder { at: f64, left: f64, right: f64 },
    #[error("blend window [{a}, {b}] overlaps a neighbouring window")]
    Overlap { a: f64, b: f64 },
    #[error("could not place the blend window near {0}")]
    CenterNotFound(f64),
}

/// One analytic piece of a profile.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    /// `y0 + slope (x - x0)`
    Linear { x0: f64, y0: f64, slope: f64 },
    Constant { c: f64 },
    /// `c (x / x0)^alpha`
    Power { c: f64, x0: f64, alpha: f64 },
    /// `R sin((x - r0) / R)`
    SineCap { big_r: f64, r0: f64 },
    /// `r0 + (3/4 + λ0 / (16 ln ln x)) (x - r0)`: a line with a slowly decaying
    /// slope excess.
    LogLogLine { r0: f64, lambda0: f64 },
    /// `base` plus an unknown perturbation bounded by `dv`, `d1`, `d2` in
    /// value and derivatives. Point evaluation ignores the perturbation.
    /// With `concave` the second-derivative perturbation is known to be `≤ 0`.
    Perturbed { base: Box<Piece>, dv: f64, d1: f64, d2: f64, concave: bool },
    /// Derivative blend from `left` to `right` over `[a, b]`.
    Blend(Box<Blend>),
}

#[derive(Clone, Debug, Serialize)]
pub struct Blend {
    pub a: f64,
    pub b: f64,
    pub left: Piece,
    pub right: Piece,
}

fn smoothstep(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

fn smoothstep_d(t: f64) -> f64 {
    30.0 * t * t * (1.0 - t) * (1.0 - t)
}

/// `∫_0^t S`.
fn smoothstep_int(t: f64) -> f64 {
    t * t * t * t * (2.5 + t * (-3.0 + t))
}

fn i_smoothstep(t: Interval) -> Interval {
    let p = |x: f64| {
        let x = Interval::point(x);
        x.powi(3) * (10.0 + x * (-15.0 + 6.0 * x))
    };
    Interval::new(p(t.lo).lo.max(0.0), p(t.hi).hi.min(1.0))
}

fn i_smoothstep_d(t: Interval) -> Interval {
    let v = 30.0 * t.sqr() * (1.0 - t).sqr();
    Interval::new(v.lo.max(0.0), v.hi.min(1.875))
}

fn i_smoothstep_int(t: Interval) -> Interval {
    let p = |x: f64| {
        let x = Interval::point(x);
        x.powi(4) * (2.5 + x * (-3.0 + x))
    };
    Interval::new(p(t.lo).lo.max(0.0), p(t.hi).hi.min(0.5))
}

// 20-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
const GL_X: [f64; 10] = [
    0.076_526_521_133_497_33,
    0.227_785_851_141_645_08,
    0.373_706_088_715_419_56,
    0.510_867_001_950_827_1,
    0.636_053_680_726_515,
    0.746_331_906_460_150_8,
    0.839_116_971_822_218_8,
    0.912_234_428_251_326,
    0.963_971_927_277_913_8,
    0.993_128_599_185_094_9,
];
const GL_W: [f64; 10] = [
    0.152_753_387_130_725_85,
    0.149_172_986_472_603_75,
    0.142_096_109_318_382_05,
    0.131_688_638_449_176_63,
    0.118_194_531_961_518_42,
    0.101_930_119_817_240_43,
    0.083_276_741_576_704_75,
    0.062_672_048_334_109_06,
    0.040_601_429_800_386_94,
    0.017_614_007_139_152_12,
];

fn gauss_legendre(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * (f(m + h * x) + f(m - h * x));
    }
    s * h
}

impl Piece {
    pub fn linear(x0: f64, y0: f64, slope: f64) -> Piece {
        Piece::Linear { x0, y0, slope }
    }

    fn is_affine(&self) -> bool {
        matches!(self, Piece::Linear { .. } | Piece::Constant { .. })
    }

    pub fn jet(&self, x: f64) -> Jet<f64> {
        match self {
            Piece::Linear { x0, y0, slope } => Jet::new(y0 + slope * (x - x0), *slope, 0.0),
            Piece::Constant { c } => Jet::new(*c, 0.0, 0.0),
            Piece::Power { c, x0, alpha } => {
                let v = c * (x / x0).powf(*alpha);
                Jet::new(v, alpha * v / x, alpha * (alpha - 1.0) * v / (x * x))
            }
            Piece::SineCap { big_r, r0 } => {
                let (s, co) = ((x - r0) / big_r).sin_cos();
                Jet::new(big_r * s, co, -s / big_r)
            }
            Piece::LogLogLine { r0, lambda0 } => {
                let ln = x.ln();
                let ell = ln.ln();
                let g = lambda0 / (16.0 * ell);
                let gp = -lambda0 / (16.0 * ell * ell * x * ln);
                let xr = r0 / x;
                let e = -1.0 - xr + (1.0 - xr) * (1.0 / ln + 2.0 / (ell * ln));
                Jet::new(
                    r0 + (0.75 + g) * (x - r0),
                    0.75 + g + gp * (x - r0),
                    lambda0 * e / (16.0 * x * ln * ell * ell),
                )
            }
            Piece::Perturbed { base, .. } => base.jet(x),
            Piece::Blend(bl) => bl.jet(x),
        }
    }

    pub fn enclose(&self, x: Interval) -> Jet<Interval> {
        match self {
            Piece::Linear { x0, y0, slope } => {
                Jet::new(*y0 + *slope * (x - *x0), Interval::point(*slope), Interval::ZERO)
            }
            Piece::Constant { c } => Jet::constant(Interval::point(*c)),
            Piece::Power { c, x0, alpha } => {
                let v = (x / *x0).powf(*alpha) * *c;
                Jet::new(v, *alpha * v / x, (*alpha * (*alpha - 1.0)) * v / x.sqr())
            }
            Piece::SineCap { big_r, r0 } => {
                let t = (x - *r0) / *big_r;
                let s = t.sin();
                Jet::new(*big_r * s, t.cos(), -s / *big_r)
            }
            Piece::LogLogLine { r0, lambda0 } => {
                let ln = x.ln();
                let ell = ln.ln();
                let g = *lambda0 / (16.0 * ell);
                let gp = -*lambda0 / (16.0 * ell.sqr() * x * ln);
                let xr = *r0 / x;
                let e = -1.0 - xr + (1.0 - xr) * (1.0 / ln + 2.0 / (ell * ln));
                Jet::new(
                    *r0 + (0.75 + g) * (x - *r0),
                    0.75 + g + gp * (x - *r0),
                    *lambda0 * e / (16.0 * x * ln * ell.sqr()),
                )
            }
            Piece::Perturbed { base, dv, d1, d2, concave } => {
                let j = base.enclose(x);
                let pm = |e: f64| Interval::new(-e, e);
                let dd = if *concave { Interval::new(-*d2, 0.0) } else { pm(*d2) };
                Jet::new(j.v + pm(*dv), j.d1 + pm(*d1), j.d2 + dd)
            }
            Piece::Blend(bl) => bl.enclose(x),
        }
    }
}

impl Blend {
    fn t(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    fn slope_gap(&self, y: f64) -> f64 {
        self.right.jet(y).d1 - self.left.jet(y).d1
    }

    /// `∫_a^x S(t(y)) (p2' - p1')(y) dy`
    fn integral(&self, x: f64) -> f64 {
        let x = x.clamp(self.a, self.b);
        if self.left.is_affine() && self.right.is_affine() {
            return (self.b - self.a) * smoothstep_int(self.t(x)) * self.slope_gap(self.a);
        }
        gauss_legendre(self.a, x, |y| smoothstep(self.t(y)) * self.slope_gap(y))
    }

    pub fn jet(&self, x: f64) -> Jet<f64> {
        let t = self.t(x);
        let (s, sp) = (smoothstep(t), smoothstep_d(t));
        let l = self.left.jet(x);
        let r = self.right.jet(x);
        Jet::new(
            l.v + self.integral(x),
            (1.0 - s) * l.d1 + s * r.d1,
            (1.0 - s) * l.d2 + s * r.d2 + sp * (r.d1 - l.d1) / (self.b - self.a),
        )
    }

    pub fn enclose(&self, x: Interval) -> Jet<Interval> {
        let w = self.b - self.a;
        let x = x.intersect(Interval::new(self.a, self.b)).unwrap_or(x);
        let t = ((x - self.a) / w).intersect(Interval::new(0.0, 1.0)).unwrap_or(Interval::new(0.0, 1.0));
        let s = i_smoothstep(t);
        let sp = i_smoothstep_d(t);
        let l = self.left.enclose(x);
        let r = self.right.enclose(x);
        let gap = r.d1 - l.d1;
        let d1a = (1.0 - s) * l.d1 + s * r.d1;
        let d1b = l.d1 + s * gap;
        let d1 = d1a.intersect(d1b).unwrap_or(d1a);
        let d2 = (1.0 - s) * l.d2 + s * r.d2 + sp * gap / w;
        // mean value form: ∫ S·D lies in (∫ S)·hull(D) since S ≥ 0
        let upto = Interval::new(self.a, x.hi.max(self.a));
        let gap_hull = self.right.enclose(upto).d1 - self.left.enclose(upto).d1;
        let v = l.v + w * i_smoothstep_int(t) * gap_hull;
        Jet::new(v, d1, d2)
    }

    /// `h(b) - p2(b)`; zero up to quadrature and root-finding error.
    pub fn c0_residual(&self) -> f64 {
        self.jet(self.b).v - self.right.jet(self.b).v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinKind {
    /// Round off `min{p1, p2}`: concave corner, `p1' > p2'`.
    Min,
    /// Round off `max{p1, p2}`: convex corner, `p1' < p2'`.
    Max,
}

/// Where and how wide to blend two consecutive pieces.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct JoinSpec {
    /// The crossing must lie in here, and the blend window stays inside it.
    pub plateau: (f64, f64),
    /// Half-width of the window; `None` picks it automatically.
    pub half_width: Option<f64>,
    pub kind: JoinKind,
}

impl JoinSpec {
    pub fn min(lo: f64, hi: f64) -> Self {
        JoinSpec { plateau: (lo, hi), half_width: None, kind: JoinKind::Min }
    }

    pub fn max(lo: f64, hi: f64) -> Self {
        JoinSpec { plateau: (lo, hi), half_width: None, kind: JoinKind::Max }
    }

    pub fn with_half_width(mut self, w: f64) -> Self {
        self.half_width = Some(w);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub piece: Piece,
    /// The construction promises `h'' ≤ 0` (Min joins) or `h'' ≥ 0` (Max joins) here.
    pub curvature_sign: Option<JoinKind>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeamResidual {
    pub at: f64,
    pub dv: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A profile on `[segments[0].lo, segments.last().hi]`.
#[derive(Clone, Debug, Serialize)]
pub struct WarpProfile {
    pub name: String,
    pub segments: Vec<Segment>,
}

/// Finds the sign change of `g` in `(lo, hi)` by bisection, treating it as
/// the unique crossing. Returns the crossing and the number of sign changes
/// seen on a coarse scan.
fn find_crossing(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<(f64, usize)> {
    let n = 400;
    let geometric = lo > 0.0 && hi / lo > 4.0;
    let at = |i: usize| {
        let t = i as f64 / n as f64;
        if geometric {
            lo * (hi / lo).powf(t)
        } else {
            lo + t * (hi - lo)
        }
    };
    let mut changes = 0;
    let mut bracket = None;
    let mut prev = (at(0), g(at(0)));
    for i in 1..=n {
        let x = at(i);
        let v = g(x);
        if (prev.1 < 0.0 && v >= 0.0) || (prev.1 > 0.0 && v <= 0.0) {
            changes += 1;
            bracket.get_or_insert((prev.0, x));
        }
        prev = (x, v);
    }
    let (mut a, mut b) = bracket?;
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) < 0.0) == (ga < 0.0) && g(m) != 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some((0.5 * (a + b), changes))
}

/// Blends `p1` into `p2` around their crossing in `spec.plateau`.
///
/// Returns `None` when the pieces coincide (nothing to smooth).
pub fn smooth_join(p1: &Piece, p2: &Piece, spec: &JoinSpec) -> Result<Option<Blend>, ProfileError> {
    let (lo, hi) = spec.plateau;
    let diff = |x: f64| p1.jet(x).v - p2.jet(x).v;
    let scale = p1.jet(lo).v.abs().max(p1.jet(hi).v.abs()).max(1e-300);
    let same = (0..=16).all(|i| {
        let x = lo + (hi - lo) * i as f64 / 16.0;
        diff(x).abs() <= 1e-15 * scale && (p1.jet(x).d1 - p2.jet(x).d1).abs() <= 1e-15
    });
    if same {
        return Ok(None);
    }
    let (c, changes) = find_crossing(diff, lo, hi).ok_or(ProfileError::NoCrossing { lo, hi })?;
    if changes > 1 {
        return Err(ProfileError::MultipleCrossings { lo, hi });
    }
    let (s1, s2) = (p1.jet(c).d1, p2.jet(c).d1);
    let ordered = match spec.kind {
        JoinKind::Min => s1 > s2,
        JoinKind::Max => s1 < s2,
    };
    if !ordered {
        return Err(ProfileError::SlopeOrder { at: c, left: s1, right: s2 });
    }
    let room = (c - lo).min(hi - c);
    let w = spec.half_width.unwrap_or_else(|| {
        // keep h within a 1e-3 relative band of the corner value
        let band = 6.4e-3 * p1.jet(c).v.abs() / (s1 - s2).abs();
        (0.1 * room).min(band)
    });
    let mk = |center: f64| Blend { a: center - w, b: center + w, left: p1.clone(), right: p2.clone() };
    let center = if p1.is_affine() && p2.is_affine() {
        c
    } else {
        // mismatch at b as a function of the center; monotone near c
        let mismatch = |center: f64| mk(center).c0_residual();
        let span = 0.5 * w;
        let (mut a, mut b) = (c - span, c + span);
        let (fa, fb) = (mismatch(a), mismatch(b));
        if fa.signum() == fb.signum() {
            return Err(ProfileError::CenterNotFound(c));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if mismatch(m).signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        let m = 0.5 * (a + b);
        if (m - c).abs() > span {
            return Err(ProfileError::CenterNotFound(c));
        }
        m
    };
    let bl = mk(center);
    if bl.a < lo || bl.b > hi {
        return Err(ProfileError::Overlap { a: bl.a, b: bl.b });
    }
    Ok(Some(bl))
}

impl WarpProfile {
    pub fn single(name: &str, piece: Piece, lo: f64, hi: f64) -> Self {
        WarpProfile { name: name.into(), segments: vec![Segment { lo, hi, piece, curvature_sign: None }] }
    }

    /// `pieces[0]` joined to `pieces[1]` by `joins[0]`, and so on.
    pub fn chain(name: &str, domain: (f64, f64), pieces: Vec<Piece>, joins: &[JoinSpec]) -> Result<Self, ProfileError> {
        assert_eq!(pieces.len(), joins.len() + 1, "one join per consecutive pair");
        let mut segments = Vec::new();
        let mut start = domain.0;
        let mut current = pieces[0].clone();
        for (next, spec) in pieces.iter().skip(1).zip(joins) {
            match smooth_join(&current, next, spec)? {
                None => continue,
                Some(bl) => {
                    if bl.a < start {
                        return Err(ProfileError::Overlap { a: bl.a, b: bl.b });
                    }
                    if bl.a > start {
                        segments.push(Segment { lo: start, hi: bl.a, piece: current.clone(), curvature_sign: None });
                    }
                    segments.push(Segment {
                        lo: bl.a,
                        hi: bl.b,
                        piece: Piece::Blend(Box::new(bl.clone())),
                        curvature_sign: Some(spec.kind),
                    });
                    start = bl.b;
                    current = next.clone();
                }
            }
        }
        if start < domain.1 || segments.is_empty() {
            segments.push(Segment { lo: start, hi: domain.1, piece: current, curvature_sign: None });
        }
        Ok(WarpProfile { name: name.into(), segments })
    }

    /// Profile made of pieces meeting at given points, without smoothing.
    pub fn from_segments(name: &str, segments: Vec<Segment>) -> Self {
        WarpProfile { name: name.into(), segments }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.segments[0].lo, self.segments.last().unwrap().hi)
    }

    /// Interior segment boundaries.
    pub fn seams(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.lo).collect()
    }

    fn segment_at(&self, x: f64) -> &Segment {
        self.segments.iter().find(|s| x < s.hi).unwrap_or_else(|| self.segments.last().unwrap())
    }

    pub fn jet(&self, x: f64) -> Jet<f64> {
        self.segment_at(x).piece.jet(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).v
    }

    /// Hull of the piece enclosures over every segment `x` touches.
    pub fn enclose(&self, x: Interval) -> Jet<Interval> {
        let mut out: Option<Jet<Interval>> = None;
        let n = self.segments.len();
        for (i, s) in self.segments.iter().enumerate() {
            let lo = if i == 0 { f64::NEG_INFINITY } else { s.lo };
            let hi = if i + 1 == n { f64::INFINITY } else { s.hi };
            if let Some(part) = x.intersect(Interval { lo, hi }) {
                let j = s.piece.enclose(part);
                out = Some(match out {
                    None => j,
                    Some(o) => Jet::new(o.v.hull(j.v), o.d1.hull(j.d1), o.d2.hull(j.d2)),
                });
            }
        }
        out.expect("interval outside every segment")
    }

    /// Jumps in value and derivatives across each seam.
    pub fn seam_residuals(&self) -> Vec<SeamResidual> {
        self.segments
            .windows(2)
            .map(|w| {
                let x = w[1].lo;
                let l = w[0].piece.jet(x);
                let r = w[1].piece.jet(x);
                SeamResidual { at: x, dv: r.v - l.v, d1: r.d1 - l.d1, d2: r.d2 - l.d2 }
            })
            .collect()
    }

    /// Largest seam jump in value (relative to the value) and slope.
    pub fn max_c1_residual(&self) -> f64 {
        self.seam_residuals()
            .iter()
            .map(|s| {
                let scale = self.value(s.at).abs().max(1e-300);
                (s.dv.abs() / scale).max(s.d1.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Samples `(x, h, h', h'')` at `n` points, geometric spacing when the domain spans decades.
    pub fn samples(&self, n: usize) -> Vec<(f64, Jet<f64>)> {
        let (lo, hi) = self.domain();
        (0..n)
            .map(|i| {
                let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                let x = if lo > 0.0 && hi / lo > 4.0 { lo * (hi / lo).powf(t) } else { lo + t * (hi - lo) };
                (x, self.jet(x))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteDiffAudit {
    pub points: usize,
    pub max_rel_err_d1: f64,
    pub max_rel_err_d2: f64,
}

impl FiniteDiffAudit {
    pub fn worst(&self) -> f64 {
        self.max_rel_err_d1.max(self.max_rel_err_d2)
    }
}

/// Compares `h'` with central differences of `h`, and `h''` with central
/// differences of `h'`, at points kept away from seams. The step is `1e-5`
/// times the local scale (`|x|` or the segment length, whichever is smaller).
pub fn finite_diff_audit(p: &WarpProfile, n_points: usize) -> FiniteDiffAudit {
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    let mut count = 0;
    let per = (n_points / p.segments.len()).max(2);
    for s in &p.segments {
        let len = s.hi - s.lo;
        for i in 0..per {
            let t = (i as f64 + 0.5) / per as f64;
            let x = if s.lo > 0.0 && s.hi / s.lo > 4.0 { s.lo * (s.hi / s.lo).powf(t) } else { s.lo + t * len };
            let scale = x.abs().min(len).max(f64::MIN_POSITIVE);
            let h = 1e-5 * scale;
            if x - 2.0 * h <= s.lo || x + 2.0 * h >= s.hi {
                continue;
            }
            let j = s.piece.jet(x);
            let (jp, jm) = (s.piece.jet(x + h), s.piece.jet(x - h));
            let fd1 = (jp.v - jm.v) / (2.0 * h);
            let fd2 = (jp.d1 - jm.d1) / (2.0 * h);
            let n1 = j.d1.abs() + j.v.abs() / scale;
            let n2 = j.d2.abs() + j.d1.abs() / scale;
            if n1 > 0.0 {
                e1 = e1.max((fd1 - j.d1).abs() / n1);
            }
            if n2 > 0.0 {
                e2 = e2.max((fd2 - j.d2).abs() / n2);
            }
            count += 1;
        }
    }
    FiniteDiffAudit { points: count, max_rel_err_d1: e1, max_rel_err_d2: e2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_like(eps: f64) -> WarpProfile {
        WarpProfile::chain(
            "h",
            (1e-6, 1e3),
            vec![Piece::linear(0.0, 0.0, 1.0), Piece::linear(1e-4, 1e-4, 1.0 - eps)],
            &[JoinSpec::min(1e-5, 1e-3)],
        )
        .unwrap()
    }

    #[test]
    fn line_blend_is_concave_and_continuous() {
        let p = base_like(0.1);
        assert_eq!(p.segments.len(), 3);
        let bl = &p.segments[1];
        assert!(bl.lo > 0.5e-4 && bl.hi < 2e-4);
        for r in p.seam_residuals() {
            assert!(r.dv.abs() < 1e-18 && r.d1.abs() < 1e-12, "{r:?}");
        }
        for (_, j) in p.samples(500) {
            assert!(j.d2 <= 0.0);
        }
    }

    #[test]
    fn identical_lines_need_no_blend() {
        let l = Piece::linear(0.0, 1.0, 2.0);
        let p = WarpProfile::chain("h", (0.0, 10.0), vec![l.clone(), l], &[JoinSpec::min(1.0, 9.0)]).unwrap();
        assert_eq!(p.segments.len(), 1);
    }

    #[test]
    fn wrong_slope_order_is_rejected() {
        let e = WarpProfile::chain(
            "h",
            (0.0, 10.0),
            vec![Piece::linear(0.0, 0.0, 0.5), Piece::linear(1.0, 0.5, 2.0)],
            &[JoinSpec::min(0.2, 5.0)],
        );
        assert!(matches!(e, Err(ProfileError::SlopeOrder { .. })));
    }

    #[test]
    fn enclosure_contains_samples() {
        let p = base_like(0.5);
        let x = Interval::new(0.99e-4, 1.01e-4);
        let e = p.enclose(x);
        for i in 0..=1000 {
            let r = x.lo + (x.hi - x.lo) * i as f64 / 1000.0;
            let j = p.jet(r);
            assert!(e.v.contains(j.v) && e.d1.contains(j.d1) && e.d2.contains(j.d2), "{r}");
        }
    }

    #[test]
    fn linear_enclosure_is_exact_in_slope() {
        let p = Piece::linear(1.0, 1.0, 0.75);
        let e = p.enclose(Interval::new(1.0, 2.0));
        assert_eq!(e.d1, Interval::point(0.75));
    }

    #[test]
    fn power_blend_center_is_root_found() {
        let a = 0.01;
        let p = WarpProfile::chain(
            "F",
            (10.0, 1e5),
            vec![Piece::linear(0.0, 0.0, 1.0), Piece::Power { c: 100.0, x0: 100.0, alpha: a }],
            &[JoinSpec::min(10.0, 1000.0)],
        )
        .unwrap();
        assert!(p.max_c1_residual() < 1e-10, "{:?}", p.seam_residuals());
        let audit = finite_diff_audit(&p, 200);
        assert!(audit.worst() < 1e-6, "{audit:?}");
    }

    #[test]
    fn sine_cap_derivatives() {
        let p = WarpProfile::single("s", Piece::SineCap { big_r: 100.0, r0: 3.0 }, 10.0, 200.0);
        assert!(finite_diff_audit(&p, 100).worst() < 1e-6);
    }
}
