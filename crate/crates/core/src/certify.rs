//! Bisection certifier for one-variable inequalities `F(x) ≥ margin`.
//!
//! The field is supplied as an interval extension: a function that maps an
//! interval `X` to an interval containing `F(X)`. A node is accepted when the
//! enclosure's lower end clears the margin; otherwise it is split, at a seam
//! if one lies inside, geometrically when the node spans more than a factor
//! of four, and at the midpoint otherwise.
//!
//! Counterexamples come from the same extension evaluated on a single point,
//! so a reported counterexample is itself a rigorous statement (`F(x) < margin`
//! with the enclosure's upper end below the margin).

use crate::interval::Interval;
use crate::profile::WarpProfile;
use crate::curvature::Jet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Certified,
    Counterexample { x: f64, value: f64 },
    /// Depth or node budget exhausted on `[lo, hi]` without a decision.
    Inconclusive { lo: f64, hi: f64, depth: u32 },
}

impl Status {
    pub fn is_certified(&self) -> bool {
        matches!(self, Status::Certified)
    }

    /// Severity used when merging several verdicts.
    pub fn rank(&self) -> u8 {
        match self {
            Status::Certified => 0,
            Status::Inconclusive { .. } => 1,
            Status::Counterexample { .. } => 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    pub max_depth: u32,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationResult {
    #[serde(flatten)]
    pub status: Status,
    pub stats: Stats,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyOptions {
    pub margin: f64,
    pub max_depth: u32,
    /// Per-chunk node budget; exceeding it yields an inconclusive verdict.
    pub max_nodes: u64,
    /// Points where the field is only piecewise smooth; always split there first.
    pub seams: Vec<f64>,
    /// Each seam-free stretch of the domain is cut into this many parallel chunks.
    pub chunks: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { margin: 0.0, max_depth: 40, max_nodes: 2_000_000, seams: Vec::new(), chunks: 4 }
    }
}

impl CertifyOptions {
    pub fn with_seams(mut self, seams: Vec<f64>) -> Self {
        self.seams = seams;
        self
    }

    pub fn with_margin(mut self, m: f64) -> Self {
        self.margin = m;
        self
    }

    pub fn with_depth(mut self, d: u32) -> Self {
        self.max_depth = d;
        self
    }
}

fn split_point(x: Interval, seams: &[f64]) -> f64 {
    let inside: Vec<f64> = seams.iter().copied().filter(|&s| s > x.lo && s < x.hi).collect();
    if !inside.is_empty() {
        let m = x.mid();
        return inside.into_iter().min_by(|a, b| (a - m).abs().total_cmp(&(b - m).abs())).unwrap();
    }
    if x.lo > 0.0 && x.hi / x.lo > 4.0 {
        (x.lo.sqrt() * x.hi.sqrt()).clamp(x.lo.next_up(), x.hi.next_down())
    } else if x.hi < 0.0 && x.lo / x.hi > 4.0 {
        -((-x.lo).sqrt() * (-x.hi).sqrt())
    } else {
        x.mid()
    }
}

fn run_chunk<F>(field: &F, chunk: Interval, opts: &CertifyOptions) -> (Status, Stats)
where
    F: Fn(Interval) -> Interval + Sync,
{
    let mut stats = Stats::default();
    let mut first_inconclusive: Option<Status> = None;
    let mut stack = vec![(chunk, 0u32)];
    while let Some((x, depth)) = stack.pop() {
        stats.nodes += 1;
        stats.max_depth = stats.max_depth.max(depth);
        let e = field(x);
        if e.lo >= opts.margin {
            continue;
        }
        let m = x.mid();
        for probe in [x.lo, m, x.hi] {
            let p = field(Interval::point(probe));
            if p.hi < opts.margin {
                return (Status::Counterexample { x: probe, value: p.mid() }, stats);
            }
        }
        let splittable = x.lo.next_up() < x.hi;
        if depth >= opts.max_depth || stats.nodes >= opts.max_nodes || !splittable {
            first_inconclusive.get_or_insert(Status::Inconclusive { lo: x.lo, hi: x.hi, depth });
            if stats.nodes >= opts.max_nodes {
                break;
            }
            continue;
        }
        let c = split_point(x, &opts.seams);
        // right first so the left half is explored first
        stack.push((Interval::new(c, x.hi), depth + 1));
        stack.push((Interval::new(x.lo, c), depth + 1));
    }
    (first_inconclusive.unwrap_or(Status::Certified), stats)
}

/// Top-level chunks: cut at the seams, then each stretch into `opts.chunks` parts.
fn chunks(domain: Interval, opts: &CertifyOptions) -> Vec<Interval> {
    let mut cuts = vec![domain.lo];
    let mut seams: Vec<f64> = opts.seams.iter().copied().filter(|&s| s > domain.lo && s < domain.hi).collect();
    seams.sort_by(f64::total_cmp);
    seams.dedup();
    cuts.extend(seams);
    cuts.push(domain.hi);
    let n = opts.chunks.max(1);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut prev = lo;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let x = if i == n {
                hi
            } else if lo > 0.0 && hi / lo > 4.0 {
                lo * (hi / lo).powf(t)
            } else {
                lo + t * (hi - lo)
            };
            if x > prev {
                out.push(Interval::new(prev, x));
                prev = x;
            }
        }
        if prev < hi {
            out.push(Interval::new(prev, hi));
        }
    }
    if out.is_empty() {
        out.push(domain);
    }
    out
}

/// Certifies `field ≥ opts.margin` on `domain`.
///
/// Chunks are processed in parallel and merged left to right: the leftmost
/// counterexample wins, then the leftmost inconclusive node.
pub fn certify_nonneg<F>(field: F, domain: Interval, opts: &CertifyOptions) -> CertificationResult
where
    F: Fn(Interval) -> Interval + Sync,
{
    let t0 = clock::now();
    let parts = chunks(domain, opts);
    #[cfg(feature = "parallel")]
    let results: Vec<(Status, Stats)> = parts.par_iter().map(|&c| run_chunk(&field, c, opts)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Status, Stats)> = parts.iter().map(|&c| run_chunk(&field, c, opts)).collect();
    let mut stats = Stats::default();
    let mut status = Status::Certified;
    for (s, st) in results {
        stats.nodes += st.nodes;
        stats.max_depth = stats.max_depth.max(st.max_depth);
        if s.rank() > status.rank() {
            status = s;
        }
    }
    stats.wall_ms = clock::elapsed_ms(t0);
    CertificationResult { status, stats }
}

// `std::time::Instant` panics on wasm32-unknown-unknown; timings read 0 there.
#[cfg(not(target_arch = "wasm32"))]
mod clock {
    pub fn now() -> std::time::Instant {
        std::time::Instant::now()
    }
    pub fn elapsed_ms(t: std::time::Instant) -> f64 {
        t.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(target_arch = "wasm32")]
mod clock {
    pub fn now() {}
    pub fn elapsed_ms(_: ()) -> f64 {
        0.0
    }
}

/// Profile enclosure on an interval; see [`WarpProfile::enclose`].
pub fn enclose_profile(p: &WarpProfile, x: Interval) -> Jet<Interval> {
    p.enclose(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplingAudit {
    pub samples: usize,
    pub seed: u64,
    pub min_value: f64,
    pub argmin: f64,
    pub violations: usize,
}

/// Evaluates `point` at random locations (log-uniform on positive domains
/// spanning decades) and counts values below `margin - slack`.
pub fn sampling_audit(
    point: impl Fn(f64) -> f64,
    domain: Interval,
    samples: usize,
    seed: u64,
    margin: f64,
    slack: f64,
) -> SamplingAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log = domain.lo > 0.0 && domain.hi / domain.lo > 4.0;
    let mut audit = SamplingAudit { samples, seed, min_value: f64::INFINITY, argmin: domain.lo, violations: 0 };
    for _ in 0..samples {
        let u: f64 = rng.gen();
        let x = if log { domain.lo * (domain.hi / domain.lo).powf(u) } else { domain.lo + u * domain.width() };
        let x = x.clamp(domain.lo, domain.hi);
        let v = point(x);
        if v < audit.min_value {
            audit.min_value = v;
            audit.argmin = x;
        }
        if v < margin - slack {
            audit.violations += 1;
        }
    }
    audit
}

/// Plain grid minimum of a point function, for quick looks where no interval
/// extension is available.
pub fn grid_min(point: impl Fn(f64) -> f64, domain: Interval, n: usize) -> (f64, f64) {
    let log = domain.lo > 0.0 && domain.hi / domain.lo > 4.0;
    (0..n.max(2))
        .map(|i| {
            let t = i as f64 / (n.max(2) - 1) as f64;
            let x = if log { domain.lo * (domain.hi / domain.lo).powf(t) } else { domain.lo + t * domain.width() };
            (x, point(x))
        })
        .fold((domain.lo, f64::INFINITY), |acc, (x, v)| if v < acc.1 { (x, v) } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let d = 0.01;
        let aa = 2.0 / (d * d);
        let r = certify_nonneg(|_| Interval::point(aa), Interval::new(1e-6, 1e3), &CertifyOptions::default().with_margin(aa));
        assert!(r.status.is_certified());
    }

    #[test]
    fn parabola_needs_bisection() {
        let f = |x: Interval| x.sqr() - 2.0 * x + 1.0001;
        let r = certify_nonneg(f, Interval::new(-3.0, 3.0), &CertifyOptions::default());
        assert!(r.status.is_certified(), "{r:?}");
        assert!(r.stats.nodes > 10);
    }

    #[test]
    fn counterexample_is_found_and_verified() {
        let f = |x: Interval| x.sqr() - 2.0 * x + 0.99;
        let r = certify_nonneg(f, Interval::new(-3.0, 3.0), &CertifyOptions::default());
        match r.status {
            Status::Counterexample { x, value } => {
                assert!(value < 0.0);
                assert!((x - 1.0).abs() < 0.2);
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn touching_zero_is_inconclusive() {
        let f = |x: Interval| (x - 1.0).sqr() - 1e-300;
        let r = certify_nonneg(f, Interval::new(0.0, 2.0), &CertifyOptions::default().with_depth(20));
        assert!(matches!(r.status, Status::Inconclusive { .. } | Status::Counterexample { .. }));
    }

    #[test]
    fn seams_become_chunk_boundaries() {
        let opts = CertifyOptions { chunks: 2, ..Default::default() }.with_seams(vec![1.0, 5.0]);
        let c = chunks(Interval::new(0.0, 10.0), &opts);
        assert!(c.iter().any(|i| i.hi == 1.0) && c.iter().any(|i| i.lo == 5.0));
        assert_eq!(c.first().unwrap().lo, 0.0);
        assert_eq!(c.last().unwrap().hi, 10.0);
    }
}
