//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 7 asks for an exhaustive carry audit over every chain with
//! `k_{≤J} ≤ 10⁴`. That is about 1.4·10¹³ tail pairs; the run covers a stated
//! subset, prints FAIL with the scope, and does not fail the process.

use hopfwarp::certify::{CertifyOptions, Status};
use hopfwarp::curvature::{brackets_s3s3, ricci_doubly_warped, ricci_frame, DoublyWarpedMetric, Jet};
use hopfwarp::hopf::equivariance_residuals;
use hopfwarp::huge::{Pos, Tower};
use hopfwarp::pipelines::{build_base_model, build_step2_chain, solve_hat_cap, solve_sine_cap, Stage, Step2Params};
use hopfwarp::qz::GeneratorChain;
use hopfwarp::snowflake::{
    carry_audit, chains_up_to, check_graph_laws, classify_tangent_cone, enumerate_cones, CarryAudit, ChainPolicy,
    ConeKind, KLimit, ScaleRegime,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Criteria whose full scope is out of reach; a FAIL here is reported, not fatal.
const SCOPE_LIMITED: [u32; 1] = [7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn finite_positive(p: &Pos) -> bool {
    let x = match p.ln {
        Tower::Fin(x) => x,
        Tower::Exp { x, .. } => x,
    };
    x.lo.is_finite() && x.hi.is_finite()
}

fn c1_round_product() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [1i64, 2, 3, 5] {
        let q = (1.0 + (k * k) as f64).sqrt();
        let ric = ricci_frame(&brackets_s3s3(k, q, q, 1.0 / q));
        for (i, row) in ric.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                worst = worst.max((v - if i == j { 2.0 } else { 0.0 }).abs());
            }
        }
    }
    outcome(worst < 1e-10, format!("max |Ric - 2I| = {worst:.2e} over k = 1,2,3,5"))
}

/// The three specialised systems, written out by hand.
fn c2_specializations() -> Outcome {
    let m = DoublyWarpedMetric::S3_S3;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        // constant sphere factor of radius δ against a free h
        let r: f64 = rng.gen_range(1e-3..1e3);
        let delta: f64 = rng.gen_range(0.01..1.0);
        let h = Jet::new(rng.gen_range(0.1..2.0) * r, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0) / r);
        let got = ricci_doubly_warped(&m, &Jet::constant(delta), &h);
        let want = [-3.0 * h.d2 / h.v, 2.0 / (delta * delta), 2.0 * (1.0 - h.d1 * h.d1) / (h.v * h.v) - h.d2 / h.v];
        worst = worst.max(rel(got.rr, want[0])).max(rel(got.aa, want[1])).max(rel(got.ii, want[2]));

        // two free factors
        let f = Jet::new(rng.gen_range(0.01..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let h = Jet::new(rng.gen_range(0.01..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let got = ricci_doubly_warped(&m, &f, &h);
        let (lf, lh) = (f.d1 / f.v, h.d1 / h.v);
        let want = [
            -3.0 * h.d2 / h.v - 3.0 * f.d2 / f.v,
            2.0 / (f.v * f.v) - f.d2 / f.v - lf * (2.0 * lf + 3.0 * lh),
            2.0 * (1.0 - h.d1 * h.d1) / (h.v * h.v) - h.d2 / h.v - 3.0 * lh * lf,
        ];
        worst = worst.max(rel(got.rr, want[0])).max(rel(got.aa, want[1])).max(rel(got.ii, want[2]));

        // linear first factor δ₂(r + c₂)
        let r: f64 = rng.gen_range(1.0..1e4);
        let (d2, c2) = (rng.gen_range(1e-3..0.5), rng.gen_range(1e2..1e5));
        let x = r + c2;
        let f = Jet::new(d2 * x, d2, 0.0);
        let h = Jet::new(rng.gen_range(0.05..0.2) * x, rng.gen_range(0.0..1.0 / 6.0), -rng.gen_range(0.0..1.0) / x);
        let got = ricci_doubly_warped(&m, &f, &h);
        let lh = h.d1 / h.v;
        let want = [
            -3.0 * h.d2 / h.v,
            2.0 / (d2 * d2 * x * x) - (2.0 / x + 3.0 * lh) / x,
            2.0 * (1.0 - h.d1 * h.d1) / (h.v * h.v) - h.d2 / h.v - 3.0 / x * lh,
        ];
        worst = worst.max(rel(got.rr, want[0])).max(rel(got.aa, want[1])).max(rel(got.ii, want[2]));
    }
    outcome(worst < 1e-12, format!("max relative residual {worst:.2e} over 3 systems x 20 radii"))
}

fn c3_equivariance() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut phi1: f64 = 0.0;
    for k in [1, 2, 3, 5] {
        let r = equivariance_residuals(k, 1000, 3 + k as u64);
        worst = worst.max(r.left_residual).max(r.right_residual);
        phi1 = phi1.max(r.phi1_formula_residual);
    }
    outcome(
        worst < 1e-12 && phi1 <= 4.0 * f64::EPSILON,
        format!("max residual {worst:.2e} over 1000 samples, k = 1,2,3,5; phi_1 vs its group formula {phi1:.1e} (rounding only)"),
    )
}

fn c4_base(opts: &CertifyOptions) -> Outcome {
    let mut bad = Vec::new();
    for eps in [0.1, 0.5, 0.9] {
        for delta in [0.01, 1.0] {
            match build_base_model(eps, delta, opts) {
                Ok(m) => {
                    let ric = m.report.verdicts.iter().filter(|v| v.component.starts_with("ric_")).count();
                    let on_domain = m.report.domain == [1e-6, 1e3];
                    if !(m.report.certified && m.aa_exact && ric == 3 && on_domain) {
                        bad.push(format!("({eps},{delta})"));
                    }
                }
                Err(e) => bad.push(format!("({eps},{delta}): {e}")),
            }
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "6/6 models: rr, aa, ii certified >= 0 on [1e-6, 1e3], aa = 2/delta^2 bit-exact".into() } else { format!("failed: {}", bad.join(", ")) })
}

fn c5_step2(opts: &CertifyOptions) -> (Outcome, Vec<Stage>) {
    let t = Instant::now();
    let chain = match build_step2_chain(&Step2Params::new(0.5, 0.01, 0.01, 3), opts) {
        Ok(c) => c,
        Err(e) => return (outcome(false, format!("chain failed: {e}")), Vec::new()),
    };
    let secs = t.elapsed().as_secs_f64();
    let names: Vec<&str> = chain.reports.iter().map(|r| r.stage.as_str()).collect();
    // the twisting family enters X4.B only
    let x4_labeled = chain.report("X4.B").is_some_and(|r| r.conditional_on.is_some());
    let uncertified: Vec<&str> = chain.reports.iter().filter(|r| !r.certified).map(|r| r.stage.as_str()).collect();
    let pass = uncertified.is_empty()
        && x4_labeled
        && names.first() == Some(&"X1")
        && names.last() == Some(&"X7")
        && finite_positive(&chain.big_r)
        && finite_positive(&chain.delta_hat)
        && secs < 300.0;
    let detail = format!(
        "{} stages certified, X4 conditional on (M, c0) = ({}, {}); R = {}, delta_hat = {}; {secs:.1} s{}",
        chain.reports.len() - uncertified.len(),
        chain.params.m,
        chain.params.c0,
        chain.big_r.text(),
        chain.delta_hat.text(),
        if uncertified.is_empty() { String::new() } else { format!("; not certified: {}", uncertified.join(",")) }
    );
    (outcome(pass, detail), chain.stages)
}

fn c6_caps(opts: &CertifyOptions) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for _ in 0..20 {
        let eps: f64 = rng.gen_range(0.05..0.9);
        let eps_p = eps * (1.0 - rng.gen_range(0.001..0.01));
        let eps_hat = 10f64.powf(rng.gen_range(-5.0..-2.0));
        let k: u32 = rng.gen_range(1..=8);
        let tuple = format!("({eps:.4},{eps_p:.4},{eps_hat:.2e},{k})");
        let (cap, hat) = match solve_sine_cap(eps, eps_p, k, opts)
            .and_then(|c| solve_hat_cap(c.big_r, eps_hat, None, opts).map(|h| (c, h)))
        {
            Ok(x) => x,
            Err(e) => {
                bad.push(format!("{tuple}: {e}"));
                continue;
            }
        };
        // tangency recomputed from the returned constants
        let (r, rr, kk) = (cap.big_r, cap.r_r, k as f64);
        let touch = |s: f64, slope: f64, line: f64| {
            let a = (s - rr) / r;
            ((r * a.sin() - line) / r).abs() + (a.cos() - slope).abs()
        };
        let res = touch(cap.s1, 1.0 - eps_p, (1.0 - eps_p) * cap.s1).max(touch(
            cap.s2,
            1.0 - eps,
            (1.0 - eps) * (cap.s2 + cap.r_eps),
        ));
        let a = (hat.s_hat - hat.r_hat_r) / r;
        let res = res.max(((r * a.sin() - (1.0 - eps_hat) * hat.s_hat) / r).abs() + (a.cos() - (1.0 - eps_hat)).abs());
        worst = worst.max(res).max(cap.max_residual()).max(hat.residual);
        let (se, sp) = (eps.sqrt(), eps_p.sqrt());
        let bands = (r - 1e2 * kk / (2.0 * eps).sqrt()).abs() <= 1e3 * kk * (se + (se - sp) / se)
            && rr <= 1e2 * kk * eps_p
            && (hat.s_hat - (2.0 * eps_hat).sqrt() * r).abs() <= (eps_hat + 2f64.sqrt() * eps_hat.powf(1.5)) * r;
        if !(bands && cap.bands_hold() && hat.bands_hold()) || hat.eps_hat != eps_hat {
            bad.push(format!("{tuple}: bands"));
        }
    }
    let pass = bad.is_empty() && worst < 1e-10;
    outcome(pass, format!("20 tuples, max tangency residual {worst:.2e}, bands {}", if bad.is_empty() { "hold".into() } else { bad.join("; ") }))
}

fn c7_carry() -> Outcome {
    let small = chains_up_to(500);
    let boundary: [&[u64]; 7] = [&[2, 5000], &[5000, 2], &[100, 100], &[10, 10, 10, 10], &[2, 2, 2, 2, 625], &[16, 625], &[10000]];
    let mut a = small.par_iter().map(|c| carry_audit(c)).reduce(CarryAudit::default, |mut x, y| {
        x.merge(&y);
        x
    });
    for c in boundary {
        a.merge(&carry_audit(c));
    }
    let scope = format!(
        "{} pairs over {} chains (every chain with k_<=J <= 500, plus 7 chains at 10^4): {} violations, {} oracle mismatches; \
         the full 10^4 scope is ~1.4e13 pairs and was not run",
        a.pairs,
        a.chains,
        a.violations,
        a.oracle_mismatches
    );
    // the criterion is exhaustiveness at 10^4, which this run does not reach
    outcome(false, scope)
}

fn c8_graph() -> Outcome {
    let chains = chains_up_to(1000);
    let broken: Vec<String> = chains
        .par_iter()
        .filter_map(|ks| {
            let laws = check_graph_laws(&GeneratorChain::new(ks.clone()).unwrap(), 4);
            match laws {
                Ok(l) if l.all_hold() => None,
                Ok(l) => Some(format!("{ks:?}: {l:?}")),
                Err(e) => Some(format!("{ks:?}: {e}")),
            }
        })
        .collect();
    let n = chains.len();
    outcome(
        broken.is_empty(),
        if broken.is_empty() {
            format!("{n} chains with k_<=J <= 1000: in-degree, projection, freeness, transitivity, action law, Q/Z route cross-check")
        } else {
            format!("{} of {n} chains broke: {}", broken.len(), broken[..broken.len().min(3)].join("; "))
        },
    )
}

fn c9_cones() -> Outcome {
    use KLimit::{Finite, Infinite};
    use ScaleRegime::*;
    let lens = |s: f64, k: u64| ConeKind::LensCone { s, k };
    // (regime, limit, expected kind, expected offset); None = invalid combination
    let table: Vec<(ScaleRegime, KLimit, Option<(ConeKind, Option<f64>)>)> = vec![
        (AtRj, Finite(1), Some((ConeKind::R4, Some(1.0)))),
        (AtRj, Finite(5), Some((lens(1.0, 5), Some(5.0)))),
        (AtRj, Infinite, Some((ConeKind::R3xS1, None))),
        (BetweenRjAndOrbit, Finite(5), None),
        (BetweenRjAndOrbit, Infinite, Some((ConeKind::R3, None))),
        (AtOrbitScale, Finite(5), None),
        (AtOrbitScale, Infinite, Some((ConeKind::S2Cone { radius: 0.5 }, Some(1.0)))),
        (BetweenOrbitAndNext { s: 0.5 }, Finite(5), Some((lens(0.5, 5), None))),
        (BetweenOrbitAndNext { s: 0.5 }, Finite(1), Some((lens(0.5, 1), None))),
        (BetweenOrbitAndNext { s: 1.0 }, Finite(1), Some((ConeKind::R4, None))),
        (BetweenOrbitAndNext { s: 0.0 }, Finite(5), Some((ConeKind::HalfLine, None))),
        (BetweenOrbitAndNext { s: 0.0 }, Infinite, Some((ConeKind::HalfLine, None))),
        (BetweenOrbitAndNext { s: 0.5 }, Infinite, None),
        (ApproachingNext, Finite(5), Some((ConeKind::R4, None))),
        (ApproachingNext, Infinite, Some((ConeKind::R4, None))),
    ];
    let mut wrong = Vec::new();
    for (regime, limit, want) in &table {
        let got = classify_tangent_cone(*regime, *limit).ok().map(|d| (d.kind, d.basepoint_offset));
        if got != *want {
            wrong.push(format!("{regime:?}/{limit:?}: {got:?}"));
        }
    }
    let census = enumerate_cones(ChainPolicy::CyclicIntegers, 6);
    let twice = match &census {
        Ok(c) => c.requirement_met && (2..=6).all(|k| c.prefix.iter().filter(|&&x| x == k).count() >= 2),
        Err(_) => false,
    };
    let prefix_len = census.map(|c| c.prefix.len()).unwrap_or(0);
    outcome(
        wrong.is_empty() && twice,
        format!(
            "{}/{} table cases match across 6 regime families; cyclic integers: every k in 2..=6 twice within a prefix of {prefix_len}{}",
            table.len() - wrong.len(),
            table.len(),
            if wrong.is_empty() { String::new() } else { format!("; wrong: {}", wrong.join(", ")) }
        ),
    )
}

fn c10_soundness(opts: &CertifyOptions, step2: &[Stage]) -> Outcome {
    let mut stages: Vec<Stage> = Vec::new();
    for eps in [0.1, 0.5, 0.9] {
        for delta in [0.01, 1.0] {
            stages.push(hopfwarp::pipelines::base_stage(eps, delta).expect("base stage"));
        }
    }
    stages.extend(step2.iter().cloned());
    let deep = opts.clone().with_depth(opts.max_depth * 2);
    let (mut fields, mut certified, mut violations, mut unstable) = (0, 0, 0, Vec::new());
    for (si, stage) in stages.iter().enumerate() {
        for (fi, field) in stage.fields.iter().enumerate() {
            fields += 1;
            let a = field.certify(opts).status;
            let b = field.certify(&deep).status;
            if a.rank() != b.rank() && !(matches!(a, Status::Inconclusive { .. }) && b.is_certified()) {
                unstable.push(format!("{}:{}", stage.name, field.component));
            }
            if a.is_certified() {
                certified += 1;
                let audit = field.audit(100_000, (si * 100 + fi) as u64);
                if audit.violations > 0 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && unstable.is_empty(),
        format!(
            "{certified}/{fields} fields certified, 1e5 samples each: {violations} violated; verdicts at depth {} vs {}: {}",
            opts.max_depth,
            deep.max_depth,
            if unstable.is_empty() { "stable".into() } else { format!("changed on {}", unstable.join(",")) }
        ),
    )
}

fn main() {
    let opts = CertifyOptions::default();
    let mut failures = Vec::new();
    let mut report = |n: u32, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {n:>2} {name}: {} [{:.1} s]", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            failures.push(n);
        }
    };
    let mut step2 = Vec::new();
    report(1, "round-product frame oracle", &mut c1_round_product);
    report(2, "specialization identities", &mut c2_specializations);
    report(3, "equivariance", &mut c3_equivariance);
    report(4, "base model certification", &mut || c4_base(&opts));
    report(5, "step-2 chain", &mut || {
        let (o, s) = c5_step2(&opts);
        step2 = s;
        o
    });
    report(6, "sine and hat caps", &mut || c6_caps(&opts));
    report(7, "carry law", &mut c7_carry);
    report(8, "graph laws", &mut c8_graph);
    report(9, "cone classifier", &mut c9_cones);
    report(10, "certifier soundness audit", &mut || c10_soundness(&opts, &step2));
    let fatal: Vec<u32> = failures.iter().copied().filter(|n| !SCOPE_LIMITED.contains(n)).collect();
    println!(
        "acceptance: {} of 10 passed; scope-limited failures {:?}; other failures {:?}",
        10 - failures.len(),
        failures.iter().filter(|n| SCOPE_LIMITED.contains(n)).collect::<Vec<_>>(),
        fatal
    );
    if !fatal.is_empty() {
        std::process::exit(1);
    }
}
