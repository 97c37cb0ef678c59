//! `hopfwarp`: batch front end for the certification pipelines.
//!
//! Each subcommand prints a JSON report on stdout (DOT or a text table where
//! asked) and exits 0 when everything requested certified, 2 on a
//! counterexample, 3 when a verdict is inconclusive and 1 on usage errors.

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hopfwarp::certify::CertifyOptions;
use hopfwarp::config::{fmt17, Outcome, Report, RunConfig, EXIT_USAGE};
use hopfwarp::curvature::{brackets_s3s3, ricci_frame};
use hopfwarp::hopf::equivariance_residuals;
use hopfwarp::pipelines::{
    base_stage, build_base_model, build_step2_chain, build_step3_assembly, schedule_induction, PipelineError, Stage,
    StageReport, Step2Params, Step3Params,
};
use hopfwarp::qz::GeneratorChain;
use hopfwarp::snowflake::{case_table, check_graph_laws, enumerate_cones, ChainPolicy, SnowflakeGraph};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "hopfwarp", version, about = "Builds and certifies warped-product constructions with twisted Hopf actions")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report, CSV and DOT files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum bisection depth of the certifier.
    #[arg(long = "certify-depth", global = true)]
    certify_depth: Option<u32>,
    /// Required margin in `field >= margin`.
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rows of CSV profile samples per stage (needs --out).
    #[arg(long = "csv-samples", global = true)]
    csv_samples: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Certify the base model B(eps, delta).
    Base {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the seven-stage twisting chain.
    Twist {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "eps-hat")]
        eps_hat: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Extend the action over k glued copies (sine and hat caps).
    Extend {
        #[arg(long)]
        eps: Option<f64>,
        /// Defaults to 0.995 eps.
        #[arg(long = "eps-prime")]
        eps_prime: Option<f64>,
        #[arg(long = "eps-hat")]
        eps_hat: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
        /// Order of the group being extended.
        #[arg(long = "gamma-order", default_value_t = 1)]
        gamma_order: u64,
    },
    /// Propagate parameters level by level.
    Schedule {
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<u64>>,
        /// One eps per level; defaults to 2^-j.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Export the coset graph and check its laws.
    Graph {
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<u64>>,
        /// Keep levels 0..=J of the chain.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
        format: GraphFormat,
    },
    /// Tangent cones at infinity realised by a chain policy.
    Cones {
        #[arg(long, value_enum, default_value_t = PolicyArg::CyclicIntegers)]
        policy: PolicyArg,
        /// Prime for the constant policy.
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 6)]
        bound: u64,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// Ricci tensor of the twisted frame on S3 x S3.
    FrameRicci {
        #[arg(long)]
        k: Option<i64>,
        /// Fiber length; defaults to sqrt(1 + k^2).
        #[arg(long)]
        f: Option<f64>,
        /// Defaults to sqrt(1 + k^2).
        #[arg(long)]
        a: Option<f64>,
        /// Defaults to 1/sqrt(1 + k^2).
        #[arg(long)]
        b: Option<f64>,
    },
    /// Sampled equivariance residuals of phi_k.
    Equivariance {
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Json,
    Table,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    CyclicIntegers,
    CyclicPrimes,
    ConstantP,
}

/// Errors that map to the usage exit code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Parameter errors are the caller's; failed solvers are inconclusive.
fn pipeline(e: PipelineError) -> anyhow::Error {
    match e {
        PipelineError::InvalidParameter(m) => usage(m),
        other => anyhow!(other),
    }
}

struct Ctx {
    cfg: RunConfig,
    opts: CertifyOptions,
    out: Option<PathBuf>,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Ctx> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p).map_err(|e| usage(e.to_string()))?,
            None => RunConfig::default(),
        };
        if let Some(d) = cli.certify_depth {
            cfg.certify.max_depth = d;
        }
        if let Some(m) = cli.margin {
            cfg.certify.tol = m;
        }
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(n) = cli.csv_samples {
            cfg.output.csv_samples = n;
        }
        let out = cli.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from));
        if out.is_some() && cfg.output.csv_samples == 0 && cli.csv_samples.is_none() {
            cfg.output.csv_samples = 200;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        let opts = cfg.certify_options();
        Ok(Ctx { cfg, opts, out })
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let p = dir.join(name);
            std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }

    fn stage_csv(&self, stages: &[&Stage]) -> Result<()> {
        let n = self.cfg.output.csv_samples;
        if self.out.is_none() || n == 0 {
            return Ok(());
        }
        for s in stages.iter().filter(|s| self.cfg.keeps_stage(&s.name)) {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["x"];
            header.extend(s.columns);
            w.write_record(&header)?;
            for row in s.samples(n) {
                w.write_record(row.iter().map(|&x| fmt17(x)))?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
            self.write(&format!("samples_{}.csv", s.name.replace('.', "_")), &String::from_utf8(bytes)?)?;
        }
        Ok(())
    }

    fn filter(&self, reports: &[StageReport]) -> Vec<StageReport> {
        reports.iter().filter(|r| self.cfg.keeps_stage(&r.stage)).cloned().collect()
    }
}

fn stage_outcome(reports: &[StageReport]) -> Outcome {
    Outcome::merge(reports.iter().flat_map(|r| r.verdicts.iter().map(|v| Outcome::of(&v.result.status))))
}

struct Emitted {
    outcome: Outcome,
    stdout: String,
}

fn report<T: Serialize>(ctx: &Ctx, command: &str, outcome: Outcome, body: T) -> Result<Emitted> {
    let r = Report::new(command, ctx.cfg.seed, outcome, body);
    let text = serde_json::to_string_pretty(&r)? + "\n";
    ctx.write(&format!("{command}.json"), &text)?;
    Ok(Emitted { outcome, stdout: text })
}

fn run(cli: &Cli) -> Result<Emitted> {
    let ctx = Ctx::new(cli)?;
    let cfg = &ctx.cfg;
    let eps0 = cfg.epsilons.first().copied().unwrap_or(0.5);
    match &cli.cmd {
        Cmd::Base { eps, delta } => {
            let (eps, delta) = (eps.unwrap_or(eps0), delta.unwrap_or(cfg.delta1));
            let m = build_base_model(eps, delta, &ctx.opts).map_err(pipeline)?;
            ctx.stage_csv(&[&base_stage(eps, delta).map_err(pipeline)?])?;
            let outcome = Outcome::merge([stage_outcome(std::slice::from_ref(&m.report)), Outcome::from_check(m.aa_exact)]);
            let body = json!({
                "eps": eps,
                "delta": delta,
                "aa_equals_two_over_delta_sq": m.aa_exact,
                "max_abs_slope": m.max_abs_slope,
                "report": m.report,
            });
            report(&ctx, "base", outcome, body)
        }
        Cmd::Twist { eps, eps_hat, delta, k } => {
            let p = Step2Params::new(eps.unwrap_or(eps0), eps_hat.unwrap_or(cfg.eps_hat), delta.unwrap_or(cfg.delta1), k.unwrap_or(cfg.k))
                .with_family(cfg.x4.m, cfg.x4.c0);
            let chain = build_step2_chain(&p, &ctx.opts).map_err(pipeline)?;
            ctx.stage_csv(&chain.stages.iter().collect::<Vec<_>>())?;
            let reports = ctx.filter(&chain.reports);
            let body = json!({
                "params": chain.params,
                "constants": chain.constants,
                "R": chain.big_r,
                "delta_hat": chain.delta_hat,
                "reports": reports,
            });
            report(&ctx, "twist", stage_outcome(&reports), body)
        }
        Cmd::Extend { eps, eps_prime, eps_hat, delta, k, gamma_order } => {
            let e = eps.unwrap_or(eps0);
            let mut p = Step3Params::new(
                e,
                eps_prime.unwrap_or(0.995 * e),
                delta.unwrap_or(cfg.delta1),
                k.unwrap_or(cfg.k),
                eps_hat.unwrap_or(cfg.eps_hat),
            )
            .with_gamma_hat_order(*gamma_order);
            p.seed = cfg.seed;
            let a = build_step3_assembly(&p, &ctx.opts).map_err(pipeline)?;
            ctx.stage_csv(&a.stages.iter().collect::<Vec<_>>())?;
            let reports = ctx.filter(&a.reports);
            let checks = Outcome::from_check(a.window_in_cap && a.sine.bands_hold() && a.collar_residual <= hopfwarp::pipelines::step3::COLLAR_TOL);
            let sine_status = [&a.sine.below_h1, &a.sine.below_h3, &a.sine.below_chord, &a.hat.below_line];
            let outcome = Outcome::merge(
                [stage_outcome(&reports), checks, Outcome::from_check(a.certified)]
                    .into_iter()
                    .chain(sine_status.iter().map(|r| Outcome::of(&r.status))),
            );
            let mut body = serde_json::to_value(&a)?;
            body["reports"] = serde_json::to_value(&reports)?;
            report(&ctx, "extend", outcome, body)
        }
        Cmd::Schedule { ks, eps, delta } => {
            let ks = ks.clone().unwrap_or_else(|| cfg.chain.ks.clone());
            let eps = match eps {
                Some(e) => e.clone(),
                None if cfg.epsilons.len() == ks.len() => cfg.epsilons.clone(),
                None => (1..=ks.len()).map(|j| 0.5f64.powi(j as i32)).collect(),
            };
            let t = schedule_induction(&ks, &eps, delta.unwrap_or(cfg.delta1), (cfg.x4.m, cfg.x4.c0), &ctx.opts).map_err(pipeline)?;
            let outcome = Outcome::merge([Outcome::from_check(t.all_certified), Outcome::from_check(t.growth_exceeds_one)]);
            if ctx.out.is_some() {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["j", "k", "eps", "eps_prime", "r", "delta", "eps_hat", "R", "delta_hat"])?;
                let txt = |p: &Option<hopfwarp::huge::Pos>| p.as_ref().map(|p| p.text()).unwrap_or_default();
                for r in &t.rows {
                    w.write_record([
                        r.j.to_string(),
                        r.k.to_string(),
                        fmt17(r.eps),
                        fmt17(r.eps_prime),
                        r.r.text(),
                        r.delta.text(),
                        r.eps_hat.map(fmt17).unwrap_or_default(),
                        txt(&r.big_r),
                        txt(&r.delta_hat),
                    ])?;
                }
                let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
                ctx.write("schedule.csv", &String::from_utf8(bytes)?)?;
            }
            report(&ctx, "schedule", outcome, t)
        }
        Cmd::Graph { ks, depth, format } => {
            let mut ks = ks.clone().unwrap_or_else(|| cfg.chain.ks.clone());
            if let Some(j) = depth {
                if *j >= ks.len() {
                    return Err(usage(format!("--depth {j} exceeds the chain's top level {}", ks.len() - 1)));
                }
                ks.truncate(j + 1);
            }
            let chain = GeneratorChain::new(ks).map_err(|e| usage(e.to_string()))?;
            let g = SnowflakeGraph::build(&chain).map_err(|e| usage(e.to_string()))?;
            let laws = check_graph_laws(&chain, 64).ok();
            let outcome = match &laws {
                Some(l) => Outcome::from_check(l.all_hold()),
                None => Outcome::Certified,
            };
            let dot = g.to_dot();
            ctx.write("graph.dot", &dot)?;
            let body = json!({ "graph": g.to_json(), "laws": laws });
            let mut e = report(&ctx, "graph", outcome, body)?;
            if let GraphFormat::Dot = format {
                e.stdout = dot;
            }
            Ok(e)
        }
        Cmd::Cones { policy, p, bound, format } => {
            let policy = match policy {
                PolicyArg::CyclicIntegers => ChainPolicy::CyclicIntegers,
                PolicyArg::CyclicPrimes => ChainPolicy::CyclicPrimes,
                PolicyArg::ConstantP => ChainPolicy::ConstantP { p: *p },
            };
            let census = enumerate_cones(policy, *bound).map_err(|e| usage(e.to_string()))?;
            let table: Vec<Value> = case_table()
                .into_iter()
                .map(|(r, k, d)| match d {
                    Ok(d) => json!({ "regime": r, "k_limit": k, "cone": d, "label": d.label() }),
                    Err(e) => json!({ "regime": r, "k_limit": k, "error": e.to_string() }),
                })
                .collect();
            let mut rows = Vec::new();
            for c in &census.cones {
                rows.push([c.label.clone(), c.count.to_string(), c.limit_only.to_string()]);
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["cone", "count", "limit_only"])?;
            for r in &rows {
                w.write_record(r)?;
            }
            let csv_text = String::from_utf8(w.into_inner().map_err(|e| anyhow!("csv: {e}"))?)?;
            ctx.write("cones.csv", &csv_text)?;
            let outcome = Outcome::from_check(census.requirement_met);
            let mut e = report(&ctx, "cones", outcome, json!({ "census": census, "case_table": table }))?;
            match format {
                TableFormat::Json => {}
                TableFormat::Csv => e.stdout = csv_text,
                TableFormat::Table => {
                    let mut s = format!("prefix ({} entries, {} blocks): {:?}\n", census.prefix.len(), census.blocks, census.prefix);
                    s += &format!("{:<28} {:>6}  limit-only\n", "cone", "count");
                    for r in &rows {
                        s += &format!("{:<28} {:>6}  {}\n", r[0], r[1], r[2]);
                    }
                    e.stdout = s;
                }
            }
            Ok(e)
        }
        Cmd::FrameRicci { k, f, a, b } => {
            let k = k.unwrap_or(cfg.k as i64);
            let q = ((1 + k * k) as f64).sqrt();
            let round = f.is_none() && a.is_none() && b.is_none();
            let (f, a, b) = (f.unwrap_or(q), a.unwrap_or(q), b.unwrap_or(1.0 / q));
            if !(f > 0.0 && a > 0.0 && b > 0.0) {
                return Err(usage("f, a, b must be positive"));
            }
            let ric = ricci_frame(&brackets_s3s3(k, f, a, b));
            let dev = ric
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &x)| (x - if i == j { 2.0 } else { 0.0 }).abs()))
                .fold(0.0, f64::max);
            let pd = cholesky_ok(&ric, ctx.opts.margin);
            let outcome = if round { Outcome::from_check(dev < 1e-10) } else { Outcome::from_check(pd) };
            let body = json!({
                "k": k, "f": f, "a": a, "b": b,
                "ricci": ric,
                "max_deviation_from_2I": dev,
                "ricci_minus_margin_positive_definite": pd,
                "check": if round { "round metric: Ric = 2 g" } else { "Ric - margin*I positive definite (floating point Cholesky)" },
            });
            report(&ctx, "frame-ricci", outcome, body)
        }
        Cmd::Equivariance { k, samples } => {
            let k = k.unwrap_or(cfg.k);
            if k == 0 {
                return Err(usage("k must be at least 1"));
            }
            let r = equivariance_residuals(k, samples.unwrap_or(cfg.samples), cfg.seed);
            let max = r.left_residual.max(r.right_residual).max(r.inverse_residual).max(r.phi1_formula_residual);
            let body = json!({ "residuals": r, "max_residual": max, "tolerance": 1e-12 });
            report(&ctx, "equivariance", Outcome::from_check(max < 1e-12), body)
        }
    }
}

/// `M - margin·I = LLᵀ` with a positive diagonal.
fn cholesky_ok(m: &[Vec<f64>], margin: f64) -> bool {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j] - if i == j { margin } else { 0.0 };
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(e) => {
            print!("{}", e.stdout);
            if e.outcome != Outcome::Certified {
                eprintln!("hopfwarp: outcome {:?}", e.outcome);
            }
            ExitCode::from(e.outcome.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("hopfwarp: {err:#}");
            let code = if err.downcast_ref::<Usage>().is_some() { EXIT_USAGE } else { Outcome::Inconclusive.exit_code() };
            ExitCode::from(code as u8)
        }
    }
}
