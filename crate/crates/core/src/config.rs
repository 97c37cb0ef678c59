//! Run configuration, outcome codes and the report envelope.
//!
//! Configs are JSON. Every section has defaults, unknown keys are rejected
//! and [`RunConfig::validate`] runs before any work starts.

use crate::certify::{CertifyOptions, Status};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub ks: Vec<u64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { ks: vec![2, 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct X4Config {
    #[serde(rename = "M")]
    pub m: f64,
    pub c0: f64,
}

impl Default for X4Config {
    fn default() -> Self {
        X4Config { m: 10.0, c0: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    /// Required margin `m` in `field ≥ m`.
    pub tol: f64,
    pub max_depth: u32,
    pub max_nodes: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let d = CertifyOptions::default();
        CertifyConfig { tol: d.margin, max_depth: d.max_depth, max_nodes: d.max_nodes }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Rows per stage in CSV profile samples; 0 disables CSV output.
    pub csv_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub epsilons: Vec<f64>,
    pub eps_hat: f64,
    pub delta1: f64,
    pub k: u32,
    pub x4: X4Config,
    pub certify: CertifyConfig,
    /// Stage names to keep in reports; empty keeps all.
    pub stages: Vec<String>,
    pub output: OutputConfig,
    pub seed: u64,
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chain: ChainConfig::default(),
            epsilons: vec![0.5, 0.25],
            eps_hat: 0.01,
            delta1: 0.01,
            k: 3,
            x4: X4Config::default(),
            certify: CertifyConfig::default(),
            stages: Vec::new(),
            output: OutputConfig::default(),
            seed: 1,
            samples: 1000,
        }
    }
}

pub const STAGE_NAMES: [&str; 12] =
    ["base", "X1", "X2", "X3", "X4.A", "X4.B", "X4.C", "X5", "X6", "X7", "A1", "A_hat"];

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        let c: RunConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&s)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.chain.ks.is_empty() || self.chain.ks.iter().any(|&k| k < 2) {
            return bad(format!("chain.ks = {:?}: need a nonempty list of integers >= 2", self.chain.ks));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad(format!("epsilons = {:?}: each must lie in (0, 1)", self.epsilons));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("epsilons = {:?}: must be strictly decreasing", self.epsilons));
        }
        if !(self.eps_hat > 0.0 && self.eps_hat < 1.0) {
            return bad(format!("eps_hat = {}: must lie in (0, 1)", self.eps_hat));
        }
        if !(self.delta1 > 0.0 && self.delta1.is_finite()) {
            return bad(format!("delta1 = {}: must be positive", self.delta1));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.x4.m > 1.0 && self.x4.m.is_finite()) || !(self.x4.c0 > 0.0 && self.x4.c0.is_finite()) {
            return bad(format!("x4 = {:?}: need M > 1 and c0 > 0", self.x4));
        }
        if !(self.certify.tol >= 0.0 && self.certify.tol.is_finite()) {
            return bad(format!("certify.tol = {}: must be finite and >= 0", self.certify.tol));
        }
        if !(1..=200).contains(&self.certify.max_depth) || self.certify.max_nodes == 0 {
            return bad("certify.max_depth must be in 1..=200 and max_nodes positive".into());
        }
        if let Some(s) = self.stages.iter().find(|s| !STAGE_NAMES.contains(&s.as_str())) {
            return bad(format!("unknown stage {s:?}; known: {}", STAGE_NAMES.join(", ")));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        Ok(())
    }

    pub fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            margin: self.certify.tol,
            max_depth: self.certify.max_depth,
            max_nodes: self.certify.max_nodes,
            ..CertifyOptions::default()
        }
    }

    pub fn keeps_stage(&self, name: &str) -> bool {
        self.stages.is_empty() || self.stages.iter().any(|s| s == name)
    }
}

/// Overall result of a run, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Certified,
    Inconclusive,
    Counterexample,
}

impl Outcome {
    pub fn of(status: &Status) -> Self {
        match status {
            Status::Certified => Outcome::Certified,
            Status::Inconclusive { .. } => Outcome::Inconclusive,
            Status::Counterexample { .. } => Outcome::Counterexample,
        }
    }

    /// Worst of several outcomes; an empty list is certified.
    pub fn merge<I: IntoIterator<Item = Outcome>>(it: I) -> Outcome {
        it.into_iter().max().unwrap_or(Outcome::Certified)
    }

    /// Boolean check: pass, or a counterexample.
    pub fn from_check(ok: bool) -> Self {
        if ok {
            Outcome::Certified
        } else {
            Outcome::Counterexample
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::Counterexample => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 1;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Top-level envelope shared by every report.
#[derive(Clone, Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub certified: bool,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, seed: u64, outcome: Outcome, body: T) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: "hopfwarp",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            outcome,
            certified: outcome == Outcome::Certified,
            body,
        }
    }
}

/// Fixed 17-significant-digit formatting for CSV cells.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}
