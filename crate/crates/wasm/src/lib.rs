//! Browser bindings. Every function returns a JSON string; failures come
//! back as `{"error": "..."}` so the page never has to catch.

use hopfwarp::certify::CertifyOptions;
use hopfwarp::pipelines::build_base_model;
use hopfwarp::qz::GeneratorChain;
use hopfwarp::snowflake::{check_graph_laws, classify_tangent_cone, KLimit, ScaleRegime, SnowflakeGraph};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    json!({ "error": e.to_string() }).to_string()
}

fn parse_ks(ks: &str) -> Result<Vec<u64>, String> {
    ks.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| format!("not an integer: {s:?}")))
        .collect()
}

/// Tangent cone in a scale regime; `k = 0` stands for `k_j → ∞`.
#[wasm_bindgen]
pub fn classify_cone(regime: &str, k: u32, s: f64) -> String {
    let regime = match regime {
        "at_rj" => ScaleRegime::AtRj,
        "between_rj_and_orbit" => ScaleRegime::BetweenRjAndOrbit,
        "at_orbit_scale" => ScaleRegime::AtOrbitScale,
        "between_orbit_and_next" => ScaleRegime::BetweenOrbitAndNext { s },
        "approaching_next" => ScaleRegime::ApproachingNext,
        other => return err(format!("unknown regime {other:?}")),
    };
    let limit = if k == 0 { KLimit::Infinite } else { KLimit::Finite(k as u64) };
    match classify_tangent_cone(regime, limit) {
        Ok(d) => json!({ "label": d.label(), "cone": d }).to_string(),
        Err(e) => err(e),
    }
}

/// Coset graph of a chain such as `"2,3,2"`, with the law checks.
#[wasm_bindgen]
pub fn snowflake(ks: &str) -> String {
    let chain = match parse_ks(ks).and_then(|k| GeneratorChain::new(k).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => return err(e),
    };
    let graph = match SnowflakeGraph::build(&chain) {
        Ok(g) if g.vertex_count() <= 2000 => g,
        Ok(g) => return err(format!("{} vertices is too many to draw", g.vertex_count())),
        Err(e) => return err(e),
    };
    let laws: Value = check_graph_laws(&chain, 16).map_or(Value::Null, |l| json!(l));
    json!({ "graph": graph.to_json(), "dot": graph.to_dot(), "laws": laws }).to_string()
}

/// Certifies the three Ricci components of the base model.
#[wasm_bindgen]
pub fn base_model(eps: f64, delta: f64) -> String {
    match build_base_model(eps, delta, &CertifyOptions::default()) {
        Ok(m) => json!({
            "certified": m.report.certified,
            "aa_exact": m.aa_exact,
            "max_abs_slope": m.max_abs_slope,
            "verdicts": m.report.verdicts,
        })
        .to_string(),
        Err(e) => err(e),
    }
}
