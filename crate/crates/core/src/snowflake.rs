//! The coset graph of a truncated chain and its tangent cones at infinity.
//!
//! For a chain `k_0..k_J` the level-`j` vertices are the cosets `Γ_J/Γ_j`,
//! coordinatised by the tail digits `a_{j+1}..a_J`. The edge out of a
//! level-`j` vertex forgets `a_{j+1}`. An element `γ` acts on a vertex by
//! adding its tail with carry; the head together with the carry `γ_j^{c_j}`
//! acts inside the copy attached to the vertex.

use crate::qz::{recompose, split_at, tail_product_with_carry, DigitVector, GeneratorChain, QzError, QZ};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SnowflakeError {
    #[error(transparent)]
    Qz(#[from] QzError),
    #[error("level {0} is the top of the chain and has no outgoing edge")]
    TopLevel(usize),
    #[error("vertex: {0}")]
    BadVertex(String),
    #[error("invalid regime/limit combination: {0}")]
    InvalidCombination(String),
    #[error("slice too large: {0} vertices")]
    TooLarge(u128),
}

/// A coset vertex: level `j` and tail digits on levels `j+1..=J`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId {
    pub level: usize,
    pub tail: Vec<u64>,
}

impl VertexId {
    pub fn new(level: usize, tail: Vec<u64>, chain: &GeneratorChain) -> Result<Self, SnowflakeError> {
        if level > chain.top() {
            return Err(SnowflakeError::BadVertex(format!("level {level} above top {}", chain.top())));
        }
        if tail.len() != chain.top() - level {
            return Err(SnowflakeError::BadVertex(format!(
                "level {level} needs {} tail digits, got {}",
                chain.top() - level,
                tail.len()
            )));
        }
        let v = VertexId { level, tail };
        v.digits().validate(chain)?;
        Ok(v)
    }

    pub fn digits(&self) -> DigitVector {
        DigitVector { start: self.level + 1, digits: self.tail.clone() }
    }

    /// The coset representative `Σ_{i>j} a_i γ_i`.
    pub fn representative(&self, chain: &GeneratorChain) -> Result<QZ, SnowflakeError> {
        Ok(recompose(&self.digits(), chain)?)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.level)?;
        if !self.tail.is_empty() {
            let t: Vec<String> = self.tail.iter().map(|a| a.to_string()).collect();
            write!(f, "[{}]", t.join(","))?;
        }
        Ok(())
    }
}

/// `E[v] = v/Γ_{j+1}`: drop the level-`(j+1)` digit.
pub fn edge_map(v: &VertexId, chain: &GeneratorChain) -> Result<VertexId, SnowflakeError> {
    if v.level >= chain.top() {
        return Err(SnowflakeError::TopLevel(v.level));
    }
    Ok(VertexId { level: v.level + 1, tail: v.tail[1..].to_vec() })
}

/// Outcome of `γ · v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionResult {
    pub vertex: VertexId,
    pub carry: u8,
    /// `γ_{≤j}`, the head of `γ`.
    pub head: QZ,
    /// `γ_j^{c_j} · γ_{≤j}`, acting inside the copy at the vertex.
    pub internal: QZ,
}

pub fn gamma_action(g: &QZ, v: &VertexId, chain: &GeneratorChain) -> Result<ActionResult, SnowflakeError> {
    let j = v.level;
    let (head, gtail) = split_at(g, chain, j)?;
    let (carry, tail) = tail_product_with_carry(&gtail, &v.digits(), chain, j)?;
    let internal = if carry == 1 { head.add(&chain.gamma(j)?) } else { head.clone() };
    Ok(ActionResult { vertex: VertexId { level: j, tail: tail.digits }, carry, head, internal })
}

/// Number of vertices at level `j`, `k_{j+1} ⋯ k_J`.
pub fn level_size(chain: &GeneratorChain, j: usize) -> u128 {
    chain.ks()[j + 1..].iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
}

/// All vertices of level `j` in mixed-radix order (last digit fastest).
pub fn vertices(chain: &GeneratorChain, j: usize) -> Result<Vec<VertexId>, SnowflakeError> {
    if j > chain.top() {
        return Err(QzError::LevelOutOfRange { level: j, len: chain.len() }.into());
    }
    let n = level_size(chain, j);
    if n > 1 << 24 {
        return Err(SnowflakeError::TooLarge(n));
    }
    let ks = &chain.ks()[j + 1..];
    let mut out = Vec::with_capacity(n as usize);
    let mut digits = vec![0u64; ks.len()];
    for _ in 0..n {
        out.push(VertexId { level: j, tail: digits.clone() });
        for i in (0..ks.len()).rev() {
            digits[i] += 1;
            if digits[i] < ks[i] {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(out)
}

/// A materialised slice of the graph: every level of a truncated chain.
#[derive(Clone, Debug, Serialize)]
pub struct SnowflakeGraph {
    pub ks: Vec<u64>,
    pub levels: Vec<Vec<VertexId>>,
    /// `(source, target)` pairs.
    pub edges: Vec<(VertexId, VertexId)>,
}

impl SnowflakeGraph {
    pub fn build(chain: &GeneratorChain) -> Result<Self, SnowflakeError> {
        let total: u128 = (0..chain.len()).map(|j| level_size(chain, j)).sum();
        if total > 1 << 20 {
            return Err(SnowflakeError::TooLarge(total));
        }
        let levels = (0..chain.len()).map(|j| vertices(chain, j)).collect::<Result<Vec<_>, _>>()?;
        let mut edges = Vec::new();
        for level in &levels[..chain.top()] {
            for v in level {
                edges.push((v.clone(), edge_map(v, chain)?));
            }
        }
        Ok(SnowflakeGraph { ks: chain.ks().to_vec(), levels, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// In-degree of every vertex, keyed by label.
    pub fn in_degrees(&self) -> BTreeMap<VertexId, usize> {
        let mut m: BTreeMap<VertexId, usize> = self.levels.iter().flatten().map(|v| (v.clone(), 0)).collect();
        for (_, t) in &self.edges {
            *m.get_mut(t).expect("edge target is a vertex") += 1;
        }
        m
    }

    /// Adjacency as JSON: vertices with level and tail, and the edge list.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .levels
            .iter()
            .flatten()
            .map(|v| serde_json::json!({ "id": v.to_string(), "level": v.level, "tail": v.tail }))
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|(s, t)| serde_json::json!({ "source": s.to_string(), "target": t.to_string() }))
            .collect();
        serde_json::json!({ "ks": self.ks, "vertices": nodes, "edges": edges })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph snowflake {\n  rankdir=BT;\n  node [shape=circle, fontsize=10];\n");
        for (j, level) in self.levels.iter().enumerate() {
            let _ = write!(s, "  subgraph level_{j} {{ rank=same;");
            for v in level {
                let _ = write!(s, " \"{v}\";");
            }
            s.push_str(" }\n");
        }
        for (a, b) in &self.edges {
            let _ = writeln!(s, "  \"{a}\" -> \"{b}\";");
        }
        s.push_str("}\n");
        s
    }
}

/// Every chain `k_0, k_1, ...` with all `k_i ≥ 2` and product at most `bound`.
pub fn chains_up_to(bound: u64) -> Vec<Vec<u64>> {
    fn grow(prefix: &mut Vec<u64>, prod: u64, bound: u64, out: &mut Vec<Vec<u64>>) {
        for k in 2..=bound / prod {
            prefix.push(k);
            out.push(prefix.clone());
            grow(prefix, prod * k, bound, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), 1, bound, &mut out);
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CarryAudit {
    pub chains: u64,
    pub pairs: u64,
    /// Carries outside `{0, 1}`.
    pub violations: u64,
    /// Disagreements with integer addition of the tail values.
    pub oracle_mismatches: u64,
}

impl CarryAudit {
    pub fn merge(&mut self, o: &CarryAudit) {
        self.chains += o.chains;
        self.pairs += o.pairs;
        self.violations += o.violations;
        self.oracle_mismatches += o.oracle_mismatches;
    }

    pub fn clean(&self) -> bool {
        self.violations == 0 && self.oracle_mismatches == 0
    }
}

/// All tail pairs at every level of one chain, against integer addition:
/// with tail values `t, u < N = k_{j+1}⋯k_J` the carry is `[t + u ≥ N]` and
/// the new tail is `t + u mod N`.
pub fn carry_audit(ks: &[u64]) -> CarryAudit {
    let mut a = CarryAudit { chains: 1, ..Default::default() };
    for j in 0..ks.len() {
        let radix = &ks[j + 1..];
        let n: u64 = radix.iter().product();
        let digits_of = |mut t: u64| {
            let mut d = vec![0u64; radix.len()];
            for i in (0..radix.len()).rev() {
                d[i] = t % radix[i];
                t /= radix[i];
            }
            d
        };
        let tails: Vec<Vec<u64>> = (0..n).map(digits_of).collect();
        for (t, dt) in tails.iter().enumerate() {
            for (u, du) in tails.iter().enumerate() {
                let (c, sum) = crate::qz::add_digits(radix, dt, du);
                let value = sum.iter().zip(radix).fold(0u64, |acc, (&d, &k)| acc * k + d);
                let s = (t + u) as u64;
                a.pairs += 1;
                if c > 1 {
                    a.violations += 1;
                }
                if (c == 1) != (s >= n) || value != s % n {
                    a.oracle_mismatches += 1;
                }
            }
        }
    }
    a
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphLaws {
    pub ks: Vec<u64>,
    pub group_order: u64,
    /// Vertices per level on which the whole group is swept.
    pub slice: usize,
    /// Every level-`(j+1)` vertex has in-degree `k_{j+1}`, level 0 has none.
    /// Counted over the full levels.
    pub in_degree: bool,
    /// `E(γ·v) = γ·E(v)`.
    pub projection_compatible: bool,
    /// `Γ_J` acts freely on (vertex, internal element) pairs.
    pub free: bool,
    /// `Γ_J` is transitive on each `V_j`.
    pub transitive: bool,
    /// `(γ + γ')·v = γ·(γ'·v)`, internal elements composing accordingly.
    pub action_law: bool,
    pub carries_in_01: bool,
    /// The exact `Q/Z` route ([`gamma_action`], [`edge_map`]) agrees with
    /// integer mixed-radix arithmetic on every cross-checked action.
    pub routes_agree: bool,
    pub actions_evaluated: u64,
    pub cross_checks: u64,
}

impl GraphLaws {
    pub fn all_hold(&self) -> bool {
        self.in_degree
            && self.projection_compatible
            && self.free
            && self.transitive
            && self.action_law
            && self.carries_in_01
            && self.routes_agree
    }
}

/// `γ = m γ_J` acting on tail value `t < n_j` at a level with `|Γ_j| = kj`:
/// `(t', carry, c)` with internal element `c γ_j`.
fn int_action(m: u64, t: u64, n_j: u64, kj: u64) -> (u64, u64, u64) {
    let s = t + m % n_j;
    let carry = u64::from(s >= n_j);
    (s - carry * n_j, carry, (m / n_j + carry) % kj)
}

fn tail_value(v: &VertexId, chain: &GeneratorChain) -> u64 {
    v.tail.iter().zip(&chain.ks()[v.level + 1..]).fold(0, |acc, (&d, &k)| acc * k + d)
}

fn vertex_of(level: usize, mut t: u64, chain: &GeneratorChain) -> VertexId {
    let ks = &chain.ks()[level + 1..];
    let mut tail = vec![0u64; ks.len()];
    for i in (0..ks.len()).rev() {
        tail[i] = t % ks[i];
        t /= ks[i];
    }
    VertexId { level, tail }
}

/// `count` tail values spread over `0..n`, both ends included.
fn spread(n: u64, count: usize) -> Vec<u64> {
    if n <= count as u64 {
        return (0..n).collect();
    }
    let c = count.max(2) as u64;
    let mut v: Vec<u64> = (0..c).map(|i| i * (n - 1) / (c - 1)).collect();
    v.dedup();
    v
}

/// Graph and action laws for `|Γ_J| ≤ 10⁶`.
///
/// In-degrees are counted over the full levels. Freeness and transitivity
/// sweep all of `Γ_J` over one vertex per level. Carries and projection
/// compatibility sweep all of `Γ_J` over `slice` vertices per level, the
/// composition law runs on a grid of element pairs. All of this uses integer
/// arithmetic on tail values; a spread of actions is redone through the
/// exact `Q/Z` route and compared.
pub fn check_graph_laws(chain: &GeneratorChain, slice: usize) -> Result<GraphLaws, SnowflakeError> {
    let ks = chain.ks();
    let order: u128 = ks.iter().map(|&k| k as u128).product();
    if order > 1_000_000 {
        return Err(SnowflakeError::TooLarge(order));
    }
    let order = order as u64;
    let sizes: Vec<u64> = (0..ks.len()).map(|j| level_size(chain, j) as u64).collect();
    let mut laws = GraphLaws {
        ks: ks.to_vec(),
        group_order: order,
        slice,
        in_degree: true,
        projection_compatible: true,
        free: true,
        transitive: true,
        action_law: true,
        carries_in_01: true,
        routes_agree: true,
        actions_evaluated: 0,
        cross_checks: 0,
    };
    let mut seen = vec![false; order as usize];
    let mut hit = vec![false; order as usize];
    let grid = spread(order, 12);
    let cross = spread(order, 4);
    for j in 0..ks.len() {
        let (n_j, kj) = (sizes[j], order / sizes[j]);
        if j > 0 {
            let mut indeg = vec![0u64; n_j as usize];
            for t in 0..sizes[j - 1] {
                indeg[(t % n_j) as usize] += 1;
            }
            laws.in_degree &= indeg.iter().all(|&d| d == ks[j]);
        }
        let verts = spread(n_j, slice);
        seen.iter_mut().for_each(|s| *s = false);
        hit.iter_mut().for_each(|s| *s = false);
        let (mut orbit, mut reached) = (0u64, 0u64);
        for m in 0..order {
            for (iv, &t) in verts.iter().enumerate() {
                let (t2, carry, c) = int_action(m, t, n_j, kj);
                laws.actions_evaluated += 1;
                laws.carries_in_01 &= carry <= 1;
                if j < chain.top() {
                    let n1 = sizes[j + 1];
                    let (down, _, _) = int_action(m, t % n1, n1, order / n1);
                    laws.projection_compatible &= t2 % n1 == down;
                }
                if m != 0 && t2 == t && c == 0 {
                    laws.free = false;
                }
                if iv == 0 {
                    let key = (t2 * kj + c) as usize;
                    if !seen[key] {
                        seen[key] = true;
                        orbit += 1;
                    }
                    if !hit[t2 as usize] {
                        hit[t2 as usize] = true;
                        reached += 1;
                    }
                }
            }
        }
        laws.free &= orbit == order;
        laws.transitive &= reached == n_j;
        for &g in &grid {
            for &h in &grid {
                for &t in verts.iter().take(2) {
                    let (t1, _, c1) = int_action(h, t, n_j, kj);
                    let (t2, _, c2) = int_action(g, t1, n_j, kj);
                    let (t3, _, c3) = int_action((g + h) % order, t, n_j, kj);
                    laws.action_law &= t2 == t3 && (c1 + c2) % kj == c3;
                }
            }
        }
        for &m in &cross {
            let g = chain.element(m);
            for &t in verts.iter().take(2) {
                let v = vertex_of(j, t, chain);
                let r = gamma_action(&g, &v, chain)?;
                let (t2, carry, c) = int_action(m, t, n_j, kj);
                let mut ok = tail_value(&r.vertex, chain) == t2
                    && u64::from(r.carry) == carry
                    && r.internal == chain.gamma(j)?.times(c);
                if j < chain.top() {
                    let e = edge_map(&v, chain)?;
                    ok &= tail_value(&e, chain) == t % sizes[j + 1];
                    ok &= edge_map(&r.vertex, chain)? == gamma_action(&g, &e, chain)?.vertex;
                }
                laws.routes_agree &= ok;
                laws.cross_checks += 1;
            }
        }
    }
    Ok(laws)
}

/// Where the rescaling radius `s` sits relative to the scales `r_j < k_j r_j < r_{j+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum ScaleRegime {
    /// `s = r_j`.
    AtRj,
    /// `r_j ≪ s ≪ k_j r_j`.
    BetweenRjAndOrbit,
    /// `s ≈ k_j r_j`.
    AtOrbitScale,
    /// `k_j r_j ≪ s ≪ r_{j+1}`, with cross-section radius `s ∈ [0, 1]`.
    BetweenOrbitAndNext { s: f64 },
    /// `s → r_{j+1}`.
    ApproachingNext,
}

impl ScaleRegime {
    pub const ALL_TAGS: [&'static str; 5] =
        ["at_rj", "between_rj_and_orbit", "at_orbit_scale", "between_orbit_and_next", "approaching_next"];
}

/// Limit of `k_j` along the subsequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KLimit {
    Finite(u64),
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    /// `C(S³_s / Z_k)`.
    LensCone { s: f64, k: u64 },
    /// Flat `R⁴`, the lens cone with `s = 1`, `k = 1`.
    R4,
    R3xS1,
    R3,
    /// `C(S²_{1/2})`.
    S2Cone { radius: f64 },
    HalfLine,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeDescriptor {
    #[serde(flatten)]
    pub kind: ConeKind,
    /// Distance from the base point to the cone point, when it is not zero.
    pub basepoint_offset: Option<f64>,
}

impl ConeDescriptor {
    fn at_vertex(kind: ConeKind) -> Self {
        ConeDescriptor { kind, basepoint_offset: None }
    }

    /// Canonical lens cone: `s = 0` is the half line, `(1, 1)` is `R⁴`.
    pub fn lens(s: f64, k: u64) -> Result<Self, SnowflakeError> {
        if !(0.0..=1.0).contains(&s) || k == 0 {
            return Err(SnowflakeError::InvalidCombination(format!("lens cone needs s in [0,1] and k >= 1, got ({s}, {k})")));
        }
        let kind = if s == 0.0 {
            ConeKind::HalfLine
        } else if s == 1.0 && k == 1 {
            ConeKind::R4
        } else {
            ConeKind::LensCone { s, k }
        };
        Ok(Self::at_vertex(kind))
    }

    pub fn label(&self) -> String {
        let base = match self.kind {
            ConeKind::LensCone { s, k } => format!("C(S3_{s}/Z_{k})"),
            ConeKind::R4 => "R4".into(),
            ConeKind::R3xS1 => "R3xS1".into(),
            ConeKind::R3 => "R3".into(),
            ConeKind::S2Cone { radius } => format!("C(S2_{radius})"),
            ConeKind::HalfLine => "half-line".into(),
        };
        match self.basepoint_offset {
            Some(d) => format!("{base} @ {d}"),
            None => base,
        }
    }
}

/// The limit of `(s⁻¹M, p)` in each scale regime.
pub fn classify_tangent_cone(regime: ScaleRegime, k_limit: KLimit) -> Result<ConeDescriptor, SnowflakeError> {
    use KLimit::*;
    use ScaleRegime::*;
    if let Finite(0) = k_limit {
        return Err(SnowflakeError::InvalidCombination("k limit must be positive".into()));
    }
    match (regime, k_limit) {
        (AtRj, Finite(k)) => {
            let mut d = ConeDescriptor::lens(1.0, k)?;
            d.basepoint_offset = Some(k as f64);
            Ok(d)
        }
        (AtRj, Infinite) => Ok(ConeDescriptor::at_vertex(ConeKind::R3xS1)),
        (BetweenRjAndOrbit, Infinite) => Ok(ConeDescriptor::at_vertex(ConeKind::R3)),
        (BetweenRjAndOrbit, Finite(k)) => Err(SnowflakeError::InvalidCombination(format!(
            "with k_j -> {k} the scales r_j and k_j r_j are comparable; use at_rj"
        ))),
        (AtOrbitScale, Infinite) => Ok(ConeDescriptor {
            kind: ConeKind::S2Cone { radius: 0.5 },
            basepoint_offset: Some(1.0),
        }),
        (AtOrbitScale, Finite(k)) => Err(SnowflakeError::InvalidCombination(format!(
            "with k_j -> {k} the orbit scale is comparable to r_j; use at_rj"
        ))),
        (BetweenOrbitAndNext { s }, _) if s == 0.0 => Ok(ConeDescriptor::at_vertex(ConeKind::HalfLine)),
        (BetweenOrbitAndNext { s }, Finite(k)) => ConeDescriptor::lens(s, k),
        (BetweenOrbitAndNext { s }, Infinite) => Err(SnowflakeError::InvalidCombination(format!(
            "cross-section radius {s} > 0 past the orbit scale needs a finite k limit"
        ))),
        (ApproachingNext, _) => Ok(ConeDescriptor::at_vertex(ConeKind::R4)),
    }
}

/// How the chain `k_0, k_1, ...` is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum ChainPolicy {
    /// `2; 2,3; 2,3,5; ...`
    CyclicPrimes,
    /// `2; 2,3; 2,3,4; ...`
    CyclicIntegers,
    /// `p, p, p, ...`
    ConstantP { p: u64 },
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

impl ChainPolicy {
    /// Block `b ≥ 1` of the cyclic policies; constant-p has blocks of length 1.
    fn block(&self, b: usize) -> Vec<u64> {
        match *self {
            ChainPolicy::CyclicIntegers => (2..=b as u64 + 1).collect(),
            ChainPolicy::CyclicPrimes => (2..).filter(|&n| is_prime(n)).take(b).collect(),
            ChainPolicy::ConstantP { p } => vec![p],
        }
    }

    /// Values `k ≤ bound` that the policy can ever produce.
    fn targets(&self, bound: u64) -> Vec<u64> {
        match *self {
            ChainPolicy::CyclicIntegers => (2..=bound).collect(),
            ChainPolicy::CyclicPrimes => (2..=bound).filter(|&n| is_prime(n)).collect(),
            ChainPolicy::ConstantP { p } => (p <= bound).then_some(p).into_iter().collect(),
        }
    }

    fn unbounded(&self) -> bool {
        !matches!(self, ChainPolicy::ConstantP { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeCount {
    pub cone: ConeDescriptor,
    pub label: String,
    pub count: usize,
    /// Realised only along a subsequence with `k_j → ∞`.
    pub limit_only: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeCensus {
    pub policy: ChainPolicy,
    pub bound: u64,
    pub prefix: Vec<u64>,
    pub blocks: usize,
    /// Occurrences of each `k` in the prefix.
    pub recurrence: BTreeMap<u64, usize>,
    /// Every reachable `k ≤ bound` occurs at least twice.
    pub requirement_met: bool,
    pub cones: Vec<ConeCount>,
}

/// Cross-section radii sampled for the lens-cone families.
pub const S_SAMPLES: [f64; 3] = [0.25, 0.5, 0.75];

/// Grows the chain block by block until every reachable `k ≤ bound`
/// recurs twice, then tallies the cones each level contributes.
pub fn enumerate_cones(policy: ChainPolicy, bound: u64) -> Result<ConeCensus, SnowflakeError> {
    if let ChainPolicy::ConstantP { p } = policy {
        if p < 2 {
            return Err(QzError::BadRadix { level: 0, k: p }.into());
        }
    }
    let targets = policy.targets(bound);
    let mut prefix = Vec::new();
    let mut recurrence: BTreeMap<u64, usize> = BTreeMap::new();
    let mut blocks = 0;
    let met = |rec: &BTreeMap<u64, usize>| targets.iter().all(|k| rec.get(k).copied().unwrap_or(0) >= 2);
    while !met(&recurrence) {
        blocks += 1;
        for k in policy.block(blocks) {
            prefix.push(k);
            *recurrence.entry(k).or_default() += 1;
        }
        if blocks > 10_000 {
            break;
        }
    }
    let requirement_met = met(&recurrence);

    let mut cones = Vec::new();
    let mut push = |cone: ConeDescriptor, count: usize, limit_only: bool| {
        cones.push(ConeCount { label: cone.label(), cone, count, limit_only });
    };
    for (&k, &n) in &recurrence {
        push(classify_tangent_cone(ScaleRegime::AtRj, KLimit::Finite(k))?, n, false);
        for s in S_SAMPLES {
            push(classify_tangent_cone(ScaleRegime::BetweenOrbitAndNext { s }, KLimit::Finite(k))?, n, false);
        }
    }
    if !prefix.is_empty() {
        let n = prefix.len();
        push(classify_tangent_cone(ScaleRegime::BetweenOrbitAndNext { s: 0.0 }, KLimit::Finite(prefix[0]))?, n, false);
        push(classify_tangent_cone(ScaleRegime::ApproachingNext, KLimit::Finite(prefix[0]))?, n, false);
    }
    if policy.unbounded() && blocks > 0 {
        for regime in [ScaleRegime::AtRj, ScaleRegime::BetweenRjAndOrbit, ScaleRegime::AtOrbitScale] {
            push(classify_tangent_cone(regime, KLimit::Infinite)?, blocks, true);
        }
    }
    Ok(ConeCensus { policy, bound, prefix, blocks, recurrence, requirement_met, cones })
}

/// The classifier over every regime tag and a few limits, errors included.
pub fn case_table() -> Vec<(ScaleRegime, KLimit, Result<ConeDescriptor, SnowflakeError>)> {
    let regimes = [
        ScaleRegime::AtRj,
        ScaleRegime::BetweenRjAndOrbit,
        ScaleRegime::AtOrbitScale,
        ScaleRegime::BetweenOrbitAndNext { s: 0.5 },
        ScaleRegime::BetweenOrbitAndNext { s: 0.0 },
        ScaleRegime::ApproachingNext,
    ];
    let limits = [KLimit::Finite(1), KLimit::Finite(5), KLimit::Infinite];
    regimes
        .iter()
        .flat_map(|&r| limits.iter().map(move |&k| (r, k, classify_tangent_cone(r, k))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ks: &[u64]) -> GeneratorChain {
        GeneratorChain::new(ks.to_vec()).unwrap()
    }

    fn q(n: u64, d: u64) -> QZ {
        QZ::new(n, d).unwrap()
    }

    #[test]
    fn edge_drops_next_digit() {
        let c = chain(&[2, 3]);
        let v = VertexId::new(0, vec![2], &c).unwrap();
        assert_eq!(edge_map(&v, &c).unwrap(), VertexId::new(1, vec![], &c).unwrap());
        assert!(matches!(edge_map(&VertexId::new(1, vec![], &c).unwrap(), &c), Err(SnowflakeError::TopLevel(1))));
        assert!(VertexId::new(0, vec![3], &c).is_err());
    }

    #[test]
    fn action_with_carry() {
        let c = chain(&[2, 3]);
        let v = VertexId::new(0, vec![2], &c).unwrap();
        let r = gamma_action(&q(1, 6), &v, &c).unwrap();
        assert_eq!(r.vertex.tail, vec![0]);
        assert_eq!(r.carry, 1);
        assert_eq!(r.internal, q(1, 2));
        // an element of Γ_0 fixes every level-0 vertex
        let r = gamma_action(&q(1, 2), &v, &c).unwrap();
        assert_eq!((r.vertex, r.carry, r.internal), (v, 0, q(1, 2)));
    }

    #[test]
    fn in_degrees() {
        let c = chain(&[2, 3, 4]);
        let g = SnowflakeGraph::build(&c).unwrap();
        assert_eq!(g.vertex_count(), 12 + 4 + 1);
        for (v, d) in g.in_degrees() {
            let want = if v.level == 0 { 0 } else { c.ks()[v.level] as usize };
            assert_eq!(d, want, "{v}");
        }
        assert!(g.to_dot().contains("\"v0[1,3]\" -> \"v1[3]\""));
        assert_eq!(g.to_json()["edges"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn classifier_examples() {
        let d = classify_tangent_cone(ScaleRegime::AtRj, KLimit::Finite(5)).unwrap();
        assert_eq!(d.kind, ConeKind::LensCone { s: 1.0, k: 5 });
        assert_eq!(d.basepoint_offset, Some(5.0));
        assert_eq!(classify_tangent_cone(ScaleRegime::AtRj, KLimit::Infinite).unwrap().kind, ConeKind::R3xS1);
        assert_eq!(classify_tangent_cone(ScaleRegime::AtRj, KLimit::Finite(1)).unwrap().kind, ConeKind::R4);
        for k in [KLimit::Finite(3), KLimit::Infinite] {
            let d = classify_tangent_cone(ScaleRegime::BetweenOrbitAndNext { s: 0.0 }, k).unwrap();
            assert_eq!(d.kind, ConeKind::HalfLine);
        }
        assert!(classify_tangent_cone(ScaleRegime::BetweenRjAndOrbit, KLimit::Finite(3)).is_err());
    }

    #[test]
    fn cyclic_integers_bound_four() {
        let c = enumerate_cones(ChainPolicy::CyclicIntegers, 4).unwrap();
        assert_eq!(c.prefix, vec![2, 2, 3, 2, 3, 4, 2, 3, 4, 5]);
        assert!(c.requirement_met);
        let p = enumerate_cones(ChainPolicy::CyclicPrimes, 5).unwrap();
        assert_eq!(p.prefix, vec![2, 2, 3, 2, 3, 5, 2, 3, 5, 7]);
        let k = enumerate_cones(ChainPolicy::ConstantP { p: 2 }, 6).unwrap();
        assert_eq!(k.prefix, vec![2, 2]);
        assert!(k.cones.iter().all(|c| !c.limit_only));
        let empty = enumerate_cones(ChainPolicy::CyclicIntegers, 1).unwrap();
        assert!(empty.prefix.is_empty() && empty.requirement_met);
    }

    #[test]
    fn chains_and_carries() {
        let cs = chains_up_to(12);
        assert!(cs.contains(&vec![2, 3, 2]) && cs.contains(&vec![12]) && !cs.contains(&vec![13]));
        // ordered factorisations of 2..=12 number 1,1,2,1,3,1,4,2,3,1,8
        assert_eq!(cs.len(), 27);
        let a = carry_audit(&[2, 3, 4]);
        assert!(a.clean());
        assert_eq!(a.pairs, 144 + 16 + 1);
    }

    #[test]
    fn integer_route_matches_vertices() {
        let c = chain(&[3, 2, 5]);
        for (j, level) in (0..3).map(|j| (j, vertices(&c, j).unwrap())) {
            for (t, v) in level.iter().enumerate() {
                assert_eq!(tail_value(v, &c), t as u64);
                assert_eq!(&vertex_of(j, t as u64, &c), v);
            }
        }
        assert_eq!(spread(10, 4), vec![0, 3, 6, 9]);
        assert_eq!(spread(3, 4), vec![0, 1, 2]);
    }

    #[test]
    fn laws_hold_on_small_chains() {
        for ks in [vec![2, 3], vec![2, 2, 2], vec![5], vec![3, 4, 2]] {
            let l = check_graph_laws(&chain(&ks), usize::MAX).unwrap();
            assert!(l.all_hold(), "{l:?}");
            assert_eq!(l.actions_evaluated, l.group_order * (0..ks.len()).map(|j| level_size(&chain(&ks), j) as u64).sum::<u64>());
        }
    }
}
