//! Pseudoperiodic points of finite dynamical systems and their truncated
//! inverse limits.
//!
//! A point is ε-pseudoperiodic when a chain of ε-jumps through the map
//! returns to it; on a finite space this is a cycle search in the
//! relation graph x → y iff d(f(x), y) < ε. The inverse limit stacks
//! backward-compatible trajectories of depth N with the geometrically
//! weighted metric, and [`verify_lift`] checks both directions of the
//! transfer between the base system and the truncated limit with the
//! slack constants the transfer actually provides: a factor 2 going down
//! (the first coordinate carries weight 1/2) and a uniform-continuity
//! schedule plus a 2^{-N} tail going up.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{self, MetricSpace, TopGraph};
use crate::orbit::InfinitePath;

/// A finite metric space with a self-map. Surjectivity is recorded at
/// construction; the inverse-limit operations require it.
#[derive(Debug, Clone)]
pub struct FiniteDynSystem {
    space: MetricSpace,
    map: Vec<usize>,
    surjective: bool,
}

impl FiniteDynSystem {
    pub fn new(space: MetricSpace, map: Vec<usize>) -> Result<Self> {
        if map.len() != space.len() {
            return Err(Error::Schema(format!(
                "map table has {} entries for {} points",
                map.len(),
                space.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&y| y >= space.len()) {
            return Err(Error::Schema(format!(
                "map sends a point to unknown index {bad}"
            )));
        }
        let mut hit = vec![false; space.len()];
        for &y in &map {
            hit[y] = true;
        }
        let surjective = hit.iter().all(|&b| b);
        Ok(FiniteDynSystem {
            space,
            map,
            surjective,
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn is_surjective(&self) -> bool {
        self.surjective
    }

    /// Same system with the metric rescaled to diameter at most 1.
    pub fn normalized(&self) -> FiniteDynSystem {
        FiniteDynSystem {
            space: self.space.normalized(),
            map: self.map.clone(),
            surjective: self.surjective,
        }
    }
}

/// The ε-relation graph: an arc x → y whenever d(f(x), y) < ε (strict).
#[derive(Debug, Clone)]
pub struct RelationGraph {
    pub eps: f64,
    adj: Vec<Vec<usize>>,
}

impl RelationGraph {
    pub fn out_neighbors(&self, x: usize) -> &[usize] {
        &self.adj[x]
    }
}

pub fn relation_graph(sys: &FiniteDynSystem, eps: f64) -> RelationGraph {
    let n = sys.len();
    let adj = (0..n)
        .map(|x| {
            let fx = sys.apply(x);
            (0..n).filter(|&y| sys.space.dist(fx, y) < eps).collect()
        })
        .collect();
    RelationGraph { eps, adj }
}

/// A cyclic ε-chain x_1, …, x_n with d(f(x_i), x_{i+1}) < ε, indices
/// mod n.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoOrbitWitness {
    pub points: Vec<usize>,
    pub eps: f64,
}

impl PseudoOrbitWitness {
    /// Independent recheck of the cyclic strict-inequality condition.
    pub fn is_valid(&self, sys: &FiniteDynSystem) -> bool {
        let n = self.points.len();
        if n == 0 {
            return false;
        }
        (0..n).all(|i| {
            let fx = sys.apply(self.points[i]);
            sys.space.dist(fx, self.points[(i + 1) % n]) < self.eps
        })
    }
}

/// Searches for a shortest cyclic ε-chain through `x` by breadth-first
/// search from its out-neighbors back to `x`.
pub fn is_pseudoperiodic(sys: &FiniteDynSystem, eps: f64, x: usize) -> Option<PseudoOrbitWitness> {
    let rel = relation_graph(sys, eps);
    is_pseudoperiodic_in(&rel, x)
}

/// Same search on a prebuilt relation graph.
pub fn is_pseudoperiodic_in(rel: &RelationGraph, x: usize) -> Option<PseudoOrbitWitness> {
    let n = rel.adj.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    for &y in rel.out_neighbors(x) {
        if y == x {
            return Some(PseudoOrbitWitness {
                points: vec![x],
                eps: rel.eps,
            });
        }
        if !seen[y] {
            seen[y] = true;
            queue.push_back(y);
        }
    }
    while let Some(y) = queue.pop_front() {
        for &z in rel.out_neighbors(y) {
            if z == x {
                // Unwind the chain x -> ... -> y, then close at x.
                let mut chain = vec![y];
                let mut at = y;
                while let Some(p) = parent[at] {
                    chain.push(p);
                    at = p;
                }
                chain.push(x);
                chain.reverse();
                return Some(PseudoOrbitWitness {
                    points: chain,
                    eps: rel.eps,
                });
            }
            if !seen[z] {
                seen[z] = true;
                parent[z] = Some(y);
                queue.push_back(z);
            }
        }
    }
    None
}

pub fn all_pseudoperiodic(sys: &FiniteDynSystem, eps: f64) -> bool {
    let rel = relation_graph(sys, eps);
    (0..sys.len()).all(|x| is_pseudoperiodic_in(&rel, x).is_some())
}

/// Depth-N truncation of the inverse limit: sequences (x_1 … x_N) with
/// x_n = f(x_{n+1}), carried as a finite dynamical system of its own
/// under the coordinatewise map and the weighted metric
/// Σ 2^{-n} d(x_n, y_n).
#[derive(Debug, Clone)]
pub struct InverseLimitSystem {
    pub depth: usize,
    system: FiniteDynSystem,
    seqs: Vec<Vec<usize>>,
}

impl InverseLimitSystem {
    pub fn system(&self) -> &FiniteDynSystem {
        &self.system
    }

    pub fn points(&self) -> &[Vec<usize>] {
        &self.seqs
    }
}

pub fn inverse_limit(sys: &FiniteDynSystem, depth: usize) -> Result<InverseLimitSystem> {
    if !sys.is_surjective() {
        let missing = {
            let mut hit = vec![false; sys.len()];
            for x in 0..sys.len() {
                hit[sys.apply(x)] = true;
            }
            (0..sys.len()).find(|&y| !hit[y]).unwrap_or(0)
        };
        return Err(Error::NotSurjective(sys.space.label(missing).to_string()));
    }
    if depth == 0 {
        return Err(Error::Schema("inverse-limit depth must be positive".into()));
    }
    // A compatible sequence is determined by its deepest coordinate:
    // x_j = f^(depth - j)(x_depth).
    let mut seqs = Vec::with_capacity(sys.len());
    for tail in 0..sys.len() {
        let mut seq = vec![0usize; depth];
        let mut at = tail;
        for j in (0..depth).rev() {
            seq[j] = at;
            at = sys.apply(at);
        }
        seqs.push(seq);
    }
    let labels: Vec<String> = seqs
        .iter()
        .map(|seq| {
            let parts: Vec<&str> = seq.iter().map(|&i| sys.space.label(i)).collect();
            format!("({})", parts.join(","))
        })
        .collect();
    let m = seqs.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let d: f64 = (0..depth)
                .map(|k| 0.5f64.powi(k as i32 + 1) * sys.space.dist(seqs[i][k], seqs[j][k]))
                .sum();
            dist[i * m + j] = d;
        }
    }
    let space = MetricSpace::new(labels, dist)?;
    let index: HashMap<&Vec<usize>, usize> = seqs.iter().zip(0..m).collect();
    let map: Vec<usize> = seqs
        .iter()
        .map(|seq| {
            let image: Vec<usize> = seq.iter().map(|&x| sys.apply(x)).collect();
            index.get(&image).copied().ok_or_else(|| {
                Error::Internal("coordinatewise image left the inverse limit".into())
            })
        })
        .collect::<Result<_>>()?;
    let system = FiniteDynSystem::new(space, map)?;
    Ok(InverseLimitSystem {
        depth,
        system,
        seqs,
    })
}

/// Report of the pseudoperiodicity transfer between a system and its
/// depth-N inverse limit.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LiftReport {
    pub eps: f64,
    pub depth: usize,
    /// every point of X is ε-pseudoperiodic
    pub base_all_pseudoperiodic: bool,
    /// every point of the truncated limit is ε-pseudoperiodic
    pub limit_all_pseudoperiodic: bool,
    /// limit at ε forces the base at 2ε
    pub downward_ok: bool,
    /// base at the schedule value δ_N forces the limit at 2ε + 2^{-N}
    pub upward_ok: bool,
    /// uniform-continuity schedule δ_1 = ε ≥ δ_2 ≥ … ≥ δ_N
    pub delta_schedule: Vec<f64>,
}

/// δ_{k+1} is the largest threshold (drawn from the finite set of pair
/// distances) such that d(x, y) < δ_{k+1} forces d(f(x), f(y)) < δ_k.
fn delta_schedule(sys: &FiniteDynSystem, eps: f64, steps: usize) -> Vec<f64> {
    let n = sys.len();
    let mut candidates: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            candidates.push(sys.space.dist(i, j));
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let ok = |t: f64, bound: f64| -> bool {
        for x in 0..n {
            for y in 0..n {
                if sys.space.dist(x, y) < t && sys.space.dist(sys.apply(x), sys.apply(y)) >= bound {
                    return false;
                }
            }
        }
        true
    };

    let mut schedule = Vec::with_capacity(steps);
    let mut delta = eps;
    schedule.push(delta);
    for _ in 1..steps {
        let mut next = f64::MIN;
        for &t in candidates.iter().chain(std::iter::once(&delta)) {
            if t > 0.0 && t <= delta && t > next && ok(t, delta) {
                next = t;
            }
        }
        if next == f64::MIN {
            // Only the diagonal sits below the smallest positive distance,
            // and f never separates a point from itself.
            next = candidates
                .iter()
                .copied()
                .find(|&t| t > 0.0)
                .unwrap_or(delta)
                .min(delta);
        }
        delta = next;
        schedule.push(delta);
    }
    schedule
}

/// Checks the transfer of pseudoperiodicity through the depth-N inverse
/// limit at one ε. Requires a surjective map and a metric of diameter at
/// most 1.
pub fn verify_lift(sys: &FiniteDynSystem, eps: f64, depth: usize) -> Result<LiftReport> {
    if sys.space.diameter() > 1.0 {
        return Err(Error::UnnormalizedMetric(sys.space.diameter()));
    }
    let limit = inverse_limit(sys, depth)?;
    let base_all = all_pseudoperiodic(sys, eps);
    let limit_all = all_pseudoperiodic(limit.system(), eps);
    // Coordinate 1 carries weight 1/2, so projecting a limit chain to the
    // base doubles the gap bound.
    let downward_ok = !limit_all || all_pseudoperiodic(sys, 2.0 * eps);
    let schedule = delta_schedule(sys, eps, depth.max(1));
    let delta_n = *schedule.last().expect("schedule nonempty");
    let tail = 0.5f64.powi(depth as i32);
    let upward_ok =
        !all_pseudoperiodic(sys, delta_n) || all_pseudoperiodic(limit.system(), 2.0 * eps + tail);
    Ok(LiftReport {
        eps,
        depth,
        base_all_pseudoperiodic: base_all,
        limit_all_pseudoperiodic: limit_all,
        downward_ok,
        upward_ok,
        delta_schedule: schedule,
    })
}

/// Turns an s-injective, sink-free graph into the vertex dynamical system
/// v ↦ r(s⁻¹(v)). The surjectivity flag records whether the range map is
/// onto.
pub fn graph_shift_system(g: &TopGraph) -> Result<FiniteDynSystem> {
    let report = graph::validate(g);
    if let Some((a, b)) = report.s_witness {
        return Err(Error::SourceNotInjective(
            g.edge_label(a).to_string(),
            g.edge_label(b).to_string(),
        ));
    }
    if let Some(&sink) = report.sinks.first() {
        return Err(Error::SinkPresent(g.vertex_label(sink).to_string()));
    }
    let map: Vec<usize> = g
        .vertices()
        .map(|v| {
            let e = g.edges_from(v)[0];
            g.rng(e).0
        })
        .collect();
    FiniteDynSystem::new(g.metric().clone(), map)
}

/// Exact check of r(α(n)) = r(σ^{n-1}(α)) on the lasso representation.
pub fn verify_rho_identity(g: &TopGraph, alpha: &InfinitePath, n: usize) -> bool {
    assert!(n >= 1);
    let via_index = g.rng(alpha.edge_at(n));
    let via_shift = alpha.sigma_pow(n - 1).range(g);
    via_index == via_shift
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    points: Vec<PointDoc>,
    #[serde(default)]
    metric: Option<graph::MetricDoc>,
    map: HashMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointDoc {
    id: String,
    #[serde(default)]
    coords: Option<Vec<f64>>,
}

/// Parses a dynamical-system document: a `points` list (`id`, optional
/// `coords`), an optional `metric` block as in the graph schema, and a
/// `[map]` table sending every point id to a point id.
pub fn load_system_str(text: &str) -> Result<FiniteDynSystem> {
    let doc: SystemDoc = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let labels: Vec<String> = doc.points.iter().map(|p| p.id.clone()).collect();
    let mut seen = HashMap::new();
    for l in &labels {
        if seen.insert(l.clone(), ()).is_some() {
            return Err(Error::DuplicateId {
                kind: "point",
                id: l.clone(),
            });
        }
    }
    let coords: Vec<Option<&Vec<f64>>> = doc.points.iter().map(|p| p.coords.as_ref()).collect();
    let space = graph::metric_from_parts(labels.clone(), &coords, doc.metric.as_ref())?;
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    for key in doc.map.keys() {
        if !index.contains_key(key.as_str()) {
            return Err(Error::Schema(format!(
                "map table lists unknown point `{key}`"
            )));
        }
    }
    let map: Vec<usize> = labels
        .iter()
        .map(|l| {
            let target = doc
                .map
                .get(l)
                .ok_or_else(|| Error::Schema(format!("map table misses point `{l}`")))?;
            index
                .get(target.as_str())
                .copied()
                .ok_or_else(|| Error::Schema(format!("map sends `{l}` to unknown `{target}`")))
        })
        .collect::<Result<_>>()?;
    FiniteDynSystem::new(space, map)
}

pub fn load_system_path(path: &std::path::Path) -> Result<FiniteDynSystem> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_system_str(&text)
}
