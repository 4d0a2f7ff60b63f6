//! Finite topological graphs with vertex metrics.
//!
//! A graph here is a quadruple (E⁰, E¹, rng, src) of finite sets and total
//! maps, plus a metric on the vertex set. Vertices and edges keep their
//! input order, so every scan over them is deterministic.
//!
//! Graphs are ingested from a TOML document (see [`load_graph_str`]) or
//! produced by the discretizers in [`discretize`], which build the finite
//! models used throughout: uniform circle nets under a rotation and the
//! arctan-compactified integer shift.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when checking the triangle inequality on metrics built from
/// floating-point formulas (arc length, Euclidean norms). Exact-input
/// metrics satisfy the axioms with slack zero; the constant only forgives
/// last-bit rounding of computed distances.
const TRIANGLE_SLACK: f64 = 1e-12;

/// Above this size, metric validation samples triples instead of scanning
/// all of them.
const EXHAUSTIVE_METRIC_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// A finite metric space over labelled points.
///
/// Distances are stored as a dense row-major matrix. The constructor
/// verifies the metric axioms: zero diagonal, symmetry, strict positivity
/// off the diagonal, and the triangle inequality (exhaustively up to
/// 60 points, on a deterministic sample above that).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
}

impl MetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n * n {
            return Err(Error::MetricViolation(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        let space = MetricSpace { labels, dist };
        space.check_axioms()?;
        Ok(space)
    }

    /// Builds the discrete metric: distance 1 between distinct points.
    pub fn discrete(labels: Vec<String>) -> Self {
        let n = labels.len();
        let mut dist = vec![1.0; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        MetricSpace { labels, dist }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.labels.len() + j]
    }

    /// Largest pairwise distance; 0 for spaces with fewer than two points.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct points, if any.
    pub fn min_positive_distance(&self) -> Option<f64> {
        let n = self.labels.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                best = Some(match best {
                    Some(b) if b <= d => b,
                    _ => d,
                });
            }
        }
        best
    }

    /// Returns a copy rescaled so the diameter is at most 1.
    pub fn normalized(&self) -> MetricSpace {
        let diam = self.diameter();
        if diam <= 1.0 {
            return self.clone();
        }
        let dist = self.dist.iter().map(|d| d / diam).collect();
        MetricSpace {
            labels: self.labels.clone(),
            dist,
        }
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.labels.len();
        for i in 0..n {
            if self.dist(i, i) != 0.0 {
                return Err(Error::MetricViolation(format!(
                    "d({l},{l}) = {} is nonzero",
                    self.dist(i, i),
                    l = self.labels[i]
                )));
            }
            for j in 0..n {
                let d = self.dist(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::MetricViolation(format!(
                        "d({},{}) = {d} is not a finite nonnegative real",
                        self.labels[i], self.labels[j]
                    )));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::MetricViolation(format!(
                        "d({},{}) = 0 but the points are distinct",
                        self.labels[i], self.labels[j]
                    )));
                }
                if d != self.dist(j, i) {
                    return Err(Error::MetricViolation(format!(
                        "d({0},{1}) = {d} differs from d({1},{0}) = {2}",
                        self.labels[i],
                        self.labels[j],
                        self.dist(j, i)
                    )));
                }
            }
        }
        if n <= EXHAUSTIVE_METRIC_LIMIT {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        self.check_triangle(i, j, k)?;
                    }
                }
            }
        } else {
            // Deterministic sample: a fixed stride walk over the triple cube.
            let samples = 200_000usize;
            let mut state = 0x9e37_79b9_7f4a_7c15u64;
            for _ in 0..samples {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let i = (state >> 33) as usize % n;
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % n;
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let k = (state >> 33) as usize % n;
                self.check_triangle(i, j, k)?;
            }
        }
        Ok(())
    }

    fn check_triangle(&self, i: usize, j: usize, k: usize) -> Result<()> {
        if self.dist(i, k) > self.dist(i, j) + self.dist(j, k) + TRIANGLE_SLACK {
            return Err(Error::MetricViolation(format!(
                "triangle inequality fails on ({}, {}, {}): {} > {} + {}",
                self.labels[i],
                self.labels[j],
                self.labels[k],
                self.dist(i, k),
                self.dist(i, j),
                self.dist(j, k)
            )));
        }
        Ok(())
    }
}

/// A finite topological graph: metric vertex set, edge set, and total
/// source/range maps. Iteration order over vertices and edges is the
/// construction (document) order.
#[derive(Debug, Clone)]
pub struct TopGraph {
    vertices: MetricSpace,
    edge_labels: Vec<String>,
    src: Vec<VertexId>,
    rng: Vec<VertexId>,
}

impl TopGraph {
    pub fn new(
        vertices: MetricSpace,
        edge_labels: Vec<String>,
        src: Vec<VertexId>,
        rng: Vec<VertexId>,
    ) -> Result<Self> {
        if edge_labels.len() != src.len() || edge_labels.len() != rng.len() {
            return Err(Error::Schema(
                "edge labels, sources, and ranges must have equal length".into(),
            ));
        }
        let n = vertices.len();
        for (idx, (&s, &r)) in src.iter().zip(&rng).enumerate() {
            if s.0 >= n {
                return Err(Error::UnknownVertex {
                    edge: edge_labels[idx].clone(),
                    vertex: format!("#{}", s.0),
                });
            }
            if r.0 >= n {
                return Err(Error::UnknownVertex {
                    edge: edge_labels[idx].clone(),
                    vertex: format!("#{}", r.0),
                });
            }
        }
        Ok(TopGraph {
            vertices,
            edge_labels,
            src,
            rng,
        })
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count()).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edge_count()).map(EdgeId)
    }

    pub fn src(&self, e: EdgeId) -> VertexId {
        self.src[e.0]
    }

    pub fn rng(&self, e: EdgeId) -> VertexId {
        self.rng[e.0]
    }

    pub fn vertex_label(&self, v: VertexId) -> &str {
        self.vertices.label(v.0)
    }

    pub fn edge_label(&self, e: EdgeId) -> &str {
        &self.edge_labels[e.0]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.vertices
            .labels()
            .iter()
            .position(|l| l == label)
            .map(VertexId)
    }

    pub fn edge_by_label(&self, label: &str) -> Option<EdgeId> {
        self.edge_labels.iter().position(|l| l == label).map(EdgeId)
    }

    pub fn vertex_dist(&self, a: VertexId, b: VertexId) -> f64 {
        self.vertices.dist(a.0, b.0)
    }

    /// Edges emitted by `v`, in input order (s⁻¹(v)).
    pub fn edges_from(&self, v: VertexId) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.src(e) == v).collect()
    }

    /// Edges received by `v`, in input order (r⁻¹(v)).
    pub fn edges_into(&self, v: VertexId) -> Vec<EdgeId> {
        self.edges().filter(|&e| self.rng(e) == v).collect()
    }
}

/// Structural facts about a graph gathered by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Vertices emitting no edge (s⁻¹(v) = ∅).
    pub sinks: Vec<VertexId>,
    /// Vertices receiving no edge (v ∉ r(E¹)).
    pub sources: Vec<VertexId>,
    pub s_injective: bool,
    /// A pair of distinct edges sharing a source, when `s_injective` fails.
    pub s_witness: Option<(EdgeId, EdgeId)>,
    /// Vertices in r(E¹); on finite discrete graphs these are exactly the
    /// vertices where the covariance relation applies.
    pub regular_vertices: Vec<VertexId>,
    pub no_sinks: bool,
}

/// Scans the graph for sinks, sources, regular vertices, and injectivity
/// of the source map. Pure, exhaustive, deterministic.
pub fn validate(g: &TopGraph) -> ValidationReport {
    let n = g.vertex_count();
    let mut out_degree = vec![0usize; n];
    let mut in_degree = vec![0usize; n];
    let mut first_emitter: Vec<Option<EdgeId>> = vec![None; n];
    let mut s_witness = None;
    for e in g.edges() {
        let s = g.src(e);
        let r = g.rng(e);
        out_degree[s.0] += 1;
        in_degree[r.0] += 1;
        match first_emitter[s.0] {
            None => first_emitter[s.0] = Some(e),
            Some(prev) => {
                if s_witness.is_none() {
                    s_witness = Some((prev, e));
                }
            }
        }
    }
    let sinks: Vec<VertexId> = g.vertices().filter(|v| out_degree[v.0] == 0).collect();
    let sources: Vec<VertexId> = g.vertices().filter(|v| in_degree[v.0] == 0).collect();
    let regular_vertices: Vec<VertexId> = g.vertices().filter(|v| in_degree[v.0] > 0).collect();
    ValidationReport {
        no_sinks: sinks.is_empty(),
        sinks,
        sources,
        s_injective: s_witness.is_none(),
        s_witness,
        regular_vertices,
    }
}

/// A finite path: composable edges stored in traversal order, so
/// `edges[i]` is crossed before `edges[i+1]` and
/// `rng(edges[i]) = src(edges[i+1])`. A zero-length path sits at a single
/// vertex. Written right to left as e_n … e_1, the source is s(e_1) and
/// the range is r(e_n).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    base: VertexId,
    edges: Vec<EdgeId>,
}

impl Path {
    /// Zero-length path at a vertex.
    pub fn at_vertex(v: VertexId) -> Self {
        Path {
            base: v,
            edges: Vec::new(),
        }
    }

    pub fn from_edges(g: &TopGraph, edges: Vec<EdgeId>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::NotComposable(
                "an empty edge list needs a base vertex; use Path::at_vertex".into(),
            ));
        }
        for pair in edges.windows(2) {
            if g.rng(pair[0]) != g.src(pair[1]) {
                return Err(Error::NotComposable(format!(
                    "rng({}) = {} but src({}) = {}",
                    g.edge_label(pair[0]),
                    g.vertex_label(g.rng(pair[0])),
                    g.edge_label(pair[1]),
                    g.vertex_label(g.src(pair[1]))
                )));
            }
        }
        let base = g.src(edges[0]);
        Ok(Path { base, edges })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// s(α): source of the first edge crossed.
    pub fn source(&self, g: &TopGraph) -> VertexId {
        if let Some(&first) = self.edges.first() {
            g.src(first)
        } else {
            self.base
        }
    }

    /// r(α): range of the last edge crossed.
    pub fn range(&self, g: &TopGraph) -> VertexId {
        if let Some(&last) = self.edges.last() {
            g.rng(last)
        } else {
            self.base
        }
    }

    pub fn is_loop(&self, g: &TopGraph) -> bool {
        !self.edges.is_empty() && self.source(g) == self.range(g)
    }

    /// Traversal-order concatenation: self then other.
    pub fn concat(&self, g: &TopGraph, other: &Path) -> Result<Path> {
        if self.range(g) != other.source(g) {
            return Err(Error::NotComposable(format!(
                "range {} does not meet source {}",
                g.vertex_label(self.range(g)),
                g.vertex_label(other.source(g))
            )));
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        let base = if edges.is_empty() {
            self.base
        } else {
            g.src(edges[0])
        };
        Ok(Path { base, edges })
    }

    pub fn display(&self, g: &TopGraph) -> String {
        if self.edges.is_empty() {
            format!("({})", g.vertex_label(self.base))
        } else {
            self.edges
                .iter()
                .map(|&e| g.edge_label(e))
                .collect::<Vec<_>>()
                .join(".")
        }
    }
}

/// All paths of length `n`, in lexicographic edge order. Length 0 returns
/// one path per vertex.
pub fn enumerate_paths(g: &TopGraph, n: usize) -> Vec<Path> {
    if n == 0 {
        return g.vertices().map(Path::at_vertex).collect();
    }
    let mut out = Vec::new();
    let mut stack: Vec<EdgeId> = Vec::with_capacity(n);
    fn extend(g: &TopGraph, n: usize, stack: &mut Vec<EdgeId>, out: &mut Vec<Path>) {
        if stack.len() == n {
            out.push(Path {
                base: g.src(stack[0]),
                edges: stack.clone(),
            });
            return;
        }
        let tip = stack.last().map(|&e| g.rng(e));
        for e in g.edges() {
            if tip.is_none() || tip == Some(g.src(e)) {
                stack.push(e);
                extend(g, n, stack, out);
                stack.pop();
            }
        }
    }
    extend(g, n, &mut stack, &mut out);
    out
}

/// Descriptors for the built-in discretized models.
#[derive(Debug, Clone)]
pub enum DiscretizeSpec {
    /// Rotation of a uniform n-point net on the circle of circumference 2π,
    /// with arc-length vertex metric. The edge at sample x has range x and
    /// source the nearest sample to x rotated by `angle`; on a uniform net
    /// the snapped rotation is always an index shift, hence a bijection.
    CircleRotation { angle: f64 },
    /// Vertices {−N..N, −∞, +∞} with d(m, n) = |arctan m − arctan n| and
    /// arctan(±∞) = ±π/2. Each vertex v emits one edge toward v − 1,
    /// saturating at the endpoints: the self-loops at ±∞ survive the model
    /// untouched, and the bottom finite vertex −N points at −∞ because its
    /// true target −N−1 falls outside the window. The top finite vertex N
    /// receives nothing; truncation cuts the flow from above, so N is a
    /// source in every finite window.
    CompactifiedShift { half_width: i64 },
    /// E⁰ = E¹ = X, r = id, s = f for an explicit map on a finite metric
    /// space: one edge per point x, with range x and source f(x).
    ExplicitMap { space: MetricSpace, map: Vec<usize> },
}

/// Builds the finite model described by `spec`. `resolution` is the net
/// size for [`DiscretizeSpec::CircleRotation`] and must be at least 3;
/// the other builders carry their size in the descriptor and ignore it.
pub fn discretize(spec: &DiscretizeSpec, resolution: usize) -> Result<TopGraph> {
    match spec {
        DiscretizeSpec::CircleRotation { angle } => {
            if resolution < 3 {
                return Err(Error::Discretize(format!(
                    "circle resolution {resolution} is below 3"
                )));
            }
            let n = resolution;
            let tau = std::f64::consts::TAU;
            let mesh = tau / n as f64;
            let labels: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let diff = (i as f64 - j as f64).abs() * mesh;
                    let d = diff.min(tau - diff);
                    dist[i * n + j] = d;
                }
            }
            let space = MetricSpace::new(labels, dist)?;
            // Snap the rotated sample to the nearest net index. Because the
            // net is uniform, the offset is the same for every k.
            let offset = (angle / mesh).round() as i64;
            let mut edge_labels = Vec::with_capacity(n);
            let mut src = Vec::with_capacity(n);
            let mut rng = Vec::with_capacity(n);
            for k in 0..n {
                let target = (k as i64 + offset).rem_euclid(n as i64) as usize;
                edge_labels.push(format!("e{k}"));
                rng.push(VertexId(k));
                src.push(VertexId(target));
            }
            TopGraph::new(space, edge_labels, src, rng)
        }
        DiscretizeSpec::CompactifiedShift { half_width } => {
            let n = *half_width;
            if n < 0 {
                return Err(Error::Discretize(format!(
                    "half width {n} must be nonnegative"
                )));
            }
            let mut labels: Vec<String> = (-n..=n).map(|m| m.to_string()).collect();
            labels.push("-inf".into());
            labels.push("+inf".into());
            let count = labels.len();
            let arctan = |idx: usize| -> f64 {
                if idx < (2 * n + 1) as usize {
                    ((idx as i64) - n) as f64
                } else if idx == (2 * n + 1) as usize {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
                .atan()
            };
            let mut dist = vec![0.0; count * count];
            for i in 0..count {
                for j in 0..count {
                    dist[i * count + j] = (arctan(i) - arctan(j)).abs();
                }
            }
            let space = MetricSpace::new(labels, dist)?;
            let idx_of = |m: i64| -> VertexId { VertexId((m + n) as usize) };
            let neg_inf = VertexId((2 * n + 1) as usize);
            let pos_inf = VertexId((2 * n + 2) as usize);
            let mut edge_labels = Vec::new();
            let mut src = Vec::new();
            let mut rng = Vec::new();
            // Edge m runs m+1 -> m as in the full model. The edge below the
            // window keeps its source -N but its range saturates to -inf, so
            // every vertex emits exactly one edge.
            edge_labels.push(format!("e{}", -n - 1));
            src.push(idx_of(-n));
            rng.push(neg_inf);
            for m in -n..n {
                edge_labels.push(format!("e{m}"));
                src.push(idx_of(m + 1));
                rng.push(idx_of(m));
            }
            edge_labels.push("e-inf".into());
            src.push(neg_inf);
            rng.push(neg_inf);
            edge_labels.push("e+inf".into());
            src.push(pos_inf);
            rng.push(pos_inf);
            TopGraph::new(space, edge_labels, src, rng)
        }
        DiscretizeSpec::ExplicitMap { space, map } => {
            if map.len() != space.len() {
                return Err(Error::Discretize(format!(
                    "map table has {} entries for {} points",
                    map.len(),
                    space.len()
                )));
            }
            let mut edge_labels = Vec::with_capacity(space.len());
            let mut src = Vec::with_capacity(space.len());
            let mut rng = Vec::with_capacity(space.len());
            for (x, &fx) in map.iter().enumerate() {
                if fx >= space.len() {
                    return Err(Error::Discretize(format!(
                        "map sends point {x} outside the space"
                    )));
                }
                edge_labels.push(format!("e[{}]", space.label(x)));
                rng.push(VertexId(x));
                src.push(VertexId(fx));
            }
            TopGraph::new(space.clone(), edge_labels, src, rng)
        }
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    vertices: Vec<VertexDoc>,
    #[serde(default)]
    metric: Option<MetricDoc>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: String,
    #[serde(default)]
    coords: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct MetricDoc {
    kind: MetricKind,
    #[serde(default)]
    entries: Option<Vec<MetricEntry>>,
}

#[derive(Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum MetricKind {
    Explicit,
    Euclidean,
    ArctanZ,
    Discrete,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricEntry {
    from: String,
    to: String,
    dist: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    src: String,
    rng: String,
}

/// Shared between the graph and dynamical-system file schemas.
pub(crate) fn metric_from_parts(
    labels: Vec<String>,
    coords: &[Option<&Vec<f64>>],
    metric: Option<&MetricDoc>,
) -> Result<MetricSpace> {
    let n = labels.len();
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let kind = metric.as_ref().map(|m| &m.kind);
    match kind {
        None | Some(MetricKind::Discrete) => Ok(MetricSpace::discrete(labels)),
        Some(MetricKind::Explicit) => {
            let entries = metric
                .as_ref()
                .and_then(|m| m.entries.as_ref())
                .ok_or_else(|| Error::Schema("explicit metric requires `entries`".into()))?;
            let mut dist = vec![f64::NAN; n * n];
            for i in 0..n {
                dist[i * n + i] = 0.0;
            }
            for entry in entries {
                let i = *index.get(entry.from.as_str()).ok_or_else(|| {
                    Error::Schema(format!(
                        "metric entry references unknown vertex `{}`",
                        entry.from
                    ))
                })?;
                let j = *index.get(entry.to.as_str()).ok_or_else(|| {
                    Error::Schema(format!(
                        "metric entry references unknown vertex `{}`",
                        entry.to
                    ))
                })?;
                dist[i * n + j] = entry.dist;
                dist[j * n + i] = entry.dist;
            }
            for i in 0..n {
                for j in 0..n {
                    if dist[i * n + j].is_nan() {
                        return Err(Error::Schema(format!(
                            "explicit metric is missing the pair ({}, {})",
                            labels[i], labels[j]
                        )));
                    }
                }
            }
            MetricSpace::new(labels, dist)
        }
        Some(MetricKind::Euclidean) => {
            let coords: Vec<&Vec<f64>> = coords
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.ok_or_else(|| {
                        Error::Schema(format!(
                            "point `{}` lacks coords for the euclidean metric",
                            labels[i]
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let dim = coords.first().map(|c| c.len()).unwrap_or(0);
            if coords.iter().any(|c| c.len() != dim) {
                return Err(Error::Schema("coords have mixed dimensions".into()));
            }
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let d2: f64 = coords[i]
                        .iter()
                        .zip(coords[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    dist[i * n + j] = d2.sqrt();
                }
            }
            MetricSpace::new(labels, dist)
        }
        Some(MetricKind::ArctanZ) => {
            let values: Vec<f64> = labels
                .iter()
                .map(|l| match l.as_str() {
                    "+inf" => Ok(std::f64::consts::FRAC_PI_2),
                    "-inf" => Ok(-std::f64::consts::FRAC_PI_2),
                    other => other
                        .parse::<i64>()
                        .map(|m| (m as f64).atan())
                        .map_err(|_| {
                            Error::Schema(format!(
                                "arctan-z metric requires integer or ±inf vertex ids, got `{other}`"
                            ))
                        }),
                })
                .collect::<Result<_>>()?;
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    dist[i * n + j] = (values[i] - values[j]).abs();
                }
            }
            MetricSpace::new(labels, dist)
        }
    }
}

/// Parses a graph document. The schema is TOML with a `vertices` list
/// (`id`, optional `coords`), an optional `metric` block (`kind` one of
/// `explicit`, `euclidean`, `arctan-z`, `discrete`; explicit kinds take
/// symmetric `entries`), and an `edges` list (`id`, `src`, `rng`).
/// Unknown keys are rejected.
pub fn load_graph_str(text: &str) -> Result<TopGraph> {
    let doc: GraphDoc = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let mut seen = HashMap::new();
    for v in &doc.vertices {
        if seen.insert(v.id.clone(), ()).is_some() {
            return Err(Error::DuplicateId {
                kind: "vertex",
                id: v.id.clone(),
            });
        }
    }
    let labels: Vec<String> = doc.vertices.iter().map(|v| v.id.clone()).collect();
    let coords: Vec<Option<&Vec<f64>>> = doc.vertices.iter().map(|v| v.coords.as_ref()).collect();
    let space = metric_from_parts(labels, &coords, doc.metric.as_ref())?;
    let index: HashMap<&str, usize> = space
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut edge_labels = Vec::with_capacity(doc.edges.len());
    let mut src = Vec::with_capacity(doc.edges.len());
    let mut rng = Vec::with_capacity(doc.edges.len());
    let mut seen_edges = HashMap::new();
    for e in &doc.edges {
        if seen_edges.insert(e.id.clone(), ()).is_some() {
            return Err(Error::DuplicateId {
                kind: "edge",
                id: e.id.clone(),
            });
        }
        let s = *index
            .get(e.src.as_str())
            .ok_or_else(|| Error::UnknownVertex {
                edge: e.id.clone(),
                vertex: e.src.clone(),
            })?;
        let r = *index
            .get(e.rng.as_str())
            .ok_or_else(|| Error::UnknownVertex {
                edge: e.id.clone(),
                vertex: e.rng.clone(),
            })?;
        edge_labels.push(e.id.clone());
        src.push(VertexId(s));
        rng.push(VertexId(r));
    }
    TopGraph::new(space, edge_labels, src, rng)
}

pub fn load_graph_path(path: &std::path::Path) -> Result<TopGraph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_graph_str(&text)
}

/// Worked-example graphs used across the test batteries and documentation.
pub mod fixtures {
    use super::*;

    /// One vertex v, one loop e.
    pub fn loop_graph() -> TopGraph {
        load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            [[edges]]
            id = "e"
            src = "v"
            rng = "v"
            "#,
        )
        .unwrap()
    }

    /// The branching example: loop e at v, parallel edges f, g from v to w.
    pub fn branching_graph() -> TopGraph {
        load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            [[vertices]]
            id = "w"
            [[edges]]
            id = "e"
            src = "v"
            rng = "v"
            [[edges]]
            id = "f"
            src = "v"
            rng = "w"
            [[edges]]
            id = "g"
            src = "v"
            rng = "w"
            "#,
        )
        .unwrap()
    }

    /// Two loops e, f at a single vertex v.
    pub fn double_loop_graph() -> TopGraph {
        load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            [[edges]]
            id = "e"
            src = "v"
            rng = "v"
            [[edges]]
            id = "f"
            src = "v"
            rng = "v"
            "#,
        )
        .unwrap()
    }

    /// Directed line -w .. w (edges n -> n+1), as a tree fixture.
    pub fn bilateral_line(w: i64) -> TopGraph {
        let labels: Vec<String> = (-w..=w).map(|m| m.to_string()).collect();
        let space = MetricSpace::discrete(labels);
        let mut edge_labels = Vec::new();
        let mut src = Vec::new();
        let mut rng = Vec::new();
        for m in -w..w {
            edge_labels.push(format!("a{m}"));
            src.push(VertexId((m + w) as usize));
            rng.push(VertexId((m + w + 1) as usize));
        }
        TopGraph::new(space, edge_labels, src, rng).unwrap()
    }

    /// The 4-vertex tree 1 -> 2 -> {3, 4}.
    pub fn four_vertex_tree() -> TopGraph {
        load_graph_str(
            r#"
            [[vertices]]
            id = "1"
            [[vertices]]
            id = "2"
            [[vertices]]
            id = "3"
            [[vertices]]
            id = "4"
            [[edges]]
            id = "a"
            src = "1"
            rng = "2"
            [[edges]]
            id = "b"
            src = "2"
            rng = "3"
            [[edges]]
            id = "c"
            src = "2"
            rng = "4"
            "#,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn loads_smallest_loop_graph() {
        let g = loop_graph();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 1);
        let e = EdgeId(0);
        assert_eq!(g.src(e), g.rng(e));
    }

    #[test]
    fn loads_branching_example() {
        let g = branching_graph();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn rejects_unknown_vertex() {
        let err = load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            [[edges]]
            id = "e"
            src = "u"
            rng = "v"
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown vertex"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            color = "blue"
            "#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn rejects_metric_axiom_violation_with_triple() {
        let err = load_graph_str(
            r#"
            [[vertices]]
            id = "a"
            [[vertices]]
            id = "b"
            [[vertices]]
            id = "c"
            [metric]
            kind = "explicit"
            [[metric.entries]]
            from = "a"
            to = "b"
            dist = 1.0
            [[metric.entries]]
            from = "b"
            to = "c"
            dist = 1.0
            [[metric.entries]]
            from = "a"
            to = "c"
            dist = 5.0
            "#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("triangle") && msg.contains("(a, b, c)"),
            "{msg}"
        );
    }

    #[test]
    fn validate_loop_graph() {
        let g = loop_graph();
        let report = validate(&g);
        assert!(report.sinks.is_empty());
        assert!(report.sources.is_empty());
        assert!(report.s_injective);
        assert_eq!(report.regular_vertices, vec![VertexId(0)]);
    }

    #[test]
    fn validate_branching_example() {
        let g = branching_graph();
        let report = validate(&g);
        let w = g.vertex_by_label("w").unwrap();
        assert_eq!(report.sinks, vec![w]);
        assert!(!report.s_injective);
        let (a, b) = report.s_witness.unwrap();
        assert_ne!(a, b);
        assert_eq!(g.src(a), g.src(b));
        assert!(!report.no_sinks);
    }

    #[test]
    fn validate_compactified_truncation() {
        // The finite window keeps sinks out and the source map injective;
        // the top finite vertex necessarily becomes a source because the
        // truncation cuts the flow from above.
        let g = discretize(&DiscretizeSpec::CompactifiedShift { half_width: 4 }, 0).unwrap();
        let report = validate(&g);
        assert!(report.sinks.is_empty());
        assert!(report.s_injective);
        let top = g.vertex_by_label("4").unwrap();
        assert_eq!(report.sources, vec![top]);
    }

    #[test]
    fn enumerate_loop_paths() {
        let g = loop_graph();
        let paths = enumerate_paths(&g, 3);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].edges(), &[EdgeId(0), EdgeId(0), EdgeId(0)]);
    }

    #[test]
    fn enumerate_branching_paths() {
        let g = branching_graph();
        let paths = enumerate_paths(&g, 2);
        let shown: Vec<String> = paths.iter().map(|p| p.display(&g)).collect();
        assert_eq!(shown, vec!["e.e", "e.f", "e.g"]);
    }

    #[test]
    fn zero_length_paths_are_vertices() {
        let g = branching_graph();
        let paths = enumerate_paths(&g, 0);
        assert_eq!(paths.len(), g.vertex_count());
        for (p, v) in paths.iter().zip(g.vertices()) {
            assert_eq!(p.source(&g), v);
            assert_eq!(p.range(&g), v);
        }
    }

    #[test]
    fn path_concatenation_matches_enumeration() {
        for g in [loop_graph(), branching_graph(), double_loop_graph()] {
            for m in 0..=3usize {
                for n in 0..=3usize {
                    let mut combined = Vec::new();
                    for p in enumerate_paths(&g, m) {
                        for q in enumerate_paths(&g, n) {
                            if p.range(&g) == q.source(&g) {
                                combined.push(p.concat(&g, &q).unwrap());
                            }
                        }
                    }
                    combined.sort();
                    combined.dedup();
                    let mut direct = enumerate_paths(&g, m + n);
                    direct.sort();
                    assert_eq!(combined, direct, "m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn circle_rotation_src_is_bijection() {
        let phi = 0.6180339887498949;
        let g = discretize(
            &DiscretizeSpec::CircleRotation {
                angle: std::f64::consts::TAU * phi,
            },
            8,
        )
        .unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert_eq!(g.edge_count(), 8);
        let mut seen = [false; 8];
        for e in g.edges() {
            assert!(!seen[g.src(e).0]);
            seen[g.src(e).0] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn circle_rotation_rejects_tiny_resolution() {
        let err = discretize(&DiscretizeSpec::CircleRotation { angle: 1.0 }, 2).unwrap_err();
        assert!(matches!(err, Error::Discretize(_)));
    }

    #[test]
    fn compactified_shift_n2() {
        let g = discretize(&DiscretizeSpec::CompactifiedShift { half_width: 2 }, 0).unwrap();
        assert_eq!(g.vertex_count(), 7);
        assert_eq!(g.edge_count(), 7);
        let ninf = g.vertex_by_label("-inf").unwrap();
        let pinf = g.vertex_by_label("+inf").unwrap();
        assert!((g.vertex_dist(ninf, pinf) - std::f64::consts::PI).abs() < 1e-15);
        // Every vertex emits exactly one edge.
        for v in g.vertices() {
            assert_eq!(g.edges_from(v).len(), 1, "{}", g.vertex_label(v));
        }
        // e0 runs from 1 to 0; e-2 saturates to -inf.
        let e0 = g.edge_by_label("e0").unwrap();
        assert_eq!(g.vertex_label(g.src(e0)), "1");
        assert_eq!(g.vertex_label(g.rng(e0)), "0");
        let elow = g.edge_by_label("e-3").unwrap();
        assert_eq!(g.vertex_label(g.src(elow)), "-2");
        assert_eq!(g.vertex_label(g.rng(elow)), "-inf");
    }

    #[test]
    fn compactified_shift_degenerate() {
        let g = discretize(&DiscretizeSpec::CompactifiedShift { half_width: 0 }, 0).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
        let labels: Vec<&str> = g.edges().map(|e| g.edge_label(e)).collect();
        assert_eq!(labels, vec!["e-1", "e-inf", "e+inf"]);
        let e = g.edge_by_label("e-1").unwrap();
        assert_eq!(g.vertex_label(g.src(e)), "0");
        assert_eq!(g.vertex_label(g.rng(e)), "-inf");
    }

    #[test]
    fn sinks_match_independent_scan() {
        for g in [
            loop_graph(),
            branching_graph(),
            discretize(&DiscretizeSpec::CompactifiedShift { half_width: 3 }, 0).unwrap(),
        ] {
            let report = validate(&g);
            let rescan: Vec<VertexId> = g
                .vertices()
                .filter(|&v| g.edges().all(|e| g.src(e) != v))
                .collect();
            assert_eq!(report.sinks, rescan);
        }
    }

    #[test]
    fn arctan_metric_from_file() {
        let g = load_graph_str(
            r#"
            [[vertices]]
            id = "-1"
            [[vertices]]
            id = "0"
            [[vertices]]
            id = "+inf"
            [metric]
            kind = "arctan-z"
            "#,
        )
        .unwrap();
        let a = g.vertex_by_label("-1").unwrap();
        let b = g.vertex_by_label("0").unwrap();
        let c = g.vertex_by_label("+inf").unwrap();
        assert!((g.vertex_dist(a, b) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((g.vertex_dist(b, c) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
