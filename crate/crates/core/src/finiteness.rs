//! The finiteness decision procedure.
//!
//! For a compact sink-free graph model, finiteness of the associated
//! algebra is equivalent to a combinatorial condition: the source map is
//! injective and every vertex carries an ε-pseudoloop for every ε. On a
//! finite metric graph the quantifier over ε is replaced by a user
//! ε-list plus an exact mode (ε below the smallest positive distance,
//! where pseudoloops are exact cycles), and the verdict is labelled
//! "consistent with finite" to acknowledge that a discretization only
//! certifies the discrete model.
//!
//! When the condition fails the verdict carries evidence tying the
//! failure to the shift criterion on orbit trees: a branching source
//! gives every orbit node over it two children (the unit shift stops
//! being injective), and a source vertex keeps the range map from being
//! onto (the unit shift stops being surjective). On a finite model a
//! vertex without pseudoloops forces one of the two, since an everywhere
//! defined injective-and-onto edge assignment would make the vertex map
//! a permutation and every vertex exactly periodic.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, EdgeId, TopGraph, VertexId};

/// A finite edge sequence whose consecutive range-to-source gaps stay
/// below ε. Edges are stored in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsPseudopath {
    pub edges: Vec<EdgeId>,
    pub eps: f64,
}

impl EpsPseudopath {
    pub fn source(&self, g: &TopGraph) -> VertexId {
        g.src(self.edges[0])
    }

    pub fn range(&self, g: &TopGraph) -> VertexId {
        g.rng(*self.edges.last().expect("pseudopaths are nonempty"))
    }

    pub fn is_valid(&self, g: &TopGraph) -> bool {
        !self.edges.is_empty()
            && self
                .edges
                .windows(2)
                .all(|w| g.vertex_dist(g.rng(w[0]), g.src(w[1])) < self.eps)
    }
}

/// An ε-pseudopath that starts exactly at its base vertex and returns
/// within ε of it. Witnesses always carry at least one edge.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::len_without_is_empty)]
pub struct EpsPseudoloop {
    pub path: EpsPseudopath,
    pub base: VertexId,
}

impl EpsPseudoloop {
    pub fn is_valid(&self, g: &TopGraph) -> bool {
        self.path.is_valid(g)
            && self.path.source(g) == self.base
            && g.vertex_dist(self.path.range(g), self.base) < self.path.eps
    }

    /// Number of edges in the witness; always at least 1.
    pub fn len(&self) -> usize {
        self.path.edges.len()
    }
}

/// Searches for a shortest ε-pseudoloop based at `v`: breadth-first over
/// the edge relation e → f iff d(r(e), s(f)) < ε, starting from the edges
/// emitted by `v` (exact equality at the base) and accepting any edge
/// whose range returns within ε of `v`. Single-edge loops are allowed.
pub fn pseudoloop_at(g: &TopGraph, v: VertexId, eps: f64) -> Option<EpsPseudoloop> {
    let starts: Vec<EdgeId> = g.edges_from(v);
    let accept = |e: EdgeId| g.vertex_dist(g.rng(e), v) < eps;

    let mut parent: Vec<Option<EdgeId>> = vec![None; g.edge_count()];
    let mut seen = vec![false; g.edge_count()];
    let mut queue = VecDeque::new();
    for &e in &starts {
        if accept(e) {
            return Some(EpsPseudoloop {
                path: EpsPseudopath {
                    edges: vec![e],
                    eps,
                },
                base: v,
            });
        }
        if !seen[e.0] {
            seen[e.0] = true;
            queue.push_back(e);
        }
    }
    while let Some(e) = queue.pop_front() {
        for f in g.edges() {
            if seen[f.0] || g.vertex_dist(g.rng(e), g.src(f)) >= eps {
                continue;
            }
            seen[f.0] = true;
            parent[f.0] = Some(e);
            if accept(f) {
                let mut edges = vec![f];
                let mut at = f;
                while let Some(p) = parent[at.0] {
                    edges.push(p);
                    at = p;
                }
                edges.reverse();
                return Some(EpsPseudoloop {
                    path: EpsPseudopath { edges, eps },
                    base: v,
                });
            }
            queue.push_back(f);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithFinite,
    Infinite,
    Inconclusive,
}

/// Evidence tying a failed condition back to the shift criterion on the
/// orbit tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Obstruction {
    /// Two edges out of one vertex: every orbit node ranging there has
    /// two children, so the unit shift is not an injective shift.
    BranchingSource {
        vertex: VertexId,
        edges: (EdgeId, EdgeId),
    },
    /// A vertex receiving no edge: the range map misses it, so the unit
    /// shift on any orbit tree through it is not surjective.
    SourceVertex { vertex: VertexId },
}

/// Outcome of one ε scan: the per-vertex pseudoloops and the vertices
/// lacking one.
#[derive(Debug, Clone)]
pub struct EpsScan {
    pub eps: f64,
    /// True for the scan generated by exact mode.
    pub exact: bool,
    /// One entry per vertex, in vertex order.
    pub loops: Vec<Option<EpsPseudoloop>>,
    pub failing: Vec<VertexId>,
}

#[derive(Debug, Clone)]
pub struct FinitenessVerdict {
    pub verdict: Verdict,
    pub s_injective: bool,
    pub s_witness: Option<(EdgeId, EdgeId)>,
    pub scans: Vec<EpsScan>,
    pub obstruction: Option<Obstruction>,
    /// Human-readable reason when the verdict is inconclusive.
    pub hypothesis_failure: Option<String>,
}

/// ε for exact mode: strictly below the smallest positive distance, so
/// d < ε means d = 0. Any positive value works on a one-point space.
pub fn exact_mode_eps(g: &TopGraph) -> f64 {
    g.metric().min_positive_distance().unwrap_or(1.0)
}

/// Runs the full condition-(5) check: source-map injectivity plus
/// per-vertex pseudoloops at every requested ε (and in exact mode when
/// asked). The graph must have no sinks for the criterion to apply;
/// otherwise the verdict is inconclusive with the hypothesis failure
/// spelled out.
pub fn decide(g: &TopGraph, eps_list: &[f64], exact: bool) -> Result<FinitenessVerdict> {
    if eps_list.is_empty() && !exact {
        return Err(Error::EmptyEpsList);
    }
    if let Some(&bad) = eps_list.iter().find(|&&e| e.is_nan() || e <= 0.0) {
        return Err(Error::Schema(format!(
            "epsilon values must be positive, got {bad}"
        )));
    }
    let report = graph::validate(g);
    if !report.no_sinks {
        let sinks: Vec<&str> = report.sinks.iter().map(|&v| g.vertex_label(v)).collect();
        return Ok(FinitenessVerdict {
            verdict: Verdict::Inconclusive,
            s_injective: report.s_injective,
            s_witness: report.s_witness,
            scans: Vec::new(),
            obstruction: None,
            hypothesis_failure: Some(format!(
                "the criterion requires a sink-free graph; sinks: {}",
                sinks.join(", ")
            )),
        });
    }

    let mut scans = Vec::new();
    for &eps in eps_list {
        scans.push(scan(g, eps, false));
    }
    if exact {
        scans.push(scan(g, exact_mode_eps(g), true));
    }

    let all_loops_present = scans.iter().all(|s| s.failing.is_empty());
    let verdict = if report.s_injective && all_loops_present {
        Verdict::ConsistentWithFinite
    } else {
        Verdict::Infinite
    };
    let obstruction = if verdict == Verdict::Infinite {
        find_obstruction(g, &report)
    } else {
        None
    };
    Ok(FinitenessVerdict {
        verdict,
        s_injective: report.s_injective,
        s_witness: report.s_witness,
        scans,
        obstruction,
        hypothesis_failure: None,
    })
}

fn scan(g: &TopGraph, eps: f64, exact: bool) -> EpsScan {
    let loops: Vec<Option<EpsPseudoloop>> =
        g.vertices().map(|v| pseudoloop_at(g, v, eps)).collect();
    let failing = g.vertices().filter(|v| loops[v.0].is_none()).collect();
    EpsScan {
        eps,
        exact,
        loops,
        failing,
    }
}

fn find_obstruction(g: &TopGraph, report: &graph::ValidationReport) -> Option<Obstruction> {
    if let Some((a, b)) = report.s_witness {
        return Some(Obstruction::BranchingSource {
            vertex: g.src(a),
            edges: (a, b),
        });
    }
    report
        .sources
        .first()
        .map(|&vertex| Some(Obstruction::SourceVertex { vertex }))?
}
