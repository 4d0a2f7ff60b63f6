//! Weighted shifts on directed trees.
//!
//! A directed tree is a loop-free, range-injective, connected graph; the
//! shift attached to a weight family λ sends the basis vector at a vertex
//! to the weighted sum of the basis vectors at its children. All Fredholm
//! data of the shift is combinatorial: per-vertex formulas give the norm,
//! injectivity, closed range, bounded-below constant, and the kernel and
//! cokernel dimensions. [`dense_matrix`] materializes the operator so the
//! formulas can be checked against dense linear algebra.
//!
//! Everything here is for finite trees. Truncating an infinite tree
//! changes the analysis at the cut (a truncated leaf gains a kernel
//! vector, a truncated root gains a cokernel vector), which is why a
//! finite tree always has index 0; the caller owns that interpretation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, TopGraph, VertexId};

/// Cap on `dense_matrix` materialization.
const DENSE_CAP: usize = 2000;

/// Why a graph fails the directed-tree axioms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeViolation {
    /// A directed loop, reported as the edge sequence around it.
    HasLoop(Vec<EdgeId>),
    /// Two edges with the same range.
    RangeNotInjective(EdgeId, EdgeId),
    /// Two vertices in different undirected components.
    Disconnected(VertexId, VertexId),
}

impl TreeViolation {
    pub fn describe(&self, g: &TopGraph) -> String {
        match self {
            TreeViolation::HasLoop(edges) => format!(
                "has loops: {}",
                edges
                    .iter()
                    .map(|&e| g.edge_label(e))
                    .collect::<Vec<_>>()
                    .join(".")
            ),
            TreeViolation::RangeNotInjective(a, b) => format!(
                "range not injective: edges {} and {} both end at {}",
                g.edge_label(*a),
                g.edge_label(*b),
                g.vertex_label(g.rng(*a))
            ),
            TreeViolation::Disconnected(a, b) => format!(
                "disconnected: no undirected path between {} and {}",
                g.vertex_label(*a),
                g.vertex_label(*b)
            ),
        }
    }
}

/// A validated directed tree with its parent map.
#[derive(Debug, Clone)]
pub struct DirectedTree {
    graph: TopGraph,
    /// parent(v) = src of the unique edge into v.
    parent: Vec<Option<VertexId>>,
    /// children(v) = ranges of the edges emitted by v, in edge order.
    children: Vec<Vec<VertexId>>,
}

impl DirectedTree {
    pub fn graph(&self) -> &TopGraph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.0]
    }

    /// The at most one vertex outside r(F¹).
    pub fn root(&self) -> Option<VertexId> {
        self.graph.vertices().find(|&v| self.parent[v.0].is_none())
    }
}

/// Checks the three directed-tree axioms; on failure every violation
/// found is returned.
pub fn check_tree(g: &TopGraph) -> std::result::Result<DirectedTree, Vec<TreeViolation>> {
    let n = g.vertex_count();
    let mut violations = Vec::new();

    // Range injectivity.
    let mut incoming: Vec<Option<EdgeId>> = vec![None; n];
    for e in g.edges() {
        let r = g.rng(e);
        match incoming[r.0] {
            None => incoming[r.0] = Some(e),
            Some(prev) => violations.push(TreeViolation::RangeNotInjective(prev, e)),
        }
    }

    // Directed loops, by DFS coloring along src -> rng.
    fn dfs(
        g: &TopGraph,
        v: VertexId,
        color: &mut [u8], // 0 unseen, 1 on stack, 2 done
        path: &mut Vec<EdgeId>,
        loop_found: &mut Option<Vec<EdgeId>>,
    ) {
        color[v.0] = 1;
        for e in g.edges_from(v) {
            if loop_found.is_some() {
                break;
            }
            let w = g.rng(e);
            if color[w.0] == 1 {
                // Close the loop: the trail edges from w onward, then e.
                let start = path.iter().position(|&pe| g.src(pe) == w);
                let mut cycle: Vec<EdgeId> = match start {
                    Some(i) => path[i..].to_vec(),
                    None => Vec::new(),
                };
                cycle.push(e);
                *loop_found = Some(cycle);
            } else if color[w.0] == 0 {
                path.push(e);
                dfs(g, w, color, path, loop_found);
                path.pop();
            }
        }
        color[v.0] = 2;
    }
    let mut color = vec![0u8; n];
    let mut loop_found: Option<Vec<EdgeId>> = None;
    for start in g.vertices() {
        if color[start.0] == 0 && loop_found.is_none() {
            let mut path = Vec::new();
            dfs(g, start, &mut color, &mut path, &mut loop_found);
        }
    }
    if let Some(cycle) = loop_found {
        violations.push(TreeViolation::HasLoop(cycle));
    }

    // Undirected connectivity.
    if n > 0 {
        let mut seen = vec![false; n];
        let mut queue = vec![VertexId(0)];
        seen[0] = true;
        while let Some(v) = queue.pop() {
            for e in g.edges() {
                let (a, b) = (g.src(e), g.rng(e));
                for (x, y) in [(a, b), (b, a)] {
                    if x == v && !seen[y.0] {
                        seen[y.0] = true;
                        queue.push(y);
                    }
                }
            }
        }
        if let Some(stranded) = g.vertices().find(|v| !seen[v.0]) {
            violations.push(TreeViolation::Disconnected(VertexId(0), stranded));
        }
    }

    if !violations.is_empty() {
        return Err(violations);
    }
    let parent: Vec<Option<VertexId>> = (0..n).map(|v| incoming[v].map(|e| g.src(e))).collect();
    let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    for e in g.edges() {
        children[g.src(e).0].push(g.rng(e));
    }
    Ok(DirectedTree {
        graph: g.clone(),
        parent,
        children,
    })
}

/// A directed tree together with one complex weight per vertex.
#[derive(Debug, Clone)]
pub struct WeightedShift {
    tree: DirectedTree,
    weights: Vec<Complex64>,
}

/// Fredholm and boundedness data of a weighted shift, computed from the
/// per-vertex formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftAnalysis {
    pub norm: f64,
    pub injective: bool,
    /// min over vertices of ‖S δ_v‖ when positive; the shift is bounded
    /// below by exactly this constant.
    pub bounded_below: Option<f64>,
    pub closed_range: bool,
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub index: i64,
    pub surjective: bool,
    /// Vertices v with S δ_v ≠ 0.
    pub x_set: Vec<VertexId>,
}

impl WeightedShift {
    pub fn new(tree: DirectedTree, weights: Vec<Complex64>) -> Result<Self> {
        if weights.len() != tree.vertex_count() {
            return Err(Error::IndexMismatch {
                expected: tree.vertex_count(),
                got: weights.len(),
            });
        }
        Ok(WeightedShift { tree, weights })
    }

    pub fn tree(&self) -> &DirectedTree {
        &self.tree
    }

    pub fn weight(&self, v: VertexId) -> Complex64 {
        self.weights[v.0]
    }

    /// ‖S δ_v‖ = sqrt of Σ over children w of |λ_w|².
    fn basis_image_norm(&self, v: VertexId) -> f64 {
        self.tree
            .children(v)
            .iter()
            .map(|&w| self.weights[w.0].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// (S f)(v) = λ_v f(parent(v)), zero at the root.
pub fn shift_apply(s: &WeightedShift, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = s.tree.vertex_count();
    if f.len() != n {
        return Err(Error::IndexMismatch {
            expected: n,
            got: f.len(),
        });
    }
    Ok((0..n)
        .map(|v| match s.tree.parent(VertexId(v)) {
            Some(p) => s.weights[v] * f[p.0],
            None => Complex64::ZERO,
        })
        .collect())
}

/// (S* f)(u) = Σ over children w of conj(λ_w) f(w).
pub fn shift_adjoint_apply(s: &WeightedShift, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = s.tree.vertex_count();
    if f.len() != n {
        return Err(Error::IndexMismatch {
            expected: n,
            got: f.len(),
        });
    }
    Ok((0..n)
        .map(|u| {
            s.tree
                .children(VertexId(u))
                .iter()
                .map(|&w| s.weights[w.0].conj() * f[w.0])
                .sum()
        })
        .collect())
}

/// ‖S‖ = sup over v of ‖S δ_v‖.
pub fn shift_norm(s: &WeightedShift) -> f64 {
    s.tree
        .graph()
        .vertices()
        .map(|v| s.basis_image_norm(v))
        .fold(0.0, f64::max)
}

/// Computes the full per-vertex analysis. Exact for the finite tree given.
pub fn analyze(s: &WeightedShift) -> ShiftAnalysis {
    let g = s.tree.graph();
    let x_set: Vec<VertexId> = g
        .vertices()
        .filter(|&v| {
            s.tree
                .children(v)
                .iter()
                .any(|&w| s.weights[w.0] != Complex64::ZERO)
        })
        .collect();
    let in_x = {
        let mut flags = vec![false; g.vertex_count()];
        for &v in &x_set {
            flags[v.0] = true;
        }
        flags
    };
    let ker_dim = g.vertex_count() - x_set.len();
    let mut coker_dim = 0usize;
    for v in g.vertices() {
        let c = s.tree.children(v).len();
        if in_x[v.0] {
            coker_dim += c - 1;
        } else {
            coker_dim += c;
        }
    }
    // Vertices outside r(F¹): the root, when the tree is nonempty.
    coker_dim += g.vertices().filter(|&v| s.tree.parent(v).is_none()).count();

    let min_image = g
        .vertices()
        .map(|v| s.basis_image_norm(v))
        .fold(f64::INFINITY, f64::min);
    let bounded_below = if g.vertex_count() > 0 && min_image > 0.0 {
        Some(min_image)
    } else {
        None
    };
    // inf over nonzero columns; a finite set of positive numbers, so the
    // range of a finite-tree shift is always closed.
    let closed_range = g
        .vertices()
        .filter(|&v| in_x[v.0])
        .map(|v| s.basis_image_norm(v))
        .fold(f64::INFINITY, f64::min)
        > 0.0;
    let injective = ker_dim == 0;
    let surjective = coker_dim == 0;
    ShiftAnalysis {
        norm: shift_norm(s),
        injective,
        bounded_below,
        closed_range,
        ker_dim,
        coker_dim,
        index: ker_dim as i64 - coker_dim as i64,
        surjective,
        x_set,
    }
}

/// Materializes S as the square matrix with M(w, u) = λ_w when
/// parent(w) = u, rows and columns in vertex order.
pub fn dense_matrix(s: &WeightedShift) -> Result<DMatrix<Complex64>> {
    let n = s.tree.vertex_count();
    if n > DENSE_CAP {
        return Err(Error::SizeCap(format!(
            "dense matrix for {n} vertices exceeds the cap of {DENSE_CAP}"
        )));
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for w in 0..n {
        if let Some(p) = s.tree.parent(VertexId(w)) {
            m[(w, p.0)] = s.weights[w];
        }
    }
    Ok(m)
}
