//! Orbit trees of infinite paths and the representations they carry.
//!
//! An infinite path is stored as a lasso: a finite prefix followed by an
//! endlessly repeating primitive cycle. On a finite graph these are all
//! the infinite paths a desk computation ever touches, and the canonical
//! form (primitive cycle, shortest prefix) makes path equality decidable.
//!
//! Around a base path α the orbit tree collects every path reachable by
//! backward shifts and forward extensions, graded by an integer level
//! that tracks the net length change. A window [n_min, n_max] truncates
//! the tree: the bottom level is seeded from the shift-and-extend formula
//! and every higher level holds all one-edge extensions of the level
//! below it. Consequently each node above the bottom has its parent and
//! all of its siblings present, so on interior levels (everything except
//! the two boundary levels) the represented operators satisfy the module
//! relations exactly.
//!
//! Vertex functions act diagonally through the range of a path; edge
//! functions act as weighted shifts along the tree. Both are materialized
//! as sparse level-graded matrices.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::correspondence::{
    inner_product, left_action, rank_one_decomposition, EdgeFunction, VertexFunction,
};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Path, TopGraph, VertexId};

/// Default cap on orbit-tree size (nodes plus enumerated extension paths).
pub const DEFAULT_NODE_CAP: usize = 200_000;

/// An eventually periodic infinite path in canonical form.
///
/// `prefix` and `cycle` are edge lists in traversal order; the path walks
/// the cycle forever, then the prefix, ending at its range. Canonical
/// form: the cycle is primitive and the prefix cannot be shortened by
/// rolling it into the cycle, so equal values mean equal infinite paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfinitePath {
    prefix: Vec<EdgeId>,
    cycle: Vec<EdgeId>,
}

impl InfinitePath {
    /// Builds prefix·cycle^∞ and canonicalizes. The cycle must be a loop;
    /// a nonempty prefix must start where the cycle closes.
    pub fn new(g: &TopGraph, prefix: &Path, cycle: &Path) -> Result<Self> {
        if cycle.is_empty() || !cycle.is_loop(g) {
            return Err(Error::NotComposable(format!(
                "cycle {} is not a loop",
                cycle.display(g)
            )));
        }
        if !prefix.is_empty() && prefix.source(g) != cycle.range(g) {
            return Err(Error::NotComposable(format!(
                "prefix {} does not start at the cycle vertex {}",
                prefix.display(g),
                g.vertex_label(cycle.range(g))
            )));
        }
        let mut path = InfinitePath {
            prefix: prefix.edges().to_vec(),
            cycle: cycle.edges().to_vec(),
        };
        path.canonicalize();
        Ok(path)
    }

    pub fn prefix(&self) -> &[EdgeId] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[EdgeId] {
        &self.cycle
    }

    pub fn description_len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    /// α(n) for n ≥ 1: the n-th edge counted from the range end.
    pub fn edge_at(&self, n: usize) -> EdgeId {
        assert!(n >= 1, "path indices start at 1");
        let m = self.prefix.len();
        if n <= m {
            self.prefix[m - n]
        } else {
            let p = self.cycle.len();
            let j = n - m;
            self.cycle[p - 1 - ((j - 1) % p)]
        }
    }

    /// r(α) = r(α(1)).
    pub fn range(&self, g: &TopGraph) -> VertexId {
        g.rng(self.edge_at(1))
    }

    /// The backward shift: drops α(1).
    pub fn sigma(&self) -> InfinitePath {
        let mut next = self.clone();
        if next.prefix.pop().is_none() {
            next.cycle.rotate_right(1);
        }
        next
    }

    pub fn sigma_pow(&self, k: usize) -> InfinitePath {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.sigma();
        }
        out
    }

    /// βα: extends the path by β at the range end. Requires s(β) = r(α).
    pub fn prepend(&self, g: &TopGraph, beta: &Path) -> Result<InfinitePath> {
        if beta.source(g) != self.range(g) {
            return Err(Error::NotComposable(format!(
                "s({}) = {} but r(α) = {}",
                beta.display(g),
                g.vertex_label(beta.source(g)),
                g.vertex_label(self.range(g))
            )));
        }
        let mut next = self.clone();
        next.prefix.extend_from_slice(beta.edges());
        next.canonicalize();
        Ok(next)
    }

    fn canonicalize(&mut self) {
        // Reduce the cycle to its primitive root.
        let p = self.cycle.len();
        for d in 1..p {
            if p.is_multiple_of(d) && (0..p).all(|i| self.cycle[i] == self.cycle[i % d]) {
                self.cycle.truncate(d);
                break;
            }
        }
        // Roll the cycle back through the prefix while the innermost prefix
        // edge repeats the cycle; this reaches the minimal preperiod.
        while !self.prefix.is_empty() && self.prefix[0] == self.cycle[0] {
            self.prefix.remove(0);
            self.cycle.rotate_left(1);
        }
    }

    pub fn display(&self, g: &TopGraph) -> String {
        let cyc = self
            .cycle
            .iter()
            .map(|&e| g.edge_label(e))
            .collect::<Vec<_>>()
            .join(".");
        if self.prefix.is_empty() {
            format!("({cyc})^inf")
        } else {
            let pre = self
                .prefix
                .iter()
                .map(|&e| g.edge_label(e))
                .collect::<Vec<_>>()
                .join(".");
            format!("{pre}.({cyc})^inf")
        }
    }
}

/// All canonical lassos whose description (prefix plus cycle length) is
/// at most `max_len`.
pub fn enumerate_lassos(g: &TopGraph, max_len: usize) -> Vec<InfinitePath> {
    let mut out = BTreeSet::new();
    for cycle_len in 1..=max_len {
        for cycle in crate::graph::enumerate_paths(g, cycle_len) {
            if !cycle.is_loop(g) {
                continue;
            }
            let anchor = cycle.range(g);
            // Prefixes extend forward from the anchor.
            for pre_len in 0..=(max_len - cycle_len) {
                for prefix in paths_from(g, anchor, pre_len) {
                    if let Ok(path) = InfinitePath::new(g, &prefix, &cycle) {
                        out.insert(path);
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Paths of length `n` starting at `v`, in lexicographic edge order.
fn paths_from(g: &TopGraph, v: VertexId, n: usize) -> Vec<Path> {
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(n);
    fn extend(
        g: &TopGraph,
        at: VertexId,
        n: usize,
        stack: &mut Vec<EdgeId>,
        out: &mut Vec<Path>,
        base: VertexId,
    ) {
        if stack.len() == n {
            out.push(if stack.is_empty() {
                Path::at_vertex(base)
            } else {
                Path::from_edges(g, stack.clone()).expect("composable by construction")
            });
            return;
        }
        for e in g.edges_from(at) {
            stack.push(e);
            extend(g, g.rng(e), n, stack, out, base);
            stack.pop();
        }
    }
    extend(g, v, n, &mut stack, &mut out, v);
    out
}

#[derive(Debug, Clone)]
struct NodeData {
    path: InfinitePath,
    level: i64,
    parent: Option<usize>,
    /// Edge prepended to the parent to reach this node.
    edge_from_parent: Option<EdgeId>,
    children: Vec<usize>,
    range: VertexId,
}

/// A window of the orbit tree of a base path.
#[derive(Debug, Clone)]
pub struct OrbitTree {
    graph: TopGraph,
    base: InfinitePath,
    n_min: i64,
    n_max: i64,
    nodes: Vec<NodeData>,
}

/// A node handle: the path value and its level tag. Two nodes with equal
/// paths at different levels are different points of the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitNode {
    pub path: InfinitePath,
    pub level: i64,
}

impl OrbitTree {
    pub fn graph(&self) -> &TopGraph {
        &self.graph
    }

    pub fn base(&self) -> &InfinitePath {
        &self.base
    }

    pub fn window(&self) -> (i64, i64) {
        (self.n_min, self.n_max)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: usize) -> OrbitNode {
        OrbitNode {
            path: self.nodes[idx].path.clone(),
            level: self.nodes[idx].level,
        }
    }

    pub fn level_of(&self, idx: usize) -> i64 {
        self.nodes[idx].level
    }

    pub fn path_of(&self, idx: usize) -> &InfinitePath {
        &self.nodes[idx].path
    }

    pub fn parent_of(&self, idx: usize) -> Option<usize> {
        self.nodes[idx].parent
    }

    pub fn children_of(&self, idx: usize) -> &[usize] {
        &self.nodes[idx].children
    }

    /// Nodes on one level, in construction order.
    pub fn level_nodes(&self, level: i64) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == level)
            .collect()
    }

    /// Interior levels exclude the two boundary levels: there the parent,
    /// all children, and all siblings of a node are materialized.
    pub fn is_interior(&self, idx: usize) -> bool {
        let l = self.nodes[idx].level;
        l > self.n_min && l < self.n_max
    }

    pub fn find(&self, path: &InfinitePath, level: i64) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| self.nodes[i].level == level && &self.nodes[i].path == path)
    }

    pub fn display_node(&self, idx: usize) -> String {
        format!(
            "({}, {})",
            self.nodes[idx].path.display(&self.graph),
            self.nodes[idx].level
        )
    }
}

/// Builds the orbit-tree window with the default node cap.
///
/// ```
/// use num_complex::Complex64;
/// use tgalg::correspondence::{EdgeFunction, VertexFunction};
/// use tgalg::graph::{fixtures, Path};
/// use tgalg::orbit::{build_orbit_tree, verify_relations, InfinitePath};
///
/// let g = fixtures::branching_graph();
/// let loop_edge = Path::from_edges(&g, vec![g.edge_by_label("e").unwrap()])?;
/// let anchor = Path::at_vertex(g.vertex_by_label("v").unwrap());
/// let alpha = InfinitePath::new(&g, &anchor, &loop_edge)?;
///
/// let tree = build_orbit_tree(&g, &alpha, -2, 2)?;
/// assert_eq!(tree.len(), 15); // three paths on each of five levels
///
/// let a = VertexFunction::indicator(&g, g.vertex_by_label("v").unwrap());
/// let one = EdgeFunction::one(&g);
/// let residuals = verify_relations(&tree, &a, &one, &one, Complex64::new(0.0, 1.0))?;
/// assert_eq!(residuals.max(), 0.0);
/// # Ok::<(), tgalg::Error>(())
/// ```
pub fn build_orbit_tree(
    g: &TopGraph,
    base: &InfinitePath,
    n_min: i64,
    n_max: i64,
) -> Result<OrbitTree> {
    build_orbit_tree_capped(g, base, n_min, n_max, DEFAULT_NODE_CAP)
}

pub fn build_orbit_tree_capped(
    g: &TopGraph,
    base: &InfinitePath,
    n_min: i64,
    n_max: i64,
    cap: usize,
) -> Result<OrbitTree> {
    build_inner(g, base, n_min, n_max, cap, 0)
}

/// `extra_depth` widens the shift-depth bound used to seed the bottom
/// level; enlarging it must not add nodes when the level sets stabilize.
pub(crate) fn build_inner(
    g: &TopGraph,
    base: &InfinitePath,
    n_min: i64,
    n_max: i64,
    cap: usize,
    extra_depth: usize,
) -> Result<OrbitTree> {
    if n_min >= n_max {
        return Err(Error::Schema(format!(
            "orbit window [{n_min}, {n_max}] is empty"
        )));
    }
    let mut budget = Budget { left: cap };

    // Bottom level: all canonical values of extend(β, shift^k(base)) with
    // |β| = n_min + k, for k up to the lasso stabilization bound.
    let k_lo = 0.max(-n_min) as usize;
    let k_hi = n_min.unsigned_abs() as usize + base.description_len() + extra_depth;
    // A window this deep cannot fit under the cap anyway; refusing it up
    // front keeps the shift iteration itself bounded.
    budget.spend(k_hi.max((n_max - n_min) as usize))?;
    budget.left = cap;
    let mut bottom: BTreeSet<InfinitePath> = BTreeSet::new();
    for k in k_lo..=k_hi {
        let shifted = base.sigma_pow(k);
        let beta_len = (n_min + k as i64) as usize;
        collect_extensions(g, &shifted, beta_len, &mut bottom, &mut budget)?;
    }

    let mut nodes: Vec<NodeData> = Vec::new();
    for path in bottom {
        let range = path.range(g);
        nodes.push(NodeData {
            path,
            level: n_min,
            parent: None,
            edge_from_parent: None,
            children: Vec::new(),
            range,
        });
    }

    // Each higher level is the full set of one-edge extensions of the
    // level below. Distinct parents yield distinct children (the shift of
    // a child is its parent) and distinct edges yield distinct children,
    // so no deduplication is needed above the bottom.
    let mut level_start = 0usize;
    for level in (n_min + 1)..=n_max {
        let level_end = nodes.len();
        for parent_idx in level_start..level_end {
            let parent_range = nodes[parent_idx].range;
            for e in g.edges_from(parent_range) {
                budget.spend(1)?;
                let beta = Path::from_edges(g, vec![e]).expect("single edge is a path");
                let child = nodes[parent_idx]
                    .path
                    .prepend(g, &beta)
                    .expect("child extends at the range");
                let range = child.range(g);
                let child_idx = nodes.len();
                nodes.push(NodeData {
                    path: child,
                    level,
                    parent: Some(parent_idx),
                    edge_from_parent: Some(e),
                    children: Vec::new(),
                    range,
                });
                nodes[parent_idx].children.push(child_idx);
            }
        }
        level_start = level_end;
    }

    Ok(OrbitTree {
        graph: g.clone(),
        base: base.clone(),
        n_min,
        n_max,
        nodes,
    })
}

struct Budget {
    left: usize,
}

impl Budget {
    fn spend(&mut self, amount: usize) -> Result<()> {
        if self.left < amount {
            return Err(Error::SizeCap(
                "orbit-tree window too large for the node cap".into(),
            ));
        }
        self.left -= amount;
        Ok(())
    }
}

fn collect_extensions(
    g: &TopGraph,
    tail: &InfinitePath,
    beta_len: usize,
    out: &mut BTreeSet<InfinitePath>,
    budget: &mut Budget,
) -> Result<()> {
    fn walk(
        g: &TopGraph,
        current: &InfinitePath,
        remaining: usize,
        out: &mut BTreeSet<InfinitePath>,
        budget: &mut Budget,
    ) -> Result<()> {
        if remaining == 0 {
            budget.spend(1)?;
            out.insert(current.clone());
            return Ok(());
        }
        for e in g.edges_from(current.range(g)) {
            budget.spend(1)?;
            let beta = Path::from_edges(g, vec![e]).expect("single edge is a path");
            let next = current.prepend(g, &beta).expect("extends at the range");
            walk(g, &next, remaining - 1, out, budget)?;
        }
        Ok(())
    }
    walk(g, tail, beta_len, out, budget)
}

// ---------------------------------------------------------------------------
// Level-graded sparse operators

/// A sparse matrix over the nodes of an orbit tree whose nonzero entries
/// connect level l columns to level l + degree rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOperator {
    dim: usize,
    degree: i64,
    /// Per-column (row, value) pairs sorted by row.
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl LevelOperator {
    pub fn zero(dim: usize, degree: i64) -> Self {
        LevelOperator {
            dim,
            degree,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        LevelOperator {
            dim,
            degree: 0,
            cols: (0..dim).map(|i| vec![(i, Complex64::ONE)]).collect(),
        }
    }

    pub fn from_diagonal(values: Vec<Complex64>) -> Self {
        let dim = values.len();
        LevelOperator {
            dim,
            degree: 0,
            cols: values
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    if v == Complex64::ZERO {
                        Vec::new()
                    } else {
                        vec![(i, v)]
                    }
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col]
            .iter()
            .find(|(r, _)| *r == row)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::ZERO)
    }

    pub fn column(&self, col: usize) -> &[(usize, Complex64)] {
        &self.cols[col]
    }

    /// self ∘ other (other applied first). Degrees add.
    pub fn mul(&self, other: &LevelOperator) -> LevelOperator {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut cols = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut acc: Vec<(usize, Complex64)> = Vec::new();
            for &(k, v) in &other.cols[j] {
                for &(i, u) in &self.cols[k] {
                    match acc.binary_search_by_key(&i, |(r, _)| *r) {
                        Ok(pos) => acc[pos].1 += u * v,
                        Err(pos) => acc.insert(pos, (i, u * v)),
                    }
                }
            }
            cols.push(acc);
        }
        LevelOperator {
            dim: self.dim,
            degree: self.degree + other.degree,
            cols,
        }
    }

    pub fn adjoint(&self) -> LevelOperator {
        let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for j in 0..self.dim {
            for &(i, v) in &self.cols[j] {
                cols[i].push((j, v.conj()));
            }
        }
        for col in &mut cols {
            col.sort_by_key(|(r, _)| *r);
        }
        LevelOperator {
            dim: self.dim,
            degree: -self.degree,
            cols,
        }
    }

    pub fn scale(&self, z: Complex64) -> LevelOperator {
        let cols = self
            .cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| (r, v * z)).collect())
            .collect();
        LevelOperator {
            dim: self.dim,
            degree: self.degree,
            cols,
        }
    }

    pub fn add(&self, other: &LevelOperator) -> LevelOperator {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let mut cols = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut acc: Vec<(usize, Complex64)> = self.cols[j].clone();
            for &(i, v) in &other.cols[j] {
                match acc.binary_search_by_key(&i, |(r, _)| *r) {
                    Ok(pos) => acc[pos].1 += v,
                    Err(pos) => acc.insert(pos, (i, v)),
                }
            }
            cols.push(acc);
        }
        LevelOperator {
            dim: self.dim,
            degree: self.degree,
            cols,
        }
    }

    pub fn sub(&self, other: &LevelOperator) -> LevelOperator {
        self.add(&other.scale(-Complex64::ONE))
    }

    /// Largest entry modulus over positions allowed by the filter.
    pub fn max_abs_where<F: Fn(usize, usize) -> bool>(&self, keep: F) -> f64 {
        let mut max = 0.0f64;
        for j in 0..self.dim {
            for &(i, v) in &self.cols[j] {
                if keep(i, j) {
                    max = max.max(v.norm());
                }
            }
        }
        max
    }

    /// Image of the basis vector at `col`.
    pub fn apply_basis(&self, col: usize) -> Vec<(usize, Complex64)> {
        self.cols[col].clone()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for &(i, v) in &self.cols[j] {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Operator 2-norm via dense SVD; intended for small windows.
    pub fn norm2(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        self.to_dense()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Checks that every entry respects the level grading of the tree.
    pub fn validate_grading(&self, tree: &OrbitTree) -> Result<()> {
        for j in 0..self.dim {
            for &(i, v) in &self.cols[j] {
                if v != Complex64::ZERO && tree.level_of(i) != tree.level_of(j) + self.degree {
                    return Err(Error::Internal(format!(
                        "entry ({i},{j}) breaks the degree-{} grading",
                        self.degree
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for LevelOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LevelOperator(dim {}, degree {})", self.dim, self.degree)
    }
}

/// π(a): a(r(path)) on the diagonal.
pub fn rep_pi(tree: &OrbitTree, a: &VertexFunction) -> Result<LevelOperator> {
    if a.len() != tree.graph.vertex_count() {
        return Err(Error::MismatchedGraph {
            kind: "vertices",
            expected: tree.graph.vertex_count(),
            got: a.len(),
        });
    }
    let values = (0..tree.len())
        .map(|i| a.get(tree.nodes[i].range))
        .collect();
    Ok(LevelOperator::from_diagonal(values))
}

/// τ(ξ): sends a node to the ξ-weighted sum of its extensions one level
/// up. Columns on the top level are truncated to zero (their children lie
/// outside the window) and are never interior.
pub fn rep_tau(tree: &OrbitTree, xi: &EdgeFunction) -> Result<LevelOperator> {
    if xi.values().len() != tree.graph.edge_count() {
        return Err(Error::MismatchedGraph {
            kind: "edges",
            expected: tree.graph.edge_count(),
            got: xi.values().len(),
        });
    }
    let mut op = LevelOperator::zero(tree.len(), 1);
    for j in 0..tree.len() {
        let mut col: Vec<(usize, Complex64)> = tree.nodes[j]
            .children
            .iter()
            .map(|&c| {
                let e = tree.nodes[c].edge_from_parent.expect("child has an edge");
                (c, xi.get(e))
            })
            .filter(|(_, v)| *v != Complex64::ZERO)
            .collect();
        col.sort_by_key(|(r, _)| *r);
        op.cols[j] = col;
    }
    Ok(op)
}

/// U_z: multiplication by z^level. Requires |z| = 1.
pub fn gauge_unitary(tree: &OrbitTree, z: Complex64) -> Result<LevelOperator> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitModulus(z.norm()));
    }
    let values = (0..tree.len())
        .map(|i| z.powi(tree.nodes[i].level as i32))
        .collect();
    Ok(LevelOperator::from_diagonal(values))
}

/// Residual report for the Toeplitz, covariance, and gauge identities,
/// each measured as the largest entry modulus over interior rows and
/// columns.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RelationResiduals {
    /// τ(aξ) − π(a)τ(ξ)
    pub toeplitz_module: f64,
    /// τ(ξ)*τ(η) − π(⟨ξ,η⟩)
    pub toeplitz_inner: f64,
    /// Σ τ(ξ_i)τ(η_i)* − π(a) over the rank-one decomposition of a
    pub covariance: f64,
    /// U_z τ(ξ) U_z* − z·τ(ξ)
    pub gauge: f64,
}

impl RelationResiduals {
    pub fn max(&self) -> f64 {
        self.toeplitz_module
            .max(self.toeplitz_inner)
            .max(self.covariance)
            .max(self.gauge)
    }
}

/// Verifies the defining relations of the representation on the interior
/// of the window. The covariance check requires `a` to vanish off the
/// regular vertices.
pub fn verify_relations(
    tree: &OrbitTree,
    a: &VertexFunction,
    xi: &EdgeFunction,
    eta: &EdgeFunction,
    z: Complex64,
) -> Result<RelationResiduals> {
    let g = &tree.graph;
    let interior = |i: usize, j: usize| tree.is_interior(i) && tree.is_interior(j);

    let tau_xi = rep_tau(tree, xi)?;
    let tau_eta = rep_tau(tree, eta)?;
    let pi_a = rep_pi(tree, a)?;

    // (i) τ(aξ) = π(a) τ(ξ)
    let lhs = rep_tau(tree, &left_action(g, a, xi)?)?;
    let rhs = pi_a.mul(&tau_xi);
    let toeplitz_module = lhs.sub(&rhs).max_abs_where(interior);

    // (ii) τ(ξ)* τ(η) = π(⟨ξ, η⟩)
    let lhs = tau_xi.adjoint().mul(&tau_eta);
    let rhs = rep_pi(tree, &inner_product(g, xi, eta)?)?;
    let toeplitz_inner = lhs.sub(&rhs).max_abs_where(interior);

    // (iii) Σ τ(ξ_i) τ(η_i)* = π(a) through the rank-one decomposition
    let pairs = rank_one_decomposition(g, a)?;
    let mut total = LevelOperator::zero(tree.len(), 0);
    for pair in &pairs {
        let term = rep_tau(tree, &pair.xi)?.mul(&rep_tau(tree, &pair.eta)?.adjoint());
        total = total.add(&term);
    }
    let covariance = total.sub(&pi_a).max_abs_where(interior);

    // (iv) U_z τ(ξ) U_z* = z τ(ξ)
    let u = gauge_unitary(tree, z)?;
    let lhs = u.mul(&tau_xi).mul(&u.adjoint());
    let gauge = lhs.sub(&tau_xi.scale(z)).max_abs_where(interior);

    Ok(RelationResiduals {
        toeplitz_module,
        toeplitz_inner,
        covariance,
        gauge,
    })
}

/// T = τ(1) and its explicit left inverse S = D⁻¹T*, where D is the
/// diagonal of extension counts |s⁻¹(r(path))|. The columns of T have
/// disjoint supports, so T*T = D exactly and S·T is the identity on
/// every column whose extensions are in the window; no sink may be
/// reachable, otherwise some D entry vanishes.
pub fn unit_shift(tree: &OrbitTree) -> Result<(LevelOperator, LevelOperator)> {
    let g = &tree.graph;
    let mut degree_inv = Vec::with_capacity(tree.len());
    for i in 0..tree.len() {
        let range = tree.nodes[i].range;
        let count = g.edges_from(range).len();
        if count == 0 {
            return Err(Error::SinkPresent(g.vertex_label(range).to_string()));
        }
        degree_inv.push(Complex64::new(1.0 / count as f64, 0.0));
    }
    let t = rep_tau(tree, &EdgeFunction::one(g))?;
    let d_inv = LevelOperator::from_diagonal(degree_inv);
    let s = d_inv.mul(&t.adjoint());
    Ok((t, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{branching_graph, double_loop_graph, loop_graph};
    use crate::graph::load_graph_str;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_edge_path(g: &TopGraph, label: &str) -> Path {
        Path::from_edges(g, vec![g.edge_by_label(label).unwrap()]).unwrap()
    }

    fn e_inf(g: &TopGraph) -> InfinitePath {
        let e = single_edge_path(g, "e");
        InfinitePath::new(g, &Path::at_vertex(g.vertex_by_label("v").unwrap()), &e).unwrap()
    }

    #[test]
    fn sigma_fixes_pure_cycle() {
        let g = loop_graph();
        let alpha = e_inf(&g);
        assert_eq!(alpha.sigma(), alpha);
    }

    #[test]
    fn sigma_drops_prefix_edge() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let f_alpha = alpha.prepend(&g, &single_edge_path(&g, "f")).unwrap();
        assert_eq!(f_alpha.sigma(), alpha);
        assert_ne!(f_alpha, alpha);
    }

    #[test]
    fn prepend_canonicalizes_cycle_repeats() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        // e·e^∞ is e^∞ again as an infinite path
        let extended = alpha.prepend(&g, &single_edge_path(&g, "e")).unwrap();
        assert_eq!(extended, alpha);
    }

    #[test]
    fn prepend_rejects_non_composable() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let f_alpha = alpha.prepend(&g, &single_edge_path(&g, "f")).unwrap();
        // s(f) = v but r(f·e^∞) = w
        assert!(f_alpha.prepend(&g, &single_edge_path(&g, "f")).is_err());
    }

    #[test]
    fn primitive_cycle_reduction() {
        let g = loop_graph();
        let e = g.edge_by_label("e").unwrap();
        let ee = Path::from_edges(&g, vec![e, e]).unwrap();
        let alpha = InfinitePath::new(&g, &Path::at_vertex(g.src(e)), &ee).unwrap();
        assert_eq!(alpha.cycle().len(), 1);
        assert_eq!(alpha, e_inf(&g));
    }

    /// Two vertices joined by a 2-cycle: the shift alternates between the
    /// two anchorings of the cycle, and squaring it returns the start.
    #[test]
    fn sigma_rotates_two_edge_cycle() {
        let g = load_graph_str(
            r#"
            [[vertices]]
            id = "v"
            [[vertices]]
            id = "w"
            [[edges]]
            id = "p"
            src = "v"
            rng = "w"
            [[edges]]
            id = "q"
            src = "w"
            rng = "v"
            "#,
        )
        .unwrap();
        let p = g.edge_by_label("p").unwrap();
        let q = g.edge_by_label("q").unwrap();
        let pq = Path::from_edges(&g, vec![p, q]).unwrap();
        let at_v = InfinitePath::new(&g, &Path::at_vertex(g.src(p)), &pq).unwrap();
        assert_eq!(at_v.range(&g), g.vertex_by_label("v").unwrap());
        let at_w = at_v.sigma();
        assert_ne!(at_w, at_v);
        assert_eq!(at_w.range(&g), g.vertex_by_label("w").unwrap());
        assert_eq!(at_w.sigma(), at_v);

        // A doubled cycle reduces to the primitive one.
        let pqpq = Path::from_edges(&g, vec![p, q, p, q]).unwrap();
        let doubled = InfinitePath::new(&g, &Path::at_vertex(g.src(p)), &pqpq).unwrap();
        assert_eq!(doubled, at_v);

        // A prefix worth more than a full cycle absorbs entirely.
        let prefix = Path::from_edges(&g, vec![p, q, p]).unwrap();
        let wrapped = InfinitePath::new(&g, &prefix, &pq).unwrap();
        assert_eq!(wrapped.prefix().len(), 0);
        assert_eq!(wrapped.range(&g), g.vertex_by_label("w").unwrap());
        assert_eq!(wrapped, at_w);
    }

    #[test]
    fn edge_index_counts_from_the_range_end() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let f_alpha = alpha.prepend(&g, &single_edge_path(&g, "f")).unwrap();
        let f = g.edge_by_label("f").unwrap();
        let e = g.edge_by_label("e").unwrap();
        assert_eq!(f_alpha.edge_at(1), f);
        assert_eq!(f_alpha.edge_at(2), e);
        assert_eq!(f_alpha.edge_at(5), e);
        let w = g.vertex_by_label("w").unwrap();
        assert_eq!(f_alpha.range(&g), w);
    }

    #[test]
    fn orbit_tree_branching_example_three_per_level() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        assert_eq!(tree.len(), 15);
        for level in -2..=2 {
            let nodes = tree.level_nodes(level);
            assert_eq!(nodes.len(), 3, "level {level}");
            let mut shown: Vec<String> =
                nodes.iter().map(|&i| tree.path_of(i).display(&g)).collect();
            shown.sort();
            assert_eq!(shown, vec!["(e)^inf", "f.(e)^inf", "g.(e)^inf"]);
        }
    }

    #[test]
    fn orbit_tree_loop_graph_one_per_level() {
        let g = loop_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -1, 1).unwrap();
        assert_eq!(tree.len(), 3);
        for level in -1..=1 {
            assert_eq!(tree.level_nodes(level).len(), 1, "level {level}");
        }
    }

    // With two loops at one vertex the true level sets grow without
    // bound; the window keeps the shift-depth-capped slice. Level 0
    // holds e^∞ and f·e^∞, and level 1 all four of their extensions.
    #[test]
    fn orbit_tree_double_loop_growing_levels() {
        let g = double_loop_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, 0, 1).unwrap();
        assert_eq!(tree.level_nodes(0).len(), 2);
        assert_eq!(tree.level_nodes(1).len(), 4);
    }

    #[test]
    fn orbit_tree_parents_unique_above_bottom() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        for i in 0..tree.len() {
            let level = tree.level_of(i);
            if level > -2 {
                let p = tree.parent_of(i).expect("non-bottom node has a parent");
                assert_eq!(tree.level_of(p), level - 1);
                assert_eq!(tree.path_of(i).sigma(), *tree.path_of(p));
            }
        }
    }

    #[test]
    fn orbit_tree_node_cap() {
        let g = double_loop_graph();
        let alpha = e_inf(&g);
        let err = build_orbit_tree_capped(&g, &alpha, -6, 6, 100).unwrap_err();
        assert!(matches!(err, Error::SizeCap(_)));
    }

    /// Deepening the bottom seed never adds nodes on graphs whose side
    /// branches terminate in sinks, which is the regime where lasso
    /// level sets stabilize. (With branches that re-enter a cycle the
    /// true level sets are infinite and only the cap bounds the window.)
    #[test]
    fn bottom_seed_depth_stabilizes_on_terminating_branches() {
        use rand::{Rng, SeedableRng};
        let key = |t: &OrbitTree| {
            let mut v: Vec<(i64, InfinitePath)> = (0..t.len())
                .map(|i| (t.level_of(i), t.path_of(i).clone()))
                .collect();
            v.sort();
            v
        };

        let g = branching_graph();
        let alpha = e_inf(&g);
        for window in [(-3i64, 3i64), (-1, 2), (0, 2)] {
            let base = build_inner(&g, &alpha, window.0, window.1, DEFAULT_NODE_CAP, 0).unwrap();
            let deeper = build_inner(&g, &alpha, window.0, window.1, DEFAULT_NODE_CAP, 8).unwrap();
            assert_eq!(key(&base), key(&deeper), "window {window:?}");
        }

        // 50 random lassos on cycles with sink-terminated hair.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..50 {
            let cycle_len = rng.gen_range(1..=4usize);
            let mut labels: Vec<String> = (0..cycle_len).map(|i| format!("c{i}")).collect();
            let mut edge_labels: Vec<String> = Vec::new();
            let mut src = Vec::new();
            let mut rng_v = Vec::new();
            for i in 0..cycle_len {
                edge_labels.push(format!("loop{i}"));
                src.push(crate::graph::VertexId(i));
                rng_v.push(crate::graph::VertexId((i + 1) % cycle_len));
            }
            for b in 0..rng.gen_range(0..=3usize) {
                // A branch leaves a cycle vertex and dies at a fresh sink.
                let from = rng.gen_range(0..cycle_len);
                labels.push(format!("s{b}"));
                edge_labels.push(format!("hair{b}"));
                src.push(crate::graph::VertexId(from));
                rng_v.push(crate::graph::VertexId(labels.len() - 1));
            }
            let space = crate::graph::MetricSpace::discrete(labels);
            let g = TopGraph::new(space, edge_labels, src, rng_v).unwrap();
            let cycle_edges: Vec<EdgeId> = (0..cycle_len)
                .map(|i| g.edge_by_label(&format!("loop{i}")).unwrap())
                .collect();
            let cycle = Path::from_edges(&g, cycle_edges).unwrap();
            let alpha = InfinitePath::new(&g, &Path::at_vertex(cycle.source(&g)), &cycle).unwrap();
            let base = build_inner(&g, &alpha, -2, 2, DEFAULT_NODE_CAP, 0).unwrap();
            let deeper = build_inner(&g, &alpha, -2, 2, DEFAULT_NODE_CAP, 9).unwrap();
            assert_eq!(key(&base), key(&deeper), "case {case}");
        }
    }

    #[test]
    fn pi_is_diagonal_indicator() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let v = g.vertex_by_label("v").unwrap();
        let a = VertexFunction::indicator(&g, v);
        let pi = rep_pi(&tree, &a).unwrap();
        pi.validate_grading(&tree).unwrap();
        for i in 0..tree.len() {
            let expected = if tree.path_of(i).range(&g) == v {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            assert_eq!(pi.entry(i, i), expected, "{}", tree.display_node(i));
        }
        let one = rep_pi(&tree, &VertexFunction::one(&g)).unwrap();
        assert_eq!(one, LevelOperator::identity(tree.len()));
    }

    #[test]
    fn tau_column_splits_into_three() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let tau = rep_tau(&tree, &EdgeFunction::one(&g)).unwrap();
        tau.validate_grading(&tree).unwrap();
        let base_idx = tree.find(&alpha, 0).unwrap();
        let col = tau.apply_basis(base_idx);
        assert_eq!(col.len(), 3);
        for (row, value) in &col {
            assert_eq!(tree.level_of(*row), 1);
            assert_eq!(*value, Complex64::ONE);
        }
        let norm: f64 = col.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauge_examples() {
        let g = loop_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -1, 1).unwrap();
        let id = gauge_unitary(&tree, Complex64::ONE).unwrap();
        assert_eq!(id, LevelOperator::identity(tree.len()));
        let minus = gauge_unitary(&tree, c(-1.0, 0.0)).unwrap();
        for i in 0..tree.len() {
            let expected = if tree.level_of(i) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(minus.entry(i, i), c(expected, 0.0));
        }
        let tree2 = build_orbit_tree(&g, &alpha, 0, 2).unwrap();
        let u_i = gauge_unitary(&tree2, c(0.0, 1.0)).unwrap();
        let top = tree2.level_nodes(2)[0];
        assert_eq!(u_i.entry(top, top), c(-1.0, 0.0));
        assert!(gauge_unitary(&tree, c(0.5, 0.0)).is_err());
    }

    #[test]
    fn relations_vanish_on_branching_example() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let v = g.vertex_by_label("v").unwrap();
        let a = VertexFunction::indicator(&g, v);
        let one = EdgeFunction::one(&g);
        let res = verify_relations(&tree, &a, &one, &one, c(0.0, 1.0)).unwrap();
        assert_eq!(res.max(), 0.0, "{res:?}");
    }

    #[test]
    fn relations_trivial_for_zero_function() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let a = VertexFunction::one(&g);
        let zero = EdgeFunction::zero(&g);
        // a ≡ 1 is supported on both vertices; both receive edges here.
        let res = verify_relations(&tree, &a, &zero, &zero, Complex64::ONE).unwrap();
        assert_eq!(res.max(), 0.0);
    }

    /// Corrupting one interior entry of τ must surface as a residual of
    /// at least 1: the detector is not vacuous.
    #[test]
    fn corrupted_tau_is_detected() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let one = EdgeFunction::one(&g);
        let tau = rep_tau(&tree, &one).unwrap();
        let mut corrupted = tau.clone();
        let base_idx = tree.find(&alpha, 0).unwrap();
        let (row, v) = corrupted.cols[base_idx][0];
        corrupted.cols[base_idx][0] = (row, v + Complex64::ONE);
        assert!(tree.is_interior(row) && tree.is_interior(base_idx));
        // Compare against the inner-product identity by hand.
        let lhs = corrupted.adjoint().mul(&corrupted);
        let rhs = rep_pi(&tree, &inner_product(&g, &one, &one).unwrap()).unwrap();
        let residual = lhs
            .sub(&rhs)
            .max_abs_where(|i, j| tree.is_interior(i) && tree.is_interior(j));
        assert!(residual >= 1.0, "residual {residual}");
    }

    #[test]
    fn pi_commutes_with_gauge_and_tau_is_covariant() {
        let g = branching_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let mut a = VertexFunction::one(&g);
        a.set(g.vertex_by_label("w").unwrap(), c(2.0, -3.0));
        let pi = rep_pi(&tree, &a).unwrap();
        for z in [c(0.0, 1.0), c(-1.0, 0.0)] {
            let u = gauge_unitary(&tree, z).unwrap();
            let commutator = pi.mul(&u).sub(&u.mul(&pi));
            assert_eq!(commutator.max_abs_where(|_, _| true), 0.0);
        }
    }

    #[test]
    fn unit_shift_branching_example() {
        let g = branching_graph();
        // w is a sink: the full graph cannot host τ(1) without leaves, so
        // use the loop subgraph behavior via the no-sink loop fixture and
        // the sink error path here.
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        assert!(matches!(unit_shift(&tree), Err(Error::SinkPresent(_))));
    }

    #[test]
    fn unit_shift_loop_graph_is_isometry_pair() {
        let g = loop_graph();
        let alpha = e_inf(&g);
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let (t, s) = unit_shift(&tree).unwrap();
        assert_eq!(s, t.adjoint());
        let st = s.mul(&t);
        let id = LevelOperator::identity(tree.len());
        let interior_cols = st
            .sub(&id)
            .max_abs_where(|_, j| tree.is_interior(j) || tree.level_of(j) == -2);
        assert_eq!(interior_cols, 0.0);
        assert!(s.norm2() <= 1.0 + 1e-12);
        for i in 0..tree.len() {
            if tree.level_of(i) < 2 {
                let col = t.apply_basis(i);
                let norm: f64 = col.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt();
                assert!(norm >= 1.0);
            }
        }
    }

    #[test]
    fn unit_shift_no_sink_multigraph() {
        // loop at v plus parallel edges into a second looped vertex keeps
        // the graph sink-free with genuine branching.
        let g = load_graph_str(
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
            id = "h"
            src = "w"
            rng = "w"
            "#,
        )
        .unwrap();
        let e = Path::from_edges(&g, vec![g.edge_by_label("e").unwrap()]).unwrap();
        let alpha =
            InfinitePath::new(&g, &Path::at_vertex(g.vertex_by_label("v").unwrap()), &e).unwrap();
        let tree = build_orbit_tree(&g, &alpha, -2, 2).unwrap();
        let (t, s) = unit_shift(&tree).unwrap();
        // Columns of T have pairwise disjoint supports, hence T*T = D.
        let mut seen = std::collections::HashSet::new();
        for j in 0..tree.len() {
            for (row, _) in t.column(j) {
                assert!(seen.insert(*row), "row {row} shared across columns");
            }
        }
        let t_star_t = t.adjoint().mul(&t);
        for i in 0..tree.len() {
            for j in 0..tree.len() {
                if i != j {
                    assert_eq!(t_star_t.entry(i, j), Complex64::ZERO);
                }
            }
        }
        let st = s.mul(&t);
        let residual = st
            .sub(&LevelOperator::identity(tree.len()))
            .max_abs_where(|_, j| tree.level_of(j) < 2);
        assert_eq!(residual, 0.0);
        assert!(s.norm2() <= 1.0 + 1e-12);
    }

    #[test]
    fn lasso_enumeration_loop_graph() {
        let g = loop_graph();
        let lassos = enumerate_lassos(&g, 4);
        // Only e^∞ exists no matter the description budget.
        assert_eq!(lassos.len(), 1);
        let g2 = branching_graph();
        let lassos2 = enumerate_lassos(&g2, 3);
        // e^∞, f·e^∞, g·e^∞, and the longer prefixes collapse by
        // canonical form; ff/fg-style prefixes are not composable.
        let mut shown: Vec<String> = lassos2.iter().map(|l| l.display(&g2)).collect();
        shown.sort();
        assert_eq!(shown, vec!["(e)^inf", "f.(e)^inf", "g.(e)^inf"]);
    }
}
