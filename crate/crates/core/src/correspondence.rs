//! Module actions and inner product on finitely supported functions.
//!
//! Vertex functions act on edge functions through the range map on the
//! left and the source map on the right; the inner product sums over the
//! source fibers. On a finite discrete graph the compact-operator
//! decomposition of the left action collapses to one rank-one pair per
//! edge over the support, which makes the covariance computation exact.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, TopGraph, VertexId};

/// A function on the vertex set, total in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<Complex64>,
}

impl VertexFunction {
    pub fn zero(g: &TopGraph) -> Self {
        VertexFunction {
            values: vec![Complex64::ZERO; g.vertex_count()],
        }
    }

    pub fn constant(g: &TopGraph, value: Complex64) -> Self {
        VertexFunction {
            values: vec![value; g.vertex_count()],
        }
    }

    pub fn one(g: &TopGraph) -> Self {
        Self::constant(g, Complex64::ONE)
    }

    /// Indicator of a single vertex.
    pub fn indicator(g: &TopGraph, v: VertexId) -> Self {
        let mut f = Self::zero(g);
        f.values[v.0] = Complex64::ONE;
        f
    }

    pub fn from_values(values: Vec<Complex64>) -> Self {
        VertexFunction { values }
    }

    pub fn get(&self, v: VertexId) -> Complex64 {
        self.values[v.0]
    }

    pub fn set(&mut self, v: VertexId, value: Complex64) {
        self.values[v.0] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn check(&self, g: &TopGraph) -> Result<()> {
        if self.values.len() != g.vertex_count() {
            return Err(Error::MismatchedGraph {
                kind: "vertices",
                expected: g.vertex_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// A function on the edge set, total in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    values: Vec<Complex64>,
}

impl EdgeFunction {
    pub fn zero(g: &TopGraph) -> Self {
        EdgeFunction {
            values: vec![Complex64::ZERO; g.edge_count()],
        }
    }

    pub fn constant(g: &TopGraph, value: Complex64) -> Self {
        EdgeFunction {
            values: vec![value; g.edge_count()],
        }
    }

    pub fn one(g: &TopGraph) -> Self {
        Self::constant(g, Complex64::ONE)
    }

    pub fn indicator(g: &TopGraph, e: EdgeId) -> Self {
        let mut f = Self::zero(g);
        f.values[e.0] = Complex64::ONE;
        f
    }

    pub fn from_values(values: Vec<Complex64>) -> Self {
        EdgeFunction { values }
    }

    pub fn get(&self, e: EdgeId) -> Complex64 {
        self.values[e.0]
    }

    pub fn set(&mut self, e: EdgeId, value: Complex64) {
        self.values[e.0] = value;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| *z == Complex64::ZERO)
    }

    fn check(&self, g: &TopGraph) -> Result<()> {
        if self.values.len() != g.edge_count() {
            return Err(Error::MismatchedGraph {
                kind: "edges",
                expected: g.edge_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// (aξ)(e) = a(r(e)) ξ(e).
pub fn left_action(g: &TopGraph, a: &VertexFunction, xi: &EdgeFunction) -> Result<EdgeFunction> {
    a.check(g)?;
    xi.check(g)?;
    let values = g.edges().map(|e| a.get(g.rng(e)) * xi.get(e)).collect();
    Ok(EdgeFunction { values })
}

/// (ξa)(e) = ξ(e) a(s(e)).
pub fn right_action(g: &TopGraph, xi: &EdgeFunction, a: &VertexFunction) -> Result<EdgeFunction> {
    a.check(g)?;
    xi.check(g)?;
    let values = g.edges().map(|e| xi.get(e) * a.get(g.src(e))).collect();
    Ok(EdgeFunction { values })
}

/// ⟨ξ, η⟩(v) = Σ over e with s(e) = v of conj(ξ(e)) η(e); zero at sinks.
pub fn inner_product(
    g: &TopGraph,
    xi: &EdgeFunction,
    eta: &EdgeFunction,
) -> Result<VertexFunction> {
    xi.check(g)?;
    eta.check(g)?;
    let mut values = vec![Complex64::ZERO; g.vertex_count()];
    for e in g.edges() {
        values[g.src(e).0] += xi.get(e).conj() * eta.get(e);
    }
    Ok(VertexFunction { values })
}

/// ‖ξ‖ = sqrt of the sup of ⟨ξ, ξ⟩ over vertices.
pub fn cc_norm(g: &TopGraph, xi: &EdgeFunction) -> Result<f64> {
    let ip = inner_product(g, xi, xi)?;
    let max = ip.values.iter().map(|z| z.re).fold(0.0, f64::max);
    Ok(max.sqrt())
}

/// A pair (ξ, η) standing for the rank-one operator ξ⟨η, ·⟩.
#[derive(Debug, Clone)]
pub struct RankOnePair {
    pub xi: EdgeFunction,
    pub eta: EdgeFunction,
}

/// Writes the left action of `a` as a finite sum of rank-one operators.
///
/// In the discrete case the partition of unity degenerates to one
/// indicator per edge over the support: for each edge x with
/// a(r(x)) ≠ 0 the pair is (a(r(x))·1_x, 1_x). Requires `a` to vanish
/// off the regular vertices, i.e. off r(E¹).
pub fn rank_one_decomposition(g: &TopGraph, a: &VertexFunction) -> Result<Vec<RankOnePair>> {
    a.check(g)?;
    for v in g.vertices() {
        if a.get(v) != Complex64::ZERO && g.edges_into(v).is_empty() {
            return Err(Error::NotRegularlySupported(
                "vertex function",
                g.vertex_label(v).to_string(),
            ));
        }
    }
    let mut pairs = Vec::new();
    for x in g.edges() {
        let scale = a.get(g.rng(x));
        if scale == Complex64::ZERO {
            continue;
        }
        let eta = EdgeFunction::indicator(g, x);
        let mut xi = EdgeFunction::zero(g);
        xi.set(x, scale);
        pairs.push(RankOnePair { xi, eta });
    }
    Ok(pairs)
}

/// Applies θ_{ξ,η} to ζ: result(x) = ξ(x) · Σ over f with s(f) = s(x) of
/// conj(η(f)) ζ(f). Used to verify the decomposition identity pointwise.
pub fn apply_rank_one(
    g: &TopGraph,
    pair: &RankOnePair,
    zeta: &EdgeFunction,
) -> Result<EdgeFunction> {
    let ip = inner_product(g, &pair.eta, zeta)?;
    right_action(g, &pair.xi, &ip)
}
