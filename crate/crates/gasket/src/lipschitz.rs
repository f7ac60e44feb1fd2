//! Discrete Lipschitz functionals and McShane-Whitney extremal extensions.
//!
//! `Lip^n(u, K)` maximizes `|u(x) - u(y)| / d_{n,K}(x, y)` over distinct
//! closure pairs, `Lip^n(u, dK)` over boundary pairs, and the local slope
//! `F^n(u, x)` over the neighbors of a single vertex at scale `delta_n`. The
//! maximal boundary slope is the Lipschitz constant preserved by the lower
//! and upper McShane-Whitney extensions, which sandwich every extension of
//! the boundary data with that constant.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{DomainError, Subdomain};
use crate::field::{FieldError, VertexField};
use crate::graph::PreFractalGraph;

#[derive(Debug, Error, PartialEq)]
pub enum LipschitzError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("the subdomain has an empty boundary")]
    EmptyBoundary,
}

/// Result of a Lipschitz-constant computation with the attaining pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub value: f64,
    /// Lexicographically smallest attaining pair, `None` only in degenerate
    /// cases (fewer than two points to compare).
    pub witness: Option<LipWitness>,
    /// Set when the support had fewer than two points.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipWitness {
    pub pair: (usize, usize),
    pub hops: u64,
}

/// Absolute-plus-relative comparison tolerance used throughout.
pub fn tol_for(scale: f64) -> f64 {
    1e-12 * (1.0 + scale.abs())
}

fn max_over_pairs(
    dom: &Subdomain,
    points: &[usize],
    u: &VertexField,
) -> Result<LipschitzReport, LipschitzError> {
    u.require_defined_on(points)?;
    if points.len() < 2 {
        return Ok(LipschitzReport { value: 0.0, witness: None, degenerate: true });
    }
    let scale = 2f64.powi(dom.graph().level() as i32);
    let mut best = LipschitzReport { value: 0.0, witness: None, degenerate: false };
    for (i, &x) in points.iter().enumerate() {
        let dist = dom.restricted_sssp(x);
        let ux = u.get(x)?;
        for &y in &points[i + 1..] {
            let hops = dist[y].ok_or(DomainError::Unreachable { from: x, to: y })?;
            let slope = (ux - u.get(y)?).abs() * scale / hops as f64;
            if best.witness.is_none() || slope > best.value {
                best.value = slope;
                best.witness = Some(LipWitness { pair: (x, y), hops });
            }
        }
    }
    Ok(best)
}

/// `Lip^n(u, K)`: the maximal difference quotient over distinct closure
/// pairs in the restricted distance. Requires a connected subdomain.
pub fn lip_interior(dom: &Subdomain, u: &VertexField) -> Result<LipschitzReport, LipschitzError> {
    dom.require_connected()?;
    max_over_pairs(dom, &dom.closure(), u)
}

/// `Lip^n(g, dK)`: the maximal difference quotient over distinct boundary
/// pairs, still measured in `d_{n,K}`.
pub fn lip_boundary(dom: &Subdomain, g: &VertexField) -> Result<LipschitzReport, LipschitzError> {
    dom.require_connected()?;
    if dom.boundary().is_empty() {
        return Err(LipschitzError::EmptyBoundary);
    }
    max_over_pairs(dom, dom.boundary(), g)
}

/// The local slope `F^n(u, x)`: the maximal neighbor difference quotient at
/// scale `delta_n`, over all graph neighbors of `x`.
pub fn local_slope(
    graph: &PreFractalGraph,
    u: &VertexField,
    x: usize,
) -> Result<f64, FieldError> {
    let ux = u.get(x)?;
    let mut best = 0.0f64;
    for &y in graph.neighbors(x) {
        best = best.max((ux - u.get(y)?).abs());
    }
    Ok(best / graph.mesh_size())
}

/// The local slope with the neighbor maximum restricted to the closure of
/// the subdomain. For interior vertices every neighbor already lies in the
/// closure, so this agrees with the raw form there.
pub fn local_slope_restricted(
    dom: &Subdomain,
    u: &VertexField,
    x: usize,
) -> Result<f64, FieldError> {
    let graph = dom.graph();
    let ux = u.get(x)?;
    let mut best = 0.0f64;
    for &y in graph.neighbors(x) {
        if dom.contains_closure(y) {
            best = best.max((ux - u.get(y)?).abs());
        }
    }
    Ok(best / graph.mesh_size())
}

/// Outcome of checking `Lip^n(u, K) = max_{x in K} F^n(u, x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEqualityCheck {
    pub lip: LipschitzReport,
    pub max_slope: f64,
    pub max_slope_at: Option<usize>,
    pub tolerance: f64,
    pub ok: bool,
}

/// Evaluates both sides of the slope identity, with the local slope
/// restricted to closure neighbors, and reports equality within
/// `1e-12 * (1 + |Lip|)`.
pub fn lip_equals_max_slope(
    dom: &Subdomain,
    u: &VertexField,
) -> Result<SlopeEqualityCheck, LipschitzError> {
    let lip = lip_interior(dom, u)?;
    let mut max_slope = 0.0f64;
    let mut max_slope_at = None;
    for &x in dom.interior() {
        let s = local_slope_restricted(dom, u, x)?;
        if max_slope_at.is_none() || s > max_slope {
            max_slope = s;
            max_slope_at = Some(x);
        }
    }
    let tolerance = tol_for(lip.value);
    let ok = (lip.value - max_slope).abs() <= tolerance;
    Ok(SlopeEqualityCheck { lip, max_slope, max_slope_at, tolerance, ok })
}

/// The McShane-Whitney extensions of boundary data `g`: the lower extension
/// `max_y (g(y) - L0 d(x,y))` and the upper `min_y (g(y) + L0 d(x,y))`, both
/// equal to `g` on the boundary exactly. Returns `(lower, upper)`.
pub fn mcshane_whitney(
    dom: &Subdomain,
    g: &VertexField,
) -> Result<(VertexField, VertexField), LipschitzError> {
    dom.require_connected()?;
    if dom.boundary().is_empty() {
        return Err(LipschitzError::EmptyBoundary);
    }
    let l0 = lip_boundary(dom, g)?.value;
    let delta = dom.graph().mesh_size();

    let mut lower = VertexField::undefined(dom.graph());
    let mut upper = VertexField::undefined(dom.graph());
    for &y in dom.boundary() {
        let gy = g.get(y)?;
        lower.set(y, gy)?;
        upper.set(y, gy)?;
    }

    let mut lo = vec![f64::NEG_INFINITY; dom.graph().vertex_count()];
    let mut hi = vec![f64::INFINITY; dom.graph().vertex_count()];
    for &y in dom.boundary() {
        let gy = g.get(y)?;
        let dist = dom.restricted_sssp(y);
        for &x in dom.interior() {
            let hops = dist[x].ok_or(DomainError::Unreachable { from: y, to: x })?;
            let d = hops as f64 * delta;
            lo[x] = lo[x].max(gy - l0 * d);
            hi[x] = hi[x].min(gy + l0 * d);
        }
    }
    for &x in dom.interior() {
        lower.set(x, lo[x])?;
        upper.set(x, hi[x])?;
    }
    Ok((lower, upper))
}
