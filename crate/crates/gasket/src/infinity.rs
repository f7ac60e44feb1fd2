//! The graph infinity Laplacian, its two solvers, and verification of the
//! equivalent characterizations of the solution.
//!
//! `D_inf u(x)` is the sum of the maximal and minimal neighbor increments at
//! `x`. A field is infinity harmonic on `K` when the operator vanishes
//! there; with boundary data on `dK` the solution exists and is unique, and
//! coincides with the absolutely minimizing Lipschitz extension.
//!
//! Two independent algorithms compute it:
//!
//! * `solve_iterate` - midrange fixed-point sweeps
//!   `u(x) <- (max_y u(y) + min_y u(y)) / 2`, Gauss-Seidel by default;
//! * `solve_lazarus` - the constructive method: find the boundary pair of
//!   maximal slope, set values linearly along one of its geodesics, move the
//!   fixed vertices to the boundary and recurse on the remaining components.
//!
//! Their agreement at `1e-9` is the standing cross-validation of both.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{DomainError, Subdomain, TieBreak};
use crate::field::{FieldError, VertexField};
use crate::graph::PreFractalGraph;
use crate::lipschitz::{lip_boundary, lip_interior, LipschitzError};
use crate::sample;

#[derive(Debug, Error, PartialEq)]
pub enum InfinityError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lipschitz(#[from] LipschitzError),
    #[error("the infinity Laplacian is not defined on the outer boundary (vertex {0})")]
    OperatorAtBoundary(usize),
    #[error("geodesic stages assigned vertex {index} the values {existing} and {new}")]
    Inconsistent { index: usize, existing: f64, new: f64 },
    #[error("comparison hypothesis failed: {0}")]
    HypothesisViolated(String),
    #[error("internal solver invariant broken: {0}")]
    Internal(String),
}

/// `D_inf u(x) = max_{y~x} (u(y) - u(x)) + min_{y~x} (u(y) - u(x))`.
pub fn infinity_laplacian(
    graph: &PreFractalGraph,
    u: &VertexField,
    x: usize,
) -> Result<f64, InfinityError> {
    if graph.is_boundary(x) {
        return Err(InfinityError::OperatorAtBoundary(x));
    }
    let ux = u.get(x)?;
    let mut max_inc = f64::NEG_INFINITY;
    let mut min_inc = f64::INFINITY;
    for &y in graph.neighbors(x) {
        let inc = u.get(y)? - ux;
        max_inc = max_inc.max(inc);
        min_inc = min_inc.min(inc);
    }
    Ok(max_inc + min_inc)
}

/// Sup norm of the operator over the interior; every neighbor of an interior
/// vertex lies in the closure, so this matches the solve stencil.
pub fn residual(dom: &Subdomain, u: &VertexField) -> Result<f64, InfinityError> {
    let mut sup = 0.0f64;
    for &x in dom.interior() {
        sup = sup.max(infinity_laplacian(dom.graph(), u, x)?.abs());
    }
    Ok(sup)
}

/// A Dirichlet problem for the operator: a connected subdomain plus boundary
/// data defined exactly on its derived boundary.
#[derive(Debug, Clone)]
pub struct InfinityProblem<'g> {
    dom: Subdomain<'g>,
    boundary_data: VertexField,
}

impl<'g> InfinityProblem<'g> {
    pub fn new(dom: Subdomain<'g>, boundary_data: VertexField) -> Result<Self, InfinityError> {
        dom.require_connected()?;
        boundary_data.require_defined_on(dom.boundary())?;
        Ok(InfinityProblem { dom, boundary_data })
    }

    /// The full-domain problem `K = V^n \ V^0` with data on the corners.
    pub fn full(graph: &'g PreFractalGraph, corner_values: [f64; 3]) -> Result<Self, InfinityError> {
        let dom = Subdomain::full(graph);
        let [q1, q2, q3] = graph.boundary();
        let data = VertexField::from_pairs(
            graph,
            [(q1, corner_values[0]), (q2, corner_values[1]), (q3, corner_values[2])],
        )?;
        Self::new(dom, data)
    }

    pub fn dom(&self) -> &Subdomain<'g> {
        &self.dom
    }

    pub fn boundary_data(&self) -> &VertexField {
        &self.boundary_data
    }

    fn boundary_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &y in self.dom.boundary() {
            let v = self.boundary_data.get(y).expect("validated on construction");
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Iterate,
    Lazarus,
}

/// Sweep scheme for the fixed-point solver. Gauss-Seidel updates in place in
/// ascending index order; Jacobi reads the previous iterate everywhere, so a
/// run is reproducible from the iterate count alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    #[default]
    GaussSeidel,
    Jacobi,
}

#[derive(Debug, Clone, Default)]
pub struct IterateOptions {
    /// Convergence threshold on the sup change per sweep; defaults to
    /// `1e-13 * (1 + boundary range)`.
    pub tol: Option<f64>,
    /// Sweep budget; defaults to a total of 1e7 vertex updates.
    pub max_sweeps: Option<u64>,
    pub mode: SweepMode,
    /// Optional warm start for interior values.
    pub initial: Option<VertexField>,
}

/// One stage of the constructive solver.
#[derive(Debug, Clone, Serialize)]
pub struct LazarusStage {
    /// Boundary pair of maximal slope, `None` for a constant fill.
    pub pair: Option<(usize, usize)>,
    pub slope: f64,
    pub path: Vec<usize>,
    /// Number of interior vertices fixed by this stage.
    pub fixed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    /// Sweeps for the iterative solver, stages for the constructive one.
    pub iterations: u64,
    pub residual: f64,
    pub converged: bool,
    pub stages: Vec<LazarusStage>,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

/// Midrange fixed-point iteration. Non-convergence within the sweep budget is
/// reported through the `converged` flag, with the partial field returned.
pub fn solve_iterate(
    problem: &InfinityProblem,
    opts: &IterateOptions,
) -> Result<(VertexField, SolveReport), InfinityError> {
    let start = Instant::now();
    let dom = problem.dom();
    let graph = dom.graph();
    let interior = dom.interior();
    let (lo, hi) = problem.boundary_range();
    let tol = opts.tol.unwrap_or_else(|| 1e-13 * (1.0 + (hi - lo).abs()));
    let max_sweeps = opts
        .max_sweeps
        .unwrap_or_else(|| (10_000_000 / interior.len().max(1) as u64).max(100));

    let mut values = vec![0.0f64; graph.vertex_count()];
    for &y in dom.boundary() {
        values[y] = problem.boundary_data.get(y)?;
    }
    let midrange = 0.5 * (lo + hi);
    for &x in interior {
        values[x] = match &opts.initial {
            Some(init) => init.get_opt(x).unwrap_or(midrange),
            None => midrange,
        };
    }

    let mut sweeps = 0u64;
    let mut converged = interior.is_empty();
    let mut scratch = values.clone();
    while !converged && sweeps < max_sweeps {
        let mut sup_change = 0.0f64;
        match opts.mode {
            SweepMode::GaussSeidel => {
                for &x in interior {
                    let next = midrange_update(graph, &values, x);
                    sup_change = sup_change.max((next - values[x]).abs());
                    values[x] = next;
                }
            }
            SweepMode::Jacobi => {
                scratch.copy_from_slice(&values);
                for &x in interior {
                    let next = midrange_update(graph, &scratch, x);
                    sup_change = sup_change.max((next - values[x]).abs());
                    values[x] = next;
                }
            }
        }
        sweeps += 1;
        if sup_change <= tol {
            converged = true;
        }
    }

    let field = collect_field(graph, dom, &values)?;
    let res = residual(dom, &field)?;
    let report = SolveReport {
        method: SolveMethod::Iterate,
        iterations: sweeps,
        residual: res,
        converged,
        stages: Vec::new(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    Ok((field, report))
}

fn midrange_update(graph: &PreFractalGraph, values: &[f64], x: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in graph.neighbors(x) {
        let v = values[y];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    0.5 * (lo + hi)
}

fn collect_field(
    graph: &PreFractalGraph,
    dom: &Subdomain,
    values: &[f64],
) -> Result<VertexField, InfinityError> {
    let mut field = VertexField::undefined(graph);
    for &i in &dom.closure() {
        field.set(i, values[i])?;
    }
    Ok(field)
}

/// The constructive geodesic solver. Stages always fix at least one interior
/// vertex: the distance between two boundary vertices runs through the
/// interior, so the chosen geodesic carries interior vertices.
pub fn solve_lazarus(
    problem: &InfinityProblem,
) -> Result<(VertexField, SolveReport), InfinityError> {
    let start = Instant::now();
    let dom = problem.dom();
    let graph = dom.graph();
    let scale = 2f64.powi(graph.level() as i32);
    let (lo, hi) = problem.boundary_range();
    let consistency_tol = 1e-12 * (1.0 + (hi - lo).abs());

    let mut values: Vec<Option<f64>> = vec![None; graph.vertex_count()];
    for &y in dom.boundary() {
        values[y] = Some(problem.boundary_data.get(y)?);
    }

    let assign = |idx: usize, value: f64, values: &mut Vec<Option<f64>>| {
        match values[idx] {
            Some(existing) if (existing - value).abs() > consistency_tol => {
                Err(InfinityError::Inconsistent { index: idx, existing, new: value })
            }
            Some(_) => Ok(()),
            None => {
                values[idx] = Some(value);
                Ok(())
            }
        }
    };

    let mut stages: Vec<LazarusStage> = Vec::new();
    let mut queue: Vec<Subdomain> = vec![dom.clone()];
    while let Some(sub) = queue.pop() {
        if sub.interior().is_empty() {
            continue;
        }
        let bd = sub.boundary();
        if bd.is_empty() {
            return Err(InfinityError::Internal(
                "nonempty interior with an empty boundary".into(),
            ));
        }
        let bvals: Vec<f64> = bd
            .iter()
            .map(|&y| {
                values[y].ok_or_else(|| {
                    InfinityError::Internal(format!("boundary vertex {y} not yet valued"))
                })
            })
            .collect::<Result<_, _>>()?;
        let blo = bvals.iter().cloned().fold(f64::INFINITY, f64::min);
        let bhi = bvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        if bd.len() == 1 || bhi - blo <= 0.0 {
            // A single boundary value, or constant data: the solution on this
            // component is that constant.
            let c = bvals[0];
            for &x in sub.interior() {
                assign(x, c, &mut values)?;
            }
            stages.push(LazarusStage {
                pair: None,
                slope: 0.0,
                path: Vec::new(),
                fixed: sub.interior().len(),
            });
            continue;
        }

        // Boundary pair of maximal slope, lexicographically first among ties.
        let mut best: Option<(f64, (usize, usize), u64)> = None;
        for (i, &x) in bd.iter().enumerate() {
            let dist = sub.restricted_sssp(x);
            for &y in &bd[i + 1..] {
                let hops = dist[y].ok_or(DomainError::Unreachable { from: x, to: y })?;
                let slope = (values[x].unwrap() - values[y].unwrap()).abs() * scale / hops as f64;
                if best.map_or(true, |(s, _, _)| slope > s) {
                    best = Some((slope, (x, y), hops));
                }
            }
        }
        let (slope, (x, y), hops) = best.expect("at least two boundary vertices");
        debug_assert!(hops >= 2, "boundary pairs always route through the interior");

        let path = sub.shortest_path(x, y, TieBreak::default())?;
        let (ux, uy) = (values[x].unwrap(), values[y].unwrap());
        let total = path.hops() as f64;
        let mut fixed = 0usize;
        for (i, &p) in path.vertices().iter().enumerate() {
            if p == x || p == y {
                continue;
            }
            let t = i as f64;
            let value = (t * uy + (total - t) * ux) / total;
            assign(p, value, &mut values)?;
            fixed += 1;
        }

        let remaining: Vec<usize> = sub
            .interior()
            .iter()
            .copied()
            .filter(|i| values[*i].is_none())
            .collect();
        let rest = Subdomain::new(graph, remaining)?;
        let mut parts = rest.components();
        // Stack order does not affect the result; keep index order in the log.
        parts.reverse();
        queue.extend(parts);

        stages.push(LazarusStage {
            pair: Some((x, y)),
            slope,
            path: path.vertices().to_vec(),
            fixed,
        });
    }

    let mut field = VertexField::undefined(graph);
    for &i in &dom.closure() {
        let v = values[i]
            .ok_or_else(|| InfinityError::Internal(format!("vertex {i} left unassigned")))?;
        field.set(i, v)?;
    }
    let res = residual(dom, &field)?;
    let report = SolveReport {
        method: SolveMethod::Lazarus,
        iterations: stages.len() as u64,
        residual: res,
        converged: true,
        stages,
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    Ok((field, report))
}

pub fn solve(
    problem: &InfinityProblem,
    method: SolveMethod,
    opts: &IterateOptions,
) -> Result<(VertexField, SolveReport), InfinityError> {
    match method {
        SolveMethod::Iterate => solve_iterate(problem, opts),
        SolveMethod::Lazarus => solve_lazarus(problem),
    }
}

/// Comparison principle check: `sub` must be a subsolution, `sup` a
/// supersolution, and `sub <= sup` on the boundary (hypothesis failures are
/// errors, not a `false` verdict); returns whether `sub <= sup + tol` holds
/// on the closure.
pub fn verify_comparison(
    dom: &Subdomain,
    sub: &VertexField,
    sup: &VertexField,
    tol: f64,
) -> Result<bool, InfinityError> {
    dom.require_connected()?;
    for &x in dom.interior() {
        let lap_sub = infinity_laplacian(dom.graph(), sub, x)?;
        if lap_sub < -tol {
            return Err(InfinityError::HypothesisViolated(format!(
                "sub is not a subsolution at {x}: D_inf = {lap_sub}"
            )));
        }
        let lap_sup = infinity_laplacian(dom.graph(), sup, x)?;
        if lap_sup > tol {
            return Err(InfinityError::HypothesisViolated(format!(
                "sup is not a supersolution at {x}: D_inf = {lap_sup}"
            )));
        }
    }
    for &y in dom.boundary() {
        if sub.get(y)? > sup.get(y)? + tol {
            return Err(InfinityError::HypothesisViolated(format!(
                "sub > sup on the boundary at {y}"
            )));
        }
    }
    for &x in &dom.closure() {
        if sub.get(x)? > sup.get(x)? + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A cone `lambda * d_{n,K}(apex, .) + offset` used in the comparison check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeParams {
    pub apex: usize,
    pub slope: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeSide {
    Above,
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct CcViolation {
    pub cone: ConeParams,
    pub side: ConeSide,
    pub vertex: usize,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CcReport {
    pub ok: bool,
    pub cones_checked: usize,
    pub violations: Vec<CcViolation>,
}

/// Comparison-with-cones check. For each boundary apex the slope grid is
/// `{0, L0/2, L0, 2 L0, lambda*}` where `lambda*` is the tightest slope seen
/// from the apex; for each slope the offset is chosen to make the cone touch
/// the boundary data, which is the hardest case for that slope.
pub fn verify_cc(dom: &Subdomain, u: &VertexField, tol: f64) -> Result<CcReport, InfinityError> {
    dom.require_connected()?;
    let closure = dom.closure();
    u.require_defined_on(&closure)?;
    let delta = dom.graph().mesh_size();
    let l0 = lip_boundary(dom, u)?.value;

    let mut violations = Vec::new();
    let mut cones_checked = 0usize;
    for &apex in dom.boundary() {
        let dist = dom.restricted_sssp(apex);
        let d_of = |x: usize| dist[x].map(|h| h as f64 * delta);

        let mut lambda_star = 0.0f64;
        for &y in dom.boundary() {
            if y == apex {
                continue;
            }
            let d = d_of(y).ok_or(DomainError::Unreachable { from: apex, to: y })?;
            lambda_star = lambda_star.max((u.get(y)? - u.get(apex)?).abs() / d);
        }

        for lambda in [0.0, 0.5 * l0, l0, 2.0 * l0, lambda_star] {
            cones_checked += 2;
            // Cone from above: tight offset, then the bound must propagate.
            let mut alpha = f64::NEG_INFINITY;
            for &y in dom.boundary() {
                alpha = alpha.max(u.get(y)? - lambda * d_of(y).unwrap());
            }
            for &x in dom.interior() {
                let bound = lambda * d_of(x).unwrap() + alpha;
                let excess = u.get(x)? - bound;
                if excess > tol {
                    violations.push(CcViolation {
                        cone: ConeParams { apex, slope: lambda, offset: alpha },
                        side: ConeSide::Above,
                        vertex: x,
                        excess,
                    });
                }
            }
            // Cone from below.
            let mut alpha = f64::INFINITY;
            for &y in dom.boundary() {
                alpha = alpha.min(u.get(y)? + lambda * d_of(y).unwrap());
            }
            for &x in dom.interior() {
                let bound = -lambda * d_of(x).unwrap() + alpha;
                let excess = bound - u.get(x)?;
                if excess > tol {
                    violations.push(CcViolation {
                        cone: ConeParams { apex, slope: lambda, offset: alpha },
                        side: ConeSide::Below,
                        vertex: x,
                        excess,
                    });
                }
            }
        }
    }
    Ok(CcReport { ok: violations.is_empty(), cones_checked, violations })
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnackReport {
    pub ok: bool,
    pub violations: Vec<usize>,
}

/// At every vertex of `interior`, either the neighbor increments change sign
/// strictly or they all vanish within tolerance.
pub fn verify_harnack_alternative(
    graph: &PreFractalGraph,
    u: &VertexField,
    interior: &[usize],
    tol: f64,
) -> Result<HarnackReport, InfinityError> {
    let mut violations = Vec::new();
    for &x in interior {
        let ux = u.get(x)?;
        let mut max_inc = f64::NEG_INFINITY;
        let mut min_inc = f64::INFINITY;
        for &y in graph.neighbors(x) {
            let inc = u.get(y)? - ux;
            max_inc = max_inc.max(inc);
            min_inc = min_inc.min(inc);
        }
        let strict_sign_change = min_inc < -tol && max_inc > tol;
        let all_flat = max_inc.abs() <= tol && min_inc.abs() <= tol;
        if !(strict_sign_change || all_flat) {
            violations.push(x);
        }
    }
    Ok(HarnackReport { ok: violations.is_empty(), violations })
}

/// True when `u(x)` is the midrange of its neighbor values within tolerance,
/// i.e. minimizes the local slope functional at `x`.
pub fn verify_am_local(
    graph: &PreFractalGraph,
    u: &VertexField,
    x: usize,
    tol: f64,
) -> Result<bool, InfinityError> {
    let ux = u.get(x)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in graph.neighbors(x) {
        let v = u.get(y)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((ux - 0.5 * (lo + hi)).abs() <= tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct AmleViolation {
    pub sample: usize,
    pub kind: &'static str,
    pub lip_u: f64,
    pub lip_competitor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmleReport {
    pub ok: bool,
    pub samples: usize,
    pub violations: Vec<AmleViolation>,
}

/// Samples random connected subsets `K'` of the domain interior and checks
/// the absolute-minimizer inequality `Lip(u, K') <= Lip(v, K')` both against
/// the re-solved extension of `u`'s boundary trace and against randomly
/// perturbed competitors agreeing with `u` on the boundary of `K'`.
pub fn verify_amle_global(
    dom: &Subdomain,
    u: &VertexField,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<AmleReport, InfinityError> {
    dom.require_connected()?;
    u.require_defined_on(&dom.closure())?;
    let graph = dom.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = u.range().unwrap_or((0.0, 0.0));
    let spread = (hi - lo).abs() + 1.0;

    let mut violations = Vec::new();
    for sample_idx in 0..samples {
        let interior = sample::connected_interior(graph, &mut rng, dom.interior());
        let sub = Subdomain::new(graph, interior)?;
        let mut trace = VertexField::undefined(graph);
        for &y in sub.boundary() {
            trace.set(y, u.get(y)?)?;
        }
        let problem = InfinityProblem::new(sub.clone(), trace)?;
        let (resolved, _) = solve_lazarus(&problem)?;

        let lip_u = lip_interior(&sub, u)?.value;
        let lip_resolved = lip_interior(&sub, &resolved)?.value;
        if lip_u > lip_resolved + tol {
            violations.push(AmleViolation {
                sample: sample_idx,
                kind: "resolve",
                lip_u,
                lip_competitor: lip_resolved,
            });
        }

        let mut competitor = VertexField::undefined(graph);
        for &y in sub.boundary() {
            competitor.set(y, u.get(y)?)?;
        }
        for &x in sub.interior() {
            let bump = rng.gen_range(-0.25..0.25) * spread;
            competitor.set(x, u.get(x)? + bump)?;
        }
        let lip_competitor = lip_interior(&sub, &competitor)?.value;
        if lip_u > lip_competitor + tol {
            violations.push(AmleViolation {
                sample: sample_idx,
                kind: "competitor",
                lip_u,
                lip_competitor,
            });
        }
    }
    Ok(AmleReport { ok: violations.is_empty(), samples, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vertex::Vertex;

    fn mid(g: &PreFractalGraph, i: u8, j: u8) -> usize {
        g.index_of(&Vertex::corner(i).midpoint(&Vertex::corner(j))).unwrap()
    }

    fn corner_field(g: &PreFractalGraph, vals: [f64; 3]) -> VertexField {
        let [q1, q2, q3] = g.boundary();
        VertexField::from_pairs(g, [(q1, vals[0]), (q2, vals[1]), (q3, vals[2])]).unwrap()
    }

    #[test]
    fn operator_vanishes_on_constant() {
        let g = PreFractalGraph::build(1).unwrap();
        let u = VertexField::constant_on(&g, &(0..g.vertex_count()).collect::<Vec<_>>(), 0.3);
        for x in 0..g.vertex_count() {
            if !g.is_boundary(x) {
                assert_eq!(infinity_laplacian(&g, &u, x).unwrap(), 0.0);
            }
        }
        let [q1, _, _] = g.boundary();
        assert_eq!(
            infinity_laplacian(&g, &u, q1).unwrap_err(),
            InfinityError::OperatorAtBoundary(q1)
        );
    }

    #[test]
    fn operator_at_level1_midpoint() {
        let g = PreFractalGraph::build(1).unwrap();
        let [q1, q2, q3] = g.boundary();
        let u = VertexField::from_pairs(
            &g,
            [
                (q1, 0.0),
                (q2, 0.4),
                (q3, 1.0),
                (mid(&g, 1, 3), 0.5),
                (mid(&g, 1, 2), 1.0 / 3.0),
                (mid(&g, 2, 3), 2.0 / 3.0),
            ],
        )
        .unwrap();
        let lap = infinity_laplacian(&g, &u, mid(&g, 1, 3)).unwrap();
        assert!(lap.abs() < 1e-15);
    }

    #[test]
    fn distance_field_is_a_supersolution() {
        let g = PreFractalGraph::build(2).unwrap();
        let interior: Vec<usize> =
            (0..g.vertex_count()).filter(|&i| !g.is_boundary(i) && i % 4 != 1).collect();
        let dom = Subdomain::new(&g, interior).unwrap();
        let dom = dom.components().into_iter().max_by_key(|c| c.interior().len()).unwrap();
        let x0 = dom.boundary()[0];
        let dist = dom.restricted_sssp(x0);
        let mut u = VertexField::undefined(&g);
        for &i in &dom.closure() {
            u.set(i, dist[i].unwrap() as f64 * g.mesh_size()).unwrap();
        }
        for &x in dom.interior() {
            let lap = infinity_laplacian(&g, &u, x).unwrap();
            assert!(lap <= 1e-15, "distance field must satisfy D_inf <= 0, got {lap}");
        }
    }

    #[test]
    fn iterate_reproduces_level1_closed_forms() {
        let g = PreFractalGraph::build(1).unwrap();

        let problem = InfinityProblem::full(&g, [0.0, 0.45, 1.0]).unwrap();
        let (u, report) = solve_iterate(&problem, &IterateOptions::default()).unwrap();
        assert!(report.converged);
        assert!((u.get(mid(&g, 1, 3)).unwrap() - 0.5).abs() < 1e-10);
        assert!((u.get(mid(&g, 1, 2)).unwrap() - 1.0 / 3.0).abs() < 1e-10);
        assert!((u.get(mid(&g, 2, 3)).unwrap() - 2.0 / 3.0).abs() < 1e-10);

        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_iterate(&problem, &IterateOptions::default()).unwrap();
        assert!((u.get(mid(&g, 2, 3)).unwrap() - 0.6).abs() < 1e-10);
        assert!((u.get(mid(&g, 1, 2)).unwrap() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn iterate_level2_remark_value() {
        // The closed form (3+4e)/12 holds on the remark's range e <= 1/7.
        let g = PreFractalGraph::build(2).unwrap();
        let e = 0.1;
        let problem = InfinityProblem::full(&g, [0.0, e, 1.0]).unwrap();
        let (u, report) = solve_iterate(&problem, &IterateOptions::default()).unwrap();
        assert!(report.converged);
        let expected = (3.0 + 4.0 * e) / 12.0;
        assert!(
            (u.get(mid(&g, 1, 2)).unwrap() - expected).abs() < 1e-9,
            "u2(q12) = {} expected {expected}",
            u.get(mid(&g, 1, 2)).unwrap()
        );
    }

    #[test]
    fn lazarus_stage_structure_case_one() {
        let g = PreFractalGraph::build(1).unwrap();
        let problem = InfinityProblem::full(&g, [0.0, 0.45, 1.0]).unwrap();
        let (u, report) = solve_lazarus(&problem).unwrap();
        // First stage fixes q13 = 1/2 along the q1-q3 side, the second fixes
        // the remaining pair linearly along q1,q12,q23,q3.
        assert_eq!(report.stages.len(), 2);
        assert_eq!(report.stages[0].fixed, 1);
        assert_eq!(report.stages[1].fixed, 2);
        assert!((u.get(mid(&g, 1, 3)).unwrap() - 0.5).abs() < 1e-12);
        assert!((u.get(mid(&g, 1, 2)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((u.get(mid(&g, 2, 3)).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lazarus_stage_structure_case_two() {
        let g = PreFractalGraph::build(1).unwrap();
        let e = 0.2;
        let problem = InfinityProblem::full(&g, [0.0, e, 1.0]).unwrap();
        let (u, report) = solve_lazarus(&problem).unwrap();
        assert_eq!(report.stages.len(), 3);
        assert!((u.get(mid(&g, 1, 3)).unwrap() - 0.5).abs() < 1e-12);
        assert!((u.get(mid(&g, 2, 3)).unwrap() - (1.0 + e) / 2.0).abs() < 1e-12);
        assert!((u.get(mid(&g, 1, 2)).unwrap() - (1.0 + e) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn lazarus_level2_remark_value() {
        let g = PreFractalGraph::build(2).unwrap();
        for e in [0.05, 0.1, 1.0 / 7.0] {
            let problem = InfinityProblem::full(&g, [0.0, e, 1.0]).unwrap();
            let (u, _) = solve_lazarus(&problem).unwrap();
            let expected = (3.0 + 4.0 * e) / 12.0;
            assert!(
                (u.get(mid(&g, 1, 2)).unwrap() - expected).abs() < 1e-9,
                "e = {e}: u2(q12) = {} expected {expected}",
                u.get(mid(&g, 1, 2)).unwrap()
            );
        }
    }

    #[test]
    fn constant_boundary_solves_in_one_stage() {
        let g = PreFractalGraph::build(2).unwrap();
        let problem = InfinityProblem::full(&g, [0.5, 0.5, 0.5]).unwrap();
        let (u, report) = solve_lazarus(&problem).unwrap();
        assert_eq!(report.stages.len(), 1);
        for &x in &Subdomain::full(&g).closure() {
            assert_eq!(u.get(x).unwrap(), 0.5);
        }
    }

    #[test]
    fn solvers_agree_on_small_levels() {
        for n in 1..=3 {
            let g = PreFractalGraph::build(n).unwrap();
            for vals in [[0.0, 0.2, 1.0], [0.3, 0.9, 0.1], [1.0, 1.0, 0.0]] {
                let problem = InfinityProblem::full(&g, vals).unwrap();
                let (ui, ri) = solve_iterate(&problem, &IterateOptions::default()).unwrap();
                let (ul, _) = solve_lazarus(&problem).unwrap();
                assert!(ri.converged);
                let sup = ui
                    .sup_distance_on(&ul, &Subdomain::full(&g).closure())
                    .unwrap();
                assert!(sup <= 1e-9, "n={n} vals={vals:?} sup={sup}");
            }
        }
    }

    #[test]
    fn maximum_principle_holds() {
        let g = PreFractalGraph::build(3).unwrap();
        let problem = InfinityProblem::full(&g, [0.1, 0.8, 0.4]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        for &x in &Subdomain::full(&g).closure() {
            let v = u.get(x).unwrap();
            assert!((0.1..=0.8).contains(&v));
        }
    }

    #[test]
    fn comparison_accepts_distance_subsolution() {
        let g = PreFractalGraph::build(2).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (sup, _) = solve_lazarus(&problem).unwrap();

        let x0 = dom.boundary()[0];
        let dist = dom.restricted_sssp(x0);
        // Shift -d so it sits below the solution on the boundary.
        let mut offset = f64::INFINITY;
        for &y in dom.boundary() {
            let d = dist[y].unwrap() as f64 * g.mesh_size();
            offset = offset.min(sup.get(y).unwrap() + d);
        }
        let mut sub = VertexField::undefined(&g);
        for &i in &dom.closure() {
            sub.set(i, offset - dist[i].unwrap() as f64 * g.mesh_size()).unwrap();
        }
        assert!(verify_comparison(&dom, &sub, &sup, 1e-9).unwrap());
        // A field equal to itself is both a sub- and supersolution.
        assert!(verify_comparison(&dom, &sup, &sup, 1e-9).unwrap());
    }

    #[test]
    fn comparison_rejects_bad_hypotheses() {
        let g = PreFractalGraph::build(1).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        let mut broken = u.clone();
        // Lifting one interior value makes it fail the subsolution test.
        let x = dom.interior()[0];
        broken.set(x, broken.get(x).unwrap() + 0.5).unwrap();
        assert!(matches!(
            verify_comparison(&dom, &broken, &u, 1e-9),
            Err(InfinityError::HypothesisViolated(_))
        ));
    }

    #[test]
    fn solution_monotone_in_boundary_data() {
        let g = PreFractalGraph::build(3).unwrap();
        let lo = InfinityProblem::full(&g, [0.0, 0.1, 0.7]).unwrap();
        let hi = InfinityProblem::full(&g, [0.05, 0.3, 0.9]).unwrap();
        let (ulo, _) = solve_lazarus(&lo).unwrap();
        let (uhi, _) = solve_lazarus(&hi).unwrap();
        for &x in &Subdomain::full(&g).closure() {
            assert!(ulo.get(x).unwrap() <= uhi.get(x).unwrap() + 1e-9);
        }
    }

    #[test]
    fn cc_holds_for_solution_and_detects_corruption() {
        let g = PreFractalGraph::build(2).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        let report = verify_cc(&dom, &u, 1e-9).unwrap();
        assert!(report.ok, "violations: {:?}", report.violations);

        let mut corrupted = u.clone();
        let x = dom.interior()[2];
        corrupted.set(x, corrupted.get(x).unwrap() + 0.5).unwrap();
        let report = verify_cc(&dom, &corrupted, 1e-9).unwrap();
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.vertex == x));
    }

    #[test]
    fn harnack_alternative_examples() {
        let g = PreFractalGraph::build(1).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        assert!(verify_harnack_alternative(&g, &u, dom.interior(), 1e-9).unwrap().ok);

        let c = VertexField::constant_on(&g, &(0..g.vertex_count()).collect::<Vec<_>>(), 1.0);
        assert!(verify_harnack_alternative(&g, &c, dom.interior(), 1e-9).unwrap().ok);
    }

    #[test]
    fn am_local_examples() {
        let g = PreFractalGraph::build(2).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        for &x in dom.interior() {
            assert!(verify_am_local(&g, &u, x, 1e-9).unwrap());
        }
        let mut perturbed = u.clone();
        let x = dom.interior()[0];
        perturbed.set(x, perturbed.get(x).unwrap() + 1e-3).unwrap();
        assert!(!verify_am_local(&g, &perturbed, x, 1e-9).unwrap());
    }

    #[test]
    fn amle_global_accepts_solution_and_flags_mcshane() {
        let g = PreFractalGraph::build(2).unwrap();
        let dom = Subdomain::full(&g);
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&problem).unwrap();
        let report = verify_amle_global(&dom, &u, 100, 7, 1e-9).unwrap();
        assert!(report.ok, "violations: {:?}", report.violations);

        // The lower McShane-Whitney extension is not absolutely minimizing
        // for this data; the sampler must find a witness subdomain.
        let (lower, _) =
            crate::lipschitz::mcshane_whitney(&dom, problem.boundary_data()).unwrap();
        let report = verify_amle_global(&dom, &lower, 100, 7, 1e-9).unwrap();
        assert!(!report.ok);
    }

    #[test]
    fn affine_equivariance_and_reflection() {
        let g = PreFractalGraph::build(2).unwrap();
        let closure = Subdomain::full(&g).closure();
        let base = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_lazarus(&base).unwrap();

        let (alpha, beta) = (2.0, -1.0);
        let scaled = InfinityProblem::full(&g, [beta, alpha * 0.2 + beta, alpha + beta]).unwrap();
        let (us, _) = solve_lazarus(&scaled).unwrap();
        for &x in &closure {
            assert!((us.get(x).unwrap() - (alpha * u.get(x).unwrap() + beta)).abs() < 1e-9);
        }

        let reflected = InfinityProblem::full(&g, [1.0, 0.8, 0.0]).unwrap();
        let (ur, _) = solve_lazarus(&reflected).unwrap();
        for &x in &closure {
            assert!((ur.get(x).unwrap() - (1.0 - u.get(x).unwrap())).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobi_mode_matches_gauss_seidel() {
        let g = PreFractalGraph::build(2).unwrap();
        let problem = InfinityProblem::full(&g, [0.0, 0.35, 1.0]).unwrap();
        let (ugs, _) = solve_iterate(&problem, &IterateOptions::default()).unwrap();
        let opts = IterateOptions { mode: SweepMode::Jacobi, ..Default::default() };
        let (uj, rj) = solve_iterate(&problem, &opts).unwrap();
        assert!(rj.converged);
        let sup = ugs.sup_distance_on(&uj, &Subdomain::full(&g).closure()).unwrap();
        assert!(sup <= 1e-9);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = PreFractalGraph::build(3).unwrap();
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let opts = IterateOptions { max_sweeps: Some(2), ..Default::default() };
        let (_, report) = solve_iterate(&problem, &opts).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn problem_rejects_disconnected_domain() {
        let g = PreFractalGraph::build(2).unwrap();
        let interior = vec![mid(&g, 1, 2), mid(&g, 1, 3), mid(&g, 2, 3)];
        let dom = Subdomain::new(&g, interior).unwrap();
        let data = VertexField::constant_on(&g, dom.boundary(), 0.0);
        assert_eq!(
            InfinityProblem::new(dom, data).unwrap_err(),
            InfinityError::Domain(DomainError::Disconnected)
        );
    }

    #[test]
    fn subdomain_problem_with_single_boundary_value_class() {
        let g = PreFractalGraph::build(1).unwrap();
        let dom = Subdomain::new(&g, vec![mid(&g, 1, 2)]).unwrap();
        let data = VertexField::constant_on(&g, dom.boundary(), 2.5);
        let problem = InfinityProblem::new(dom, data).unwrap();
        let (u, report) = solve_lazarus(&problem).unwrap();
        assert_eq!(report.stages.len(), 1);
        assert_eq!(u.get(mid(&g, 1, 2)).unwrap(), 2.5);
    }

    #[test]
    fn reports_serialize_without_timing() {
        let g = PreFractalGraph::build(1).unwrap();
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (_, report) = solve_lazarus(&problem).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(!json.contains("elapsed"));
        assert!(json.contains("\"method\":\"lazarus\""));
    }
}
