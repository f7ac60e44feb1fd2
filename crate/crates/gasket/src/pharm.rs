//! Discrete p-energy and p-harmonic minimization with fixed corner data.
//!
//! The energy is the l^p norm of the scaled increments over all ordered
//! adjacent pairs (each edge counted once per endpoint). Its constrained
//! minimizer is computed by cyclic coordinate descent: the one-dimensional
//! section at a vertex is strictly convex for `p > 1`, so bisection on the
//! monotone derivative finds the update. Powers are evaluated with the
//! largest increment factored out, keeping `p = 256` and beyond inside the
//! double range.

use serde::Serialize;
use thiserror::Error;

use crate::domain::Subdomain;
use crate::field::{FieldError, VertexField};
use crate::graph::PreFractalGraph;
use crate::infinity::{solve_lazarus, InfinityError, InfinityProblem};
use crate::lipschitz::{mcshane_whitney, LipschitzError};

#[derive(Debug, Error, PartialEq)]
pub enum PharmError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lipschitz(#[from] LipschitzError),
    #[error(transparent)]
    Infinity(#[from] InfinityError),
    #[error("p-energy requires p >= 1, got {0}")]
    ExponentBelowOne(f64),
    #[error("minimization requires p > 1 for a unique minimizer, got {0}")]
    ExponentNotStrict(f64),
    #[error("exponent list must be strictly increasing and > 1")]
    BadExponentList,
}

/// A p-energy minimization instance: the whole of `V^n` with the three
/// corner values fixed.
#[derive(Debug, Clone)]
pub struct PEnergyProblem<'g> {
    graph: &'g PreFractalGraph,
    exponent: f64,
    boundary_data: VertexField,
}

impl<'g> PEnergyProblem<'g> {
    pub fn new(
        graph: &'g PreFractalGraph,
        exponent: f64,
        boundary_data: VertexField,
    ) -> Result<Self, PharmError> {
        if !(exponent >= 1.0) {
            return Err(PharmError::ExponentBelowOne(exponent));
        }
        boundary_data.require_defined_on(&graph.boundary())?;
        Ok(PEnergyProblem { graph, exponent, boundary_data })
    }

    pub fn from_corner_values(
        graph: &'g PreFractalGraph,
        exponent: f64,
        values: [f64; 3],
    ) -> Result<Self, PharmError> {
        let [q1, q2, q3] = graph.boundary();
        let data = VertexField::from_pairs(
            graph,
            [(q1, values[0]), (q2, values[1]), (q3, values[2])],
        )?;
        Self::new(graph, exponent, data)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn boundary_data(&self) -> &VertexField {
        &self.boundary_data
    }
}

/// `I_p(u) = (sum_x sum_{y~x} |(u(y)-u(x))/delta|^p)^(1/p)` over all of
/// `V^n`, with the largest increment factored out of the powers.
pub fn p_energy(graph: &PreFractalGraph, u: &VertexField, p: f64) -> Result<f64, PharmError> {
    if !(p >= 1.0) {
        return Err(PharmError::ExponentBelowOne(p));
    }
    let delta = graph.mesh_size();
    let mut slopes = Vec::with_capacity(2 * graph.edge_count());
    for x in 0..graph.vertex_count() {
        let ux = u.get(x)?;
        for &y in graph.neighbors(x) {
            slopes.push(((u.get(y)? - ux) / delta).abs());
        }
    }
    Ok(scaled_p_norm(&slopes, p))
}

/// The star energy `(sum_{y~x} |(u(y)-u(x))/delta|^p)^(1/p)` at one vertex.
pub fn local_p_energy(
    graph: &PreFractalGraph,
    u: &VertexField,
    x: usize,
    p: f64,
) -> Result<f64, PharmError> {
    if !(p >= 1.0) {
        return Err(PharmError::ExponentBelowOne(p));
    }
    let delta = graph.mesh_size();
    let ux = u.get(x)?;
    let slopes: Vec<f64> = graph
        .neighbors(x)
        .iter()
        .map(|&y| u.get(y).map(|uy| ((uy - ux) / delta).abs()))
        .collect::<Result<_, _>>()?;
    Ok(scaled_p_norm(&slopes, p))
}

fn scaled_p_norm(values: &[f64], p: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

#[derive(Debug, Clone, Serialize)]
pub struct PSolveReport {
    pub sweeps: u64,
    pub energy_trace: Vec<f64>,
    pub final_change: f64,
    pub converged: bool,
}

const DEFAULT_MAX_SWEEPS: u64 = 200_000;

/// Minimizes the p-energy over fields equal to the corner data on `V^0`, by
/// cyclic coordinate descent with a bisection inner solver. Requires
/// `p > 1`; non-convergence within the sweep budget is flagged, not an error.
pub fn solve_p_harmonic(
    problem: &PEnergyProblem,
    tol: Option<f64>,
    max_sweeps: Option<u64>,
    warm_start: Option<&VertexField>,
) -> Result<(VertexField, PSolveReport), PharmError> {
    let p = problem.exponent;
    if !(p > 1.0) {
        return Err(PharmError::ExponentNotStrict(p));
    }
    let graph = problem.graph;
    let dom = Subdomain::full(graph);
    let interior = dom.interior();

    let (lo, hi) = problem
        .boundary_data
        .range()
        .expect("boundary data defined on the corners");
    let tol = tol.unwrap_or_else(|| 1e-10 * (1.0 + (hi - lo).abs()));
    let inner_tol = tol / 10.0;
    let max_sweeps = max_sweeps.unwrap_or(DEFAULT_MAX_SWEEPS);

    let mut values = vec![0.0f64; graph.vertex_count()];
    for &q in &graph.boundary() {
        values[q] = problem.boundary_data.get(q)?;
    }
    match warm_start {
        Some(field) => {
            for &x in interior {
                values[x] = field.get(x)?;
            }
        }
        None => {
            // Continuation-friendly start: the McShane midpoint already has
            // the right Lipschitz structure.
            let (lower, upper) = mcshane_whitney(&dom, &problem.boundary_data)?;
            for &x in interior {
                values[x] = 0.5 * (lower.get(x)? + upper.get(x)?);
            }
        }
    }

    let mut energy_trace = Vec::new();
    let mut sweeps = 0u64;
    let mut final_change = 0.0f64;
    let mut converged = interior.is_empty();
    while !converged && sweeps < max_sweeps {
        let mut sup_change = 0.0f64;
        for &x in interior {
            let next = minimize_star(graph, &values, x, p, inner_tol);
            sup_change = sup_change.max((next - values[x]).abs());
            values[x] = next;
        }
        sweeps += 1;
        final_change = sup_change;
        let field = snapshot(graph, &values);
        energy_trace.push(p_energy(graph, &field, p)?);
        if sup_change <= tol {
            converged = true;
        }
    }
    if interior.is_empty() {
        sweeps = 1;
        let field = snapshot(graph, &values);
        energy_trace.push(p_energy(graph, &field, p)?);
    }

    let field = snapshot(graph, &values);
    Ok((field, PSolveReport { sweeps, energy_trace, final_change, converged }))
}

fn snapshot(graph: &PreFractalGraph, values: &[f64]) -> VertexField {
    let mut field = VertexField::undefined(graph);
    for (i, &v) in values.iter().enumerate() {
        field.set(i, v).expect("solver values stay finite");
    }
    field
}

/// Minimizer of `t -> sum_{y~x} |t - u(y)|^p` over the neighbor hull. The
/// derivative is continuous and strictly increasing for `p > 1`; its sign at
/// `t` is evaluated with the largest deviation factored out.
fn minimize_star(graph: &PreFractalGraph, values: &[f64], x: usize, p: f64, inner_tol: f64) -> f64 {
    let neighbor_values: Vec<f64> = graph.neighbors(x).iter().map(|&y| values[y]).collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &neighbor_values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo <= 0.0 {
        return lo;
    }
    let derivative_sign = |t: f64| -> f64 {
        let max_dev = neighbor_values.iter().map(|&v| (t - v).abs()).fold(0.0f64, f64::max);
        if max_dev == 0.0 {
            return 0.0;
        }
        neighbor_values
            .iter()
            .map(|&v| {
                let d = t - v;
                d.signum() * (d.abs() / max_dev).powf(p - 1.0)
            })
            .sum()
    };
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > inner_tol {
        let mid = 0.5 * (lo + hi);
        let s = derivative_sign(mid);
        if s > 0.0 {
            hi = mid;
        } else if s < 0.0 {
            lo = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct PSweepRow {
    pub p: f64,
    /// `sup_{V^n} |u_p - u_inf|` against the constructive infinity solution.
    pub gap: f64,
    pub energy: f64,
    pub sweeps: u64,
    pub converged: bool,
}

/// Solves the p-harmonic problem along an increasing exponent list, warm
/// starting each solve from the previous minimizer, and reports the sup
/// distance to the infinity harmonic solution per exponent.
pub fn p_sweep_to_infinity(
    graph: &PreFractalGraph,
    boundary_data: &VertexField,
    p_list: &[f64],
    tol: Option<f64>,
) -> Result<Vec<PSweepRow>, PharmError> {
    if p_list.is_empty()
        || p_list.iter().any(|&p| !(p > 1.0))
        || p_list.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(PharmError::BadExponentList);
    }

    let dom = Subdomain::full(graph);
    let reference_problem = InfinityProblem::new(dom.clone(), boundary_data.clone())?;
    let (reference, _) = solve_lazarus(&reference_problem)?;
    let all: Vec<usize> = (0..graph.vertex_count()).collect();

    let mut rows = Vec::with_capacity(p_list.len());
    let mut warm: Option<VertexField> = None;
    for &p in p_list {
        let problem = PEnergyProblem::new(graph, p, boundary_data.clone())?;
        let (u, report) = solve_p_harmonic(&problem, tol, None, warm.as_ref())?;
        let gap = u.sup_distance_on(&reference, &all)?;
        rows.push(PSweepRow {
            p,
            gap,
            energy: p_energy(graph, &u, p)?,
            sweeps: report.sweeps,
            converged: report.converged,
        });
        warm = Some(u);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::local_slope;
    use crate::vertex::Vertex;

    fn mid(g: &PreFractalGraph, i: u8, j: u8) -> usize {
        g.index_of(&Vertex::corner(i).midpoint(&Vertex::corner(j))).unwrap()
    }

    fn full_field(g: &PreFractalGraph, f: impl Fn(usize) -> f64) -> VertexField {
        let mut u = VertexField::undefined(g);
        for i in 0..g.vertex_count() {
            u.set(i, f(i)).unwrap();
        }
        u
    }

    /// Direct edge-sum oracle: iterate undirected edges, count each twice.
    fn energy_oracle(g: &PreFractalGraph, u: &VertexField, p: f64) -> f64 {
        let delta = g.mesh_size();
        let sum: f64 = g
            .edges()
            .iter()
            .map(|&(x, y)| {
                2.0 * ((u.get(y).unwrap() - u.get(x).unwrap()) / delta).abs().powf(p)
            })
            .sum();
        sum.powf(1.0 / p)
    }

    #[test]
    fn energy_of_constant_is_zero() {
        let g = PreFractalGraph::build(1).unwrap();
        let u = full_field(&g, |_| 4.2);
        assert_eq!(p_energy(&g, &u, 3.0).unwrap(), 0.0);
        assert_eq!(local_p_energy(&g, &u, mid(&g, 1, 2), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn energy_matches_edge_sum_oracle() {
        let g = PreFractalGraph::build(1).unwrap();
        let [q1, _, _] = g.boundary();
        // Indicator of one corner: its two incident edges carry slope 2.
        let u = full_field(&g, |i| if i == q1 { 1.0 } else { 0.0 });
        for p in [1.0, 2.0, 5.0] {
            let got = p_energy(&g, &u, p).unwrap();
            let want = energy_oracle(&g, &u, p);
            assert!((got - want).abs() < 1e-12 * (1.0 + want), "p={p}: {got} vs {want}");
        }
        // Two directed terms per unit-difference edge: 4 terms of 2^p here.
        let direct = (4.0 * 2f64.powf(3.0)).powf(1.0 / 3.0);
        assert!((p_energy(&g, &u, 3.0).unwrap() - direct).abs() < 1e-12);

        // Level-1 infinity harmonic data at p = 2.
        let u = full_field(&g, |i| {
            let [q1, q2, q3] = g.boundary();
            if i == q1 {
                0.0
            } else if i == q2 {
                0.4
            } else if i == q3 {
                1.0
            } else if i == mid(&g, 1, 3) {
                0.5
            } else if i == mid(&g, 1, 2) {
                1.0 / 3.0
            } else {
                2.0 / 3.0
            }
        });
        let got = p_energy(&g, &u, 2.0).unwrap();
        let want = energy_oracle(&g, &u, 2.0);
        assert!((got - want).abs() < 1e-12 * (1.0 + want));
    }

    #[test]
    fn rejects_exponents_below_one() {
        let g = PreFractalGraph::build(1).unwrap();
        let u = full_field(&g, |i| i as f64);
        assert_eq!(p_energy(&g, &u, 0.5).unwrap_err(), PharmError::ExponentBelowOne(0.5));
        let problem = PEnergyProblem::from_corner_values(&g, 1.0, [0.0, 0.2, 1.0]).unwrap();
        assert_eq!(
            solve_p_harmonic(&problem, None, None, None).unwrap_err(),
            PharmError::ExponentNotStrict(1.0)
        );
        assert!(PEnergyProblem::from_corner_values(&g, 0.9, [0.0, 0.2, 1.0]).is_err());
    }

    #[test]
    fn star_energy_hand_value() {
        // Star with neighbor values {0, 1, 1/3, 2/3}, center 1/2, delta 1/2:
        // the squared scaled increments sum to 20/9.
        let g = PreFractalGraph::build(1).unwrap();
        let x = mid(&g, 1, 3);
        let mut u = VertexField::undefined(&g);
        u.set(x, 0.5).unwrap();
        let nbrs = g.neighbors(x).to_vec();
        let vals = [0.0, 1.0, 1.0 / 3.0, 2.0 / 3.0];
        // Assign in neighbor order; the star energy is symmetric in them.
        for (&y, &v) in nbrs.iter().zip(vals.iter()) {
            u.set(y, v).unwrap();
        }
        let got = local_p_energy(&g, &u, x, 2.0).unwrap();
        let want = (20.0f64 / 9.0).sqrt();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn star_energy_tends_to_local_slope() {
        let g = PreFractalGraph::build(2).unwrap();
        let u = full_field(&g, |i| ((i * 31) % 17) as f64 / 17.0);
        for &x in Subdomain::full(&g).interior().iter().take(6) {
            let f = local_slope(&g, &u, x).unwrap();
            let e = local_p_energy(&g, &u, x, 1024.0).unwrap();
            assert!((e - f).abs() <= 2e-3 * (1.0 + f), "x={x}: {e} vs {f}");
            // The p-norm always dominates the max-norm entry.
            assert!(e >= f - 1e-12);
        }
    }

    #[test]
    fn p2_minimizer_matches_linear_solve() {
        let g = PreFractalGraph::build(1).unwrap();
        let (g1, g2, g3) = (0.0, 0.2, 1.0);
        let problem = PEnergyProblem::from_corner_values(&g, 2.0, [g1, g2, g3]).unwrap();
        let (u, report) = solve_p_harmonic(&problem, None, None, None).unwrap();
        assert!(report.converged);
        // At p = 2 every interior vertex carries the mean of its neighbors;
        // solve the 3x3 system for (u12, u13, u23) directly.
        let a = [[4.0, -1.0, -1.0], [-1.0, 4.0, -1.0], [-1.0, -1.0, 4.0]];
        let b = [g1 + g2, g1 + g3, g2 + g3];
        let x = solve3(a, b);
        assert!((u.get(mid(&g, 1, 2)).unwrap() - x[0]).abs() < 1e-8);
        assert!((u.get(mid(&g, 1, 3)).unwrap() - x[1]).abs() < 1e-8);
        assert!((u.get(mid(&g, 2, 3)).unwrap() - x[2]).abs() < 1e-8);
    }

    fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
        let mut m = [
            [a[0][0], a[0][1], a[0][2], b[0]],
            [a[1][0], a[1][1], a[1][2], b[1]],
            [a[2][0], a[2][1], a[2][2], b[2]],
        ];
        for col in 0..3 {
            let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, pivot);
            for row in 0..3 {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..4 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
    }

    #[test]
    fn constant_boundary_converges_immediately() {
        let g = PreFractalGraph::build(2).unwrap();
        let problem = PEnergyProblem::from_corner_values(&g, 4.0, [0.7, 0.7, 0.7]).unwrap();
        let (u, report) = solve_p_harmonic(&problem, None, None, None).unwrap();
        assert_eq!(report.sweeps, 1);
        for i in 0..g.vertex_count() {
            assert!((u.get(i).unwrap() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn local_optimality_at_convergence() {
        let g = PreFractalGraph::build(1).unwrap();
        let problem = PEnergyProblem::from_corner_values(&g, 3.0, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve_p_harmonic(&problem, None, None, None).unwrap();
        // Replacing u(x) with any grid value must not lower the star energy.
        for &x in Subdomain::full(&g).interior() {
            let here = local_p_energy(&g, &u, x, 3.0).unwrap();
            let ux = u.get(x).unwrap();
            for step in -10..=10 {
                let mut v = u.clone();
                v.set(x, ux + step as f64 * 0.013).unwrap();
                let there = local_p_energy(&g, &v, x, 3.0).unwrap();
                assert!(here <= there + 1e-8, "x={x} step={step}: {here} > {there}");
            }
        }
    }

    #[test]
    fn energy_descends_across_sweeps() {
        let g = PreFractalGraph::build(2).unwrap();
        let problem = PEnergyProblem::from_corner_values(&g, 6.0, [0.0, 0.2, 1.0]).unwrap();
        let (_, report) = solve_p_harmonic(&problem, None, None, None).unwrap();
        for w in report.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]));
        }
    }

    #[test]
    fn sweep_gap_shrinks() {
        let g = PreFractalGraph::build(1).unwrap();
        let [q1, q2, q3] = g.boundary();
        let data =
            VertexField::from_pairs(&g, [(q1, 0.0), (q2, 0.2), (q3, 1.0)]).unwrap();
        let rows = p_sweep_to_infinity(&g, &data, &[2.0, 4.0, 8.0, 16.0], None).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[3].gap < rows[0].gap);
        // Constant data: every gap vanishes.
        let c = VertexField::from_pairs(&g, [(q1, 1.0), (q2, 1.0), (q3, 1.0)]).unwrap();
        let rows = p_sweep_to_infinity(&g, &c, &[2.0, 4.0], None).unwrap();
        assert!(rows.iter().all(|r| r.gap < 1e-12));
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        let g = PreFractalGraph::build(1).unwrap();
        let [q1, q2, q3] = g.boundary();
        let data =
            VertexField::from_pairs(&g, [(q1, 0.0), (q2, 0.2), (q3, 1.0)]).unwrap();
        assert_eq!(
            p_sweep_to_infinity(&g, &data, &[4.0, 2.0], None).unwrap_err(),
            PharmError::BadExponentList
        );
        assert_eq!(
            p_sweep_to_infinity(&g, &data, &[1.0, 2.0], None).unwrap_err(),
            PharmError::BadExponentList
        );
        assert_eq!(
            p_sweep_to_infinity(&g, &data, &[], None).unwrap_err(),
            PharmError::BadExponentList
        );
    }
}
