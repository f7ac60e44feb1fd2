//! Convergence experiments across refinement levels: solve on `V^1..V^nmax`,
//! compare restrictions on coarse vertex sets against the finest solution,
//! track the monotone slope functional, and reproduce the level-1 versus
//! level-2 counterexample.
//!
//! Comparisons across levels always match vertices by canonical address;
//! there is no interpolation anywhere.

use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldError, VertexField};
use crate::graph::{GraphError, PreFractalGraph};
use crate::infinity::{
    infinity_laplacian, solve, InfinityError, InfinityProblem, IterateOptions, SolveMethod,
};
use crate::lipschitz::local_slope;
use crate::vertex::Vertex;

#[derive(Debug, Error, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Infinity(#[from] InfinityError),
    #[error("level sweep needs nMax >= 2, got {0}")]
    SweepTooShallow(u32),
    #[error("counterexample parameter e = {0} outside (0, 1/7]")]
    CounterexampleRange(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub k: u32,
    /// `sup_{V^k} |u^n - u^{nmax}|` on exact vertex matches.
    pub sup_diff: f64,
    /// `F^n(u^n, V^n) = max_{x in V^n \ V^0} F^n(u^n, x)`.
    pub f_n: f64,
    pub iterations: u64,
    pub residual: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceTable {
    pub boundary: [f64; 3],
    pub n_max: u32,
    pub method: SolveMethod,
    pub rows: Vec<ConvergenceRow>,
    /// Levels whose solve did not converge; their rows are still present.
    pub failures: Vec<u32>,
}

/// The solved fields of a level sweep, one per level starting at `n = 1`.
#[derive(Debug)]
pub struct LevelSweepResult {
    pub table: ConvergenceTable,
    pub fields: Vec<VertexField>,
}

/// Solves the full-domain problem for `n = 1..=n_max` and reports
/// `sup_{V^k} |u^n - u^{n_max}|` for every `k <= n`. Iterative solves warm
/// start from the previous level through midpoint prolongation, which keeps
/// the two solver families independent of each other.
pub fn level_sweep(
    boundary: [f64; 3],
    n_max: u32,
    method: SolveMethod,
) -> Result<LevelSweepResult, LabError> {
    if n_max < 2 {
        return Err(LabError::SweepTooShallow(n_max));
    }
    let graphs: Vec<PreFractalGraph> =
        (1..=n_max).map(PreFractalGraph::build).collect::<Result<_, _>>()?;

    let mut fields: Vec<VertexField> = Vec::with_capacity(graphs.len());
    let mut stats: Vec<(u64, f64)> = Vec::new();
    let mut failures: Vec<u32> = Vec::new();
    for (i, graph) in graphs.iter().enumerate() {
        let problem = InfinityProblem::full(graph, boundary)?;
        let initial = fields.last().map(|prev| prolong(&graphs[i - 1], prev, graph));
        let opts = IterateOptions {
            max_sweeps: Some(200_000),
            initial,
            ..Default::default()
        };
        let (u, report) = solve(&problem, method, &opts)?;
        if !report.converged {
            failures.push(graph.level());
        }
        stats.push((report.iterations, report.residual));
        fields.push(u);
    }

    let finest_graph = &graphs[graphs.len() - 1];
    let finest = &fields[fields.len() - 1];
    let mut rows = Vec::new();
    for (i, graph) in graphs.iter().enumerate() {
        let n = graph.level();
        let u = &fields[i];
        let f_n = max_local_slope(graph, u)?;
        for k in 0..=n {
            let mut sup = 0.0f64;
            for &idx in &graph.restrict_vertices(k)? {
                let v = graph.vertex(idx);
                let fine_idx = finest_graph
                    .index_of(&v)
                    .expect("coarse vertices nest in the finest graph");
                sup = sup.max((u.get(idx)? - finest.get(fine_idx)?).abs());
            }
            rows.push(ConvergenceRow {
                n,
                k,
                sup_diff: sup,
                f_n,
                iterations: stats[i].0,
                residual: stats[i].1,
            });
        }
    }

    Ok(LevelSweepResult {
        table: ConvergenceTable { boundary, n_max, method, rows, failures },
        fields,
    })
}

/// Midpoint prolongation of a coarse solution onto the next level: copied on
/// nested vertices, averaged across each parent edge on the new midpoints.
fn prolong(
    coarse_graph: &PreFractalGraph,
    coarse: &VertexField,
    fine_graph: &PreFractalGraph,
) -> VertexField {
    let mut fine = VertexField::undefined(fine_graph);
    for (i, v) in coarse_graph.vertices().iter().enumerate() {
        if let (Some(idx), Some(val)) = (fine_graph.index_of(v), coarse.get_opt(i)) {
            fine.set(idx, val).expect("finite by construction");
        }
    }
    for &(a, b) in coarse_graph.edges() {
        let m = coarse_graph.vertex(a).midpoint(&coarse_graph.vertex(b));
        if let (Some(idx), Some(va), Some(vb)) =
            (fine_graph.index_of(&m), coarse.get_opt(a), coarse.get_opt(b))
        {
            fine.set(idx, 0.5 * (va + vb)).expect("finite by construction");
        }
    }
    fine
}

fn max_local_slope(graph: &PreFractalGraph, u: &VertexField) -> Result<f64, LabError> {
    let mut best = 0.0f64;
    for x in 0..graph.vertex_count() {
        if !graph.is_boundary(x) {
            best = best.max(local_slope(graph, u, x)?);
        }
    }
    Ok(best)
}

/// `F^n(u, V^n)` for `n = 1..=n_hi`, evaluated on the restriction of a field
/// living on the finest graph, plus the monotonicity verdict with `1e-12`
/// slack.
pub fn monotone_functional_check(
    finest_graph: &PreFractalGraph,
    u: &VertexField,
    n_hi: u32,
) -> Result<(bool, Vec<(u32, f64)>), LabError> {
    let mut table = Vec::new();
    for n in 1..=n_hi.min(finest_graph.level()) {
        let graph = PreFractalGraph::build_with_max(n, finest_graph.level())?;
        let mut restricted = VertexField::undefined(&graph);
        for (i, v) in graph.vertices().iter().enumerate() {
            let fine_idx = finest_graph
                .index_of(v)
                .expect("coarse vertices nest in the finest graph");
            restricted.set(i, u.get(fine_idx)?)?;
        }
        table.push((n, max_local_slope(&graph, &restricted)?));
    }
    let ok = table.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12 * (1.0 + w[1].1));
    Ok((ok, table))
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub e: f64,
    /// `u^1(q12) = (1 + e)/4`.
    pub u1_q12: f64,
    /// `u^2(q12) = (3 + 4e)/12`.
    pub u2_q12: f64,
    /// `|u^2(q12) - u^1(q12)| = e/12`.
    pub difference: f64,
    /// The level-1 operator applied to the restriction of `u^2`, at `q12`;
    /// nonzero, so `u^2` is not infinity harmonic as a level-1 field.
    pub delta1_of_u2_at_q12: f64,
}

/// Solves at levels 1 and 2 with data `(0, e, 1)` and quantifies how the
/// level-2 solution fails the level-1 equation on `V^1`.
pub fn counterexample_report(e: f64) -> Result<CounterexampleReport, LabError> {
    if !(e > 0.0 && e <= 1.0 / 7.0) {
        return Err(LabError::CounterexampleRange(e));
    }
    let g1 = PreFractalGraph::build(1)?;
    let g2 = PreFractalGraph::build(2)?;
    let boundary = [0.0, e, 1.0];
    let (u1, _) = solve(
        &InfinityProblem::full(&g1, boundary)?,
        SolveMethod::Lazarus,
        &IterateOptions::default(),
    )?;
    let (u2, _) = solve(
        &InfinityProblem::full(&g2, boundary)?,
        SolveMethod::Lazarus,
        &IterateOptions::default(),
    )?;

    let q12 = Vertex::corner(1).midpoint(&Vertex::corner(2));
    let u1_q12 = u1.get(g1.index_of(&q12).expect("q12 in V^1"))?;
    let u2_q12 = u2.get(g2.index_of(&q12).expect("q12 in V^2"))?;

    // Restrict u^2 to V^1 and apply the level-1 operator at q12.
    let mut restricted = VertexField::undefined(&g1);
    for (i, v) in g1.vertices().iter().enumerate() {
        restricted.set(i, u2.get(g2.index_of(v).expect("V^1 nests in V^2"))?)?;
    }
    let delta1 = infinity_laplacian(&g1, &restricted, g1.index_of(&q12).unwrap())?;

    Ok(CounterexampleReport {
        e,
        u1_q12,
        u2_q12,
        difference: (u2_q12 - u1_q12).abs(),
        delta1_of_u2_at_q12: delta1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_rejects_shallow_runs() {
        assert_eq!(
            level_sweep([0.0, 0.2, 1.0], 1, SolveMethod::Lazarus).unwrap_err(),
            LabError::SweepTooShallow(1)
        );
    }

    #[test]
    fn level_one_vs_two_difference_is_e_over_twelve() {
        // e inside (0, 1/7], where u^2(q12) = (3+4e)/12 holds and the only
        // V^1 vertex whose value moves between the two levels is q12.
        let e = 0.1;
        let result = level_sweep([0.0, e, 1.0], 2, SolveMethod::Lazarus).unwrap();
        let row = result
            .table
            .rows
            .iter()
            .find(|r| r.n == 1 && r.k == 1)
            .expect("row (1,1) present");
        assert!(
            (row.sup_diff - e / 12.0).abs() < 1e-9,
            "sup diff {} expected {}",
            row.sup_diff,
            e / 12.0
        );
        // Boundary vertices agree exactly.
        let row0 = result.table.rows.iter().find(|r| r.n == 1 && r.k == 0).unwrap();
        assert_eq!(row0.sup_diff, 0.0);
    }

    #[test]
    fn zero_data_gives_zero_table() {
        let result = level_sweep([0.0, 0.0, 0.0], 3, SolveMethod::Iterate).unwrap();
        assert!(result.table.failures.is_empty());
        for row in &result.table.rows {
            assert_eq!(row.sup_diff, 0.0);
            assert_eq!(row.f_n, 0.0);
        }
    }

    #[test]
    fn methods_agree_in_the_table() {
        let a = level_sweep([0.0, 0.3, 1.0], 3, SolveMethod::Iterate).unwrap();
        let b = level_sweep([0.0, 0.3, 1.0], 3, SolveMethod::Lazarus).unwrap();
        for (ra, rb) in a.table.rows.iter().zip(b.table.rows.iter()) {
            assert_eq!((ra.n, ra.k), (rb.n, rb.k));
            assert!((ra.sup_diff - rb.sup_diff).abs() < 2e-9);
            assert!((ra.f_n - rb.f_n).abs() < 2e-9);
        }
    }

    #[test]
    fn monotone_functional_on_solution_and_random_fields() {
        let g = PreFractalGraph::build(4).unwrap();
        let problem = InfinityProblem::full(&g, [0.0, 0.2, 1.0]).unwrap();
        let (u, _) = solve(&problem, SolveMethod::Lazarus, &IterateOptions::default()).unwrap();
        let (ok, table) = monotone_functional_check(&g, &u, 4).unwrap();
        assert!(ok, "table: {table:?}");
        assert_eq!(table.len(), 4);

        let constant = VertexField::constant_on(&g, &(0..g.vertex_count()).collect::<Vec<_>>(), 1.0);
        let (ok, table) = monotone_functional_check(&g, &constant, 4).unwrap();
        assert!(ok);
        assert!(table.iter().all(|&(_, f)| f == 0.0));

        let mut wild = VertexField::undefined(&g);
        for i in 0..g.vertex_count() {
            wild.set(i, ((i * 2654435761) % 997) as f64 / 997.0).unwrap();
        }
        let (ok, table) = monotone_functional_check(&g, &wild, 4).unwrap();
        assert!(ok, "slope functional must grow with refinement: {table:?}");
    }

    #[test]
    fn counterexample_values() {
        let e = 0.1;
        let report = counterexample_report(e).unwrap();
        assert!((report.u1_q12 - 0.275).abs() < 1e-10);
        assert!((report.u2_q12 - 3.4 / 12.0).abs() < 1e-9);
        assert!((report.difference - e / 12.0).abs() < 1e-9);
        assert!(report.delta1_of_u2_at_q12.abs() > e / 24.0);

        let report = counterexample_report(1.0 / 7.0).unwrap();
        assert!((report.difference - 1.0 / 84.0).abs() < 1e-9);
    }

    #[test]
    fn counterexample_rejects_out_of_range() {
        assert_eq!(
            counterexample_report(0.0).unwrap_err(),
            LabError::CounterexampleRange(0.0)
        );
        assert!(counterexample_report(0.2).is_err());
        assert!(counterexample_report(-0.05).is_err());
    }
}
