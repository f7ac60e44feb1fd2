//! Seeded random generators for property suites: connected subdomains and
//! boundary data. Everything is a pure function of the passed RNG state.

use rand::Rng;

use crate::graph::PreFractalGraph;

/// A random connected nonempty subset of `allowed` (interior vertex indices),
/// grown vertex by vertex from a random start through a random frontier.
pub fn connected_interior<R: Rng>(
    graph: &PreFractalGraph,
    rng: &mut R,
    allowed: &[usize],
) -> Vec<usize> {
    assert!(!allowed.is_empty(), "cannot sample from an empty interior");
    let mut in_allowed = vec![false; graph.vertex_count()];
    for &i in allowed {
        in_allowed[i] = true;
    }

    let target = rng.gen_range(1..=allowed.len());
    let start = allowed[rng.gen_range(0..allowed.len())];

    let mut chosen = vec![false; graph.vertex_count()];
    let mut picked = vec![start];
    chosen[start] = true;
    let mut frontier: Vec<usize> = graph
        .neighbors(start)
        .iter()
        .copied()
        .filter(|&v| in_allowed[v])
        .collect();

    while picked.len() < target && !frontier.is_empty() {
        let slot = rng.gen_range(0..frontier.len());
        let v = frontier.swap_remove(slot);
        if chosen[v] {
            continue;
        }
        chosen[v] = true;
        picked.push(v);
        for &w in graph.neighbors(v) {
            if in_allowed[w] && !chosen[w] {
                frontier.push(w);
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Uniform values in `[0, 1)` for the given indices.
pub fn boundary_values<R: Rng>(rng: &mut R, indices: &[usize]) -> Vec<(usize, f64)> {
    indices.iter().map(|&i| (i, rng.gen::<f64>())).collect()
}
