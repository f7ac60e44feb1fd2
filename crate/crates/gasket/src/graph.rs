//! Construction of the pre-fractal graphs `(V^n, ~_n)`.
//!
//! `V^n` is the union of the images of the initial simplex corners under all
//! length-`n` words of the contraction maps; two vertices are adjacent when
//! their segment is the image of a simplex side under such a word. Cells are
//! enumerated recursively (each step keeps one corner and takes the two side
//! midpoints, which is exactly the word map composition), vertices are
//! deduplicated through their canonical dyadic form, and the result is sorted
//! so repeated builds are identical.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vertex::Vertex;

/// Default cap on the construction level; `V^12` has 797,163 vertices.
pub const DEFAULT_MAX_LEVEL: u32 = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("level {level} above the configured maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },
    #[error("restriction level {k} above graph level {level}")]
    RestrictionAboveLevel { k: u32, level: u32 },
    #[error("vertex {0} not in the graph")]
    UnknownVertex(Vertex),
}

/// The graph `(V^n, ~_n)` with its three boundary corners and mesh size
/// `delta_n = 2^-n`.
#[derive(Debug, Clone)]
pub struct PreFractalGraph {
    level: u32,
    vertices: Vec<Vertex>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    boundary: [usize; 3],
    index: HashMap<Vertex, usize>,
}

impl PreFractalGraph {
    /// Builds `V^n` under the default level cap.
    pub fn build(level: u32) -> Result<Self, GraphError> {
        Self::build_with_max(level, DEFAULT_MAX_LEVEL)
    }

    pub fn build_with_max(level: u32, max_level: u32) -> Result<Self, GraphError> {
        if level > max_level {
            return Err(GraphError::LevelTooLarge { level, max: max_level });
        }

        let mut index: HashMap<Vertex, usize> = HashMap::new();
        let mut vertices: Vec<Vertex> = Vec::new();
        let mut raw_edges: Vec<(usize, usize)> = Vec::new();
        let mut intern = |v: Vertex, vertices: &mut Vec<Vertex>| -> usize {
            *index.entry(v).or_insert_with(|| {
                vertices.push(v);
                vertices.len() - 1
            })
        };

        // Depth-first over all words; the corner triple carried down is the
        // image of the simplex under the word prefix.
        let root = [Vertex::corner(1), Vertex::corner(2), Vertex::corner(3)];
        let mut stack: Vec<([Vertex; 3], u32)> = vec![(root, 0)];
        while let Some((cell, depth)) = stack.pop() {
            if depth == level {
                let ids = [
                    intern(cell[0], &mut vertices),
                    intern(cell[1], &mut vertices),
                    intern(cell[2], &mut vertices),
                ];
                raw_edges.push((ids[0], ids[1]));
                raw_edges.push((ids[0], ids[2]));
                raw_edges.push((ids[1], ids[2]));
                continue;
            }
            for i in 0..3 {
                let mut child = cell.clone();
                for j in 0..3 {
                    if j != i {
                        child[j] = cell[i].midpoint(&cell[j]);
                    }
                }
                stack.push((child, depth + 1));
            }
        }

        // Deterministic ordering: lexicographic on the numerators rescaled to
        // the common denominator 2^level.
        let mut order: Vec<usize> = (0..vertices.len()).collect();
        order.sort_by_key(|&i| vertices[i].scaled_to(level));
        let mut rank = vec![0usize; vertices.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }
        let vertices: Vec<Vertex> = order.iter().map(|&i| vertices[i]).collect();
        let index: HashMap<Vertex, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut edges: Vec<(usize, usize)> = raw_edges
            .into_iter()
            .map(|(u, v)| {
                let (u, v) = (rank[u], rank[v]);
                (u.min(v), u.max(v))
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut neighbors = vec![Vec::new(); vertices.len()];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let boundary = [
            index[&Vertex::corner(1)],
            index[&Vertex::corner(2)],
            index[&Vertex::corner(3)],
        ];

        Ok(PreFractalGraph { level, vertices, neighbors, edges, boundary, index })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Mesh size `delta_n = 2^-n`; exact in binary floating point.
    pub fn mesh_size(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        self.vertices[idx]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.neighbors[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.neighbors[idx].len()
    }

    /// Indices of the corners `q1, q2, q3` of `V^0`.
    pub fn boundary(&self) -> [usize; 3] {
        self.boundary
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.boundary.contains(&idx)
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn require_index(&self, v: &Vertex) -> Result<usize, GraphError> {
        self.index_of(v).ok_or(GraphError::UnknownVertex(*v))
    }

    /// The vertices of `V^k` inside this graph, in index order. A canonical
    /// address with denominator exponent at most `k` identifies a `V^k` point.
    pub fn restrict_vertices(&self, k: u32) -> Result<Vec<usize>, GraphError> {
        if k > self.level {
            return Err(GraphError::RestrictionAboveLevel { k, level: self.level });
        }
        Ok((0..self.vertices.len())
            .filter(|&i| self.vertices[i].denom_exp() <= k)
            .collect())
    }

    /// Hop count between `x` and `y` over the full graph, or `None` when the
    /// vertices are disconnected (never happens for a whole `V^n`).
    pub fn bfs_hops(&self, from: usize, to: usize) -> Option<u64> {
        if from == to {
            return Some(0);
        }
        let mut dist: Vec<Option<u64>> = vec![None; self.vertices.len()];
        dist[from] = Some(0);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    if v == to {
                        return dist[v];
                    }
                    queue.push_back(v);
                }
            }
        }
        dist[to]
    }
}

/// Serialization schema for graph export.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphExport {
    pub level: u32,
    pub vertices: Vec<[u64; 4]>,
    pub edges: Vec<[usize; 2]>,
    pub boundary: [usize; 3],
}

impl From<&PreFractalGraph> for GraphExport {
    fn from(g: &PreFractalGraph) -> Self {
        GraphExport {
            level: g.level,
            vertices: g
                .vertices
                .iter()
                .map(|v| {
                    let (a, b, c) = v.numerators();
                    [a, b, c, v.denom_exp() as u64]
                })
                .collect(),
            edges: g.edges.iter().map(|&(u, v)| [u, v]).collect(),
            boundary: g.boundary,
        }
    }
}

/// `|V^n| = (3^{n+1} + 3) / 2`.
pub fn expected_vertex_count(level: u32) -> usize {
    (3usize.pow(level + 1) + 3) / 2
}

/// `|E^n| = 3^{n+1}`.
pub fn expected_edge_count(level: u32) -> usize {
    3usize.pow(level + 1)
}
