//! Subdomains `K` of `V^n \ V^0`, their derived boundary and closure, the
//! restricted vertex distance `d_{n,K}` and geodesic paths.
//!
//! A path witnessing `d_{n,K}(x,y)` keeps all its interior vertices inside
//! `K`; the endpoints may lie on the boundary. A single-edge path between two
//! boundary vertices carries no interior vertex and is *not* admissible: the
//! distance between boundary points is always measured through `K`. This is
//! the reading under which the Lipschitz functional equals the maximal local
//! slope and under which the constructive geodesic solver always makes
//! progress; it also reproduces the closed-form level-1 stage values exactly.
//!
//! All distances are stored as exact hop counts; multiplying by the mesh size
//! `2^-n` happens only at presentation, which keeps every length exact in
//! binary floating point.

use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::PreFractalGraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("interior vertex {index} lies on the outer boundary V^0")]
    InteriorContainsCorner { index: usize },
    #[error("vertex index {index} out of range for the graph")]
    IndexOutOfRange { index: usize },
    #[error("vertex index {index} not in the closure of the subdomain")]
    NotInClosure { index: usize },
    #[error("no admissible path from {from} to {to}")]
    Unreachable { from: usize, to: usize },
    #[error("geodesic enumeration exceeded cap {cap}")]
    GeodesicCapExceeded { cap: usize },
    #[error("subdomain is not connected")]
    Disconnected,
}

/// A restricted distance: an exact hop count to be scaled by `2^-n`, or the
/// distinguished unreachable value. There is deliberately no arithmetic on
/// this type; extracting hops from an unreachable value is a type error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceValue {
    Finite { hops: u64 },
    Unreachable,
}

impl DistanceValue {
    pub fn hops(&self) -> Option<u64> {
        match self {
            DistanceValue::Finite { hops } => Some(*hops),
            DistanceValue::Unreachable => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DistanceValue::Finite { .. })
    }

    /// Length `hops * 2^-level`; exact for the hop counts that occur here.
    pub fn length(&self, level: u32) -> Option<f64> {
        self.hops().map(|h| h as f64 * 0.5f64.powi(level as i32))
    }
}

/// Geodesic tie-breaking policy. The default resolves ties by picking the
/// lowest-index admissible parent during the breadth-first backwalk, which
/// makes the returned path unique and reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndexParent,
}

/// A path `x_0, ..., x_N` with consecutive vertices adjacent; when it
/// witnesses a restricted distance its interior vertices lie in `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicPath {
    vertices: Vec<usize>,
    level: u32,
}

impl GeodesicPath {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn hops(&self) -> u64 {
        (self.vertices.len() - 1) as u64
    }

    pub fn length(&self) -> f64 {
        self.hops() as f64 * 0.5f64.powi(self.level as i32)
    }
}

/// A set `K` of interior vertices together with its derived boundary
/// `{y not in K : y ~ x for some x in K}` and closure.
#[derive(Debug, Clone)]
pub struct Subdomain<'g> {
    graph: &'g PreFractalGraph,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    in_interior: Vec<bool>,
    in_closure: Vec<bool>,
}

impl<'g> Subdomain<'g> {
    /// Builds a subdomain from interior vertex indices, deriving boundary and
    /// closure. Rejects indices on `V^0` or out of range.
    pub fn new(graph: &'g PreFractalGraph, interior: Vec<usize>) -> Result<Self, DomainError> {
        let n = graph.vertex_count();
        let mut interior = interior;
        interior.sort_unstable();
        interior.dedup();
        if let Some(&index) = interior.iter().find(|&&i| i >= n) {
            return Err(DomainError::IndexOutOfRange { index });
        }
        if let Some(&index) = interior.iter().find(|&&i| graph.is_boundary(i)) {
            return Err(DomainError::InteriorContainsCorner { index });
        }

        let mut in_interior = vec![false; n];
        for &i in &interior {
            in_interior[i] = true;
        }
        let mut in_closure = in_interior.clone();
        let mut boundary = Vec::new();
        for &i in &interior {
            for &j in graph.neighbors(i) {
                if !in_interior[j] && !in_closure[j] {
                    in_closure[j] = true;
                    boundary.push(j);
                }
            }
        }
        boundary.sort_unstable();

        Ok(Subdomain { graph, interior, boundary, in_interior, in_closure })
    }

    /// The full interior `V^n \ V^0`, whose boundary is `V^0`.
    pub fn full(graph: &'g PreFractalGraph) -> Self {
        let interior = (0..graph.vertex_count()).filter(|&i| !graph.is_boundary(i)).collect();
        Self::new(graph, interior).expect("full interior is always valid")
    }

    pub fn graph(&self) -> &'g PreFractalGraph {
        self.graph
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Closure `K u dK` in ascending index order.
    pub fn closure(&self) -> Vec<usize> {
        let mut all = Vec::with_capacity(self.interior.len() + self.boundary.len());
        all.extend_from_slice(&self.interior);
        all.extend_from_slice(&self.boundary);
        all.sort_unstable();
        all
    }

    pub fn contains_interior(&self, idx: usize) -> bool {
        self.in_interior[idx]
    }

    pub fn contains_closure(&self, idx: usize) -> bool {
        self.in_closure[idx]
    }

    fn require_closure(&self, idx: usize) -> Result<(), DomainError> {
        if idx >= self.in_closure.len() {
            return Err(DomainError::IndexOutOfRange { index: idx });
        }
        if !self.in_closure[idx] {
            return Err(DomainError::NotInClosure { index: idx });
        }
        Ok(())
    }

    /// Hop counts of `d_{n,K}(from, .)` for every vertex, `None` where no
    /// admissible path exists. Only interior vertices relay; a boundary
    /// source may not reach another boundary vertex in a single hop.
    pub fn restricted_sssp(&self, from: usize) -> Vec<Option<u64>> {
        let n = self.graph.vertex_count();
        let mut dist: Vec<Option<u64>> = vec![None; n];
        dist[from] = Some(0);
        let source_interior = self.in_interior[from];
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            let relaying_from_exterior_source = u == from && !source_interior;
            for &w in self.graph.neighbors(u) {
                if dist[w].is_some() {
                    continue;
                }
                if self.in_interior[w] {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                } else if !relaying_from_exterior_source {
                    // Terminal arrival on a non-interior vertex.
                    dist[w] = Some(d + 1);
                }
            }
        }
        dist
    }

    /// The restricted distance `d_{n,K}(x, y)`.
    pub fn distance(&self, x: usize, y: usize) -> Result<DistanceValue, DomainError> {
        self.require_closure(x)?;
        self.require_closure(y)?;
        if x == y {
            return Ok(DistanceValue::Finite { hops: 0 });
        }
        Ok(match self.restricted_sssp(x)[y] {
            Some(hops) => DistanceValue::Finite { hops },
            None => DistanceValue::Unreachable,
        })
    }

    /// True when `d_{n,K}` is finite between all closure pairs; vacuously true
    /// for the empty subdomain. Equivalent to connectivity of the subgraph
    /// induced on the interior.
    pub fn is_connected(&self) -> bool {
        if self.interior.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.graph.vertex_count()];
        let start = self.interior[0];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut count = 1usize;
        while let Some(u) = queue.pop_front() {
            for &w in self.graph.neighbors(u) {
                if self.in_interior[w] && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.interior.len()
    }

    pub fn require_connected(&self) -> Result<(), DomainError> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(DomainError::Disconnected)
        }
    }

    /// Maximal connected pieces of the interior, each as its own subdomain,
    /// ordered by smallest contained vertex index.
    pub fn components(&self) -> Vec<Subdomain<'g>> {
        let mut seen = vec![false; self.graph.vertex_count()];
        let mut parts = Vec::new();
        for &start in &self.interior {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in self.graph.neighbors(u) {
                    if self.in_interior[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            parts.push(Subdomain::new(self.graph, comp).expect("component of a valid subdomain"));
        }
        parts
    }

    /// A minimal path witnessing `d_{n,K}(x, y)`, deterministic under the
    /// tie-break policy.
    pub fn shortest_path(
        &self,
        x: usize,
        y: usize,
        tie_break: TieBreak,
    ) -> Result<GeodesicPath, DomainError> {
        self.require_closure(x)?;
        self.require_closure(y)?;
        let level = self.graph.level();
        if x == y {
            return Ok(GeodesicPath { vertices: vec![x], level });
        }
        let dist = self.restricted_sssp(x);
        if dist[y].is_none() {
            return Err(DomainError::Unreachable { from: x, to: y });
        }
        let TieBreak::LowestIndexParent = tie_break;
        let mut path = vec![y];
        let mut current = y;
        while current != x {
            let d = dist[current].unwrap();
            let parent = self
                .graph
                .neighbors(current)
                .iter()
                .copied()
                .find(|&u| {
                    dist[u] == Some(d - 1)
                        && (self.in_interior[u] || u == x)
                        && !(u == x && !self.in_interior[x] && !self.in_interior[current])
                })
                .expect("breadth-first distances always admit a parent");
            path.push(parent);
            current = parent;
        }
        path.reverse();
        Ok(GeodesicPath { vertices: path, level })
    }

    /// All minimal admissible paths from `x` to `y` in lexicographic vertex
    /// order, failing distinctly when more than `cap` exist.
    pub fn all_geodesics(
        &self,
        x: usize,
        y: usize,
        cap: usize,
    ) -> Result<Vec<GeodesicPath>, DomainError> {
        self.require_closure(x)?;
        self.require_closure(y)?;
        let level = self.graph.level();
        if x == y {
            return Ok(vec![GeodesicPath { vertices: vec![x], level }]);
        }
        let dist_to_y = self.restricted_sssp(y);
        if dist_to_y[x].is_none() {
            return Err(DomainError::Unreachable { from: x, to: y });
        }

        let mut paths = Vec::new();
        let mut stack = vec![x];
        self.enumerate_geodesics(x, y, &dist_to_y, &mut stack, &mut paths, cap)?;
        Ok(paths)
    }

    fn enumerate_geodesics(
        &self,
        x: usize,
        y: usize,
        dist_to_y: &[Option<u64>],
        stack: &mut Vec<usize>,
        paths: &mut Vec<GeodesicPath>,
        cap: usize,
    ) -> Result<(), DomainError> {
        let current = *stack.last().unwrap();
        if current == y {
            if paths.len() == cap {
                return Err(DomainError::GeodesicCapExceeded { cap });
            }
            paths.push(GeodesicPath { vertices: stack.clone(), level: self.graph.level() });
            return Ok(());
        }
        let remaining = dist_to_y[current].unwrap();
        for &v in self.graph.neighbors(current) {
            let step_ok = (self.in_interior[v] || v == y)
                && dist_to_y[v] == Some(remaining - 1)
                && !(current == x && !self.in_interior[x] && v == y && !self.in_interior[y]);
            if step_ok {
                stack.push(v);
                self.enumerate_geodesics(x, y, dist_to_y, stack, paths, cap)?;
                stack.pop();
            }
        }
        Ok(())
    }
}

/// The unrestricted vertex distance `d_n(x, y)` on the whole graph.
pub fn vertex_distance(graph: &PreFractalGraph, x: usize, y: usize) -> DistanceValue {
    match graph.bfs_hops(x, y) {
        Some(hops) => DistanceValue::Finite { hops },
        None => DistanceValue::Unreachable,
    }
}
