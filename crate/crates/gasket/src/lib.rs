//! Sierpinski pre-fractal graphs and the graph infinity Laplacian.
//!
//! The library builds the vertex sets `V^n` of the Sierpinski gasket as
//! graphs with exact dyadic vertex identities, computes restricted geodesic
//! distances on subdomains, evaluates discrete Lipschitz functionals and
//! McShane-Whitney extensions, solves the graph infinity Laplace equation by
//! two independent algorithms (midrange fixed-point iteration and the
//! constructive Lazarus geodesic method), minimizes discrete p-energies, and
//! runs convergence experiments across refinement levels.

pub mod cli;
pub mod domain;
pub mod field;
pub mod graph;
pub mod infinity;
pub mod io;
pub mod lab;
pub mod lipschitz;
pub mod pharm;
pub mod sample;
pub mod vertex;

pub use domain::{DistanceValue, GeodesicPath, Subdomain, TieBreak};
pub use field::VertexField;
pub use graph::PreFractalGraph;
pub use infinity::{InfinityProblem, SolveMethod, SolveReport};
pub use vertex::{Vertex, Word};
