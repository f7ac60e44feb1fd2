//! Exact vertex addresses for the gasket pre-fractals.
//!
//! Every vertex of `V^n` is a dyadic barycentric combination of the three
//! corners of the initial simplex: `(a*q1 + b*q2 + c*q3) / 2^k` with
//! nonnegative integers `a + b + c = 2^k`. Reducing by the largest common
//! power of two gives a canonical form, so geometrically equal points always
//! compare equal. All identity and deduplication logic works on these
//! integers; floating point enters only when exporting coordinates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VertexError {
    #[error("barycentric numerators {a}+{b}+{c} do not sum to 2^{denom_exp}")]
    BadSum { a: u64, b: u64, c: u64, denom_exp: u32 },
    #[error("word symbol {0} outside {{1,2,3}}")]
    BadSymbol(u8),
    #[error("malformed vertex address {0:?}, expected a,b,c,k")]
    BadAddress(String),
}

/// A word over `{1,2,3}` indexing a composed contraction map and the
/// triangular cell it addresses; the word length is the cell's level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self, VertexError> {
        if let Some(&s) = symbols.iter().find(|&&s| !(1..=3).contains(&s)) {
            return Err(VertexError::BadSymbol(s));
        }
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    /// All words of the given length, in lexicographic order.
    pub fn enumerate(len: usize) -> impl Iterator<Item = Word> {
        (0..3usize.pow(len as u32)).map(move |mut idx| {
            let mut symbols = vec![1u8; len];
            for slot in symbols.iter_mut().rev() {
                *slot = (idx % 3) as u8 + 1;
                idx /= 3;
            }
            Word(symbols)
        })
    }

    /// The three corners of the cell addressed by this word, i.e. the images
    /// of the simplex corners under the composed map of the word.
    pub fn cell_corners(&self) -> [Vertex; 3] {
        let mut corners = [Vertex::corner(1), Vertex::corner(2), Vertex::corner(3)];
        // psi_w = psi_{w1} o ... o psi_{wn}: apply letters right to left.
        for &s in self.0.iter().rev() {
            corners = apply_map(s, &corners);
        }
        corners
    }
}

/// One contraction step: the image cell keeps corner `i` and takes the
/// midpoints of the two sides meeting at it.
fn apply_map(i: u8, corners: &[Vertex; 3]) -> [Vertex; 3] {
    let fixed = (i - 1) as usize;
    let mut out = corners.clone();
    for j in 0..3 {
        if j != fixed {
            out[j] = corners[fixed].midpoint(&corners[j]);
        }
    }
    out
}

/// Canonical dyadic barycentric address of a gasket vertex.
///
/// The point is `(a*q1 + b*q2 + c*q3) / 2^denom_exp`. The representation is
/// reduced: unless `denom_exp == 0`, not all of `a, b, c` are even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    a: u64,
    b: u64,
    c: u64,
    denom_exp: u32,
}

impl Vertex {
    pub fn new(a: u64, b: u64, c: u64, denom_exp: u32) -> Result<Self, VertexError> {
        if a.checked_add(b).and_then(|s| s.checked_add(c)) != Some(1u64 << denom_exp) {
            return Err(VertexError::BadSum { a, b, c, denom_exp });
        }
        let mut v = Vertex { a, b, c, denom_exp };
        v.reduce();
        Ok(v)
    }

    fn reduce(&mut self) {
        while self.denom_exp > 0 && self.a % 2 == 0 && self.b % 2 == 0 && self.c % 2 == 0 {
            self.a /= 2;
            self.b /= 2;
            self.c /= 2;
            self.denom_exp -= 1;
        }
    }

    /// Corner `q_i` of the initial simplex, `i` in `1..=3`.
    pub fn corner(i: u8) -> Self {
        match i {
            1 => Vertex { a: 1, b: 0, c: 0, denom_exp: 0 },
            2 => Vertex { a: 0, b: 1, c: 0, denom_exp: 0 },
            3 => Vertex { a: 0, b: 0, c: 1, denom_exp: 0 },
            _ => panic!("corner index {i} outside 1..=3"),
        }
    }

    pub fn numerators(&self) -> (u64, u64, u64) {
        (self.a, self.b, self.c)
    }

    pub fn denom_exp(&self) -> u32 {
        self.denom_exp
    }

    pub fn is_corner(&self) -> bool {
        self.denom_exp == 0
    }

    /// Midpoint of two vertices, reduced to canonical form.
    pub fn midpoint(&self, other: &Vertex) -> Vertex {
        let k = self.denom_exp.max(other.denom_exp);
        let (sa, sb, sc) = self.scaled_to(k);
        let (oa, ob, oc) = other.scaled_to(k);
        let mut v = Vertex { a: sa + oa, b: sb + ob, c: sc + oc, denom_exp: k + 1 };
        v.reduce();
        v
    }

    /// Numerators rescaled to denominator `2^k`; requires `k >= denom_exp`.
    pub fn scaled_to(&self, k: u32) -> (u64, u64, u64) {
        let shift = k - self.denom_exp;
        (self.a << shift, self.b << shift, self.c << shift)
    }

    /// Euclidean coordinates with `q1 = (0,0)`, `q2 = (1,0)`,
    /// `q3 = (1/2, sqrt(3)/2)`.
    pub fn euclid(&self) -> (f64, f64) {
        let den = (1u64 << self.denom_exp) as f64;
        let x = (self.b as f64 + 0.5 * self.c as f64) / den;
        let y = (3.0f64.sqrt() / 2.0) * (self.c as f64) / den;
        (x, y)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.denom_exp)
    }
}

impl FromStr for Vertex {
    type Err = VertexError;

    /// Parses the `a,b,c,k` address form used by the CLI and file formats.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VertexError::BadAddress(s.to_string());
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let a = parts[0].parse().map_err(|_| bad())?;
        let b = parts[1].parse().map_err(|_| bad())?;
        let c = parts[2].parse().map_err(|_| bad())?;
        let k = parts[3].parse().map_err(|_| bad())?;
        Vertex::new(a, b, c, k)
    }
}
