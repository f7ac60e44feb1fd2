//! Real-valued functions on vertex sets.
//!
//! A `VertexField` stores one optional value per graph vertex; the set of
//! defined entries is the declared support (all of `V^n`, a closure, or a
//! boundary). Reading an undefined entry is an error, never a silent NaN.

use thiserror::Error;

use crate::graph::PreFractalGraph;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("field undefined at vertex index {0}")]
    Undefined(usize),
    #[error("value at vertex index {0} is not finite")]
    NotFinite(usize),
    #[error("field has {found} slots but the graph has {expected} vertices")]
    SizeMismatch { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    values: Vec<Option<f64>>,
}

impl VertexField {
    /// An everywhere-undefined field sized for the graph.
    pub fn undefined(graph: &PreFractalGraph) -> Self {
        VertexField { values: vec![None; graph.vertex_count()] }
    }

    /// A field defined on the given support with a constant value.
    pub fn constant_on(graph: &PreFractalGraph, support: &[usize], value: f64) -> Self {
        let mut f = Self::undefined(graph);
        for &i in support {
            f.values[i] = Some(value);
        }
        f
    }

    /// A field from explicit `(index, value)` pairs.
    pub fn from_pairs(
        graph: &PreFractalGraph,
        pairs: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, FieldError> {
        let mut f = Self::undefined(graph);
        for (i, v) in pairs {
            f.set(i, v)?;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: usize) -> Result<f64, FieldError> {
        self.values.get(idx).copied().flatten().ok_or(FieldError::Undefined(idx))
    }

    pub fn get_opt(&self, idx: usize) -> Option<f64> {
        self.values.get(idx).copied().flatten()
    }

    pub fn is_defined(&self, idx: usize) -> bool {
        self.values.get(idx).map_or(false, Option::is_some)
    }

    pub fn set(&mut self, idx: usize, value: f64) -> Result<(), FieldError> {
        if !value.is_finite() {
            return Err(FieldError::NotFinite(idx));
        }
        self.values[idx] = Some(value);
        Ok(())
    }

    pub fn unset(&mut self, idx: usize) {
        self.values[idx] = None;
    }

    /// Indices where the field is defined, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].is_some()).collect()
    }

    pub fn require_defined_on(&self, support: &[usize]) -> Result<(), FieldError> {
        match support.iter().find(|&&i| !self.is_defined(i)) {
            Some(&i) => Err(FieldError::Undefined(i)),
            None => Ok(()),
        }
    }

    /// Smallest and largest defined value; `None` for an empty support.
    pub fn range(&self) -> Option<(f64, f64)> {
        let mut bounds: Option<(f64, f64)> = None;
        for v in self.values.iter().flatten() {
            bounds = Some(match bounds {
                None => (*v, *v),
                Some((lo, hi)) => (lo.min(*v), hi.max(*v)),
            });
        }
        bounds
    }

    /// Largest absolute difference on the indices where both fields are
    /// defined; requires both defined on `support`.
    pub fn sup_distance_on(
        &self,
        other: &VertexField,
        support: &[usize],
    ) -> Result<f64, FieldError> {
        let mut sup = 0.0f64;
        for &i in support {
            let a = self.get(i)?;
            let b = other.get(i)?;
            sup = sup.max((a - b).abs());
        }
        Ok(sup)
    }
}
