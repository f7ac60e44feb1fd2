//! File formats: graph export, vertex-field JSON/CSV, subdomain literals.
//!
//! Data files carry floats with 17 significant digits so binary64 values
//! round-trip exactly, and every writer emits entries in vertex index order,
//! which makes repeated runs byte-identical.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{FieldError, VertexField};
use crate::graph::{GraphError, GraphExport, PreFractalGraph};
use crate::vertex::{Vertex, VertexError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Vertex(#[from] VertexError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("malformed input: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// 17 significant digits; round-trip safe for binary64.
pub fn format_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn graph_to_json(graph: &PreFractalGraph) -> String {
    let export = GraphExport::from(graph);
    let mut s = serde_json::to_string_pretty(&export).expect("plain integers serialize");
    s.push('\n');
    s
}

/// JSON map from the `[a,b,c,k]` address string to the value, in vertex
/// index order, defined entries only.
pub fn field_to_json(graph: &PreFractalGraph, field: &VertexField) -> String {
    let mut s = String::from("{\n");
    let mut first = true;
    for (i, v) in graph.vertices().iter().enumerate() {
        if let Some(value) = field.get_opt(i) {
            if !first {
                s.push_str(",\n");
            }
            first = false;
            let (a, b, c) = v.numerators();
            s.push_str(&format!(
                "  \"[{},{},{},{}]\": {}",
                a,
                b,
                c,
                v.denom_exp(),
                format_f64(value)
            ));
        }
    }
    s.push_str("\n}\n");
    s
}

pub fn field_from_json(graph: &PreFractalGraph, text: &str) -> Result<VertexField, IoError> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
    let mut field = VertexField::undefined(graph);
    for (key, value) in map {
        let inner = key
            .strip_prefix('[')
            .and_then(|k| k.strip_suffix(']'))
            .ok_or_else(|| IoError::BadFormat(format!("field key {key:?}")))?;
        let vertex = Vertex::from_str(inner)?;
        let idx = graph.require_index(&vertex)?;
        field.set(idx, value)?;
    }
    Ok(field)
}

/// CSV with header `a,b,c,k,value`, rows in vertex index order.
pub fn field_to_csv(graph: &PreFractalGraph, field: &VertexField) -> String {
    let mut s = String::from("a,b,c,k,value\n");
    for (i, v) in graph.vertices().iter().enumerate() {
        if let Some(value) = field.get_opt(i) {
            let (a, b, c) = v.numerators();
            s.push_str(&format!("{},{},{},{},{}\n", a, b, c, v.denom_exp(), format_f64(value)));
        }
    }
    s
}

pub fn field_from_csv(graph: &PreFractalGraph, text: &str) -> Result<VertexField, IoError> {
    let mut field = VertexField::undefined(graph);
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('a')) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(IoError::BadFormat(format!("csv line {}: {line:?}", lineno + 1)));
        }
        let vertex = Vertex::from_str(&cols[..4].join(","))?;
        let value: f64 = cols[4]
            .trim()
            .parse()
            .map_err(|_| IoError::BadFormat(format!("csv value {:?}", cols[4])))?;
        let idx = graph.require_index(&vertex)?;
        field.set(idx, value)?;
    }
    Ok(field)
}

/// Subdomain literal: a JSON array of `[a,b,c,k]` addresses naming the
/// interior vertices. Returns graph indices.
pub fn subdomain_from_json(graph: &PreFractalGraph, text: &str) -> Result<Vec<usize>, IoError> {
    let raw: Vec<[u64; 4]> = serde_json::from_str(text)?;
    raw.into_iter()
        .map(|[a, b, c, k]| {
            let vertex = Vertex::new(a, b, c, k as u32)?;
            Ok(graph.require_index(&vertex)?)
        })
        .collect()
}

pub fn subdomain_to_json(graph: &PreFractalGraph, interior: &[usize]) -> String {
    let rows: Vec<String> = interior
        .iter()
        .map(|&i| {
            let v = graph.vertex(i);
            let (a, b, c) = v.numerators();
            format!("  [{},{},{},{}]", a, b, c, v.denom_exp())
        })
        .collect();
    format!("[\n{}\n]\n", rows.join(",\n"))
}
