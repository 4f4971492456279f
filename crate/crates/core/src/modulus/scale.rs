//! Modulus at a scale: the largest family modulus over all base vertices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::PathFamily;
use super::solve::{solve_modulus, SolveStatus, SolverOptions};
use crate::error::Result;
use crate::graph::{FillingGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexModulus {
    pub vertex: Vertex,
    pub value: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleModulus {
    pub k: usize,
    pub p: f64,
    /// Largest family modulus; raw values depend on the filling.
    pub value: f64,
    pub argmax: Option<Vertex>,
    pub per_vertex: Vec<VertexModulus>,
}

/// Base vertices whose family at offset `k` fits in the graph.
pub fn base_vertices(graph: &FillingGraph, k: usize) -> Vec<usize> {
    if k == 0 || k > graph.depth() {
        return Vec::new();
    }
    (0..graph.level(graph.depth() - k).end).collect()
}

pub fn mod_p_at_scale(graph: &FillingGraph, p: f64, k: usize, opts: &SolverOptions) -> Result<ScaleModulus> {
    let per_vertex = base_vertices(graph, k)
        .into_par_iter()
        .map(|v| {
            let family = PathFamily::for_vertex(graph, v, k)?;
            let r = solve_modulus(&family, p, opts)?;
            Ok(VertexModulus { vertex: graph.vertex(v), value: r.value, iterations: r.iterations, status: r.status })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut value = 0.0;
    let mut argmax = None;
    for vm in &per_vertex {
        if vm.value > value {
            value = vm.value;
            argmax = Some(vm.vertex);
        }
    }
    Ok(ScaleModulus { k, p, value, argmax, per_vertex })
}

/// Smallest `k` in `ks` whose modulus is below `eps0`.
pub fn find_n0(
    graph: &FillingGraph,
    p: f64,
    eps0: f64,
    ks: std::ops::RangeInclusive<usize>,
    opts: &SolverOptions,
) -> Result<Option<usize>> {
    if !(eps0 > 0.0) {
        return Err(crate::Error::Parameter(format!("eps0={eps0} must be positive")));
    }
    for k in ks {
        if k == 0 || k > graph.depth() {
            continue;
        }
        if mod_p_at_scale(graph, p, k, opts)?.value < eps0 {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
