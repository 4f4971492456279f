//! Ancestry chains, descendant sets and sibling sets on a filling graph
//! with an attached tree.

use serde::{Deserialize, Serialize};

use crate::graph::{FillingGraph, Vertex};
use crate::tol;

/// Per-vertex sibling and child sets for the whole graph.
#[derive(Debug, Clone)]
pub struct Combinatorics {
    /// Same-level vertices within horizontal distance two, including the vertex.
    siblings: Vec<Vec<usize>>,
    /// The vertex and its horizontal neighbors.
    close_siblings: Vec<Vec<usize>>,
    /// Next-level vertices whose balls sit inside the 6-fold ball.
    extended_children: Vec<Vec<usize>>,
}

impl Combinatorics {
    pub fn new(graph: &FillingGraph) -> Self {
        let n = graph.len();
        let mut siblings = Vec::with_capacity(n);
        let mut close_siblings = Vec::with_capacity(n);
        let mut extended_children = Vec::with_capacity(n);
        for v in 0..n {
            let mut si: Vec<usize> = graph.horizontal(v).to_vec();
            si.push(v);
            si.sort_unstable();
            let mut s = si.clone();
            for &u in graph.horizontal(v) {
                s.extend_from_slice(graph.horizontal(u));
            }
            s.sort_unstable();
            s.dedup();
            siblings.push(s);
            close_siblings.push(si);

            let k = graph.level_of(v);
            let t = if k < graph.depth() {
                let six = 6.0 * graph.radius(k);
                let rw = graph.radius(k + 1);
                graph.level(k + 1).filter(|&w| tol::le(graph.center_dist(v, w) + rw, six)).collect()
            } else {
                Vec::new()
            };
            extended_children.push(t);
        }
        Self { siblings, close_siblings, extended_children }
    }

    /// `S(v)`.
    pub fn siblings(&self, v: usize) -> &[usize] {
        &self.siblings[v]
    }

    /// `SI(v)`.
    pub fn close_siblings(&self, v: usize) -> &[usize] {
        &self.close_siblings[v]
    }

    /// `T(v)`.
    pub fn extended_children(&self, v: usize) -> &[usize] {
        &self.extended_children[v]
    }

    /// Largest `|T(v)|` over the graph.
    pub fn max_extended_children(&self) -> usize {
        self.extended_children.iter().map(|t| t.len()).max().unwrap_or(0)
    }

    /// Snapshot of every set attached to `v`.
    pub fn of(&self, graph: &FillingGraph, v: usize) -> VertexCombinatorics {
        let depth_left = graph.depth() - graph.level_of(v);
        VertexCombinatorics {
            vertex: graph.vertex(v),
            ancestry: ancestry(graph, v).into_iter().map(|a| graph.vertex(a)).collect(),
            descendants: (0..=depth_left)
                .map(|j| tree_descendants(graph, v, j).into_iter().map(|a| graph.vertex(a)).collect())
                .collect(),
            graph_descendants: (0..=depth_left)
                .map(|j| graph_descendants(graph, v, j).into_iter().map(|a| graph.vertex(a)).collect())
                .collect(),
            siblings: self.siblings[v].iter().map(|&a| graph.vertex(a)).collect(),
            close_siblings: self.close_siblings[v].iter().map(|&a| graph.vertex(a)).collect(),
            extended_children: self.extended_children[v].iter().map(|&a| graph.vertex(a)).collect(),
        }
    }
}

/// All sets attached to one vertex, in vertex coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCombinatorics {
    pub vertex: Vertex,
    /// `g(v)_0, ..., g(v)_{n_v}` (root first, `v` last).
    pub ancestry: Vec<Vertex>,
    /// `D_j(v)` for `j = 0..`.
    pub descendants: Vec<Vec<Vertex>>,
    /// `DG_{n_v+j}(v)` for `j = 0..`.
    pub graph_descendants: Vec<Vec<Vertex>>,
    pub siblings: Vec<Vertex>,
    pub close_siblings: Vec<Vertex>,
    pub extended_children: Vec<Vertex>,
}

/// Tree ancestry chain of `v`, root first and `v` last.
pub fn ancestry(graph: &FillingGraph, v: usize) -> Vec<usize> {
    let mut chain = vec![v];
    let mut cur = v;
    while let Some(p) = graph.tree_parent(cur) {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    chain
}

/// Ancestor of `v` at generation `i` (`i <= level(v)`).
pub fn ancestor(graph: &FillingGraph, v: usize, i: usize) -> usize {
    let mut cur = v;
    for _ in i..graph.level_of(v) {
        cur = graph.tree_parent(cur).expect("tree attached");
    }
    cur
}

/// Tree descendants of `v` exactly `j` levels down, sorted.
pub fn tree_descendants(graph: &FillingGraph, v: usize, j: usize) -> Vec<usize> {
    let mut cur = vec![v];
    for _ in 0..j {
        let mut next: Vec<usize> = cur.iter().flat_map(|&u| graph.tree_children(u).iter().copied()).collect();
        next.sort_unstable();
        cur = next;
    }
    cur
}

/// Vertices `j` levels below `v` reachable by descending graph edges, sorted.
pub fn graph_descendants(graph: &FillingGraph, v: usize, j: usize) -> Vec<usize> {
    let mut cur = vec![v];
    for _ in 0..j {
        let mut next: Vec<usize> = cur.iter().flat_map(|&u| graph.down(u).iter().copied()).collect();
        next.sort_unstable();
        next.dedup();
        cur = next;
    }
    cur
}

/// Vertical non-tree edges `v ~ w` (with `w` one level down) whose tree parent
/// of `w` is not a horizontal neighbor of `v`.
pub fn non_tree_edge_violations(graph: &FillingGraph) -> Vec<(Vertex, Vertex)> {
    let mut out = Vec::new();
    for w in 0..graph.len() {
        let Some(p) = graph.tree_parent(w) else { continue };
        for &v in graph.up(w) {
            if v != p && !graph.is_horizontal_edge(v, p) {
                out.push((graph.vertex(v), graph.vertex(w)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::nets::build_nets;
    use crate::params::Mode;
    use crate::space::generate_carpet;
    use std::sync::Arc;

    #[test]
    fn root_sets() {
        let s = generate_carpet(1).unwrap();
        let nets = build_nets(&s, 3.0, 2, 2.5, Mode::Practical).unwrap();
        let g = build_graph(Arc::new(s), &nets, 7.0, 2.5, Mode::Practical).unwrap().attach_tree();
        let c = Combinatorics::new(&g);
        assert_eq!(c.siblings(0), &[0]);
        assert_eq!(c.close_siblings(0), &[0]);
        assert_eq!(ancestry(&g, 0), vec![0]);
        let vc = c.of(&g, 0);
        assert_eq!(vc.descendants[0], vec![g.vertex(0)]);
        for w in g.level(1) {
            assert_eq!(ancestry(&g, w), vec![0, w]);
        }
    }
}
