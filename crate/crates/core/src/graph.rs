//! Leveled filling graphs over a net hierarchy and their tree restriction.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::NetHierarchy;
use crate::params::{check_tau, Diagnostics, Mode};
use crate::space::PointCloudSpace;
use crate::tol;

/// A vertex `(x, k)`: point index and graph level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub level: usize,
    pub point: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Horizontal,
    Vertical,
    Tree,
}

impl EdgeKind {
    pub fn tag(self) -> char {
        match self {
            EdgeKind::Horizontal => 'H',
            EdgeKind::Vertical => 'V',
            EdgeKind::Tree => 'T',
        }
    }
}

/// Filling graph with levels `0..=depth`. Graph level `k` uses the net
/// `A_{step*k}` and radius `alpha^(-step*k)`. Vertex indices are ordered by
/// `(level, point)`.
#[derive(Debug, Clone)]
pub struct FillingGraph {
    space: Arc<PointCloudSpace>,
    pub alpha: f64,
    pub step: usize,
    pub tau: f64,
    vertices: Vec<Vertex>,
    level_start: Vec<usize>,
    horizontal: Vec<Vec<usize>>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
    balls: Vec<Vec<usize>>,
    tree_parent: Option<Vec<Option<usize>>>,
    tree_children: Vec<Vec<usize>>,
    /// Largest horizontal degree plus one.
    pub n2: u64,
    pub diagnostics: Diagnostics,
}

/// Step-1 graph over every net level.
pub fn build_graph(
    space: Arc<PointCloudSpace>,
    nets: &NetHierarchy,
    tau: f64,
    k_d: f64,
    mode: Mode,
) -> Result<FillingGraph> {
    resample_graph(space, nets, 1, tau, k_d, mode)
}

/// Graph over the net levels `0, n0, 2 n0, ...` with `alpha^n0` in place of `alpha`.
pub fn resample_graph(
    space: Arc<PointCloudSpace>,
    nets: &NetHierarchy,
    n0: usize,
    tau: f64,
    k_d: f64,
    mode: Mode,
) -> Result<FillingGraph> {
    if n0 == 0 {
        return Err(Error::Parameter("resampling step must be at least 1".into()));
    }
    let depth = nets.depth() / n0;
    if depth < 1 {
        return Err(Error::Depth(format!(
            "net depth {} is too shallow for resampling step {n0}",
            nets.depth()
        )));
    }
    let mut diagnostics = nets.diagnostics.clone();
    check_tau(tau, nets.alpha.powi(n0 as i32), k_d, mode, &mut diagnostics)?;

    let radius = |k: usize| nets.alpha.powi(-((n0 * k) as i32));
    let mut vertices = Vec::new();
    let mut level_start = vec![0];
    for k in 0..=depth {
        for &x in nets.level(n0 * k) {
            vertices.push(Vertex { level: k, point: x });
        }
        level_start.push(vertices.len());
    }
    let nv = vertices.len();
    let mut horizontal = vec![Vec::new(); nv];
    let mut up = vec![Vec::new(); nv];
    let mut down = vec![Vec::new(); nv];
    for k in 0..=depth {
        let r = radius(k);
        let level = level_start[k]..level_start[k + 1];
        for a in level.clone() {
            for b in (a + 1)..level.end {
                let d = space.dist(vertices[a].point, vertices[b].point);
                if tol::lt(d, 2.0 * tau * r) {
                    horizontal[a].push(b);
                    horizontal[b].push(a);
                }
            }
        }
        if k < depth {
            let bound = r + radius(k + 1);
            for a in level.clone() {
                for b in level_start[k + 1]..level_start[k + 2] {
                    let d = space.dist(vertices[a].point, vertices[b].point);
                    if tol::lt(d, bound) {
                        down[a].push(b);
                        up[b].push(a);
                    }
                }
            }
        }
    }
    let balls = vertices
        .iter()
        .map(|v| space.ball(v.point, radius(v.level)))
        .collect();
    let n2 = horizontal.iter().map(|h| h.len() as u64).max().unwrap_or(0) + 1;
    Ok(FillingGraph {
        space,
        alpha: nets.alpha,
        step: n0,
        tau,
        vertices,
        level_start,
        horizontal,
        up,
        down,
        balls,
        tree_parent: None,
        tree_children: Vec::new(),
        n2,
        diagnostics,
    })
}

/// A defect in the tree restriction, anchored at a vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDefect {
    pub vertex: Vertex,
    pub reason: String,
}

impl FillingGraph {
    pub fn space(&self) -> &PointCloudSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<PointCloudSpace> {
        Arc::clone(&self.space)
    }

    /// Deepest graph level.
    pub fn depth(&self) -> usize {
        self.level_start.len() - 2
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn level_of(&self, i: usize) -> usize {
        self.vertices[i].level
    }

    pub fn point_of(&self, i: usize) -> usize {
        self.vertices[i].point
    }

    /// Vertex indices at graph level `k`.
    pub fn level(&self, k: usize) -> Range<usize> {
        self.level_start[k]..self.level_start[k + 1]
    }

    pub fn index_of(&self, point: usize, level: usize) -> Option<usize> {
        if level > self.depth() {
            return None;
        }
        let r = self.level(level);
        self.vertices[r.clone()]
            .binary_search_by(|v| v.point.cmp(&point))
            .ok()
            .map(|i| r.start + i)
    }

    /// Ball radius at graph level `k`.
    pub fn radius(&self, k: usize) -> f64 {
        self.alpha.powi(-((self.step * k) as i32))
    }

    pub fn vertex_radius(&self, i: usize) -> f64 {
        self.radius(self.vertices[i].level)
    }

    /// Distance between the centers of two vertices.
    pub fn center_dist(&self, a: usize, b: usize) -> f64 {
        self.space.dist(self.vertices[a].point, self.vertices[b].point)
    }

    /// Space points inside the open ball of a vertex.
    pub fn ball(&self, i: usize) -> &[usize] {
        &self.balls[i]
    }

    pub fn horizontal(&self, i: usize) -> &[usize] {
        &self.horizontal[i]
    }

    /// Neighbors one level up.
    pub fn up(&self, i: usize) -> &[usize] {
        &self.up[i]
    }

    /// Neighbors one level down.
    pub fn down(&self, i: usize) -> &[usize] {
        &self.down[i]
    }

    pub fn is_horizontal_edge(&self, a: usize, b: usize) -> bool {
        self.horizontal[a].binary_search(&b).is_ok()
    }

    pub fn has_tree(&self) -> bool {
        self.tree_parent.is_some()
    }

    pub fn tree_parent(&self, i: usize) -> Option<usize> {
        self.tree_parent.as_ref().and_then(|t| t[i])
    }

    pub fn tree_children(&self, i: usize) -> &[usize] {
        self.tree_children.get(i).map(|c| c.as_slice()).unwrap_or(&[])
    }

    /// Overwrite one tree parent. Intended for fault injection; the tree
    /// invariants are not re-established.
    pub fn set_tree_parent(&mut self, i: usize, parent: Option<usize>) {
        if let Some(t) = self.tree_parent.as_mut() {
            if let Some(old) = t[i] {
                self.tree_children[old].retain(|&c| c != i);
            }
            t[i] = parent;
            if let Some(p) = parent {
                self.tree_children[p].push(i);
                self.tree_children[p].sort_unstable();
            }
        }
    }

    /// Choose one parent per nonroot vertex: the nearest center one level up,
    /// ties to the smallest point index.
    pub fn attach_tree(mut self) -> Self {
        let mut parent = vec![None; self.len()];
        let mut children = vec![Vec::new(); self.len()];
        for k in 1..=self.depth() {
            for w in self.level(k) {
                let mut best: Option<(f64, usize)> = None;
                for v in self.level(k - 1) {
                    let d = self.center_dist(v, w);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, v));
                    }
                }
                let (_, v) = best.expect("nonempty level");
                parent[w] = Some(v);
                children[v].push(w);
            }
        }
        self.tree_parent = Some(parent);
        self.tree_children = children;
        self
    }

    /// Check that the tree restriction is a spanning tree made of graph edges
    /// and that persisting centers keep their own parent.
    pub fn check_tree(&self) -> std::result::Result<(), TreeDefect> {
        let Some(parent) = self.tree_parent.as_ref() else {
            return Err(TreeDefect { vertex: self.vertices[0], reason: "no tree attached".into() });
        };
        let defect = |i: usize, reason: String| TreeDefect { vertex: self.vertices[i], reason };
        if parent[0].is_some() {
            return Err(defect(0, "root has a parent".into()));
        }
        for k in 1..=self.depth() {
            for w in self.level(k) {
                let Some(v) = parent[w] else {
                    return Err(defect(w, "missing tree parent".into()));
                };
                if self.vertices[v].level + 1 != k {
                    return Err(defect(w, "tree parent is not one level up".into()));
                }
                if !self.up[w].contains(&v) {
                    return Err(defect(w, "tree parent is not a vertical neighbor".into()));
                }
                if let Some(same) = self.index_of(self.vertices[w].point, k - 1) {
                    if same != v {
                        return Err(defect(w, "persisting center does not keep its parent".into()));
                    }
                }
            }
        }
        // with one parent per nonroot vertex, pointing one level up, every
        // chain reaches the root; confirm with a union-find pass anyway
        let mut uf: Vec<usize> = (0..self.len()).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        for w in 0..self.len() {
            if let Some(v) = parent[w] {
                let (a, b) = (find(&mut uf, w), find(&mut uf, v));
                if a == b {
                    return Err(defect(w, "tree edge closes a cycle".into()));
                }
                uf[a] = b;
            }
        }
        let root = find(&mut uf, 0);
        for w in 0..self.len() {
            if find(&mut uf, w) != root {
                return Err(defect(w, "vertex not connected to the root".into()));
            }
        }
        Ok(())
    }

    /// All edges with their kind, each listed once, upper endpoint first for
    /// vertical edges.
    pub fn edges(&self) -> Vec<(usize, usize, EdgeKind)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for &b in &self.horizontal[a] {
                if a < b {
                    out.push((a, b, EdgeKind::Horizontal));
                }
            }
            for &b in &self.down[a] {
                let kind = if self.tree_parent(b) == Some(a) { EdgeKind::Tree } else { EdgeKind::Vertical };
                out.push((a, b, kind));
            }
        }
        out
    }

    /// Edge list, one `(point_id level) (point_id level) H|V|T` per line.
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        for (a, b, kind) in self.edges() {
            let (va, vb) = (self.vertices[a], self.vertices[b]);
            let _ = writeln!(
                s,
                "({} {}) ({} {}) {}",
                self.space.id(va.point),
                va.level,
                self.space.id(vb.point),
                vb.level,
                kind.tag()
            );
        }
        s
    }

    pub fn summary(&self) -> GraphSummary {
        let levels = (0..=self.depth())
            .map(|k| {
                let r = self.level(k);
                let degs: Vec<usize> = r.clone().map(|i| self.horizontal[i].len()).collect();
                let down: Vec<usize> = r.clone().map(|i| self.down[i].len()).collect();
                LevelSummary {
                    level: k,
                    net_level: self.step * k,
                    vertices: r.len(),
                    radius: self.radius(k),
                    min_horizontal_degree: degs.iter().copied().min().unwrap_or(0),
                    max_horizontal_degree: degs.iter().copied().max().unwrap_or(0),
                    mean_horizontal_degree: degs.iter().sum::<usize>() as f64 / r.len() as f64,
                    max_down_degree: down.iter().copied().max().unwrap_or(0),
                }
            })
            .collect();
        GraphSummary {
            space: self.space.label().to_string(),
            alpha: self.alpha,
            step: self.step,
            tau: self.tau,
            vertices: self.len(),
            edges: self.edges().len(),
            n2: self.n2,
            has_tree: self.has_tree(),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub net_level: usize,
    pub vertices: usize,
    pub radius: f64,
    pub min_horizontal_degree: usize,
    pub max_horizontal_degree: usize,
    pub mean_horizontal_degree: f64,
    pub max_down_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub space: String,
    pub alpha: f64,
    pub step: usize,
    pub tau: f64,
    pub vertices: usize,
    pub edges: usize,
    pub n2: u64,
    pub has_tree: bool,
    pub levels: Vec<LevelSummary>,
}
