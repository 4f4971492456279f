//! The metric `d_rho` on filling-graph vertices: shortest paths with edge
//! cost `(pi(a) + pi(b)) / 2`, the comparison vertex `z`, the auxiliary
//! length on the tree-plus-horizontal subgraph, and the boundary metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::ancestry;
use crate::error::{Error, Result};
use crate::graph::FillingGraph;
use crate::space::PointCloudSpace;

#[derive(PartialEq)]
struct Entry(f64, usize);
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra from `source` over the vertices accepted by `keep`, with edges
/// listed by `edges` and costed by `cost`. Returns distances and predecessors.
fn dijkstra(
    n: usize,
    source: usize,
    edges: impl Fn(usize, &mut Vec<usize>),
    cost: impl Fn(usize, usize) -> f64,
    keep: impl Fn(usize) -> bool,
) -> (Vec<f64>, Vec<usize>) {
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut nbrs = Vec::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        nbrs.clear();
        edges(u, &mut nbrs);
        for &w in &nbrs {
            if !keep(w) {
                continue;
            }
            let nd = d + cost(u, w);
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = u;
                heap.push(Entry(nd, w));
            }
        }
    }
    (dist, prev)
}

fn all_edges(graph: &FillingGraph) -> impl Fn(usize, &mut Vec<usize>) + '_ {
    move |u, out| {
        out.extend_from_slice(graph.horizontal(u));
        out.extend_from_slice(graph.up(u));
        out.extend_from_slice(graph.down(u));
    }
}

/// `d_rho` from `source` to every vertex.
pub fn distances_from(graph: &FillingGraph, pi: &[f64], source: usize) -> Vec<f64> {
    dijkstra(graph.len(), source, all_edges(graph), |a, b| 0.5 * (pi[a] + pi[b]), |_| true).0
}

/// `d_rho(u, v)` and a shortest path realizing it.
pub fn graph_distance(graph: &FillingGraph, pi: &[f64], u: usize, v: usize) -> Result<(f64, Vec<usize>)> {
    let (dist, prev) = dijkstra(graph.len(), u, all_edges(graph), |a, b| 0.5 * (pi[a] + pi[b]), |_| true);
    if !dist[v].is_finite() {
        return Err(Error::Construction(format!("vertices {u} and {v} are disconnected")));
    }
    let mut path = vec![v];
    let mut cur = v;
    while cur != u {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Ok((dist[v], path))
}

fn adjacent(graph: &FillingGraph, a: usize, b: usize) -> bool {
    graph.is_horizontal_edge(a, b) || graph.up(a).contains(&b) || graph.down(a).contains(&b)
}

/// The deepest vertex that lies on both tree ancestry chains of `u` and `v`,
/// or lies on one chain and is a graph neighbor of a vertex of the other.
/// At equal depth the `u`-chain candidate wins.
pub fn compute_z(graph: &FillingGraph, u: usize, v: usize) -> usize {
    let cu = ancestry(graph, u);
    let cv = ancestry(graph, v);
    let qualifies = |x: usize, other: &[usize]| other.iter().any(|&y| y == x || adjacent(graph, x, y));
    for g in (0..cu.len().max(cv.len())).rev() {
        if let Some(&x) = cu.get(g) {
            if qualifies(x, &cv) {
                return x;
            }
        }
        if let Some(&y) = cv.get(g) {
            if qualifies(y, &cu) {
                return y;
            }
        }
    }
    0
}

/// Auxiliary length of one edge of the tree-plus-horizontal subgraph:
/// `min(pi*(a), pi*(b))` on horizontal edges, `K0^2 pi*(child)` on tree edges.
pub fn edge_ell(graph: &FillingGraph, pi_star: &[f64], k0: f64, a: usize, b: usize) -> Result<f64> {
    if graph.is_horizontal_edge(a, b) {
        return Ok(pi_star[a].min(pi_star[b]));
    }
    let child = if graph.tree_parent(a) == Some(b) {
        a
    } else if graph.tree_parent(b) == Some(a) {
        b
    } else {
        return Err(Error::Domain(format!(
            "edge {a} ~ {b} is not a horizontal or tree edge; the auxiliary length is defined on the tree subgraph only"
        )));
    };
    Ok(k0 * k0 * pi_star[child])
}

/// Sum of [`edge_ell`] along a path.
pub fn ell_length(graph: &FillingGraph, pi_star: &[f64], k0: f64, path: &[usize]) -> Result<f64> {
    path.windows(2).map(|w| edge_ell(graph, pi_star, k0, w[0], w[1])).sum()
}

/// Auxiliary-length distances from `source` on the tree-plus-horizontal subgraph.
pub fn ell_distances_from(graph: &FillingGraph, pi_star: &[f64], k0: f64, source: usize) -> Vec<f64> {
    let edges = |u: usize, out: &mut Vec<usize>| {
        out.extend_from_slice(graph.horizontal(u));
        out.extend(graph.tree_parent(u));
        out.extend_from_slice(graph.tree_children(u));
    };
    dijkstra(graph.len(), source, edges, |a, b| edge_ell(graph, pi_star, k0, a, b).unwrap_or(f64::INFINITY), |_| true).0
}

/// `d_rho` restricted to the vertices of one level, with the geometric tail
/// bound for the levels not built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMetric {
    pub depth: usize,
    pub ids: Vec<String>,
    /// Graph vertex of each row.
    pub vertices: Vec<usize>,
    /// Row-major distances.
    pub matrix: Vec<f64>,
    /// `sum_{j > depth} m^j` with `m` the largest nonroot `rho`.
    pub tail_bound: f64,
}

impl BoundaryMetric {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    /// As a matrix-backed space (the ingester validates the axioms).
    pub fn to_space(&self) -> Result<PointCloudSpace> {
        let n = self.len();
        let rows = (0..n).map(|i| self.matrix[i * n..(i + 1) * n].to_vec()).collect();
        PointCloudSpace::from_matrix(self.ids.clone(), rows, "d_rho")
    }
}

/// Pairwise `d_rho` between the level-`depth` vertices, using only levels
/// up to `depth`. Row `i` is computed from vertex `i` and mirrored, so the
/// matrix is exactly symmetric.
pub fn boundary_metric(graph: &FillingGraph, pi: &[f64], rho: &[f64], depth: usize) -> Result<BoundaryMetric> {
    if depth > graph.depth() {
        return Err(Error::Depth(format!("boundary depth {depth} exceeds graph depth {}", graph.depth())));
    }
    let vertices: Vec<usize> = graph.level(depth).collect();
    let n = vertices.len();
    let rows: Vec<Vec<f64>> = vertices
        .par_iter()
        .map(|&s| {
            dijkstra(graph.len(), s, all_edges(graph), |a, b| 0.5 * (pi[a] + pi[b]), |w| graph.level_of(w) <= depth).0
        })
        .collect();
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = rows[i][vertices[j]];
            if !d.is_finite() {
                return Err(Error::Construction("filling graph is disconnected".into()));
            }
            matrix[i * n + j] = d;
            matrix[j * n + i] = d;
        }
    }
    let m = rho.iter().skip(1).fold(0.0f64, |a, &b| a.max(b));
    let tail_bound = if m < 1.0 { m.powi(depth as i32 + 1) / (1.0 - m) } else { f64::INFINITY };
    let space = graph.space();
    Ok(BoundaryMetric {
        depth,
        ids: vertices.iter().map(|&v| space.id(graph.point_of(v)).to_string()).collect(),
        vertices,
        matrix,
        tail_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFormat {
    Json,
    Csv,
}

impl std::str::FromStr for MetricFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(Error::Parameter(format!("unknown metric format {s:?} (expected json or csv)"))),
        }
    }
}

/// Serialize as the space JSON schema or as CSV with an `id` header row.
pub fn render_metric(bm: &BoundaryMetric, format: MetricFormat) -> Result<String> {
    match format {
        MetricFormat::Json => Ok(serde_json::to_string_pretty(&bm.to_space()?.to_json())? + "\n"),
        MetricFormat::Csv => {
            let n = bm.len();
            let mut out = String::from("id");
            for id in &bm.ids {
                out.push(',');
                out.push_str(id);
            }
            out.push('\n');
            for i in 0..n {
                out.push_str(&bm.ids[i]);
                for j in 0..n {
                    out.push(',');
                    out.push_str(&bm.get(i, j).to_string());
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn export_metric(bm: &BoundaryMetric, format: MetricFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_metric(bm, format)?)?;
    Ok(())
}

/// Parse a CSV distance matrix written by [`render_metric`]. Lines starting
/// with `#` are comments.
pub fn parse_metric_csv(text: &str) -> Result<PointCloudSpace> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))?;
    let mut cols = header.split(',');
    if cols.next() != Some("id") {
        return Err(Error::Format("CSV header must start with `id`".into()));
    }
    let ids: Vec<String> = cols.map(str::to_string).collect();
    let mut rows = Vec::with_capacity(ids.len());
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',');
        let id = cells.next().unwrap_or_default();
        if ids.get(i).map(String::as_str) != Some(id) {
            return Err(Error::Format(format!("row {i} is labelled {id:?}, expected the header order")));
        }
        let row = cells
            .map(|c| c.parse::<f64>().map_err(|e| Error::Format(format!("row {i}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    PointCloudSpace::from_matrix(ids, rows, "d_rho")
}

/// Load a metric written by [`export_metric`], by extension.
pub fn import_metric(path: &Path) -> Result<PointCloudSpace> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_metric_csv(&std::fs::read_to_string(path)?),
        _ => PointCloudSpace::load(path),
    }
}

/// Render a matrix-backed space in the given format (used for round trips).
pub fn render_space(space: &PointCloudSpace, format: MetricFormat) -> Result<String> {
    let n = space.len();
    let bm = BoundaryMetric {
        depth: 0,
        ids: space.ids().to_vec(),
        vertices: (0..n).collect(),
        matrix: space.matrix(),
        tail_bound: 0.0,
    };
    render_metric(&bm, format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::build_nets;
    use crate::params::Mode;
    use crate::space::generate_cantor;
    use std::sync::Arc;

    fn graph() -> FillingGraph {
        let s = Arc::new(generate_cantor(4, 1.0 / 3.0).unwrap());
        let nets = build_nets(&s, 3.0, 4, 3.0, Mode::Practical).unwrap();
        crate::graph::build_graph(s, &nets, 7.0, 3.0, Mode::Practical).unwrap().attach_tree()
    }

    #[test]
    fn distance_basics() {
        let g = graph();
        let pi: Vec<f64> = (0..g.len()).map(|v| 0.5f64.powi(g.level_of(v) as i32)).collect();
        assert_eq!(graph_distance(&g, &pi, 3, 3).unwrap().0, 0.0);
        let w = g.tree_children(0)[0];
        let (d, path) = graph_distance(&g, &pi, 0, w).unwrap();
        assert!(d <= 0.5 * (pi[0] + pi[w]));
        assert_eq!(path.first(), Some(&0));
        assert_eq!(compute_z(&g, w, w), w);
    }

    #[test]
    fn ell_rejects_non_tree_vertical() {
        let g = graph();
        let ps = vec![1.0; g.len()];
        for w in 0..g.len() {
            for &v in g.up(w) {
                if g.tree_parent(w) != Some(v) {
                    assert!(matches!(edge_ell(&g, &ps, 2.0, v, w), Err(Error::Domain(_))));
                    return;
                }
            }
        }
    }

    #[test]
    fn single_point_boundary() {
        let g = graph();
        let pi = vec![1.0; g.len()];
        let bm = boundary_metric(&g, &pi, &pi, 0).unwrap();
        assert_eq!(bm.matrix, vec![0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let g = graph();
        let pi: Vec<f64> = (0..g.len()).map(|v| 0.5f64.powi(g.level_of(v) as i32)).collect();
        let bm = boundary_metric(&g, &pi, &pi, 2).unwrap();
        for f in [MetricFormat::Csv, MetricFormat::Json] {
            let a = render_metric(&bm, f).unwrap();
            let s = match f {
                MetricFormat::Csv => parse_metric_csv(&a).unwrap(),
                MetricFormat::Json => PointCloudSpace::from_json(&serde_json::from_str(&a).unwrap()).unwrap(),
            };
            assert_eq!(render_space(&s, f).unwrap(), a);
        }
    }
}
