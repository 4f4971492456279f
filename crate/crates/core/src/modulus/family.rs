//! Path families on a single graph level: horizontal paths from a source set
//! to a sink set, truncated at the first sink.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FillingGraph;
use crate::tol;

/// Depth-first steps allowed per requested path during enumeration.
pub const SEARCH_BUDGET_PER_PATH: usize = 10_000;

struct Search {
    live: Vec<bool>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    out: Vec<Vec<usize>>,
    cap: usize,
    budget: usize,
}

/// A family of simple paths in a small graph. Local vertex `i` stands for
/// `labels[i]` (a filling-graph vertex index when built from a graph).
/// Densities live on the universe; sink endpoints outside it carry no mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFamily {
    pub labels: Vec<usize>,
    pub adjacency: Vec<Vec<usize>>,
    pub source: Vec<bool>,
    pub sink: Vec<bool>,
    pub universe: Vec<bool>,
}

impl PathFamily {
    /// Validate and build. Adjacency lists are symmetrized and sorted.
    pub fn new(
        labels: Vec<usize>,
        edges: &[(usize, usize)],
        source: Vec<bool>,
        sink: Vec<bool>,
        universe: Vec<bool>,
    ) -> Result<Self> {
        let n = labels.len();
        if source.len() != n || sink.len() != n || universe.len() != n {
            return Err(Error::Format("path family masks differ in length".into()));
        }
        if (0..n).any(|i| source[i] && !universe[i]) {
            return Err(Error::Format("every source must lie in the universe".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Format(format!("edge ({a}, {b}) out of range")));
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self { labels, adjacency, source, sink, universe })
    }

    /// Family of paths connecting the ball of `v` to the complement of its
    /// double, `k` levels below `v`.
    ///
    /// Universe: `B_w` meets `3B_v`. Source: `B_w` meets `B_v`. Sink: some
    /// space point of `B_w` lies outside `2B_v`. Intermediate vertices of a
    /// truncated path are non-sinks, which forces them into the universe, so
    /// only universe vertices and the sinks adjacent to them are kept.
    pub fn for_vertex(graph: &FillingGraph, v: usize, k: usize) -> Result<Self> {
        let n = graph.level_of(v);
        if k == 0 {
            return Err(Error::Parameter("family offset k must be at least 1".into()));
        }
        if n + k > graph.depth() {
            return Err(Error::Depth(format!(
                "level {} + {k} exceeds graph depth {}",
                n,
                graph.depth()
            )));
        }
        let space = graph.space();
        let xv = graph.point_of(v);
        let rv = graph.radius(n);
        let rw = graph.radius(n + k);
        let level = graph.level(n + k);
        let offset = level.start;
        let count = level.len();
        let mut universe = vec![false; count];
        let mut source = vec![false; count];
        let mut sink = vec![false; count];
        for w in level.clone() {
            let d = graph.center_dist(v, w);
            let i = w - offset;
            universe[i] = tol::lt(d, rw + 3.0 * rv);
            source[i] = tol::lt(d, rw + rv);
            // the ball of w is contained in 2B_v once d + rw <= 2 rv
            if !tol::le(d + rw, 2.0 * rv) {
                sink[i] = graph.ball(w).iter().any(|&z| !tol::lt(space.dist(z, xv), 2.0 * rv));
            }
        }
        let mut keep = universe.clone();
        for w in level.clone() {
            let i = w - offset;
            if universe[i] && !sink[i] {
                for &u in graph.horizontal(w) {
                    if sink[u - offset] {
                        keep[u - offset] = true;
                    }
                }
            }
        }
        let kept: Vec<usize> = (0..count).filter(|&i| keep[i]).collect();
        let mut local = vec![usize::MAX; count];
        for (j, &i) in kept.iter().enumerate() {
            local[i] = j;
        }
        let mut edges = Vec::new();
        for &i in &kept {
            for &u in graph.horizontal(offset + i) {
                let j = u - offset;
                if keep[j] && i < j {
                    edges.push((local[i], local[j]));
                }
            }
        }
        Self::new(
            kept.iter().map(|&i| offset + i).collect(),
            &edges,
            kept.iter().map(|&i| source[i]).collect(),
            kept.iter().map(|&i| sink[i]).collect(),
            kept.iter().map(|&i| universe[i]).collect(),
        )
    }

    /// A single path of `m` vertices, source at one end and sink at the other.
    pub fn line(m: usize) -> Self {
        assert!(m >= 1);
        let edges: Vec<(usize, usize)> = (1..m).map(|i| (i - 1, i)).collect();
        let mut source = vec![false; m];
        let mut sink = vec![false; m];
        source[0] = true;
        sink[m - 1] = true;
        Self::new((0..m).collect(), &edges, source, sink, vec![true; m]).expect("valid line")
    }

    /// Disjoint union; labels of `other` are shifted past those of `self`.
    pub fn disjoint_union(&self, other: &Self) -> Self {
        let n = self.len();
        let shift = self.labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut out = self.clone();
        out.labels.extend(other.labels.iter().map(|l| l + shift));
        out.adjacency.extend(other.adjacency.iter().map(|a| a.iter().map(|x| x + n).collect()));
        out.source.extend_from_slice(&other.source);
        out.sink.extend_from_slice(&other.sink);
        out.universe.extend_from_slice(&other.universe);
        out
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe.iter().filter(|&&u| u).count()
    }

    /// Sum of `sigma` over the universe vertices of `path`.
    pub fn path_sum(&self, sigma: &[f64], path: &[usize]) -> f64 {
        path.iter().filter(|&&i| self.universe[i]).map(|&i| sigma[i]).sum()
    }

    /// Whether `path` is a member of the family.
    pub fn is_member(&self, path: &[usize]) -> bool {
        let Some((&last, rest)) = path.split_last() else { return false };
        if !self.source[path[0]] || !self.sink[last] || rest.iter().any(|&i| self.sink[i]) {
            return false;
        }
        let mut seen = std::collections::HashSet::new();
        path.iter().all(|&i| seen.insert(i))
            && path.windows(2).all(|w| self.adjacency[w[0]].binary_search(&w[1]).is_ok())
    }

    /// Vertices from which a sink is reachable through non-sink vertices.
    fn reaches_sink(&self) -> Vec<bool> {
        let mut mark = self.sink.clone();
        let mut queue: Vec<usize> = (0..self.len()).filter(|&i| self.sink[i]).collect();
        while let Some(x) = queue.pop() {
            for &u in &self.adjacency[x] {
                if !mark[u] {
                    mark[u] = true;
                    queue.push(u);
                }
            }
        }
        mark
    }

    /// Every member path, by depth-first search in index order. Fails once
    /// more than `cap` paths have been found, or once the search has spent
    /// more than `SEARCH_BUDGET_PER_PATH * (cap + 1)` steps.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let live = self.reaches_sink();
        let mut search = Search {
            live,
            on_path: vec![false; self.len()],
            path: Vec::new(),
            out: Vec::new(),
            cap,
            budget: SEARCH_BUDGET_PER_PATH.saturating_mul(cap + 1),
        };
        for s in 0..self.len() {
            if self.source[s] && search.live[s] {
                self.dfs(s, &mut search)?;
            }
        }
        Ok(search.out)
    }

    fn dfs(&self, u: usize, st: &mut Search) -> Result<()> {
        if st.budget == 0 {
            return Err(Error::PathExplosion { cap: st.cap });
        }
        st.budget -= 1;
        st.path.push(u);
        st.on_path[u] = true;
        if self.sink[u] {
            if st.out.len() == st.cap {
                return Err(Error::PathExplosion { cap: st.cap });
            }
            st.out.push(st.path.clone());
        } else {
            for &w in &self.adjacency[u] {
                if !st.on_path[w] && st.live[w] {
                    self.dfs(w, st)?;
                }
            }
        }
        st.path.pop();
        st.on_path[u] = false;
        Ok(())
    }

    /// For every sink reachable from a source, a path of least `sigma`-sum
    /// ending there, sorted by sum then by the path itself.
    pub fn lightest_paths(&self, sigma: &[f64]) -> Vec<(f64, Vec<usize>)> {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

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

        let n = self.len();
        let weight = |i: usize| if self.universe[i] { sigma[i] } else { 0.0 };
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for s in 0..n {
            if self.source[s] {
                dist[s] = weight(s);
                heap.push(Entry(dist[s], s));
            }
        }
        let mut out = Vec::new();
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if self.sink[u] {
                let mut path = vec![u];
                let mut cur = u;
                while prev[cur] != usize::MAX {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                out.push((d, path));
                continue;
            }
            for &w in &self.adjacency[u] {
                let nd = d + weight(w);
                if nd < dist[w] {
                    dist[w] = nd;
                    prev[w] = u;
                    heap.push(Entry(nd, w));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_has_one_path() {
        let f = PathFamily::line(4);
        assert_eq!(f.enumerate_paths(10).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert!(f.is_member(&[0, 1, 2, 3]));
        assert!(!f.is_member(&[0, 1, 2]));
    }

    #[test]
    fn path_cap() {
        // complete graph on 8 vertices: many simple paths between two ends
        let mut edges = Vec::new();
        for a in 0..8 {
            for b in (a + 1)..8 {
                edges.push((a, b));
            }
        }
        let mut source = vec![false; 8];
        let mut sink = vec![false; 8];
        source[0] = true;
        sink[7] = true;
        let f = PathFamily::new((0..8).collect(), &edges, source, sink, vec![true; 8]).unwrap();
        assert!(matches!(f.enumerate_paths(200), Err(Error::PathExplosion { cap: 200 })));
    }

    #[test]
    fn lightest_path_avoids_heavy_vertex() {
        // 0 - 1 - 3 and 0 - 2 - 3
        let f = PathFamily::new(
            (0..4).collect(),
            &[(0, 1), (1, 3), (0, 2), (2, 3)],
            vec![true, false, false, false],
            vec![false, false, false, true],
            vec![true; 4],
        )
        .unwrap();
        let paths = f.lightest_paths(&[0.1, 0.5, 0.2, 0.1]);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].1, vec![0, 2, 3]);
        assert!((paths[0].0 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn paths_stop_at_first_sink() {
        // 0 - 1 - 2 with both 1 and 2 sinks
        let f = PathFamily::new(
            (0..3).collect(),
            &[(0, 1), (1, 2)],
            vec![true, false, false],
            vec![false, true, true],
            vec![true; 3],
        )
        .unwrap();
        assert_eq!(f.enumerate_paths(10).unwrap(), vec![vec![0, 1]]);
    }
}
