//! Finite metric spaces: generators, ingestion, normalization and the
//! empirical structure constants (doubling cardinality, perfectness ratio).

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tol;

/// Point cap for spaces backed by coordinates.
pub const MAX_POINTS: usize = 1 << 15;
/// Point cap for spaces backed by a dense distance matrix.
pub const MAX_MATRIX_POINTS: usize = 4096;
/// Exhaustive triangle checks run up to this many points, sampled beyond.
pub const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 2000;
/// Floor applied to the perfectness constant.
pub const K_D_FLOOR: f64 = 2.0 + 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordMetric {
    Euclidean,
    Sup,
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Matrix { data: Vec<f64> },
    Coords { dim: usize, data: Vec<f64>, metric: CoordMetric },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    Identity,
    /// `dist = 0.5 * raw / raw_max`; the extreme pair maps to exactly 1/2.
    Normalized { raw_max: f64 },
}

/// A finite metric space. Distances are computed on demand from either a
/// stored matrix or stored coordinates, raised to `power` and rescaled.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSpace {
    ids: Vec<String>,
    label: String,
    base: Base,
    power: f64,
    scale: Scale,
}

impl PointCloudSpace {
    /// Space from a full distance matrix. The matrix is validated
    /// (square, symmetric, zero diagonal, positive off-diagonal) but not rescaled.
    pub fn from_matrix(ids: Vec<String>, matrix: Vec<Vec<f64>>, label: &str) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::Degenerate("empty distance matrix".into()));
        }
        if n > MAX_MATRIX_POINTS {
            return Err(Error::Size(format!(
                "{n} points exceeds the matrix cap of {MAX_MATRIX_POINTS}"
            )));
        }
        if ids.len() != n {
            return Err(Error::Format(format!("{} ids for a {n}x{n} matrix", ids.len())));
        }
        check_unique(&ids)?;
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Format(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::Metric(format!("nonzero diagonal at {}", ids[i])));
            }
            for j in 0..n {
                let d = data[i * n + j];
                if !d.is_finite() {
                    return Err(Error::Metric(format!("non-finite distance ({}, {})", ids[i], ids[j])));
                }
                if d != data[j * n + i] {
                    return Err(Error::Metric(format!("asymmetric at ({}, {})", ids[i], ids[j])));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::Metric(format!(
                        "distinct points {} and {} at distance {d}",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(Self {
            ids,
            label: label.to_string(),
            base: Base::Matrix { data },
            power: 1.0,
            scale: Scale::Identity,
        })
    }

    /// Space from coordinates. Duplicate points are rejected.
    pub fn from_coords(
        ids: Vec<String>,
        coords: Vec<Vec<f64>>,
        metric: CoordMetric,
        label: &str,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::Degenerate("no points".into()));
        }
        if n > MAX_POINTS {
            return Err(Error::Size(format!("{n} points exceeds the cap of {MAX_POINTS}")));
        }
        if ids.len() != n {
            return Err(Error::Format(format!("{} ids for {n} points", ids.len())));
        }
        check_unique(&ids)?;
        let dim = coords[0].len();
        if dim == 0 {
            return Err(Error::Format("zero-dimensional coordinates".into()));
        }
        let mut data = Vec::with_capacity(n * dim);
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Format(format!("point {i} has dimension {}, expected {dim}", c.len())));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Format(format!("point {i} has a non-finite coordinate")));
            }
            data.extend_from_slice(c);
        }
        let mut seen = HashSet::with_capacity(n);
        for c in data.chunks(dim) {
            let key: Vec<u64> = c.iter().map(|x| (x + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::Metric("duplicate coordinates".into()));
            }
        }
        Ok(Self {
            ids,
            label: label.to_string(),
            base: Base::Coords { dim, data, metric },
            power: 1.0,
            scale: Scale::Identity,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    fn base_dist(&self, i: usize, j: usize) -> f64 {
        match &self.base {
            Base::Matrix { data } => data[i * self.len() + j],
            Base::Coords { dim, data, metric } => {
                let a = &data[i * dim..(i + 1) * dim];
                let b = &data[j * dim..(j + 1) * dim];
                match metric {
                    CoordMetric::Sup => a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())),
                    CoordMetric::Euclidean => {
                        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
                    }
                }
            }
        }
    }

    fn raw_dist(&self, i: usize, j: usize) -> f64 {
        let b = self.base_dist(i, j);
        if self.power == 1.0 {
            b
        } else {
            b.powf(self.power)
        }
    }

    /// Distance between points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let r = self.raw_dist(i, j);
        match self.scale {
            Scale::Identity => r,
            Scale::Normalized { raw_max } => 0.5 * (r / raw_max),
        }
    }

    /// Row of distances from `i` to every point.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|j| self.dist(i, j)).collect()
    }

    /// Full distance matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.dist(i, j);
                m[i * n + j] = d;
                m[j * n + i] = d;
            }
        }
        m
    }

    /// Pair realizing the largest base distance, ties to the lexicographically
    /// first pair. `None` for a single point.
    fn extreme_pair(&self) -> Option<(usize, usize)> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        if let Base::Coords { dim, data, metric: CoordMetric::Sup } = &self.base {
            // sup-metric diameter is attained by the extremes of one coordinate
            let mut best = (0.0, 0, 1);
            for c in 0..*dim {
                let (mut lo, mut hi) = (0, 0);
                for i in 0..n {
                    if data[i * dim + c] < data[lo * dim + c] {
                        lo = i;
                    }
                    if data[i * dim + c] > data[hi * dim + c] {
                        hi = i;
                    }
                }
                let d = data[hi * dim + c] - data[lo * dim + c];
                if d > best.0 {
                    best = (d, lo.min(hi), lo.max(hi));
                }
            }
            return Some((best.1, best.2));
        }
        let mut best = (f64::NEG_INFINITY, 0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.base_dist(i, j);
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        Some((best.1, best.2))
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        match self.extreme_pair() {
            None => 0.0,
            Some((i, j)) => self.dist(i, j),
        }
    }

    /// Rescale so the diameter is exactly 1/2. Idempotent bit-for-bit.
    pub fn normalized(mut self) -> Self {
        let Some((i, j)) = self.extreme_pair() else {
            return self;
        };
        if self.dist(i, j) == 0.5 {
            return self;
        }
        self.scale = Scale::Normalized { raw_max: self.raw_dist(i, j) };
        self
    }

    /// Smallest distance between distinct points.
    pub fn min_gap(&self) -> f64 {
        let n = self.len();
        let mut m = f64::INFINITY;
        if let Base::Coords { dim: 1, data, .. } = &self.base {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
            for w in order.windows(2) {
                m = m.min(self.dist(w[0], w[1]));
            }
            return m;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.min(self.dist(i, j));
            }
        }
        m
    }

    /// Open ball `B(center, r)` as sorted point indices.
    pub fn ball(&self, center: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&z| tol::lt(self.dist(center, z), r)).collect()
    }

    /// Coordinates before scaling (none for matrix-backed spaces).
    pub fn raw_coords(&self) -> Option<Vec<Vec<f64>>> {
        match &self.base {
            Base::Coords { dim, data, .. } => Some(data.chunks(*dim).map(|c| c.to_vec()).collect()),
            Base::Matrix { .. } => None,
        }
    }

    /// Check the metric axioms. Triangle inequality is exhaustive up to
    /// [`EXHAUSTIVE_TRIANGLE_LIMIT`] points, otherwise over `samples` random triples.
    pub fn check_metric(&self, samples: usize, seed: u64) -> MetricReport {
        check_metric_matrix(self.len(), &self.matrix(), samples, seed)
    }

    /// JSON representation that reloads to an identical space.
    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("label".into(), Value::from(self.label.clone()));
        obj.insert("points".into(), Value::from(self.ids.clone()));
        match &self.base {
            Base::Matrix { data } => {
                let n = self.len();
                let rows: Vec<Vec<f64>> = data.chunks(n).map(|r| r.to_vec()).collect();
                obj.insert("matrix".into(), serde_json::to_value(rows).unwrap());
            }
            Base::Coords { dim, data, metric } => {
                let rows: Vec<Vec<f64>> = data.chunks(*dim).map(|r| r.to_vec()).collect();
                obj.insert("coords".into(), serde_json::to_value(rows).unwrap());
                obj.insert("metric".into(), serde_json::to_value(metric).unwrap());
            }
        }
        if self.power != 1.0 {
            obj.insert("power".into(), Value::from(self.power));
        }
        if matches!(self.scale, Scale::Normalized { .. }) {
            obj.insert("normalize".into(), Value::from(true));
        }
        Value::Object(obj)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let file: SpaceFile = serde_json::from_value(v.clone())?;
        file.into_space()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text)?;
        Self::from_json(&v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Format(format!("duplicate point id {id:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    points: Option<Vec<String>>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    coords: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    metric: Option<CoordMetric>,
    #[serde(default)]
    power: Option<f64>,
    #[serde(default)]
    normalize: Option<bool>,
    /// Run configuration recorded by the CLI; ignored on load.
    #[serde(default)]
    #[allow(dead_code)]
    provenance: Option<Value>,
}

impl SpaceFile {
    fn into_space(self) -> Result<PointCloudSpace> {
        let label = self.label.unwrap_or_else(|| "imported".into());
        let mut space = match (self.matrix, self.coords) {
            (Some(m), None) => {
                let ids = self.points.unwrap_or_else(|| default_ids(m.len()));
                PointCloudSpace::from_matrix(ids, m, &label)?
            }
            (None, Some(c)) => {
                let ids = self.points.unwrap_or_else(|| default_ids(c.len()));
                let metric = self.metric.unwrap_or(CoordMetric::Euclidean);
                PointCloudSpace::from_coords(ids, c, metric, &label)?
            }
            _ => return Err(Error::Format("expected exactly one of \"matrix\" or \"coords\"".into())),
        };
        if let Some(p) = self.power {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Format(format!("power {p} outside (0, 1]")));
            }
            space.power = p;
        }
        if self.normalize.unwrap_or(false) {
            space = space.normalized();
        }
        Ok(space)
    }
}

fn default_ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("p{i:0width$}")).collect()
}

/// Outcome of a metric-axiom check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub points: usize,
    pub symmetric: bool,
    pub zero_diagonal: bool,
    pub positive: bool,
    pub exhaustive: bool,
    pub triples_checked: u64,
    pub triangle_violations: u64,
    /// Largest `d(i,j) - d(i,k) - d(k,j)` seen, relative to `d(i,j)`.
    pub worst_excess: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
}

impl MetricReport {
    pub fn ok(&self) -> bool {
        self.symmetric && self.zero_diagonal && self.positive && self.triangle_violations == 0
    }
}

/// Metric-axiom check on a row-major `n x n` matrix.
pub fn check_metric_matrix(n: usize, m: &[f64], samples: usize, seed: u64) -> MetricReport {
    use rand::{Rng, SeedableRng};

    let mut symmetric = true;
    let mut zero_diagonal = true;
    let mut positive = true;
    for i in 0..n {
        if m[i * n + i] != 0.0 {
            zero_diagonal = false;
        }
        for j in 0..n {
            if m[i * n + j] != m[j * n + i] {
                symmetric = false;
            }
            if i != j && !(m[i * n + j] > 0.0) {
                positive = false;
            }
        }
    }
    let mut report = MetricReport {
        points: n,
        symmetric,
        zero_diagonal,
        positive,
        exhaustive: n <= EXHAUSTIVE_TRIANGLE_LIMIT,
        triples_checked: 0,
        triangle_violations: 0,
        worst_excess: f64::NEG_INFINITY,
        worst_triple: None,
    };
    let visit = |i: usize, j: usize, k: usize, report: &mut MetricReport| {
        let dij = m[i * n + j];
        let excess = (dij - (m[i * n + k] + m[k * n + j])) / dij.max(f64::MIN_POSITIVE);
        report.triples_checked += 1;
        if excess > tol::REL_TOL {
            report.triangle_violations += 1;
        }
        if excess > report.worst_excess {
            report.worst_excess = excess;
            report.worst_triple = Some((i, j, k));
        }
    };
    if report.exhaustive {
        for i in 0..n {
            let ri = &m[i * n..(i + 1) * n];
            for j in (i + 1)..n {
                let rj = &m[j * n..(j + 1) * n];
                // best detour through any k
                let (mut kbest, mut best) = (0, f64::INFINITY);
                for k in 0..n {
                    let s = ri[k] + rj[k];
                    if s < best {
                        best = s;
                        kbest = k;
                    }
                }
                report.triples_checked += n as u64 - 1;
                visit(i, j, kbest, &mut report);
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let k = rng.gen_range(0..n);
            if i != j {
                visit(i, j, k, &mut report);
            }
        }
    }
    if report.worst_excess == f64::NEG_INFINITY {
        report.worst_excess = 0.0;
    }
    report
}

/// Left endpoints of the depth-level Cantor construction with contraction
/// `ratio`, normalized to diameter 1/2.
pub fn generate_cantor(depth: usize, ratio: f64) -> Result<PointCloudSpace> {
    if depth < 1 {
        return Err(Error::Parameter("cantor depth must be at least 1".into()));
    }
    if !(ratio > 0.0 && ratio < 0.5) {
        return Err(Error::Parameter(format!("cantor ratio {ratio} outside (0, 1/2)")));
    }
    if depth >= 63 || (1usize << depth) > MAX_POINTS {
        return Err(Error::Size(format!("cantor depth {depth} exceeds the {MAX_POINTS}-point cap")));
    }
    let mut pts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..depth {
        let next_len = ratio * len;
        let shift = len - next_len;
        pts = pts.iter().flat_map(|&a| [a, a + shift]).collect();
        len = next_len;
    }
    let ids = (0..pts.len()).map(|i| format!("c{i}")).collect();
    let coords = pts.into_iter().map(|x| vec![x]).collect();
    let label = format!("cantor(depth={depth}, ratio={ratio})");
    Ok(PointCloudSpace::from_coords(ids, coords, CoordMetric::Sup, &label)?.normalized())
}

/// Centers of the retained cells of the depth-level Sierpinski carpet,
/// sup metric, normalized. Coordinates are stored as odd integers
/// `2i+1` so every raw distance is exact.
pub fn generate_carpet(depth: usize) -> Result<PointCloudSpace> {
    if depth < 1 {
        return Err(Error::Parameter("carpet depth must be at least 1".into()));
    }
    if depth > 5 {
        return Err(Error::Size(format!("carpet depth {depth} exceeds the cap of 5")));
    }
    let mut cells: Vec<(u64, u64)> = vec![(0, 0)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(cells.len() * 8);
        for &(x, y) in &cells {
            for j in 0..3 {
                for i in 0..3 {
                    if i == 1 && j == 1 {
                        continue;
                    }
                    next.push((3 * x + i, 3 * y + j));
                }
            }
        }
        cells = next;
    }
    let ids = cells.iter().map(|(x, y)| format!("s{x}_{y}")).collect();
    let coords = cells
        .iter()
        .map(|&(x, y)| vec![(2 * x + 1) as f64, (2 * y + 1) as f64])
        .collect();
    let label = format!("carpet(depth={depth})");
    Ok(PointCloudSpace::from_coords(ids, coords, CoordMetric::Sup, &label)?.normalized())
}

/// `n` equally spaced points on an interval, normalized.
pub fn generate_grid(n: usize) -> Result<PointCloudSpace> {
    if n < 2 {
        return Err(Error::Parameter("grid needs at least 2 points".into()));
    }
    if n > MAX_POINTS {
        return Err(Error::Size(format!("{n} points exceeds the cap of {MAX_POINTS}")));
    }
    let width = (n - 1).to_string().len();
    let ids = (0..n).map(|i| format!("g{i:0width$}")).collect();
    let coords = (0..n).map(|i| vec![i as f64]).collect();
    let label = format!("grid(n={n})");
    Ok(PointCloudSpace::from_coords(ids, coords, CoordMetric::Sup, &label)?.normalized())
}

/// Raise every distance to `exponent` and renormalize.
pub fn snowflake(space: &PointCloudSpace, exponent: f64) -> Result<PointCloudSpace> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::Parameter(format!("snowflake exponent {exponent} outside (0, 1]")));
    }
    if exponent == 1.0 {
        return Ok(space.clone());
    }
    let mut s = space.clone();
    s.power = space.power * exponent;
    s.scale = Scale::Identity;
    s.label = format!("snowflake({}, {exponent})", space.label);
    Ok(s.normalized())
}

/// Empirical structure constants of a finite space.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StructureConstants {
    pub doubling_n: u64,
    pub n1: u64,
    /// Horizontal-neighbor bound; 1 until a graph has been built.
    pub n2: u64,
    pub k_d: f64,
}

impl StructureConstants {
    pub fn record_n2(&mut self, n2: u64) {
        self.n2 = self.n2.max(n2);
    }
}

/// Sampled centers: all points up to `limit`, otherwise an even stride.
fn sample_centers(n: usize, limit: usize) -> Vec<usize> {
    if n <= limit {
        (0..n).collect()
    } else {
        (0..limit).map(|i| i * n / limit).collect()
    }
}

/// Estimate the doubling cardinality and perfectness ratio.
///
/// The perfectness ratio at a center is the largest ratio of consecutive
/// distinct distances from it: an annulus `B(x,r) \ B(x,r/K)` with `r` inside
/// the distance range is empty exactly when `K` does not exceed such a ratio.
pub fn estimate_constants(space: &PointCloudSpace) -> Result<StructureConstants> {
    use rayon::prelude::*;

    let n = space.len();
    if n < 2 {
        return Err(Error::Degenerate("constants need at least two points".into()));
    }
    let k_centers = sample_centers(n, 2048);
    let k_d = k_centers
        .par_iter()
        .map(|&x| {
            let mut d: Vec<f64> = (0..n).filter(|&z| z != x).map(|z| space.dist(x, z)).collect();
            d.sort_by(f64::total_cmp);
            let mut distinct: Vec<f64> = Vec::with_capacity(d.len());
            for t in d {
                match distinct.last() {
                    Some(&last) if t <= last * (1.0 + tol::REL_TOL) => {}
                    _ => distinct.push(t),
                }
            }
            distinct.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
        .max(K_D_FLOOR);

    let gap = space.min_gap();
    let diam = space.diameter();
    let mut radii = Vec::new();
    let mut r = diam;
    while r >= gap {
        radii.push(r);
        r /= 2f64.powf(0.25);
    }
    let n_centers = sample_centers(n, 256);
    let doubling_n = n_centers
        .par_iter()
        .map(|&x| {
            let row = space.row(x);
            let mut best = 1u64;
            for &r in &radii {
                let ball: Vec<usize> = (0..n).filter(|&z| tol::lt(row[z], r)).collect();
                let mut net: Vec<usize> = Vec::new();
                for &z in &ball {
                    if net.iter().all(|&y| space.dist(y, z) >= r / 2.0) {
                        net.push(z);
                    }
                }
                best = best.max(net.len() as u64);
            }
            best
        })
        .reduce(|| 1, u64::max);

    Ok(StructureConstants { doubling_n, n1: doubling_n.saturating_pow(6), n2: 1, k_d })
}

/// Sample `count` random points of the space (with replacement) seeded deterministically.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_small_depths() {
        let c = generate_cantor(1, 1.0 / 3.0).unwrap();
        let xs = c.raw_coords().unwrap();
        assert_eq!(xs[0][0], 0.0);
        assert!((xs[1][0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.dist(0, 1), 0.5);
        let c = generate_cantor(2, 1.0 / 3.0).unwrap();
        let xs: Vec<f64> = c.raw_coords().unwrap().into_iter().map(|v| v[0]).collect();
        let want = [0.0, 2.0 / 9.0, 6.0 / 9.0, 8.0 / 9.0];
        for (x, w) in xs.iter().zip(want) {
            assert!((x - w).abs() < 1e-15);
        }
    }

    #[test]
    fn cantor_cap() {
        assert!(matches!(generate_cantor(16, 0.3), Err(Error::Size(_))));
        assert!(matches!(generate_cantor(3, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn grid_distances() {
        let g = generate_grid(2).unwrap();
        assert_eq!(g.dist(0, 1), 0.5);
        let g = generate_grid(3).unwrap();
        assert_eq!(g.dist(0, 1), 0.25);
        assert_eq!(g.dist(1, 2), 0.25);
        assert_eq!(g.dist(0, 2), 0.5);
        let g = generate_grid(1025).unwrap();
        assert_eq!(g.min_gap(), 1.0 / 2048.0);
        assert_eq!(g.diameter(), 0.5);
    }

    #[test]
    fn carpet_counts() {
        assert_eq!(generate_carpet(1).unwrap().len(), 8);
        assert_eq!(generate_carpet(2).unwrap().len(), 64);
        assert!(matches!(generate_carpet(6), Err(Error::Size(_))));
        let c = generate_carpet(2).unwrap();
        assert_eq!(c.diameter(), 0.5);
        // centers of 1/9-cells: gap 1/9 of the side, diameter 8/9 of the side
        assert!((c.min_gap() - 0.5 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn snowflake_two_points() {
        let g = generate_grid(2).unwrap();
        let s = snowflake(&g, 0.5).unwrap();
        assert_eq!(s.dist(0, 1), 0.5);
        assert_eq!(snowflake(&g, 1.0).unwrap(), g);
        assert!(snowflake(&g, 0.0).is_err());
        assert!(snowflake(&g, 1.5).is_err());
    }

    #[test]
    fn normalize_is_idempotent() {
        let c = generate_cantor(5, 0.3).unwrap();
        let again = c.clone().normalized();
        assert_eq!(c, again);
    }

    #[test]
    fn json_roundtrip_matrix_is_exact() {
        let m = vec![vec![0.0, 0.3, 0.7], vec![0.3, 0.0, 0.5], vec![0.7, 0.5, 0.0]];
        let s = PointCloudSpace::from_matrix(vec!["a".into(), "b".into(), "c".into()], m, "t").unwrap();
        let j1 = serde_json::to_string(&s.to_json()).unwrap();
        let back = PointCloudSpace::from_json(&serde_json::from_str(&j1).unwrap()).unwrap();
        assert_eq!(j1, serde_json::to_string(&back.to_json()).unwrap());
        assert_eq!(back.dist(0, 2), 0.7);
    }

    #[test]
    fn json_roundtrip_snowflake_coords() {
        let s = snowflake(&generate_grid(17).unwrap(), 0.5).unwrap();
        let back = PointCloudSpace::from_json(&s.to_json()).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                assert_eq!(s.dist(i, j).to_bits(), back.dist(i, j).to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_matrices() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(PointCloudSpace::from_matrix(ids.clone(), vec![vec![0.0, 1.0], vec![2.0, 0.0]], "").is_err());
        assert!(PointCloudSpace::from_matrix(ids.clone(), vec![vec![0.0, 0.0], vec![0.0, 0.0]], "").is_err());
        assert!(PointCloudSpace::from_matrix(ids, vec![vec![1.0, 1.0], vec![1.0, 0.0]], "").is_err());
    }

    #[test]
    fn triangle_violation_is_found() {
        let m = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let s = PointCloudSpace::from_matrix(vec!["a".into(), "b".into(), "c".into()], m, "").unwrap();
        let r = s.check_metric(0, 0);
        assert!(!r.ok());
        assert_eq!(r.worst_triple, Some((0, 2, 1)));
    }

    #[test]
    fn constants_two_points() {
        let c = estimate_constants(&generate_grid(2).unwrap()).unwrap();
        assert_eq!(c.doubling_n, 1);
        assert_eq!(c.k_d, K_D_FLOOR);
        assert_eq!(c.n1, 1);
    }

    #[test]
    fn constants_single_point_is_degenerate() {
        let s = PointCloudSpace::from_coords(vec!["x".into()], vec![vec![0.0]], CoordMetric::Sup, "").unwrap();
        assert!(matches!(estimate_constants(&s), Err(Error::Degenerate(_))));
    }
}
