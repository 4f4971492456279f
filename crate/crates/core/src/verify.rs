//! Certificates for a weight system: bounds on `rho`, normalization, the
//! descendant sums of `pi^p`, edge ratios of `pi`, the lower and upper
//! comparison of `d_rho` with `pi(z)`, the family-level path sums, and
//! empirical regularity and distortion profiles of the boundary metric.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{ancestor, graph_descendants, tree_descendants};
use crate::error::{Error, Result};
use crate::gauge::sample_distortion;
use crate::graph::{FillingGraph, Vertex};
use crate::metric::{compute_z, distances_from, ell_distances_from, ell_length, BoundaryMetric};
use crate::modulus::PathFamily;
use crate::pipeline::WeightSystem;
use crate::space::PointCloudSpace;
use crate::tol;

/// Pair sets up to this size are certified exhaustively.
pub const EXHAUSTIVE_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertStatus {
    Pass,
    Fail,
    Reported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Tree restriction is a spanning tree of graph edges.
    Tree,
    /// `eta_- <= rho <= max(eta_+, (1 - eta_-^p)^(1/p))`.
    H1,
    /// `sum_{D1(v)} rho^p = 1`.
    Normalization,
    /// Edge ratios of `pi` within `K0` (horizontal: `sqrt K0`).
    H2,
    /// `d_rho(u, v) >= pi(z) / K1` on sampled pairs, with its companions.
    H3,
    /// Family paths: `sum min(rho*(v_i), rho*(v_{i+1})) >= 1`.
    H3Prime,
    /// Descendant sums of `pi^p`: exact on the tree, within `K2` on the graph.
    H4,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::Tree,
        Condition::H1,
        Condition::Normalization,
        Condition::H2,
        Condition::H3,
        Condition::H3Prime,
        Condition::H4,
    ];
}

impl std::str::FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tree" => Condition::Tree,
            "h1" => Condition::H1,
            "normalization" | "norm" => Condition::Normalization,
            "h2" => Condition::H2,
            "h3" => Condition::H3,
            "h3prime" | "h3'" => Condition::H3Prime,
            "h4" => Condition::H4,
            _ => return Err(Error::Parameter(format!("unknown certificate {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub vertices: Vec<Vertex>,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub status: CertStatus,
    pub checked: u64,
    pub violations: u64,
    /// Extremal measured value (meaning per certificate, see `detail`).
    pub achieved: f64,
    /// The bound it is compared with.
    pub theoretical: f64,
    /// First violation, or the extremal case when everything passed.
    pub witness: Option<Witness>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.status != CertStatus::Fail
    }
}

/// Accumulates checks for one certificate. Keeps the first violation as the
/// witness and otherwise the tightest case.
struct Tally {
    name: String,
    checked: u64,
    violations: u64,
    achieved: f64,
    theoretical: f64,
    witness: Option<Witness>,
    slack: f64,
    notes: Vec<String>,
}

impl Tally {
    fn new(name: &str, theoretical: f64) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            violations: 0,
            achieved: f64::NEG_INFINITY,
            theoretical,
            witness: None,
            slack: f64::INFINITY,
            notes: Vec::new(),
        }
    }

    /// Record one check. `achieved` feeds the running maximum; `slack` ranks
    /// passing cases (smaller is tighter).
    fn record(&mut self, ok: bool, achieved: f64, slack: f64, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        if achieved > self.achieved {
            self.achieved = achieved;
        }
        if !ok {
            self.violations += 1;
            if self.violations == 1 {
                self.witness = Some(witness());
            }
        } else if self.violations == 0 && slack < self.slack {
            self.slack = slack;
            self.witness = Some(witness());
        }
    }

    fn finish(self) -> Certificate {
        Certificate {
            status: if self.violations == 0 { CertStatus::Pass } else { CertStatus::Fail },
            name: self.name,
            checked: self.checked,
            violations: self.violations,
            achieved: if self.checked == 0 { 0.0 } else { self.achieved },
            theoretical: self.theoretical,
            witness: self.witness,
            notes: self.notes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Sampled vertex pairs when the pair set exceeds the exhaustive limit.
    pub pair_samples: usize,
    /// Random family paths on top of the solver's active paths.
    pub path_samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { pair_samples: 2000, path_samples: 1000, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub seed: u64,
    pub certificates: Vec<Certificate>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

fn check_alignment(graph: &FillingGraph, w: &WeightSystem) -> Result<()> {
    if w.vertices.as_slice() != graph.vertices() {
        return Err(Error::Format("weight system does not match the filling graph".into()));
    }
    Ok(())
}

/// Run the requested certificates.
pub fn certify(
    graph: &FillingGraph,
    w: &WeightSystem,
    which: &[Condition],
    opts: &CertifyOptions,
) -> Result<CertificateReport> {
    check_alignment(graph, w)?;
    let mut certificates = Vec::new();
    let mut which = which.to_vec();
    which.sort();
    which.dedup();
    for c in which {
        match c {
            Condition::Tree => certificates.push(certify_tree(graph)),
            Condition::H1 => certificates.push(certify_h1(graph, w)),
            Condition::Normalization => certificates.push(certify_normalization(graph, w)),
            Condition::H2 => certificates.extend(certify_h2(graph, w)),
            Condition::H3 => certificates.extend(certify_h3(graph, w, opts)?),
            Condition::H3Prime => certificates.extend(certify_h3_prime(graph, w, opts)?),
            Condition::H4 => certificates.extend(certify_h4(graph, w)),
        }
    }
    Ok(CertificateReport { seed: opts.seed, certificates })
}

pub fn certify_tree(graph: &FillingGraph) -> Certificate {
    let mut t = Tally::new("tree", 0.0);
    match graph.check_tree() {
        Ok(()) => t.record(true, 0.0, 0.0, || Witness {
            vertices: Vec::new(),
            value: 0.0,
            bound: 0.0,
            detail: "spanning tree of graph edges".into(),
        }),
        Err(d) => t.record(false, 1.0, 0.0, || Witness {
            vertices: vec![d.vertex],
            value: 1.0,
            bound: 0.0,
            detail: d.reason,
        }),
    }
    t.checked = graph.len() as u64;
    t.finish()
}

/// `eta_- <= rho(w) <= max(eta_+, (1 - eta_-^p)^(1/p))` at a nonroot vertex.
pub fn h1_holds(w: &WeightSystem, v: usize) -> bool {
    let c = &w.constants;
    tol::within(w.rho[v], c.eta_minus, c.rho_upper())
}

pub fn certify_h1(graph: &FillingGraph, w: &WeightSystem) -> Certificate {
    let c = &w.constants;
    let upper = c.rho_upper();
    let mut t = Tally::new("h1", upper);
    let mut lo = f64::INFINITY;
    for v in 1..graph.len() {
        let r = w.rho[v];
        lo = lo.min(r);
        let slack = ((r - c.eta_minus) / c.eta_minus).min((upper - r) / upper);
        t.record(h1_holds(w, v), r, slack, || Witness {
            vertices: vec![graph.vertex(v)],
            value: r,
            bound: if r < c.eta_minus { c.eta_minus } else { upper },
            detail: format!("rho in [eta_-, upper] = [{}, {upper}]", c.eta_minus),
        });
    }
    t.notes.push(format!("min rho {lo}, eta_- {}", c.eta_minus));
    t.finish()
}

/// `sum_{D1(v)} rho^p - 1`.
pub fn normalization_defect(graph: &FillingGraph, w: &WeightSystem, v: usize) -> f64 {
    let p = w.constants.p;
    graph.tree_children(v).iter().map(|&c| w.rho[c].powf(p)).sum::<f64>() - 1.0
}

pub fn certify_normalization(graph: &FillingGraph, w: &WeightSystem) -> Certificate {
    let mut t = Tally::new("normalization", tol::NORM_TOL);
    for v in 0..graph.level(graph.depth()).start {
        let d = normalization_defect(graph, w, v);
        t.record(d.abs() <= tol::NORM_TOL, d.abs(), tol::NORM_TOL - d.abs(), || Witness {
            vertices: vec![graph.vertex(v)],
            value: d + 1.0,
            bound: 1.0,
            detail: "sum of rho^p over the tree children".into(),
        });
    }
    t.finish()
}

pub fn certify_h2(graph: &FillingGraph, w: &WeightSystem) -> Vec<Certificate> {
    let k0 = w.constants.k0;
    let hk = k0.sqrt();
    let mut all = Tally::new("h2", k0);
    let mut horiz = Tally::new("h2_horizontal", hk);
    for (a, b, kind) in graph.edges() {
        let r = w.pi[a] / w.pi[b];
        let worst = r.max(1.0 / r);
        let wit = || Witness {
            vertices: vec![graph.vertex(a), graph.vertex(b)],
            value: worst,
            bound: k0,
            detail: format!("{} edge pi ratio", kind.tag()),
        };
        all.record(tol::within(r, 1.0 / k0, k0), worst, k0 / worst, wit);
        if kind == crate::graph::EdgeKind::Horizontal {
            horiz.record(tol::within(r, 1.0 / hk, hk), worst, hk / worst, || Witness {
                vertices: vec![graph.vertex(a), graph.vertex(b)],
                value: worst,
                bound: hk,
                detail: "horizontal pi ratio against sqrt(K0)".into(),
            });
        }
    }
    vec![all.finish(), horiz.finish()]
}

pub fn certify_h4(graph: &FillingGraph, w: &WeightSystem) -> Vec<Certificate> {
    let p = w.constants.p;
    let k2 = w.constants.k2;
    let mut tree = Tally::new("h4_tree", tol::NORM_TOL);
    let mut full = Tally::new("h4_graph", k2);
    for v in 0..graph.len() {
        let base = w.pi[v].powf(p);
        for j in 1..=(graph.depth() - graph.level_of(v)) {
            let s: f64 = tree_descendants(graph, v, j).iter().map(|&u| w.pi[u].powf(p)).sum();
            let dev = (s - base).abs();
            tree.record(dev <= tol::NORM_TOL, dev, tol::NORM_TOL - dev, || Witness {
                vertices: vec![graph.vertex(v)],
                value: s,
                bound: base,
                detail: format!("sum of pi^p over tree descendants {j} levels down"),
            });
            let g: f64 = graph_descendants(graph, v, j).iter().map(|&u| w.pi[u].powf(p)).sum();
            let r = g / base;
            let worst = r.max(1.0 / r);
            full.record(tol::within(r, 1.0 / k2, k2), worst, k2 / worst, || Witness {
                vertices: vec![graph.vertex(v)],
                value: r,
                bound: k2,
                detail: format!("graph-descendant sum of pi^p over pi(v)^p, {j} levels down"),
            });
        }
    }
    vec![tree.finish(), full.finish()]
}

/// Vertex pairs for the distance certificates: every pair when there are at
/// most [`EXHAUSTIVE_PAIRS`], otherwise seeded samples of distinct vertices.
pub fn certificate_pairs(n: usize, samples: usize, seed: u64) -> (Vec<(usize, usize)>, bool) {
    let total = n * n.saturating_sub(1) / 2;
    if total <= EXHAUSTIVE_PAIRS {
        let pairs = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
        return (pairs, true);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    while pairs.len() < samples {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            pairs.push((u.min(v), u.max(v)));
        }
    }
    pairs.sort_unstable();
    (pairs, false)
}

pub fn certify_h3(graph: &FillingGraph, w: &WeightSystem, opts: &CertifyOptions) -> Result<Vec<Certificate>> {
    let c = &w.constants;
    let (k0, k1) = (c.k0, c.k1);
    let max_rho = w.rho.iter().skip(1).fold(0.0f64, |a, &b| a.max(b));
    let upper_c = 2.0 * (k0 + 1.0) / (1.0 - max_rho);
    let (pairs, exhaustive) = certificate_pairs(graph.len(), opts.pair_samples, opts.seed);
    let mut sources: Vec<usize> = pairs.iter().map(|&(u, _)| u).collect();
    sources.dedup();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_iter()
        .map(|&u| (distances_from(graph, &w.pi, u), ell_distances_from(graph, &w.pi_star, k0, u)))
        .collect();
    let mut lower = Tally::new("h3", k1);
    let mut tree = Tally::new("h3_tree", k0.powi(6));
    let mut upper = Tally::new("h3_upper", upper_c);
    let mut si = 0;
    for &(u, v) in &pairs {
        while sources[si] != u {
            si += 1;
        }
        let (d, l) = (rows[si].0[v], rows[si].1[v]);
        let z = compute_z(graph, u, v);
        let pz = w.pi[z];
        let wit = |value: f64, bound: f64, detail: &str| Witness {
            vertices: vec![graph.vertex(u), graph.vertex(v), graph.vertex(z)],
            value,
            bound,
            detail: detail.into(),
        };
        let need = pz / d;
        lower.record(tol::le(need, k1), need, k1 / need, || wit(d, pz / k1, "d_rho(u,v) against pi(z)/K1"));
        let need_t = pz / l;
        tree.record(tol::le(need_t, k0.powi(6)), need_t, k0.powi(6) / need_t, || {
            wit(l, pz / k0.powi(6), "tree-subgraph length against pi(z)/K0^6")
        });
        let ratio = d / pz;
        upper.record(tol::le(ratio, upper_c), ratio, upper_c / ratio, || {
            wit(d, upper_c * pz, "d_rho(u,v) against C pi(z), C = 2(K0+1)/(1 - max rho)")
        });
    }
    let note = format!("{} pairs, {}", pairs.len(), if exhaustive { "exhaustive" } else { "sampled" });
    let mut out = Vec::new();
    for mut t in [lower, tree, upper] {
        t.notes.push(note.clone());
        out.push(t.finish());
    }
    Ok(out)
}

/// A uniformly random member path of `family` by self-avoiding random walks
/// from a random source; `None` if 100 walks get stuck.
fn random_path(family: &PathFamily, rng: &mut impl Rng) -> Option<Vec<usize>> {
    let sources: Vec<usize> = (0..family.len()).filter(|&i| family.source[i]).collect();
    if sources.is_empty() {
        return None;
    }
    for _ in 0..100 {
        let mut path = vec![sources[rng.gen_range(0..sources.len())]];
        let mut seen = vec![false; family.len()];
        seen[path[0]] = true;
        loop {
            let u = *path.last().unwrap();
            if family.sink[u] {
                return Some(path);
            }
            let next: Vec<usize> = family.adjacency[u].iter().copied().filter(|&x| !seen[x]).collect();
            if next.is_empty() {
                break;
            }
            let x = next[rng.gen_range(0..next.len())];
            seen[x] = true;
            path.push(x);
        }
    }
    None
}

/// Family-level path sums on the solver's active paths and on random member
/// paths: `sum min(rho*(v_i), rho*(v_{i+1})) >= 1`, and the auxiliary length
/// of the path against `max(pi*(v), pi*(g(v_1)_{n_v}))`.
pub fn certify_h3_prime(graph: &FillingGraph, w: &WeightSystem, opts: &CertifyOptions) -> Result<Vec<Certificate>> {
    let bases: Vec<usize> = (0..graph.level(graph.depth()).start).collect();
    let families: Vec<(usize, PathFamily)> = bases
        .par_iter()
        .map(|&v| PathFamily::for_vertex(graph, v, 1).map(|f| (v, f)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, f)| !f.lightest_paths(&vec![0.0; f.len()]).is_empty())
        .collect();
    let mut paths: Vec<(usize, Vec<usize>)> = w.active_paths.clone();
    let active = paths.len();
    if !families.is_empty() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
        let mut attempts = 0;
        while paths.len() < active + opts.path_samples && attempts < 20 * opts.path_samples {
            attempts += 1;
            let (v, f) = &families[rng.gen_range(0..families.len())];
            if let Some(p) = random_path(f, &mut rng) {
                paths.push((*v, p.iter().map(|&i| f.labels[i]).collect()));
            }
        }
    }
    let mut sum_t = Tally::new("h3_prime", 1.0);
    let mut ell_t = Tally::new("family_length", 1.0);
    let k0 = w.constants.k0;
    for (v, path) in &paths {
        let s: f64 = path.windows(2).map(|e| w.rho_star[e[0]].min(w.rho_star[e[1]])).sum();
        let deficit = 1.0 - s;
        sum_t.record(s >= 1.0 - tol::NORM_TOL, deficit, s - 1.0, || Witness {
            vertices: path.iter().map(|&u| graph.vertex(u)).collect(),
            value: s,
            bound: 1.0,
            detail: format!("family of {}", crate::pipeline::fmt_vertex(graph, *v)),
        });
        let l = ell_length(graph, &w.pi_star, k0, path)?;
        let anc = ancestor(graph, path[0], graph.level_of(*v));
        let need = w.pi_star[*v].max(w.pi_star[anc]);
        ell_t.record(tol::le(need, l), need / l, l / need - 1.0, || Witness {
            vertices: path.iter().map(|&u| graph.vertex(u)).collect(),
            value: l,
            bound: need,
            detail: format!("auxiliary length in the family of {}", crate::pipeline::fmt_vertex(graph, *v)),
        });
    }
    let note = format!("{active} active paths, {} random paths, {} nonempty families", paths.len() - active, families.len());
    sum_t.notes.push(note.clone());
    ell_t.notes.push(note);
    Ok(vec![sum_t.finish(), ell_t.finish()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub r: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityProfile {
    pub p: f64,
    pub centers: usize,
    pub scales: Vec<ScaleRow>,
    /// Largest over smallest ratio across every scale.
    pub spread: f64,
}

/// Ball counts `N(y, r)` in `d_rho` over `N_total (r/diam)^p` for radii
/// `diam 2^-i` down to the smallest positive distance (at most `max_scales`).
pub fn regularity_profile(bm: &BoundaryMetric, p: f64, max_scales: usize) -> Result<RegularityProfile> {
    let n = bm.len();
    let positive = || bm.matrix.iter().copied().filter(|&d| d > 0.0);
    let diam = positive().fold(0.0, f64::max);
    let gap = positive().fold(f64::INFINITY, f64::min);
    let mut radii = Vec::new();
    let mut r = diam;
    while r >= gap && radii.len() < max_scales {
        radii.push(r);
        r *= 0.5;
    }
    if radii.is_empty() {
        return Err(Error::Domain("regularity scale window is empty".into()));
    }
    let scales: Vec<ScaleRow> = radii
        .iter()
        .map(|&r| {
            let expected = n as f64 * (r / diam).powf(p);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for y in 0..n {
                let count = (0..n).filter(|&z| tol::le(bm.get(y, z), r)).count() as f64;
                lo = lo.min(count / expected);
                hi = hi.max(count / expected);
            }
            ScaleRow { r, min_ratio: lo, max_ratio: hi }
        })
        .collect();
    let lo = scales.iter().map(|s| s.min_ratio).fold(f64::INFINITY, f64::min);
    let hi = scales.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
    Ok(RegularityProfile { p, centers: n, scales, spread: hi / lo })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionProfile {
    pub triples: usize,
    pub exhaustive: bool,
    pub t_min: f64,
    pub t_max: f64,
    pub envelope: Vec<(f64, f64)>,
    pub bounded: bool,
    pub seed: u64,
}

/// Distortion of `target` against `base` on the ids of `target`.
pub fn distortion_profile(base: &PointCloudSpace, target: &PointCloudSpace, count: usize, seed: u64) -> Result<DistortionProfile> {
    let index: std::collections::HashMap<&str, usize> = base.ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let map: Vec<usize> = target
        .ids()
        .iter()
        .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::Format(format!("id {id} missing from the base space"))))
        .collect::<Result<_>>()?;
    let s = sample_distortion(target.len(), |i, j| base.dist(map[i], map[j]), |i, j| target.dist(i, j), count, seed);
    let envelope = s.envelope();
    let t_min = s.samples.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let t_max = s.samples.iter().map(|x| x.0).fold(0.0, f64::max);
    Ok(DistortionProfile {
        triples: s.samples.len(),
        exhaustive: s.exhaustive,
        t_min,
        t_max,
        bounded: envelope.iter().all(|e| e.1.is_finite()),
        envelope,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_sampling() {
        let (p, ex) = certificate_pairs(10, 5, 1);
        assert!(ex);
        assert_eq!(p.len(), 45);
        let (p, ex) = certificate_pairs(1000, 1500, 1);
        assert!(!ex);
        assert_eq!(p.len(), 1500);
        assert!(p.iter().all(|&(u, v)| u < v));
    }
}
