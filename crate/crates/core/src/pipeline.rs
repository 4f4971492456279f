//! Weight construction on a resampled filling graph with its tree:
//! sigma -> mu1 -> mu2 -> pi0 -> phi -> (omega) -> rho -> pi.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Combinatorics;
use crate::error::{Error, Result};
use crate::graph::{FillingGraph, Vertex};
use crate::modulus::{solve_modulus, PathFamily, SolveStatus, SolverOptions};
use crate::params::{check_n0, Diagnostics, Mode};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub p: f64,
    pub mode: Mode,
    /// Overrides the default `epsilon` of the mode.
    pub epsilon: Option<f64>,
    /// Overrides the default `epsilon0` of the mode.
    pub epsilon0: Option<f64>,
    pub k_d: f64,
    pub solver: SolverOptions,
}

impl PipelineConfig {
    pub fn new(p: f64, mode: Mode, k_d: f64) -> Self {
        Self { p, mode, epsilon: None, epsilon0: None, k_d, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub p: f64,
    pub alpha: f64,
    pub tau: f64,
    pub k_d: f64,
    pub n1: u64,
    pub n2: u64,
    /// Largest `|T(v)|`.
    pub m: u64,
    pub epsilon: f64,
    pub epsilon0: f64,
    /// Largest family modulus met while building sigma.
    pub max_modulus: f64,
    pub n0: usize,
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub k: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub mode: Mode,
}

impl ConstantsRecord {
    /// Upper bound on every `rho`.
    pub fn rho_upper(&self) -> f64 {
        self.eta_plus.max((1.0 - self.eta_minus.powf(self.p)).powf(1.0 / self.p))
    }
}

/// `K0` from `eta_-`, `eta_+` and `p`: the square of the tree-edge constant.
pub fn k0_from(eta_minus: f64, eta_plus: f64, p: f64) -> f64 {
    let a = 1.0 / eta_minus;
    let b = a * (eta_minus.powf(-p) - 1.0).powf(1.0 / p);
    let c = eta_plus / (eta_minus * eta_minus);
    let m = a.max(b).max(c);
    m * m
}

/// Largest number of same-level centers within `6 r` of a center.
pub fn packing_n1(graph: &FillingGraph) -> u64 {
    let mut best = 0;
    for k in 0..=graph.depth() {
        let six = 6.0 * graph.radius(k);
        for v in graph.level(k) {
            let c = graph.level(k).filter(|&u| tol::lt(graph.center_dist(u, v), six)).count();
            best = best.max(c as u64);
        }
    }
    best
}

/// Output of the sigma stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaStage {
    pub sigma: Vec<f64>,
    /// Modulus of the family at each vertex; `None` on the deepest level.
    pub moduli: Vec<Option<f64>>,
    /// `(base vertex, path)` for every active path, in graph indices.
    pub active_paths: Vec<(usize, Vec<usize>)>,
    /// Smallest sigma-sum over the lightest path of each nonempty family.
    pub min_path_sum: f64,
    /// Families whose solve hit an iteration cap.
    pub capped: Vec<usize>,
}

/// Pointwise maximum of the optimal densities of every family one level
/// down, followed by an admissibility re-check with the separation oracle.
pub fn build_sigma(graph: &FillingGraph, p: f64, opts: &SolverOptions) -> Result<SigmaStage> {
    let bases: Vec<usize> = (0..graph.level(graph.depth()).start).collect();
    let solved = bases
        .par_iter()
        .map(|&v| {
            let family = PathFamily::for_vertex(graph, v, 1)?;
            let r = solve_modulus(&family, p, opts)?;
            Ok((family, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sigma = vec![0.0; graph.len()];
    let mut moduli = vec![None; graph.len()];
    let mut active_paths = Vec::new();
    let mut capped = Vec::new();
    for (&v, (family, r)) in bases.iter().zip(&solved) {
        moduli[v] = Some(r.value);
        if r.status == SolveStatus::IterationCap {
            capped.push(v);
        }
        for (i, &w) in family.labels.iter().enumerate() {
            if family.universe[i] {
                sigma[w] = f64::max(sigma[w], r.sigma[i]);
            }
        }
        for path in &r.active_paths {
            active_paths.push((v, path.iter().map(|&i| family.labels[i]).collect()));
        }
    }
    let mut min_path_sum = f64::INFINITY;
    for (family, _) in &solved {
        let local: Vec<f64> = family.labels.iter().map(|&w| sigma[w]).collect();
        if let Some((s, _)) = family.lightest_paths(&local).first() {
            min_path_sum = min_path_sum.min(*s);
        }
    }
    Ok(SigmaStage { sigma, moduli, active_paths, min_path_sum, capped })
}

/// Fix `epsilon`, `epsilon0` and the derived constants.
///
/// Theory mode takes `epsilon` just under half the bound
/// `2^(p+2) (N2+N1+1)^2 epsilon < 1`, `epsilon0 = epsilon / (2 N2^2)`, and
/// fails if any family modulus reaches `epsilon0`. Practical mode takes
/// `epsilon = 1 / (2^(p+2) (N2+1))`, which puts `eta_+^p` at 1/2, and
/// `epsilon0` equal to the largest modulus met.
pub fn resolve_constants(
    graph: &FillingGraph,
    comb: &Combinatorics,
    cfg: &PipelineConfig,
    max_modulus: f64,
    diag: &mut Diagnostics,
) -> Result<ConstantsRecord> {
    let p = cfg.p;
    let n1 = packing_n1(graph);
    let n2 = graph.n2;
    let m = comb.max_extended_children().max(1) as u64;
    let theory_bound = 1.0 / (2f64.powf(p + 2.0) * ((n2 + n1 + 1) as f64).powi(2));
    let n2sq = (n2 * n2) as f64;
    let (epsilon, epsilon0) = match cfg.mode {
        Mode::Theory => {
            let eps = cfg.epsilon.unwrap_or(0.5 * theory_bound);
            let eps0 = cfg.epsilon0.unwrap_or(eps / (2.0 * n2sq));
            (eps, eps0)
        }
        Mode::Practical => {
            let eps = cfg.epsilon.unwrap_or(1.0 / (2f64.powf(p + 2.0) * (n2 + 1) as f64));
            (eps, cfg.epsilon0.unwrap_or(max_modulus))
        }
    };
    if !(epsilon > 0.0) || !(epsilon0 >= 0.0) {
        return Err(Error::Constants(format!("epsilon={epsilon} and epsilon0={epsilon0} must be positive")));
    }
    let mode = cfg.mode;
    let con = |e: Error| match e {
        Error::Parameter(s) => Error::Constants(s),
        other => other,
    };
    diag.require(mode, epsilon < theory_bound, "epsilon", || {
        format!("epsilon={epsilon} violates 2^(p+2)(N2+N1+1)^2 epsilon < 1 (bound {theory_bound:.6e}, N1={n1}, N2={n2})")
    })
    .map_err(con)?;
    diag.require(mode, n2sq * epsilon0 < epsilon, "epsilon0", || {
        format!("epsilon0={epsilon0} violates N2^2 epsilon0 < epsilon (N2={n2}, epsilon={epsilon})")
    })
    .map_err(con)?;
    if mode == Mode::Theory && max_modulus >= epsilon0 {
        return Err(Error::Constants(format!(
            "family modulus {max_modulus:.6e} is not below epsilon0={epsilon0:.6e} at n0={}; \
             a larger n0 with modulus below epsilon0 exists whenever the modulus tends to zero, so increase n0",
            graph.step
        )));
    }
    check_n0(graph.alpha, graph.tau, graph.step, mode, diag).map_err(con)?;

    let eta_minus = (epsilon / m as f64).powf(1.0 / p);
    let eta_plus = 2f64.powf(1.0 + 1.0 / p) * ((n2 + 1) as f64).powf(1.0 / p) * epsilon.powf(1.0 / p);
    diag.require(mode, eta_plus < 1.0, "eta_plus", || format!("eta_plus={eta_plus} is not below 1"))
        .map_err(con)?;
    let k0 = k0_from(eta_minus, eta_plus, p);
    Ok(ConstantsRecord {
        p,
        alpha: graph.alpha,
        tau: graph.tau,
        k_d: cfg.k_d,
        n1,
        n2,
        m,
        epsilon,
        epsilon0,
        max_modulus,
        n0: graph.step,
        eta_minus,
        eta_plus,
        k: 1.0 / eta_minus,
        k0,
        k1: k0.powi(6) * (k0 + 1.0),
        k2: (n2 + 1) as f64 * k0.powf(p),
        mode,
    })
}

/// `mu1 = (sigma^p + eta_-^p)^(1/p)`.
pub fn lift_mu1(sigma: &[f64], eta_minus: f64, p: f64) -> Vec<f64> {
    let e = eta_minus.powf(p);
    sigma.iter().map(|s| (s.powf(p) + e).powf(1.0 / p)).collect()
}

/// `mu2(v) = 2 max { mu1(v') : v' in S(v) }`.
pub fn lift_mu2(mu1: &[f64], comb: &Combinatorics) -> Vec<f64> {
    (0..mu1.len())
        .map(|v| 2.0 * comb.siblings(v).iter().map(|&u| mu1[u]).fold(0.0, f64::max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pi0Stage {
    pub pi1: Vec<f64>,
    pub pi0: Vec<f64>,
    /// Oriented horizontal edges `(from, to)`: `pi1(from) > K pi1(to)`.
    pub oriented: Vec<(usize, usize)>,
    /// Vertices with both an inbound and an outbound oriented edge.
    pub mixed: Vec<usize>,
    /// Failed postconditions.
    pub violations: Vec<String>,
}

/// Level-by-level construction of `pi0` with horizontal ratios in `[1/K, K]`.
///
/// At each level, `pi1(w) = mu2(w) pi0(parent)`. An edge whose `pi1` ratio
/// leaves `[1/K, K]` is oriented towards the smaller end; a vertex with an
/// inbound edge takes `max pi1(neighbor) / K`, every other vertex keeps
/// `pi1`. On level 1 this is `pi0 = mu2` whenever the ratios of `mu2` are
/// already within `[1/K, K]`.
pub fn inductive_pi0(graph: &FillingGraph, mu2: &[f64], k: f64) -> Result<Pi0Stage> {
    if !(k > 1.0) {
        return Err(Error::Constants(format!("K={k} must exceed 1")));
    }
    let n = graph.len();
    let mut pi1 = vec![1.0; n];
    let mut pi0 = vec![1.0; n];
    let mut oriented = Vec::new();
    let mut mixed = Vec::new();
    let mut violations = Vec::new();
    for lvl in 1..=graph.depth() {
        let range = graph.level(lvl);
        for w in range.clone() {
            let parent = graph.tree_parent(w).ok_or_else(|| no_parent(graph, w))?;
            pi1[w] = mu2[w] * pi0[parent];
        }
        let mut inbound = vec![false; n];
        let mut outbound = vec![false; n];
        for v in range.clone() {
            for &u in graph.horizontal(v) {
                if u > v {
                    let ratio = pi1[v] / pi1[u];
                    if ratio > k {
                        oriented.push((v, u));
                        outbound[v] = true;
                        inbound[u] = true;
                    } else if ratio < 1.0 / k {
                        oriented.push((u, v));
                        outbound[u] = true;
                        inbound[v] = true;
                    }
                }
            }
        }
        for v in range.clone() {
            pi0[v] = if inbound[v] {
                graph.horizontal(v).iter().map(|&u| pi1[u]).fold(0.0, f64::max) / k
            } else {
                pi1[v]
            };
            if inbound[v] && outbound[v] {
                mixed.push(v);
            }
        }
        for v in range.clone() {
            for &u in graph.horizontal(v) {
                if u > v && !tol::within(pi0[v] / pi0[u], 1.0 / k, k) {
                    violations.push(format!(
                        "horizontal edge {} ~ {}: pi0 ratio {} outside [1/K, K], K={k}",
                        fmt_vertex(graph, v),
                        fmt_vertex(graph, u),
                        pi0[v] / pi0[u]
                    ));
                }
            }
            let parent = graph.tree_parent(v).expect("checked above");
            let r = pi0[parent] / pi0[v];
            if !tol::within(r, 1.0, k) {
                violations.push(format!(
                    "tree edge {} -> {}: parent ratio {r} outside [1, K], K={k}",
                    fmt_vertex(graph, parent),
                    fmt_vertex(graph, v)
                ));
            }
        }
    }
    Ok(Pi0Stage { pi1, pi0, oriented, mixed, violations })
}

/// `phi(w) = pi0(w) / pi0(parent(w))`, `phi(root) = 1`.
pub fn derive_phi(graph: &FillingGraph, pi0: &[f64]) -> Result<Vec<f64>> {
    let mut phi = vec![1.0; graph.len()];
    for w in 1..graph.len() {
        let parent = graph.tree_parent(w).ok_or_else(|| no_parent(graph, w))?;
        phi[w] = pi0[w] / pi0[parent];
    }
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaStage {
    /// `omega(v)` for every vertex with a next level.
    pub omega: Vec<Option<f64>>,
    pub rho: Vec<f64>,
    /// Vertices whose only tree child is their own center one level down.
    pub single_child: Vec<usize>,
}

/// Rescale the direct descendant `w_v` so that `sum_{D1(v)} rho^p = 1`.
pub fn compute_omega_rho(graph: &FillingGraph, phi: &[f64], p: f64) -> Result<OmegaStage> {
    let mut rho = phi.to_vec();
    rho[0] = 1.0;
    let mut omega = vec![None; graph.len()];
    let mut single_child = Vec::new();
    for v in 0..graph.level(graph.depth()).start {
        let lvl = graph.level_of(v);
        let wv = graph
            .index_of(graph.point_of(v), lvl + 1)
            .ok_or_else(|| Error::Construction(format!("{} has no direct descendant", fmt_vertex(graph, v))))?;
        if graph.tree_parent(wv) != Some(v) {
            return Err(Error::Construction(format!(
                "direct descendant of {} is not its tree child",
                fmt_vertex(graph, v)
            )));
        }
        let others: f64 = graph.tree_children(v).iter().filter(|&&w| w != wv).map(|&w| phi[w].powf(p)).sum();
        if others >= 1.0 {
            return Err(Error::Constants(format!(
                "sum of phi^p over the children of {} other than the direct descendant is {others} >= 1; \
                 lower epsilon or raise n0",
                fmt_vertex(graph, v)
            )));
        }
        if graph.tree_children(v).len() == 1 {
            single_child.push(v);
        }
        let w = (1.0 - others).powf(1.0 / p) / phi[wv];
        omega[v] = Some(w);
        rho[wv] = w * phi[wv];
    }
    Ok(OmegaStage { omega, rho, single_child })
}

/// `pi(w) = prod_{j=1..n_w} rho(g(w)_j)`, top-down along tree parents.
pub fn accumulate_pi(graph: &FillingGraph, rho: &[f64]) -> Result<Vec<f64>> {
    let mut pi = vec![1.0; graph.len()];
    for w in 1..graph.len() {
        let parent = graph.tree_parent(w).ok_or_else(|| no_parent(graph, w))?;
        pi[w] = pi[parent] * rho[w];
    }
    Ok(pi)
}

/// `f*(v) = min { f(u) : u in SI(v) }`.
pub fn close_sibling_min(values: &[f64], comb: &Combinatorics) -> Vec<f64> {
    (0..values.len())
        .map(|v| comb.close_siblings(v).iter().map(|&u| values[u]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Every stage of the construction, indexed by graph vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSystem {
    pub constants: ConstantsRecord,
    pub vertices: Vec<Vertex>,
    pub parent: Vec<Option<usize>>,
    pub sigma: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub pi1: Vec<f64>,
    pub pi0: Vec<f64>,
    pub phi: Vec<f64>,
    pub omega: Vec<Option<f64>>,
    pub rho: Vec<f64>,
    pub pi: Vec<f64>,
    pub pi_star: Vec<f64>,
    pub rho_star: Vec<f64>,
    pub moduli: Vec<Option<f64>>,
    pub oriented: Vec<(usize, usize)>,
    pub active_paths: Vec<(usize, Vec<usize>)>,
    pub diagnostics: Diagnostics,
}

/// Run every stage on a graph with its tree attached.
pub fn run_pipeline(graph: &FillingGraph, cfg: &PipelineConfig) -> Result<WeightSystem> {
    if !graph.has_tree() {
        return Err(Error::Construction("the weight pipeline needs the tree restriction".into()));
    }
    if let Err(d) = graph.check_tree() {
        return Err(Error::Construction(format!("tree defect at ({}, {}): {}", d.vertex.point, d.vertex.level, d.reason)));
    }
    let p = cfg.p;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::UnsupportedExponent(p));
    }
    let mode = cfg.mode;
    let mut diag = graph.diagnostics.clone();
    let comb = Combinatorics::new(graph);
    let stage = build_sigma(graph, p, &cfg.solver)?;
    let max_modulus = stage.moduli.iter().flatten().fold(0.0, |a: f64, &b| a.max(b));
    if !stage.capped.is_empty() {
        diag.note("sigma", format!("{} family solves hit an iteration cap", stage.capped.len()));
    }
    if stage.min_path_sum < 1.0 - cfg.solver.feas_tol {
        diag.require(mode, false, "sigma", || {
            format!("sigma leaves a family path with sum {} < 1", stage.min_path_sum)
        })
        .map_err(to_construction)?;
    }
    let constants = resolve_constants(graph, &comb, cfg, max_modulus, &mut diag)?;
    let (em, ep) = (constants.eta_minus, constants.eta_plus);

    let mu1 = lift_mu1(&stage.sigma, em, p);
    let mu2 = lift_mu2(&mu1, &comb);
    let pi0s = inductive_pi0(graph, &mu2, constants.k)?;
    for v in &pi0s.violations {
        diag.require(mode, false, "pi0", || v.clone()).map_err(to_construction)?;
    }
    if !pi0s.mixed.is_empty() {
        let v = pi0s.mixed[0];
        diag.require(mode, false, "pi0", || {
            format!("{} has both inbound and outbound oriented edges", fmt_vertex(graph, v))
        })
        .map_err(to_construction)?;
    }
    let phi = derive_phi(graph, &pi0s.pi0)?;
    for w in 1..graph.len() {
        if !tol::within(phi[w], em, ep) {
            diag.require(mode, false, "phi", || {
                format!("phi({})={} outside [eta_-, eta_+]=[{em}, {ep}]", fmt_vertex(graph, w), phi[w])
            })
            .map_err(to_construction)?;
            break;
        }
    }
    let om = compute_omega_rho(graph, &phi, p)?;
    for &v in &om.single_child {
        diag.note(
            "perfectness",
            format!(
                "{} has a single tree child at this resolution; its rho is 1 and the rho upper bound fails",
                fmt_vertex(graph, v)
            ),
        );
    }
    let pi = accumulate_pi(graph, &om.rho)?;
    let pi_star = close_sibling_min(&pi, &comb);
    let rho_star = close_sibling_min(&om.rho, &comb);
    Ok(WeightSystem {
        constants,
        vertices: graph.vertices().to_vec(),
        parent: (0..graph.len()).map(|v| graph.tree_parent(v)).collect(),
        sigma: stage.sigma,
        mu1,
        mu2,
        pi1: pi0s.pi1,
        pi0: pi0s.pi0,
        phi,
        omega: om.omega,
        rho: om.rho,
        pi,
        pi_star,
        rho_star,
        moduli: stage.moduli,
        oriented: pi0s.oriented,
        active_paths: stage.active_paths,
        diagnostics: diag,
    })
}

fn to_construction(e: Error) -> Error {
    match e {
        Error::Parameter(s) => Error::Construction(s),
        other => other,
    }
}

fn no_parent(graph: &FillingGraph, w: usize) -> Error {
    Error::Construction(format!("{} has no tree parent", fmt_vertex(graph, w)))
}

pub(crate) fn fmt_vertex(graph: &FillingGraph, v: usize) -> String {
    format!("({} {})", graph.space().id(graph.point_of(v)), graph.level_of(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::build_nets;
    use crate::space::{generate_cantor, PointCloudSpace};
    use std::sync::Arc;

    fn two_point_line() -> FillingGraph {
        // four points on a line; alpha = 2 gives a root and one level below it
        let s = PointCloudSpace::from_coords(
            (0..4).map(|i| format!("p{i}")).collect(),
            (0..4).map(|i| vec![i as f64]).collect(),
            crate::space::CoordMetric::Euclidean,
            "line",
        )
        .unwrap()
        .normalized();
        let s = Arc::new(s);
        let nets = build_nets(&s, 2.0, 3, 2.5, Mode::Practical).unwrap();
        crate::graph::build_graph(s, &nets, 7.0, 2.5, Mode::Practical).unwrap().attach_tree()
    }

    #[test]
    fn mu1_of_zero_is_eta_minus() {
        let m = lift_mu1(&[0.0, 0.25], 0.25, 1.0);
        assert_eq!(m[0], 0.25);
        assert_eq!(m[1], 0.5);
    }

    #[test]
    fn k0_formula() {
        let (em, ep, p) = (0.1f64, 0.5f64, 2.0f64);
        let a = 10.0f64;
        let b = 10.0 * (100.0f64 - 1.0).sqrt();
        let c = 50.0f64;
        assert!((k0_from(em, ep, p) - a.max(b).max(c).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn orientation_hand_trace() {
        // root with two children that are horizontal neighbors
        let g = two_point_line();
        let lvl1: Vec<usize> = g.level(1).collect();
        assert!(lvl1.len() >= 2);
        let (a, b) = (lvl1[0], lvl1[1]);
        assert!(g.is_horizontal_edge(a, b));
        let mut mu2 = vec![1.0; g.len()];
        for &v in &lvl1 {
            mu2[v] = 0.5;
        }
        mu2[b] = 0.1;
        let st = inductive_pi0(&g, &mu2, 2.0).unwrap();
        assert!(st.oriented.contains(&(a, b)));
        assert_eq!(st.pi0[a], 0.5);
        assert_eq!(st.pi0[b], 0.25);
    }

    #[test]
    fn omega_arithmetic() {
        let g = two_point_line();
        let root_children = g.tree_children(0).to_vec();
        let wv = g.index_of(g.point_of(0), 1).unwrap();
        let mut phi = vec![0.0; g.len()];
        phi[wv] = 0.4;
        let others: Vec<usize> = root_children.iter().copied().filter(|&w| w != wv).collect();
        for &w in &others {
            phi[w] = 0.3 / others.len() as f64;
        }
        for w in g.level(2) {
            phi[w] = 0.1;
        }
        let st = compute_omega_rho(&g, &phi, 1.0).unwrap();
        assert!((st.omega[0].unwrap() - 1.75).abs() < 1e-12);
        assert!((st.rho[wv] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn cantor_run_normalizes() {
        let s = Arc::new(generate_cantor(6, 1.0 / 3.0).unwrap());
        let nets = build_nets(&s, 3.0, 6, 3.0, Mode::Practical).unwrap();
        let g = crate::graph::resample_graph(s, &nets, 2, 7.0, 3.0, Mode::Practical).unwrap().attach_tree();
        let w = run_pipeline(&g, &PipelineConfig::new(2.0, Mode::Practical, 3.0)).unwrap();
        for v in 0..g.level(g.depth()).start {
            let s: f64 = g.tree_children(v).iter().map(|&c| w.rho[c].powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
