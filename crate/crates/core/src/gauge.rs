//! Gauge metrics on the point set of a space: distortion estimates, the
//! diameter-ratio density on a family level, and the diameter comparison
//! audit for balls of a filling graph.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FillingGraph;
use crate::modulus::PathFamily;
use crate::space::{snowflake, PointCloudSpace};
use crate::tol;

/// Distortion buckets per factor of two in `t`.
const BUCKETS_PER_OCTAVE: f64 = 4.0;
/// Triples are enumerated exhaustively up to this many points.
const EXHAUSTIVE_TRIPLES: usize = 64;

/// A distortion function `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distortion {
    /// `eta(t) = t^exponent`.
    Power { exponent: f64 },
    /// Monotone step envelope: `(t_upper, eta)` per bucket, increasing in both.
    Empirical { envelope: Vec<(f64, f64)> },
}

impl Distortion {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Distortion::Power { exponent } => Ok(t.powf(*exponent)),
            Distortion::Empirical { envelope } => {
                let Some(&(_, first)) = envelope.first() else {
                    return Err(Error::Sampling("empty distortion envelope".into()));
                };
                if t <= envelope[0].0 {
                    return Ok(first);
                }
                envelope.iter().find(|&&(upper, _)| t <= upper).map(|&(_, e)| e).ok_or_else(|| {
                    Error::Sampling(format!(
                        "distortion undefined at t={t}: largest sampled ratio is {}",
                        envelope.last().unwrap().0
                    ))
                })
            }
        }
    }
}

/// Raw distortion samples: `(t, ratio)` with `t = d12/d13` and
/// `ratio = theta12/theta13`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSamples {
    pub samples: Vec<(f64, f64)>,
    pub exhaustive: bool,
    pub seed: u64,
}

impl DistortionSamples {
    /// Bucket by quarter octaves of `t`, take the largest ratio per bucket,
    /// then the running maximum so the envelope is nondecreasing.
    pub fn envelope(&self) -> Vec<(f64, f64)> {
        let mut buckets: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
        for &(t, r) in &self.samples {
            let b = (t.log2() * BUCKETS_PER_OCTAVE).ceil() as i64;
            let e = buckets.entry(b).or_insert(0.0);
            *e = e.max(r);
        }
        let mut run = 0.0f64;
        buckets
            .into_iter()
            .map(|(b, r)| {
                run = run.max(r);
                (2f64.powf(b as f64 / BUCKETS_PER_OCTAVE), run)
            })
            .collect()
    }

    /// Largest relative deviation of the sampled ratios from `t^exponent`.
    pub fn power_law_deviation(&self, exponent: f64) -> f64 {
        self.samples
            .iter()
            .map(|&(t, r)| {
                let e = t.powf(exponent);
                (r - e).abs() / e.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

/// Distortion of `b` against `a` on triples of distinct points: exhaustive
/// up to 64 points, otherwise `count` seeded random triples.
pub fn sample_distortion(
    n: usize,
    a: impl Fn(usize, usize) -> f64,
    b: impl Fn(usize, usize) -> f64,
    count: usize,
    seed: u64,
) -> DistortionSamples {
    let mut samples = Vec::new();
    let mut push = |i: usize, j: usize, k: usize| {
        let (a12, a13, b12, b13) = (a(i, j), a(i, k), b(i, j), b(i, k));
        if a12 > 0.0 && a13 > 0.0 && b13 > 0.0 {
            samples.push((a12 / a13, b12 / b13));
        }
    };
    let exhaustive = n <= EXHAUSTIVE_TRIPLES;
    if exhaustive {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if i != j && i != k && j != k {
                        push(i, j, k);
                    }
                }
            }
        }
    } else if n >= 3 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let k = rng.gen_range(0..n);
            if i != j && i != k && j != k {
                push(i, j, k);
            }
        }
    }
    DistortionSamples { samples, exhaustive, seed }
}

/// A second metric `theta` on the points of a base space, with its
/// distortion function relative to the base.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeMetric {
    pub theta: PointCloudSpace,
    pub eta: Distortion,
    /// Samples behind an empirical `eta`; empty for analytic ones.
    pub eta_samples: Vec<(f64, f64)>,
}

impl GaugeMetric {
    /// `theta = d` with `eta(t) = t`.
    pub fn identity(space: &PointCloudSpace) -> Self {
        Self { theta: space.clone(), eta: Distortion::Power { exponent: 1.0 }, eta_samples: Vec::new() }
    }

    /// `theta = d^e` (renormalized) with `eta(t) = t^e`.
    pub fn snowflake(space: &PointCloudSpace, exponent: f64) -> Result<Self> {
        Ok(Self {
            theta: snowflake(space, exponent)?,
            eta: Distortion::Power { exponent },
            eta_samples: Vec::new(),
        })
    }

    /// Imported `theta` on the same ids; `eta` from the monotone envelope of
    /// sampled triples.
    pub fn empirical(space: &PointCloudSpace, theta: PointCloudSpace, count: usize, seed: u64) -> Result<Self> {
        if space.ids() != theta.ids() {
            return Err(Error::Format("gauge metric must list the same point ids as the space".into()));
        }
        let report = theta.check_metric(count, seed);
        if !report.ok() {
            return Err(Error::Metric(format!(
                "gauge metric fails the metric axioms (worst triangle excess {:e})",
                report.worst_excess
            )));
        }
        let s = sample_distortion(space.len(), |i, j| space.dist(i, j), |i, j| theta.dist(i, j), count, seed);
        let envelope = s.envelope();
        if envelope.is_empty() {
            return Err(Error::Sampling("no usable triples for the distortion estimate".into()));
        }
        Ok(Self { theta, eta: Distortion::Empirical { envelope }, eta_samples: s.samples })
    }

    fn diam(&self, set: &[usize]) -> f64 {
        let mut m = 0.0f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                m = m.max(self.theta.dist(i, j));
            }
        }
        m
    }
}

/// `4 eta(8) eta(K_d tau)`.
pub fn admissibility_constant(eta: &Distortion, k_d: f64, tau: f64) -> Result<f64> {
    Ok(4.0 * eta.eval(8.0)? * eta.eval(k_d * tau)?)
}

/// The diameter-ratio density on level `n + k` for the ball of `v`:
/// `diam_theta(B_w) / diam_theta(2B_v)` where `B_w` meets the closed double
/// ball, zero elsewhere. Indexed by position within the level.
pub fn gauge_admissible_density(gauge: &GaugeMetric, graph: &FillingGraph, v: usize, k: usize) -> Result<Vec<f64>> {
    let n = graph.level_of(v);
    if k == 0 || n + k > graph.depth() {
        return Err(Error::Depth(format!("offset {k} from level {n} exceeds depth {}", graph.depth())));
    }
    let space = graph.space();
    let xv = graph.point_of(v);
    let two = 2.0 * graph.radius(n);
    let double = space.ball(xv, two);
    let denom = gauge.diam(&double);
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!("theta-diameter of the double ball at vertex {v} is zero")));
    }
    Ok(graph
        .level(n + k)
        .map(|w| {
            let ball = graph.ball(w);
            if ball.iter().any(|&z| tol::le(space.dist(z, xv), two)) {
                gauge.diam(ball) / denom
            } else {
                0.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub vertex: usize,
    pub k: usize,
    /// Paths enumerated (`None` when the family exceeded the cap).
    pub enumerated: Option<usize>,
    /// Enumerated paths whose scaled sum is below 1.
    pub infeasible: usize,
    /// Smallest scaled path sum over the whole family (exact, by lightest path).
    pub min_sum: Option<f64>,
    /// Support balls on level `n + k` that are single points. Their density
    /// is zero only because the sample does not resolve that scale.
    pub unresolved: usize,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.infeasible == 0 && self.min_sum.is_none_or(|s| s >= 1.0 - tol::REL_TOL)
    }

    /// Every support ball has at least two points.
    pub fn resolved(&self) -> bool {
        self.unresolved == 0
    }
}

/// Test `c * rho'` against the family at `(v, k)`: every enumerated path
/// (up to `path_cap`) and the lightest path overall.
pub fn check_scaled_feasibility(
    gauge: &GaugeMetric,
    graph: &FillingGraph,
    v: usize,
    k: usize,
    c: f64,
    path_cap: usize,
) -> Result<FeasibilityReport> {
    let density = gauge_admissible_density(gauge, graph, v, k)?;
    let mut family = PathFamily::for_vertex(graph, v, k)?;
    let offset = graph.level(graph.level_of(v) + k).start;
    let weights: Vec<f64> = family.labels.iter().map(|&w| c * density[w - offset]).collect();
    // every path vertex carries density here, sinks outside the universe included
    family.universe = vec![true; family.len()];
    let (enumerated, infeasible) = match family.enumerate_paths(path_cap) {
        Ok(paths) => {
            let bad = paths.iter().filter(|q| family.path_sum(&weights, q) < 1.0 - tol::REL_TOL).count();
            (Some(paths.len()), bad)
        }
        Err(Error::PathExplosion { .. }) => (None, 0),
        Err(e) => return Err(e),
    };
    let min_sum = family.lightest_paths(&weights).first().map(|(s, _)| *s);
    let space = graph.space();
    let (xv, two) = (graph.point_of(v), 2.0 * graph.vertex_radius(v));
    let unresolved = graph
        .level(graph.level_of(v) + k)
        .filter(|&w| {
            let ball = graph.ball(w);
            ball.len() == 1 && tol::le(space.dist(ball[0], xv), two)
        })
        .count();
    Ok(FeasibilityReport { vertex: v, k, enumerated, infeasible, min_sum, unresolved })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamComparison {
    pub vertex: usize,
    pub k: usize,
    /// `(w, z)` pairs tested against the ball-diameter bounds.
    pub checked: usize,
    /// `w` in the support with an empty annulus (or an empty annulus at `v`).
    pub vacuous: usize,
    pub first_failures: usize,
    pub second_failures: usize,
    /// Largest `diam(B_w) / (2 eta(K_d) theta(x_w, z))`.
    pub worst_first: f64,
    /// Largest ratio `diam(B_w)/diam(2B_v)` over its bound.
    pub worst_second: f64,
}

impl DiamComparison {
    pub fn passed(&self) -> bool {
        self.first_failures == 0 && self.second_failures == 0
    }
}

/// Check, for every `w` on level `n + k` whose ball meets the closed double
/// ball of `v`, that `theta(x_w, z) <= diam(B_w) <= 2 eta(K_d) theta(x_w, z)`
/// for every `z` in the annulus `B_w \ (1/K_d) B_w`, and that
/// `diam(B_w) / diam(2B_v) <= 2 eta(K_d) eta(3 K_d) eta(K_d^2 r_w / r_v)`.
/// Balls with an empty annulus are counted as vacuous.
pub fn verify_diam_comparison(
    gauge: &GaugeMetric,
    graph: &FillingGraph,
    v: usize,
    k: usize,
    k_d: f64,
) -> Result<DiamComparison> {
    let n = graph.level_of(v);
    let density = gauge_admissible_density(gauge, graph, v, k)?;
    let space = graph.space();
    let xv = graph.point_of(v);
    let rv = graph.radius(n);
    let rw = graph.radius(n + k);
    let eta_k = gauge.eta.eval(k_d)?;
    let bound2 = 2.0 * eta_k * gauge.eta.eval(3.0 * k_d)? * gauge.eta.eval(k_d * k_d * rw / rv)?;
    let v_annulus = space.ball(xv, 2.0 * rv).into_iter().any(|z| !tol::lt(space.dist(xv, z), rv / k_d));
    let mut out = DiamComparison {
        vertex: v,
        k,
        checked: 0,
        vacuous: 0,
        first_failures: 0,
        second_failures: 0,
        worst_first: 0.0,
        worst_second: 0.0,
    };
    let space_ball = |w: usize| graph.ball(w);
    for (i, w) in graph.level(n + k).enumerate() {
        let xw = graph.point_of(w);
        let ball = space_ball(w);
        if !ball.iter().any(|&z| tol::le(space.dist(z, xv), 2.0 * rv)) {
            continue;
        }
        let annulus: Vec<usize> = ball.iter().copied().filter(|&z| !tol::lt(space.dist(xw, z), rw / k_d)).collect();
        if annulus.is_empty() || !v_annulus {
            out.vacuous += 1;
            continue;
        }
        let diam = gauge.diam(ball);
        for &z in &annulus {
            let t = gauge.theta.dist(xw, z);
            out.checked += 1;
            let upper = 2.0 * eta_k * t;
            out.worst_first = out.worst_first.max(diam / upper);
            if !(tol::le(t, diam) && tol::le(diam, upper)) {
                out.first_failures += 1;
            }
        }
        let ratio = density[i] / bound2;
        out.worst_second = out.worst_second.max(ratio);
        if !tol::le(density[i], bound2) {
            out.second_failures += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::nets::build_nets;
    use crate::params::Mode;
    use crate::space::{generate_cantor, generate_grid};
    use std::sync::Arc;

    #[test]
    fn identity_constant() {
        let eta = Distortion::Power { exponent: 1.0 };
        assert_eq!(admissibility_constant(&eta, 2.5, 7.0).unwrap(), 4.0 * 8.0 * 2.5 * 7.0);
    }

    #[test]
    fn snowflake_constant_and_samples() {
        let s = generate_grid(40).unwrap();
        let g = GaugeMetric::snowflake(&s, 0.5).unwrap();
        let c = admissibility_constant(&g.eta, 2.5, 7.0).unwrap();
        assert!((c - 4.0 * 8f64.sqrt() * 17.5f64.sqrt()).abs() < 1e-12);
        let d = sample_distortion(s.len(), |i, j| s.dist(i, j), |i, j| g.theta.dist(i, j), 0, 0);
        assert!(d.exhaustive);
        assert!(d.power_law_deviation(0.5) < 1e-12);
    }

    #[test]
    fn envelope_is_monotone() {
        let d = DistortionSamples { samples: vec![(0.5, 0.9), (1.0, 0.7), (3.0, 2.0), (2.9, 1.0)], exhaustive: true, seed: 0 };
        let env = d.envelope();
        assert!(env.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        let eta = Distortion::Empirical { envelope: env };
        assert_eq!(eta.eval(1.0).unwrap(), 0.9);
        assert!(eta.eval(100.0).is_err());
    }

    #[test]
    fn identity_density_in_unit_interval() {
        let s = Arc::new(generate_cantor(5, 1.0 / 3.0).unwrap());
        let nets = build_nets(&s, 3.0, 6, 3.0, Mode::Practical).unwrap();
        let g = build_graph(s.clone(), &nets, 7.0, 3.0, Mode::Practical).unwrap();
        let gauge = GaugeMetric::identity(&s);
        for v in g.level(1) {
            let rho = gauge_admissible_density(&gauge, &g, v, 2).unwrap();
            assert!(rho.iter().all(|&r| (0.0..=1.0).contains(&r)));
        }
        // singleton balls at the deepest level carry zero diameter
        assert!(g.level(6).all(|w| g.ball(w).len() == 1));
        let rho = gauge_admissible_density(&gauge, &g, 0, 6).unwrap();
        assert!(rho.iter().all(|&r| r == 0.0));
    }
}
