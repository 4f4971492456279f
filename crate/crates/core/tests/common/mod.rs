#![allow(dead_code)]

use std::sync::Arc;

use confdim::graph::{build_graph, FillingGraph};
use confdim::modulus::PathFamily;
use confdim::nets::build_nets;
use confdim::params::Mode;
use confdim::space::{CoordMetric, PointCloudSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random family on `n` local vertices; every vertex is in the universe.
pub fn random_family(seed: u64, n: usize, edge_prob: f64) -> PathFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    let mut source = vec![false; n];
    let mut sink = vec![false; n];
    for i in 0..n {
        match rng.gen_range(0..4) {
            0 => source[i] = true,
            1 => sink[i] = true,
            _ => {}
        }
    }
    PathFamily::new((0..n).collect(), &edges, source, sink, vec![true; n]).unwrap()
}

/// Lower bound on the modulus from the concave dual
/// `g(lambda) = sum lambda - (p-1) sum_i (s_i/p)^q`, `s_i = sum_{gamma ∋ i} lambda_gamma`,
/// maximized by exact coordinate ascent over the enumerated paths. Valid for p > 1.
pub fn dual_ascent_modulus(family: &PathFamily, p: f64, sweeps: usize) -> f64 {
    assert!(p > 1.0);
    let paths: Vec<Vec<usize>> = family
        .enumerate_paths(10_000)
        .unwrap()
        .into_iter()
        .map(|q| {
            let mut r: Vec<usize> = q.into_iter().filter(|&i| family.universe[i]).collect();
            r.sort_unstable();
            r
        })
        .collect();
    if paths.is_empty() {
        return 0.0;
    }
    let n = family.len();
    let q = p / (p - 1.0);
    let sigma_of = |s: f64| (s.max(0.0) / p).powf(1.0 / (p - 1.0));
    let mut lambda = vec![0.0; paths.len()];
    let mut s = vec![0.0; n];
    for _ in 0..sweeps {
        for (g, path) in paths.iter().enumerate() {
            for &i in path {
                s[i] -= lambda[g];
            }
            let sum_at = |l: f64| path.iter().map(|&i| sigma_of(s[i] + l)).sum::<f64>();
            let l = if sum_at(0.0) >= 1.0 {
                0.0
            } else {
                let mut hi = 1.0;
                while sum_at(hi) < 1.0 {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if sum_at(mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            lambda[g] = l;
            for &i in path {
                s[i] += l;
            }
        }
    }
    lambda.iter().sum::<f64>() - (p - 1.0) * s.iter().map(|&si| (si.max(0.0) / p).powf(q)).sum::<f64>()
}

/// Random point cloud in the unit square or interval, sup metric, normalized.
pub fn random_cloud(seed: u64, n: usize, dim: usize) -> PointCloudSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    let ids = (0..n).map(|i| format!("r{i}")).collect();
    PointCloudSpace::from_coords(ids, coords, CoordMetric::Sup, "random").unwrap().normalized()
}

pub fn step_one_graph(space: PointCloudSpace, alpha: f64, depth: usize, tau: f64) -> FillingGraph {
    let nets = build_nets(&space, alpha, depth, 2.5, Mode::Practical).unwrap();
    build_graph(Arc::new(space), &nets, tau, 2.5, Mode::Practical).unwrap().attach_tree()
}

/// Families of filling graphs over random clouds with at most `max_vertices`
/// local vertices and between 1 and `max_paths` member paths.
pub fn filling_families(count: usize, max_vertices: usize, max_paths: usize) -> Vec<PathFamily> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        seed += 1;
        assert!(seed < 10_000, "not enough small families");
        let dim = 1 + (seed as usize % 2);
        let space = random_cloud(seed, 40 + (seed as usize % 3) * 20, dim);
        let graph = step_one_graph(space, 2.0, 5, 7.0);
        let mut taken = 0;
        for v in 0..graph.len() {
            if taken == 8 {
                break;
            }
            for k in 1..=2 {
                if graph.level_of(v) + k > graph.depth() {
                    continue;
                }
                let f = PathFamily::for_vertex(&graph, v, k).unwrap();
                if f.len() > max_vertices {
                    continue;
                }
                match f.enumerate_paths(max_paths) {
                    Ok(paths) if !paths.is_empty() => {
                        out.push(f);
                        taken += 1;
                    }
                    _ => {}
                }
                if out.len() == count {
                    return out;
                }
            }
        }
    }
    out
}

/// Resampled graph with the estimated perfectness constant, as the CLI builds it.
pub fn resampled_graph(space: PointCloudSpace, alpha: f64, depth: usize, n0: usize, tau: f64) -> (FillingGraph, f64) {
    let k_d = confdim::space::estimate_constants(&space).unwrap().k_d;
    let nets = build_nets(&space, alpha, depth, k_d, Mode::Practical).unwrap();
    let g = confdim::graph::resample_graph(Arc::new(space), &nets, n0, tau, k_d, Mode::Practical)
        .unwrap()
        .attach_tree();
    (g, k_d)
}
