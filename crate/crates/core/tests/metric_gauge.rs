mod common;

use common::{resampled_graph, step_one_graph};
use confdim::gauge::{check_scaled_feasibility, gauge_admissible_density, verify_diam_comparison, GaugeMetric};
use confdim::metric::{boundary_metric, compute_z, graph_distance};
use confdim::params::Mode;
use confdim::pipeline::{run_pipeline, PipelineConfig};
use confdim::space::{check_metric_matrix, generate_cantor, generate_carpet, generate_grid};
use confdim::verify::{distortion_profile, regularity_profile};

#[test]
fn boundary_metric_axioms_on_cantor() {
    let (g, k_d) = resampled_graph(generate_cantor(8, 1.0 / 3.0).unwrap(), 3.0, 8, 4, 7.0);
    let w = run_pipeline(&g, &PipelineConfig::new(2.0, Mode::Practical, k_d)).unwrap();
    let bm = boundary_metric(&g, &w.pi, &w.rho, g.depth()).unwrap();
    assert_eq!(bm.len(), 256);
    let n = bm.len();
    for i in 0..n {
        assert_eq!(bm.get(i, i), 0.0);
        for j in 0..n {
            assert_eq!(bm.get(i, j), bm.get(j, i));
        }
    }
    let report = check_metric_matrix(n, &bm.matrix, 0, 0);
    assert!(report.exhaustive && report.ok());

    let d = distortion_profile(g.space(), &bm.to_space().unwrap(), 20_000, 3).unwrap();
    assert!(d.bounded);
    assert!(d.envelope.iter().all(|e| e.0.is_finite() && e.1.is_finite()));

    let r = regularity_profile(&bm, 1.0, 8).unwrap();
    assert!(r.spread.is_finite() && r.spread >= 1.0);
}

#[test]
fn graph_distance_is_a_path_length() {
    let (g, k_d) = resampled_graph(generate_cantor(6, 1.0 / 3.0).unwrap(), 3.0, 6, 2, 7.0);
    let w = run_pipeline(&g, &PipelineConfig::new(2.0, Mode::Practical, k_d)).unwrap();
    let (u, v) = (g.level(3).start, g.level(3).end - 1);
    let (d, path) = graph_distance(&g, &w.pi, u, v).unwrap();
    assert_eq!((path[0], *path.last().unwrap()), (u, v));
    let len: f64 = path.windows(2).map(|e| 0.5 * (w.pi[e[0]] + w.pi[e[1]])).sum();
    assert!((len - d).abs() <= 1e-12 * d);
    // distinct points of one level meet strictly above it
    assert!(g.level_of(compute_z(&g, u, v)) < 3);
}

#[test]
fn identity_gauge_density_is_a_ratio_and_admissible() {
    let g = step_one_graph(generate_grid(65).unwrap(), 2.0, 5, 7.0);
    let gauge = GaugeMetric::identity(g.space());
    let c = confdim::gauge::admissibility_constant(&gauge.eta, 2.5, 7.0).unwrap();
    let mut tested = 0;
    for v in 0..g.level(3).end {
        for k in 1..=2 {
            if g.level_of(v) + k > 4 {
                continue;
            }
            let rho = gauge_admissible_density(&gauge, &g, v, k).unwrap();
            assert!(rho.iter().all(|&r| (0.0..=1.0).contains(&r)));
            let f = check_scaled_feasibility(&gauge, &g, v, k, c, 5000).unwrap();
            assert!(f.resolved() && f.feasible(), "{f:?}");
            tested += f.enumerated.unwrap_or(0);
        }
    }
    assert!(tested > 0);
}

#[test]
fn snowflake_gauge_on_carpet() {
    let g = step_one_graph(generate_carpet(2).unwrap(), 2.0, 4, 7.0);
    let gauge = GaugeMetric::snowflake(g.space(), 0.5).unwrap();
    let k_d = 2.0 + 1e-9;
    let c = confdim::gauge::admissibility_constant(&gauge.eta, k_d, 7.0).unwrap();
    let mut nonvacuous = 0;
    for k in 1..=3 {
        for v in 0..g.level(g.depth() - k).end {
            let dc = verify_diam_comparison(&gauge, &g, v, k, k_d).unwrap();
            assert!(dc.passed(), "{dc:?}");
            nonvacuous += usize::from(dc.checked > 0);
            let f = check_scaled_feasibility(&gauge, &g, v, k, c, 2000).unwrap();
            assert!(!f.resolved() || f.feasible(), "{f:?}");
        }
    }
    assert!(nonvacuous > 0);
}
