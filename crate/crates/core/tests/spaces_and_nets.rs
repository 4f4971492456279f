mod common;

use common::{random_cloud, step_one_graph};
use confdim::combinatorics::non_tree_edge_violations;
use confdim::nets::{audit_nets, build_nets};
use confdim::params::Mode;
use confdim::space::{snowflake, PointCloudSpace};
use proptest::prelude::*;

fn max_diff(a: &PointCloudSpace, b: &PointCloudSpace) -> f64 {
    a.matrix().iter().zip(b.matrix()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn normalization_is_idempotent(seed in 0u64..10_000, n in 2usize..40, dim in 1usize..4) {
        let s = random_cloud(seed, n, dim);
        prop_assert!((s.diameter() - 0.5).abs() < 1e-15);
        let again = s.clone().normalized();
        prop_assert_eq!(max_diff(&s, &again), 0.0);
    }

    #[test]
    fn snowflakes_compose(seed in 0u64..10_000, n in 2usize..30, a in 0.2f64..1.0, b in 0.2f64..1.0) {
        let s = random_cloud(seed, n, 2);
        let twice = snowflake(&snowflake(&s, a).unwrap(), b).unwrap();
        let once = snowflake(&s, a * b).unwrap();
        prop_assert!(max_diff(&twice, &once) < 1e-12);
    }

    #[test]
    fn snowflake_stays_metric(seed in 0u64..10_000, n in 3usize..30, e in 0.1f64..1.0) {
        let s = snowflake(&random_cloud(seed, n, 2), e).unwrap();
        prop_assert!(s.check_metric(0, 0).ok());
    }

    #[test]
    fn nets_are_nested_separated_maximal(seed in 0u64..10_000, n in 2usize..80, alpha in 1.5f64..4.0, depth in 1usize..6) {
        let s = random_cloud(seed, n, 2);
        let nets = build_nets(&s, alpha, depth, 2.5, Mode::Practical).unwrap();
        let defects = audit_nets(&s, &nets);
        prop_assert!(defects.is_empty(), "{:?}", defects);
    }

    #[test]
    fn tree_is_spanning_and_uses_graph_edges(seed in 0u64..10_000, n in 2usize..60) {
        let g = step_one_graph(random_cloud(seed, n, 2), 2.0, 4, 7.0);
        prop_assert!(g.check_tree().is_ok());
        prop_assert!(non_tree_edge_violations(&g).is_empty());
        for v in 1..g.len() {
            let p = g.tree_parent(v).unwrap();
            prop_assert_eq!(g.level_of(p) + 1, g.level_of(v));
        }
    }
}

#[test]
fn space_json_round_trip_through_disk() {
    let s = random_cloud(7, 25, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    s.save(&path).unwrap();
    let t = PointCloudSpace::load(&path).unwrap();
    assert_eq!(s, t);
}
