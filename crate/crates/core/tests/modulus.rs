mod common;

use common::{dual_ascent_modulus, filling_families, random_family};
use confdim::modulus::{brute_force_modulus, solve_modulus, PathFamily, SolverOptions};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn line_closed_form_up_to_twelve() {
    let opts = SolverOptions::default();
    for m in 1..=12 {
        for p in [1.0, 1.5, 2.0, 3.0] {
            let r = solve_modulus(&PathFamily::line(m), p, &opts).unwrap();
            let expect = (m as f64).powf(1.0 - p);
            assert!((r.value - expect).abs() <= 1e-9, "m={m} p={p}: {} vs {expect}", r.value);
        }
    }
}

#[test]
fn solver_matches_dual_oracle_on_filling_families() {
    let opts = SolverOptions::default();
    for f in filling_families(12, 30, 150) {
        for p in [1.5, 2.0, 3.0] {
            let r = solve_modulus(&f, p, &opts).unwrap();
            let lower = dual_ascent_modulus(&f, p, 3000);
            assert!(lower <= r.value * (1.0 + 1e-9) + 1e-12, "dual {lower} above primal {}", r.value);
            assert!(rel(r.value, lower) < 1e-5, "p={p}: primal {} dual {lower}", r.value);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_matches_brute_force(seed in 0u64..10_000, n in 3usize..8, p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let f = random_family(seed, n, 0.45);
        let opts = SolverOptions::default();
        let a = solve_modulus(&f, p, &opts).unwrap();
        let b = brute_force_modulus(&f, p, 5000, &opts).unwrap();
        prop_assert!(rel(a.value, b.value) < 1e-6 || (a.value == 0.0 && b.value == 0.0), "{} vs {}", a.value, b.value);
    }

    #[test]
    fn solver_matches_dual_oracle(seed in 0u64..10_000, n in 3usize..7, p in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let f = random_family(seed, n, 0.5);
        let r = solve_modulus(&f, p, &SolverOptions::default()).unwrap();
        let lower = dual_ascent_modulus(&f, p, 4000);
        prop_assert!(lower <= r.value * (1.0 + 1e-9) + 1e-12);
        prop_assert!(r.value - lower <= 1e-5 * r.value.max(1e-12), "primal {} dual {lower}", r.value);
    }

    #[test]
    fn solution_is_admissible(seed in 0u64..10_000, n in 3usize..9, p in prop::sample::select(vec![1.0, 2.0])) {
        let f = random_family(seed, n, 0.4);
        let r = solve_modulus(&f, p, &SolverOptions::default()).unwrap();
        for path in f.enumerate_paths(10_000).unwrap() {
            prop_assert!(f.path_sum(&r.sigma, &path) >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn disjoint_union_is_additive(a in 0u64..5000, b in 0u64..5000, p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let fa = random_family(a, 5, 0.5);
        let fb = random_family(b, 6, 0.5);
        let opts = SolverOptions::default();
        let ma = solve_modulus(&fa, p, &opts).unwrap().value;
        let mb = solve_modulus(&fb, p, &opts).unwrap().value;
        let mu = solve_modulus(&fa.disjoint_union(&fb), p, &opts).unwrap().value;
        prop_assert!((mu - ma - mb).abs() <= 1e-8 * mu.max(1.0));
    }

    /// More edges means more paths, so the modulus can only grow.
    #[test]
    fn more_paths_more_modulus(seed in 0u64..5000, extra in 0usize..20, p in prop::sample::select(vec![1.0, 2.0])) {
        let f = random_family(seed, 6, 0.35);
        let mut edges: Vec<(usize, usize)> = (0..6).flat_map(|a| f.adjacency[a].iter().map(move |&b| (a, b))).collect();
        edges.push((extra % 6, (extra / 6 + 1 + extra % 6) % 6));
        let g = PathFamily::new(f.labels.clone(), &edges, f.source.clone(), f.sink.clone(), f.universe.clone()).unwrap();
        let opts = SolverOptions::default();
        let small = solve_modulus(&f, p, &opts).unwrap().value;
        let big = solve_modulus(&g, p, &opts).unwrap().value;
        prop_assert!(big >= small * (1.0 - 1e-7) - 1e-12, "{big} < {small}");
    }
}
