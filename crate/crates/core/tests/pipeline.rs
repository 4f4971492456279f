mod common;

use common::resampled_graph;
use confdim::params::Mode;
use confdim::pipeline::{run_pipeline, PipelineConfig, WeightSystem};
use confdim::space::{generate_cantor, generate_carpet};
use confdim::verify::{certify, CertifyOptions, Condition};

fn cantor_weights() -> (confdim::graph::FillingGraph, WeightSystem) {
    let (g, k_d) = resampled_graph(generate_cantor(8, 1.0 / 3.0).unwrap(), 3.0, 8, 4, 7.0);
    let w = run_pipeline(&g, &PipelineConfig::new(2.0, Mode::Practical, k_d)).unwrap();
    (g, w)
}

#[test]
fn cantor_certificates_pass() {
    let (g, w) = cantor_weights();
    let report = certify(&g, &w, &Condition::ALL, &CertifyOptions::default()).unwrap();
    for c in &report.certificates {
        assert!(c.passed(), "{} failed: {:?}", c.name, c.witness);
    }
    assert!(report.get("h3").unwrap().checked >= 1000);
}

#[test]
fn certificates_reproduce_from_json() {
    let (g, w) = cantor_weights();
    let opts = CertifyOptions::default();
    let before = certify(&g, &w, &Condition::ALL, &opts).unwrap();
    let text = serde_json::to_string(&w).unwrap();
    let back: WeightSystem = serde_json::from_str(&text).unwrap();
    assert_eq!(back, w);
    let after = certify(&g, &back, &Condition::ALL, &opts).unwrap();
    assert_eq!(serde_json::to_string(&before).unwrap(), serde_json::to_string(&after).unwrap());
}

#[test]
fn perturbed_rho_is_caught_at_its_parent() {
    let (g, mut w) = cantor_weights();
    let victim = g.level(2).start + 5;
    let parent = g.tree_parent(victim).unwrap();
    w.rho[victim] *= 1.1;
    let report = certify(&g, &w, &[Condition::Normalization], &CertifyOptions::default()).unwrap();
    let c = report.get("normalization").unwrap();
    assert!(!c.passed());
    assert_eq!(c.violations, 1);
    assert_eq!(c.witness.as_ref().unwrap().vertices, vec![g.vertex(parent)]);
}

#[test]
fn perturbed_pi_breaks_tree_sums() {
    let (g, mut w) = cantor_weights();
    let victim = g.level(1).start + 1;
    w.pi[victim] *= 1.1;
    let report = certify(&g, &w, &[Condition::H4], &CertifyOptions::default()).unwrap();
    assert!(!report.get("h4_tree").unwrap().passed());
}

#[test]
fn removed_tree_edge_is_caught() {
    let (mut g, w) = cantor_weights();
    let victim = g.level(2).start + 3;
    g.set_tree_parent(victim, None);
    let report = certify(&g, &w, &[Condition::Tree], &CertifyOptions::default()).unwrap();
    let c = report.get("tree").unwrap();
    assert!(!c.passed());
    assert_eq!(c.witness.as_ref().unwrap().vertices, vec![g.vertex(victim)]);
}

/// Carpet at a large exponent: families are non-empty and the pipeline
/// completes, so the path-sum certificates are exercised for real. The only
/// H1 failures allowed are at vertices without a sibling (rho = 1).
#[test]
fn carpet_family_certificates_hold() {
    let (g, k_d) = resampled_graph(generate_carpet(2).unwrap(), 3.0, 4, 2, 7.0);
    let w = run_pipeline(&g, &PipelineConfig::new(6.0, Mode::Practical, k_d)).unwrap();
    assert!(w.constants.max_modulus > 0.0);
    let report = certify(&g, &w, &Condition::ALL, &CertifyOptions::default()).unwrap();
    for c in &report.certificates {
        if c.name == "h1" {
            continue;
        }
        assert!(c.passed(), "{} failed: {:?}", c.name, c.witness);
    }
    assert!(report.get("h3_prime").unwrap().checked >= 1000);
    for v in 1..g.len() {
        if !confdim::verify::h1_holds(&w, v) {
            let parent = g.tree_parent(v).unwrap();
            assert_eq!(g.tree_children(parent), &[v]);
        }
    }
}

#[test]
fn theory_mode_refuses_large_modulus() {
    let (g, k_d) = resampled_graph(generate_carpet(2).unwrap(), 3.0, 4, 2, 7.0);
    let cfg = PipelineConfig::new(6.0, Mode::Theory, k_d);
    let e = run_pipeline(&g, &cfg).unwrap_err().to_string();
    assert!(e.contains("is not below epsilon0") && e.contains("increase n0"), "{e}");
}
