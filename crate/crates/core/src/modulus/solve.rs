//! Modulus of a path family by constraint generation, and the brute-force
//! variant that enumerates every path up front.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::family::PathFamily;
use super::ipm::{solve_covering, IpmOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Inner stopping tolerance on complementarity.
    pub kkt_tol: f64,
    /// Inner stopping tolerance on the scaled dual residual.
    pub dual_tol: f64,
    /// A path is violated when its density sum is below `1 - feas_tol`.
    pub feas_tol: f64,
    /// Cap on constraint-generation rounds.
    pub max_rounds: usize,
    /// Cap on Newton steps per inner solve.
    pub max_newton: usize,
    /// Violated paths added per round (at most one per sink).
    pub cuts_per_round: usize,
    /// Sum that counts as "on" the constraint for `active_paths`.
    pub active_tol: f64,
}

impl SolverOptions {
    fn ipm(&self) -> IpmOptions {
        IpmOptions { tol: self.kkt_tol, dual_tol: self.dual_tol, max_iter: self.max_newton }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kkt_tol: 1e-11, dual_tol: 1e-9, feas_tol: 1e-9, max_rounds: 10_000, max_newton: 500, cuts_per_round: 8, active_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    IterationCap,
    EmptyFamily,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::IterationCap => "iteration_cap",
            SolveStatus::EmptyFamily => "empty_family",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// `sum sigma^p` over the universe. At the round cap sigma is rescaled onto
    /// the lightest path (when that sum is positive), so the value is an upper bound.
    pub value: f64,
    /// Density per local vertex; zero outside the universe.
    pub sigma: Vec<f64>,
    /// Collected paths whose density sum is at most `1 + active_tol`.
    pub active_paths: Vec<Vec<usize>>,
    /// Number of paths in the final constraint set.
    pub constraints: usize,
    /// Constraint-generation rounds.
    pub iterations: usize,
    pub newton_iterations: usize,
    pub status: SolveStatus,
    /// `1 - min path sum` at exit (nonpositive when every path is covered).
    pub separation_gap: f64,
}

impl ModulusResult {
    fn empty(n: usize) -> Self {
        Self {
            value: 0.0,
            sigma: vec![0.0; n],
            active_paths: Vec::new(),
            constraints: 0,
            iterations: 0,
            newton_iterations: 0,
            status: SolveStatus::EmptyFamily,
            separation_gap: f64::NEG_INFINITY,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::UnsupportedExponent(p));
    }
    Ok(())
}

fn universe_row(family: &PathFamily, path: &[usize]) -> Result<Vec<usize>> {
    let mut row: Vec<usize> = path.iter().copied().filter(|&i| family.universe[i]).collect();
    row.sort_unstable();
    if row.is_empty() {
        return Err(Error::Construction("family path avoids the universe".into()));
    }
    Ok(row)
}

fn finish(
    family: &PathFamily,
    p: f64,
    sigma: Vec<f64>,
    paths: &[Vec<usize>],
    opts: &SolverOptions,
) -> (f64, Vec<Vec<usize>>) {
    let value = (0..family.len()).filter(|&i| family.universe[i]).map(|i| sigma[i].powf(p)).sum();
    let active = paths
        .iter()
        .filter(|path| family.path_sum(&sigma, path) <= 1.0 + opts.active_tol)
        .cloned()
        .collect();
    (value, active)
}

/// Modulus by constraint generation: the separation oracle is a
/// lightest-path search with vertex weights `sigma`.
pub fn solve_modulus(family: &PathFamily, p: f64, opts: &SolverOptions) -> Result<ModulusResult> {
    check_p(p)?;
    let n = family.len();
    let mut sigma = vec![0.0; n];
    if family.lightest_paths(&sigma).is_empty() {
        return Ok(ModulusResult::empty(n));
    }
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut rounds = 0;
    let mut newton = 0;
    let mut inner_ok = true;
    let mut gap;
    let status = loop {
        let candidates = family.lightest_paths(&sigma);
        let Some(lightest) = candidates.first().map(|c| c.0) else {
            return Err(Error::Construction("separation oracle lost every family path".into()));
        };
        gap = 1.0 - lightest;
        if lightest >= 1.0 - opts.feas_tol {
            break if inner_ok { SolveStatus::Optimal } else { SolveStatus::IterationCap };
        }
        if rounds == opts.max_rounds {
            break SolveStatus::IterationCap;
        }
        let mut added = 0;
        for (sum, path) in candidates {
            if sum >= 1.0 - opts.feas_tol || added == opts.cuts_per_round {
                break;
            }
            let row = universe_row(family, &path)?;
            if seen.insert(row.clone()) {
                rows.push(row);
                paths.push(path);
                added += 1;
            }
        }
        if added == 0 {
            // the inner solve left a collected path uncovered
            break SolveStatus::IterationCap;
        }
        rounds += 1;
        let out = solve_covering(n, &rows, p, opts.ipm());
        newton += out.iterations;
        inner_ok = out.converged;
        sigma = out.x;
        if p > 1.0 && inner_ok {
            // Strict convexity: dropping non-binding rows keeps the current
            // optimum, and every later cut raises the objective, so no cycling.
            let ymax = out.y.iter().fold(0.0f64, |a, &b| a.max(b));
            let keep: Vec<bool> = rows
                .iter()
                .zip(&out.y)
                .map(|(row, &y)| y > 1e-9 * ymax || row.iter().map(|&i| sigma[i]).sum::<f64>() <= 1.0 + opts.active_tol)
                .collect();
            if keep.iter().any(|k| !k) {
                let mut it = keep.iter();
                rows.retain(|_| *it.next().unwrap());
                let mut it = keep.iter();
                paths.retain(|_| *it.next().unwrap());
                seen = rows.iter().cloned().collect();
            }
        }
    };
    if status == SolveStatus::IterationCap && gap > 0.0 && gap < 1.0 {
        // scale onto the lightest path so the reported value is an upper bound
        let lightest = 1.0 - gap;
        for v in &mut sigma {
            *v /= lightest;
        }
    }
    let (value, active_paths) = finish(family, p, sigma.clone(), &paths, opts);
    Ok(ModulusResult {
        value,
        sigma,
        active_paths,
        constraints: rows.len(),
        iterations: rounds,
        newton_iterations: newton,
        status,
        separation_gap: gap,
    })
}

/// Modulus with every member path as a constraint.
pub fn brute_force_modulus(
    family: &PathFamily,
    p: f64,
    path_cap: usize,
    opts: &SolverOptions,
) -> Result<ModulusResult> {
    check_p(p)?;
    let n = family.len();
    let paths = family.enumerate_paths(path_cap)?;
    if paths.is_empty() {
        return Ok(ModulusResult::empty(n));
    }
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for path in &paths {
        let row = universe_row(family, path)?;
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    let out = solve_covering(n, &rows, p, opts.ipm());
    let gap = 1.0 - paths.iter().map(|q| family.path_sum(&out.x, q)).fold(f64::INFINITY, f64::min);
    let (value, active_paths) = finish(family, p, out.x.clone(), &paths, opts);
    Ok(ModulusResult {
        value,
        sigma: out.x,
        active_paths,
        constraints: rows.len(),
        iterations: 1,
        newton_iterations: out.iterations,
        status: if out.converged { SolveStatus::Optimal } else { SolveStatus::IterationCap },
        separation_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_closed_form() {
        let opts = SolverOptions::default();
        let r = solve_modulus(&PathFamily::line(3), 2.0, &opts).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-10);
        for s in &r.sigma {
            assert!((s - 1.0 / 3.0).abs() < 1e-8);
        }
        let r = solve_modulus(&PathFamily::line(4), 3.0, &opts).unwrap();
        assert!((r.value - 1.0 / 16.0).abs() < 1e-10);
        let r = solve_modulus(&PathFamily::line(5), 1.0, &opts).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert_eq!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn disjoint_lines_add() {
        let f = PathFamily::line(2).disjoint_union(&PathFamily::line(3));
        let r = solve_modulus(&f, 2.0, &SolverOptions::default()).unwrap();
        assert!((r.value - 5.0 / 6.0).abs() < 1e-10);
        let b = brute_force_modulus(&f, 2.0, 200, &SolverOptions::default()).unwrap();
        assert!((b.value - 5.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn capped_value_is_admissible_upper_bound() {
        // two paths 0-1-3 and 0-2-3; the optimum is 0.4 at p = 2
        let t = vec![true, false, false, false];
        let f = PathFamily::new(vec![0, 1, 2, 3], &[(0, 1), (1, 3), (0, 2), (2, 3)], t, vec![false, false, false, true], vec![true; 4])
            .unwrap();
        let full = solve_modulus(&f, 2.0, &SolverOptions::default()).unwrap();
        assert!((full.value - 0.4).abs() < 1e-9);
        let opts = SolverOptions { max_rounds: 1, cuts_per_round: 1, ..SolverOptions::default() };
        let r = solve_modulus(&f, 2.0, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::IterationCap);
        assert!((r.separation_gap - 1.0 / 3.0).abs() < 1e-9);
        assert!((r.value - 0.75).abs() < 1e-9);
        assert!(f.lightest_paths(&r.sigma)[0].0 >= 1.0 - 1e-9);
    }

    #[test]
    fn no_path_is_empty() {
        let f = PathFamily::new(vec![0, 1], &[], vec![true, false], vec![false, true], vec![true, true]).unwrap();
        let r = solve_modulus(&f, 2.0, &SolverOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.status, SolveStatus::EmptyFamily);
    }

    #[test]
    fn sub_one_exponent_rejected() {
        let f = PathFamily::line(3);
        assert!(matches!(solve_modulus(&f, 0.5, &SolverOptions::default()), Err(Error::UnsupportedExponent(_))));
        assert!(matches!(brute_force_modulus(&f, 0.5, 10, &SolverOptions::default()), Err(Error::UnsupportedExponent(_))));
    }
}
