//! Nested maximal separated nets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{check_alpha, Diagnostics, Mode};
use crate::space::PointCloudSpace;

/// Levels `A_0 ⊆ A_1 ⊆ ... ⊆ A_L`, each a sorted list of point indices,
/// with `A_n` maximal `alpha^-n`-separated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetHierarchy {
    pub alpha: f64,
    pub levels: Vec<Vec<usize>>,
    pub diagnostics: Diagnostics,
}

impl NetHierarchy {
    /// Deepest level `L`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn radius(&self, n: usize) -> f64 {
        self.alpha.powi(-(n as i32))
    }

    pub fn level(&self, n: usize) -> &[usize] {
        &self.levels[n]
    }
}

/// Greedy nested construction. `A_0` is the first point; each level is
/// seeded with the previous one and extended in index order.
pub fn build_nets(
    space: &PointCloudSpace,
    alpha: f64,
    depth: usize,
    k_d: f64,
    mode: Mode,
) -> Result<NetHierarchy> {
    let mut diagnostics = Diagnostics::default();
    check_alpha(alpha, k_d, mode, &mut diagnostics)?;
    if depth < 1 {
        return Err(Error::Parameter("net depth L must be at least 1".into()));
    }
    if depth > 60 {
        return Err(Error::Parameter(format!("net depth {depth} is unreasonably deep")));
    }
    let n = space.len();
    let gap = space.min_gap();
    let deepest = alpha.powi(-(depth as i32));
    if n > 1 && deepest < gap {
        diagnostics.note(
            "depth",
            format!("alpha^-L = {deepest:e} is below the minimum gap {gap:e}; deepest levels contain every point"),
        );
    }
    let mut levels = vec![vec![0usize]];
    let mut member = vec![false; n];
    member[0] = true;
    for level in 1..=depth {
        let r = alpha.powi(-(level as i32));
        let mut accepted = levels[level - 1].clone();
        for z in 0..n {
            if member[z] {
                continue;
            }
            if accepted.iter().all(|&y| space.dist(y, z) >= r) {
                accepted.push(z);
                member[z] = true;
            }
        }
        accepted.sort_unstable();
        levels.push(accepted);
    }
    Ok(NetHierarchy { alpha, levels, diagnostics })
}

/// Violations of nesting, separation and maximality (empty when valid).
pub fn audit_nets(space: &PointCloudSpace, nets: &NetHierarchy) -> Vec<String> {
    let mut out = Vec::new();
    if nets.levels[0].len() != 1 {
        out.push("level 0 is not a singleton".into());
    }
    for (n, level) in nets.levels.iter().enumerate() {
        let r = nets.radius(n);
        if level.windows(2).any(|w| w[0] >= w[1]) {
            out.push(format!("level {n} not strictly sorted"));
        }
        if n > 0 {
            let prev = &nets.levels[n - 1];
            if prev.iter().any(|x| level.binary_search(x).is_err()) {
                out.push(format!("level {} not contained in level {n}", n - 1));
            }
        }
        for (i, &x) in level.iter().enumerate() {
            for &y in &level[i + 1..] {
                if space.dist(x, y) < r {
                    out.push(format!("level {n}: {} and {} closer than {r}", space.id(x), space.id(y)));
                }
            }
        }
        for z in 0..space.len() {
            if !level.iter().any(|&x| space.dist(x, z) < r) {
                out.push(format!("level {n}: {} not covered", space.id(z)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_grid, CoordMetric};

    fn three_points() -> PointCloudSpace {
        PointCloudSpace::from_coords(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0], vec![0.25], vec![0.5]],
            CoordMetric::Sup,
            "line",
        )
        .unwrap()
    }

    #[test]
    fn three_point_line() {
        let s = three_points();
        let nets = build_nets(&s, 8.0, 2, 2.0 + 1e-9, Mode::Practical).unwrap();
        assert_eq!(nets.levels[0], vec![0]);
        assert_eq!(nets.levels[1], vec![0, 1, 2]);
        assert!(audit_nets(&s, &nets).is_empty());
    }

    #[test]
    fn deep_levels_hold_everything() {
        let s = generate_grid(9).unwrap();
        let nets = build_nets(&s, 2.0, 6, 2.0 + 1e-9, Mode::Practical).unwrap();
        assert_eq!(nets.levels[6].len(), 9);
        assert!(!nets.diagnostics.is_empty());
        assert!(audit_nets(&s, &nets).is_empty());
    }

    #[test]
    fn alpha_must_exceed_one() {
        let s = three_points();
        assert!(build_nets(&s, 1.0, 2, 2.5, Mode::Practical).is_err());
        assert!(build_nets(&s, 3.0, 2, 2.5, Mode::Theory).is_err());
    }
}
