//! Critical exponent estimate: the smallest `p` for which the modulus decays
//! geometrically in the scale offset `k`, located by bracketing and bisection.

use serde::{Deserialize, Serialize};

use super::scale::{base_vertices, mod_p_at_scale};
use super::solve::SolverOptions;
use crate::error::{Error, Result};
use crate::graph::FillingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    /// Offsets `k_min..=k_max` form the fitting window (clipped to the graph depth).
    pub k_min: usize,
    pub k_max: usize,
    /// Decay means a fitted slope of `ln Mod_p(k)` at most `-decay_tol`.
    pub decay_tol: f64,
    /// Target bracket width.
    pub width: f64,
    /// Largest exponent probed before giving up.
    pub p_max: f64,
    pub solver: SolverOptions,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self { k_min: 1, k_max: 4, decay_tol: 0.05, width: 0.25, p_max: 9.0, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDecision {
    pub p: f64,
    /// `(k, Mod_p(k))` over the window.
    pub values: Vec<(usize, f64)>,
    /// Least-squares slope of `ln Mod_p(k)` over the positive values.
    pub slope: Option<f64>,
    pub decays: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionStatus {
    /// Critical exponent lies in `[p_lo, p_hi]`.
    Bracketed,
    /// Modulus already decays at `p = 1`; the critical exponent is below 1
    /// (and then the conformal dimension is 0).
    BelowOne,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub status: DimensionStatus,
    pub p_lo: Option<f64>,
    pub p_hi: Option<f64>,
    pub window: Vec<usize>,
    pub decisions: Vec<DecayDecision>,
    pub notes: Vec<String>,
}

impl DimensionEstimate {
    pub fn describe(&self) -> String {
        match (self.status, self.p_lo, self.p_hi) {
            (DimensionStatus::Bracketed, Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
            (DimensionStatus::BelowOne, ..) => "< 1".into(),
            _ => "inconclusive".into(),
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Offsets in the requested window that have at least one base vertex.
pub fn window(graph: &FillingGraph, opts: &DimensionOptions) -> Vec<usize> {
    (opts.k_min.max(1)..=opts.k_max).filter(|&k| !base_vertices(graph, k).is_empty()).collect()
}

/// Whether `Mod_p(k)` decays over `ks`. A modulus that reaches zero at the
/// end of the window counts as decay.
pub fn decay_decision(graph: &FillingGraph, p: f64, ks: &[usize], opts: &DimensionOptions) -> Result<DecayDecision> {
    let mut values = Vec::with_capacity(ks.len());
    for &k in ks {
        values.push((k, mod_p_at_scale(graph, p, k, &opts.solver)?.value));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        values.iter().filter(|(_, v)| *v > 0.0).map(|&(k, v)| (k as f64, v.ln())).unzip();
    let slope = fit_slope(&xs, &ys);
    let ends_at_zero = values.last().is_some_and(|&(_, v)| v == 0.0);
    let decays = ends_at_zero || slope.is_some_and(|s| s <= -opts.decay_tol);
    Ok(DecayDecision { p, values, slope, decays })
}

/// Bracket the critical exponent on a step-1 filling graph.
pub fn estimate_dimension(graph: &FillingGraph, opts: &DimensionOptions) -> Result<DimensionEstimate> {
    if !(opts.width > 0.0) || !(opts.p_max > 1.0) {
        return Err(Error::Parameter("dimension search needs width > 0 and p_max > 1".into()));
    }
    let ks = window(graph, opts);
    let mut est = DimensionEstimate {
        status: DimensionStatus::Inconclusive,
        p_lo: None,
        p_hi: None,
        window: ks.clone(),
        decisions: Vec::new(),
        notes: Vec::new(),
    };
    if ks.len() < 2 {
        est.notes.push(format!(
            "window {}..={} has {} usable offsets at depth {}; need at least 2",
            opts.k_min,
            opts.k_max,
            ks.len(),
            graph.depth()
        ));
        return Ok(est);
    }
    let first = decay_decision(graph, 1.0, &ks, opts)?;
    let below_one = first.decays;
    est.decisions.push(first);
    if below_one {
        est.status = DimensionStatus::BelowOne;
        est.p_hi = Some(1.0);
        return Ok(est);
    }
    let mut lo = 1.0;
    let mut hi = None;
    let mut step = 0.5;
    while lo < opts.p_max {
        let p = (lo + step).min(opts.p_max);
        let d = decay_decision(graph, p, &ks, opts)?;
        let decays = d.decays;
        est.decisions.push(d);
        if decays {
            hi = Some(p);
            break;
        }
        lo = p;
        step *= 2.0;
    }
    let Some(mut hi) = hi else {
        est.p_lo = Some(lo);
        est.notes.push(format!("no decay up to p = {}", opts.p_max));
        return Ok(est);
    };
    while hi - lo > opts.width {
        let mid = 0.5 * (lo + hi);
        let d = decay_decision(graph, mid, &ks, opts)?;
        if d.decays {
            hi = mid;
        } else {
            lo = mid;
        }
        est.decisions.push(d);
    }
    est.status = DimensionStatus::Bracketed;
    est.p_lo = Some(lo);
    est.p_hi = Some(hi);
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        assert!((fit_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-14);
        assert!(fit_slope(&[1.0], &[1.0]).is_none());
    }
}
