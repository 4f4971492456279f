//! Run mode and the parameter bounds on `alpha`, `tau` and `n0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Theory mode refuses to run when a hypothesis of the construction fails;
/// practical mode proceeds and records the failure as a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    #[default]
    Practical,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Mode::Theory),
            "practical" => Ok(Mode::Practical),
            _ => Err(Error::Parameter(format!("unknown mode {s:?} (expected theory or practical)"))),
        }
    }
}

/// A hypothesis that did not hold, kept for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub check: String,
    pub message: String,
}

/// Collects hypothesis failures; in theory mode the first one is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn require(&mut self, mode: Mode, holds: bool, check: &str, message: impl FnOnce() -> String) -> Result<()> {
        if holds {
            return Ok(());
        }
        let message = message();
        if mode == Mode::Theory {
            return Err(Error::Parameter(message));
        }
        self.note(check, message);
        Ok(())
    }

    /// Record a note; the same check and message are kept once.
    pub fn note(&mut self, check: &str, message: String) {
        let d = Diagnostic { check: check.to_string(), message };
        if !self.items.contains(&d) {
            self.items.push(d);
        }
    }

    pub fn extend(&mut self, other: Diagnostics) {
        for d in other.items {
            self.note(&d.check, d.message);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Bounds on the net ratio. `alpha > 1` is always required (the nets need a
/// shrinking radius); `alpha >= 2` and `alpha > K_d^3` are hypotheses.
pub fn check_alpha(alpha: f64, k_d: f64, mode: Mode, diag: &mut Diagnostics) -> Result<()> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha={alpha} violates alpha>1")));
    }
    diag.require(mode, alpha >= 2.0, "alpha", || format!("alpha={alpha} violates alpha>=2"))?;
    let kd3 = k_d.powi(3);
    diag.require(mode, alpha > kd3, "alpha", || {
        format!("alpha={alpha} violates alpha>K_d^3={kd3:.6}")
    })
}

/// Bounds on the ball dilation. `tau > 6` is always required.
pub fn check_tau(tau: f64, alpha: f64, k_d: f64, mode: Mode, diag: &mut Diagnostics) -> Result<()> {
    if !(tau > 6.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("tau={tau} violates tau>6")));
    }
    let a = 2.0 * (1.0 + 1.0 / alpha);
    diag.require(mode, tau > a, "tau", || format!("tau={tau} violates tau>2(1+1/alpha)={a:.6}"))?;
    let k2 = k_d * k_d;
    let b = 2.0 * k2 * k_d / (k2 - 4.0);
    diag.require(mode, tau > b, "tau", || {
        format!("tau={tau} violates tau>2K_d^3/(K_d^2-4)={b:.6}")
    })
}

/// The resampling condition `6 + 4a + 8 tau a < tau < 1/(4a)`, `a = alpha^-n0`.
pub fn n0_condition_holds(alpha: f64, tau: f64, n0: usize) -> bool {
    let a = alpha.powi(-(n0 as i32));
    6.0 + 4.0 * a + 8.0 * tau * a < tau && tau < 0.25 / a
}

pub fn check_n0(alpha: f64, tau: f64, n0: usize, mode: Mode, diag: &mut Diagnostics) -> Result<()> {
    if n0 == 0 {
        return Err(Error::Parameter("n0 must be at least 1".into()));
    }
    diag.require(mode, n0_condition_holds(alpha, tau, n0), "n0", || {
        format!("n0={n0} violates 6+4a+8*tau*a < tau < 1/(4a) with a=alpha^-n0 (alpha={alpha}, tau={tau})")
    })
}
