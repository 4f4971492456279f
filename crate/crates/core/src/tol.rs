//! Comparison tolerances shared by every geometric predicate.

/// Relative tolerance for strict distance inequalities against ball radii.
pub const REL_TOL: f64 = 1e-12;

/// Absolute tolerance on normalisation identities (sums of `rho^p`, tree H4).
pub const NORM_TOL: f64 = 1e-9;

/// `d < bound`, robust to last-bit noise: values within `REL_TOL` of the
/// bound count as equal and therefore fail the strict test.
#[inline]
pub fn lt(d: f64, bound: f64) -> bool {
    d < bound * (1.0 - REL_TOL)
}

/// Closed version, `d <= bound` up to `REL_TOL`.
#[inline]
pub fn le(d: f64, bound: f64) -> bool {
    d <= bound * (1.0 + REL_TOL)
}

/// Ratio check `lo <= x <= hi` with relative slack on both ends.
#[inline]
pub fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo * (1.0 - REL_TOL) && x <= hi * (1.0 + REL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_is_not_strictly_less() {
        assert!(!lt(0.25, 0.25));
        assert!(lt(0.2, 0.25));
        assert!(le(0.25, 0.25));
        assert!(!lt(0.25 * (1.0 - 1e-15), 0.25));
    }
}
