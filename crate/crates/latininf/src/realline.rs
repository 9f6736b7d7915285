//! The explicit semi-Vatican terrace on (ℝ, +), with numerical probes.
//!
//! The terrace is the fixed strictly increasing bijection
//!
//! ```text
//! a(x) = eˣ − 1        for x ≥ 0
//! a(x) = −ln(1 − x)    otherwise
//! ```
//!
//! whose derivative is a strictly increasing positive bijection of ℝ onto
//! ℝ⁺, making every difference function a_(d)(i) = a(i+d) − a(i) strictly
//! increasing in i with range ℝ⁺. The square ℓ_ij = a(j) − a(i) is then
//! semi-Vatican: probes locate the unique occurrence of a symbol pair at a
//! given distance by monotone bisection. This module alone works in binary
//! floating point with explicit tolerances; all other spatial arithmetic in
//! the crate is exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_BISECTION_ITERATIONS: u64 = 500;

#[derive(Debug, Error)]
pub enum RealError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("target must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("degenerate pair: x = y = {0}")]
    DegeneratePair(f64),
    #[error("bracket expansion failed at span {0:e}; numeric pathology")]
    BracketFailure(f64),
}

/// The terrace function.
pub fn a(x: f64) -> f64 {
    if x >= 0.0 {
        x.exp() - 1.0
    } else {
        -(1.0 - x).ln()
    }
}

/// Its derivative (both one-sided limits agree at 0).
pub fn a_prime(x: f64) -> f64 {
    if x >= 0.0 {
        x.exp()
    } else {
        1.0 / (1.0 - x)
    }
}

/// Exact inverse of `a`.
pub fn a_inverse(v: f64) -> f64 {
    if v >= 0.0 {
        (1.0 + v).ln()
    } else {
        1.0 - (-v).exp()
    }
}

/// a_(d)(i) = a(i + d) − a(i); strictly positive and strictly increasing
/// in `i` for every d > 0.
pub fn seq_value(i: f64, d: f64) -> Result<f64, RealError> {
    if d <= 0.0 {
        return Err(RealError::NonPositiveDistance(d));
    }
    Ok(a(i + d) - a(i))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InversionResult {
    pub index: f64,
    pub residual: f64,
    pub iterations: u64,
}

/// Solve a_(d)(i) = target for i by bracketing bisection with automatic
/// outward bracket expansion from i = 0.
pub fn invert_seq(d: f64, target: f64, tol: f64) -> Result<InversionResult, RealError> {
    if d <= 0.0 {
        return Err(RealError::NonPositiveDistance(d));
    }
    if target <= 0.0 {
        return Err(RealError::NonPositiveTarget(target));
    }
    if tol <= 0.0 {
        return Err(RealError::BadTolerance(tol));
    }
    let f = |i: f64| seq_value(i, d).expect("d validated") - target;
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    let mut span = 1.0f64;
    // seq_value is monotone in i, so doubling outward must bracket.
    while f(lo) > 0.0 {
        span *= 2.0;
        lo = -span;
        if span > 1e18 {
            return Err(RealError::BracketFailure(span));
        }
    }
    let mut span = 1.0f64;
    while f(hi) < 0.0 {
        span *= 2.0;
        hi = span;
        if span > 700.0 {
            // exp overflows long before this becomes plausible
            return Err(RealError::BracketFailure(span));
        }
    }
    let mut iterations = 0u64;
    let mut mid;
    loop {
        mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm.abs() <= tol || iterations >= MAX_BISECTION_ITERATIONS {
            break;
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let residual = f(mid).abs();
    Ok(InversionResult {
        index: mid,
        residual,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeAxis {
    Row,
    Column,
}

/// Outcome of locating the pair (x, y) at distance d along one axis of the
/// square ℓ_ij = a(j) − a(i).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    pub axis: ProbeAxis,
    /// Whether the pair occurs in the requested order along this axis; if
    /// false, the occurrence exists only with the symbols reversed and no
    /// indices are reported.
    pub in_order: bool,
    pub row: Option<f64>,
    pub col: Option<f64>,
    pub residuals: Vec<f64>,
    pub iterations: u64,
}

/// Locate the unique cell pair holding symbols (x, y) at distance `d` along
/// `axis`. Along rows the in-order occurrence needs y > x (symbols grow to
/// the right); along columns it needs x > y (symbols shrink downward).
pub fn locate_pair(
    x: f64,
    y: f64,
    d: f64,
    tol: f64,
    axis: ProbeAxis,
) -> Result<ProbeResult, RealError> {
    if x == y {
        return Err(RealError::DegeneratePair(x));
    }
    if d <= 0.0 {
        return Err(RealError::NonPositiveDistance(d));
    }
    if tol <= 0.0 {
        return Err(RealError::BadTolerance(tol));
    }
    match axis {
        ProbeAxis::Row => {
            if y <= x {
                return Ok(ProbeResult {
                    axis,
                    in_order: false,
                    row: None,
                    col: None,
                    residuals: vec![],
                    iterations: 0,
                });
            }
            // a(j+d) − a(j) = y − x fixes the column, then the row follows
            // from a(i) = a(j) − x.
            let inv = invert_seq(d, y - x, tol.min(1e-13))?;
            let j = inv.index;
            let i = a_inverse(a(j) - x);
            let r1 = (a(j) - a(i) - x).abs();
            let r2 = (a(j + d) - a(i) - y).abs();
            Ok(ProbeResult {
                axis,
                in_order: true,
                row: Some(i),
                col: Some(j),
                residuals: vec![r1, r2],
                iterations: inv.iterations,
            })
        }
        ProbeAxis::Column => {
            if x <= y {
                return Ok(ProbeResult {
                    axis,
                    in_order: false,
                    row: None,
                    col: None,
                    residuals: vec![],
                    iterations: 0,
                });
            }
            // Down a column symbols shrink: a(i+d) − a(i) = x − y fixes the
            // row, then a(j) = a(i) + x.
            let inv = invert_seq(d, x - y, tol.min(1e-13))?;
            let i = inv.index;
            let j = a_inverse(a(i) + x);
            let r1 = (a(j) - a(i) - x).abs();
            let r2 = (a(j) - a(i + d) - y).abs();
            Ok(ProbeResult {
                axis,
                in_order: true,
                row: Some(i),
                col: Some(j),
                residuals: vec![r1, r2],
                iterations: inv.iterations,
            })
        }
    }
}

/// Tolerance-based semi-Vatican safety over a sampled n×n window with rows
/// and columns at `origin + k·spacing`. Returns (pass, violations,
/// occurrences checked per direction).
pub fn sampled_window_semivatican(
    n: usize,
    origin: f64,
    spacing: f64,
    tol: f64,
) -> (bool, u64, u64) {
    let points: Vec<f64> = (0..n).map(|k| origin + k as f64 * spacing).collect();
    let values: Vec<Vec<f64>> = points
        .iter()
        .map(|i| points.iter().map(|j| a(*j) - a(*i)).collect())
        .collect();

    // (distance, min symbol, max symbol) triples per direction.
    let mut occurrences: Vec<(f64, f64, f64)> = Vec::new();
    for row in 0..n {
        for j1 in 0..n {
            for j2 in (j1 + 1)..n {
                let d = points[j2] - points[j1];
                let (s1, s2) = (values[row][j1], values[row][j2]);
                occurrences.push((d, s1.min(s2), s1.max(s2)));
            }
        }
    }
    let row_count = occurrences.len() as u64;
    for col in 0..n {
        for i1 in 0..n {
            for i2 in (i1 + 1)..n {
                let d = points[i2] - points[i1];
                let (s1, s2) = (values[i1][col], values[i2][col]);
                occurrences.push((d, s1.min(s2), s1.max(s2)));
            }
        }
    }
    let split = row_count as usize;
    let mut violations = 0u64;
    for part in [&occurrences[..split], &occurrences[split..]] {
        let mut sorted: Vec<&(f64, f64, f64)> = part.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        for w in sorted.windows(2) {
            let (d1, x1, y1) = *w[0];
            let (d2, x2, y2) = *w[1];
            if (d1 - d2).abs() <= tol && (x1 - x2).abs() <= tol && (y1 - y2).abs() <= tol {
                violations += 1;
            }
        }
    }
    (violations == 0, violations, row_count)
}
