//! Index sets inside an ordered field, with exact rational arithmetic.
//!
//! Rows and columns of the squares built here live at [`IndexPoint`]
//! positions. Three index sets are built in — the naturals, the integers,
//! and the rationals — which between them realize the distance behaviors
//! (discrete vs. dense) the countable constructions need. For a positive
//! distance `d`, the shift set `I_(d) = { i ∈ I : i + d ∈ I }` governs which
//! distances carry sequencing constraints.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(String),
    #[error("cannot parse rational {text:?}: {reason}")]
    BadRational { text: String, reason: String },
}

/// An exact rational position. All spatial arithmetic in the crate is exact;
/// distance coincidences are decided by true equality, never by tolerance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexPoint(BigRational);

impl IndexPoint {
    pub fn from_integer(v: i64) -> Self {
        IndexPoint(BigRational::from(BigInt::from(v)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        IndexPoint(r)
    }

    pub fn rational(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.denom().is_one()
    }

    /// Parse the canonical `p` / `p/q` literal syntax.
    pub fn parse(s: &str) -> Result<Self, IndexError> {
        let r = parse_rational(s)?;
        let p = IndexPoint(r);
        if p.to_string() != s {
            return Err(IndexError::BadRational {
                text: s.to_string(),
                reason: format!("non-canonical spelling (canonical is {p})"),
            });
        }
        Ok(p)
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, IndexError> {
    let bad = |reason: &str| IndexError::BadRational {
        text: s.to_string(),
        reason: reason.to_string(),
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let n = BigInt::from_str(num).map_err(|_| bad("bad numerator"))?;
            let d = BigInt::from_str(den).map_err(|_| bad("bad denominator"))?;
            if d.is_zero() {
                return Err(bad("zero denominator"));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from(
            BigInt::from_str(s).map_err(|_| bad("bad integer"))?,
        )),
    }
}

pub fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for IndexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", render_rational(&self.0))
    }
}

impl Add<&BigRational> for &IndexPoint {
    type Output = IndexPoint;
    fn add(self, rhs: &BigRational) -> IndexPoint {
        IndexPoint(&self.0 + rhs)
    }
}

impl Sub<&IndexPoint> for &IndexPoint {
    type Output = BigRational;
    fn sub(self, rhs: &IndexPoint) -> BigRational {
        &self.0 - &rhs.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexKind {
    N,
    Z,
    Q,
}

impl IndexKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "N" => Some(IndexKind::N),
            "Z" => Some(IndexKind::Z),
            "Q" => Some(IndexKind::Q),
            _ => None,
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexKind::N => write!(f, "N"),
            IndexKind::Z => write!(f, "Z"),
            IndexKind::Q => write!(f, "Q"),
        }
    }
}

/// One of the built-in index sets, with membership and distance predicates
/// and deterministic enumerations of points and admissible distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    kind: IndexKind,
}

impl IndexSet {
    pub fn new(kind: IndexKind) -> Self {
        IndexSet { kind }
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn contains(&self, p: &IndexPoint) -> bool {
        match self.kind {
            IndexKind::N => p.is_integer() && !p.rational().is_negative(),
            IndexKind::Z => p.is_integer(),
            IndexKind::Q => true,
        }
    }

    /// Is `I_(d)` nonempty (equivalently, of full cardinality)?
    pub fn has_distance(&self, d: &BigRational) -> bool {
        if !d.is_positive() {
            return false;
        }
        match self.kind {
            IndexKind::N | IndexKind::Z => d.denom().is_one(),
            IndexKind::Q => true,
        }
    }

    /// Membership of `i` in the shift set `I_(d)`.
    pub fn in_shift(&self, d: &BigRational, i: &IndexPoint) -> Result<bool, IndexError> {
        if !d.is_positive() {
            return Err(IndexError::NonPositiveDistance(render_rational(d)));
        }
        Ok(self.contains(i) && self.contains(&(i + d)))
    }

    /// Injective enumeration of all points of the set.
    pub fn enumerate_points(&self, k: u64) -> IndexPoint {
        match self.kind {
            IndexKind::N => IndexPoint(BigRational::from(BigInt::from(k))),
            IndexKind::Z => {
                let v = if k == 0 {
                    BigInt::zero()
                } else if k % 2 == 1 {
                    BigInt::from((k + 1) / 2)
                } else {
                    -BigInt::from(k / 2)
                };
                IndexPoint(BigRational::from(v))
            }
            IndexKind::Q => {
                // Reuse the group Q enumeration: 0, 1, -1, 1/2, -1/2, ...
                match crate::group::GroupKernel::parse("Q")
                    .expect("Q parses")
                    .enumerate(k)
                    .expect("Q is infinite")
                {
                    crate::group::GroupElement::Rat(r) => IndexPoint(r),
                    _ => unreachable!(),
                }
            }
        }
    }

    /// Injective enumeration of all admissible positive distances.
    pub fn enumerate_distances(&self, k: u64) -> BigRational {
        match self.kind {
            IndexKind::N | IndexKind::Z => BigRational::from(BigInt::from(k + 1)),
            IndexKind::Q => {
                // Positive rationals in Calkin–Wilf order via the Q point
                // enumeration's positive half (odd positions).
                match self.enumerate_points(2 * k + 1) {
                    IndexPoint(r) => r,
                }
            }
        }
    }
}

/// A finite, strictly sorted, duplicate-free choice of rows and columns:
/// the footprint of a finite window into an infinite square.
#[derive(Debug, Clone)]
pub struct Window {
    rows: Vec<IndexPoint>,
    cols: Vec<IndexPoint>,
}

impl Window {
    pub fn new(mut rows: Vec<IndexPoint>, mut cols: Vec<IndexPoint>) -> Self {
        rows.sort();
        rows.dedup();
        cols.sort();
        cols.dedup();
        Window { rows, cols }
    }

    pub fn square(points: Vec<IndexPoint>) -> Self {
        Self::new(points.clone(), points)
    }

    pub fn rows(&self) -> &[IndexPoint] {
        &self.rows
    }

    pub fn cols(&self) -> &[IndexPoint] {
        &self.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn shift_membership() {
        let z = IndexSet::new(IndexKind::Z);
        assert!(z.in_shift(&rat("3"), &IndexPoint::from_integer(-5)).unwrap());
        let n = IndexSet::new(IndexKind::N);
        assert!(!n.in_shift(&rat("2"), &IndexPoint::from_integer(-1)).unwrap());
        let q = IndexSet::new(IndexKind::Q);
        assert!(q
            .in_shift(&rat("1/2"), &IndexPoint::parse("1/3").unwrap())
            .unwrap());
        assert!(matches!(
            z.in_shift(&rat("-1"), &IndexPoint::from_integer(0)),
            Err(IndexError::NonPositiveDistance(_))
        ));
    }

    #[test]
    fn distance_admissibility() {
        let z = IndexSet::new(IndexKind::Z);
        assert!(z.has_distance(&rat("2")));
        assert!(!z.has_distance(&rat("1/2")));
        let q = IndexSet::new(IndexKind::Q);
        assert!(q.has_distance(&rat("1/2")));
        assert!(!q.has_distance(&rat("0")));
    }

    #[test]
    fn enumeration_prefixes() {
        let z = IndexSet::new(IndexKind::Z);
        let pts: Vec<String> = (0..4).map(|k| z.enumerate_points(k).to_string()).collect();
        assert_eq!(pts, ["0", "1", "-1", "2"]);
        let ds: Vec<String> = (0..3)
            .map(|k| render_rational(&z.enumerate_distances(k)))
            .collect();
        assert_eq!(ds, ["1", "2", "3"]);
        let n = IndexSet::new(IndexKind::N);
        assert_eq!(n.enumerate_points(0).to_string(), "0");
        assert_eq!(render_rational(&n.enumerate_distances(0)), "1");
    }

    #[test]
    fn enumerations_injective_and_members() {
        for kind in [IndexKind::N, IndexKind::Z, IndexKind::Q] {
            let set = IndexSet::new(kind);
            let mut pts = HashSet::new();
            let mut ds = HashSet::new();
            for k in 0..10_000u64 {
                let p = set.enumerate_points(k);
                assert!(set.contains(&p), "{kind}: point {p} not a member");
                assert!(pts.insert(p), "{kind}: point enumeration repeats at {k}");
                let d = set.enumerate_distances(k);
                assert!(set.has_distance(&d), "{kind}: inadmissible distance");
                assert!(ds.insert(d), "{kind}: distance enumeration repeats at {k}");
            }
        }
    }

    #[test]
    fn canonical_point_parsing() {
        assert!(IndexPoint::parse("2/4").is_err());
        assert!(IndexPoint::parse("+1").is_err());
        assert_eq!(IndexPoint::parse("-7/3").unwrap().to_string(), "-7/3");
        assert_eq!(IndexPoint::parse("42").unwrap().to_string(), "42");
    }

    #[test]
    fn window_sorts_and_dedups() {
        let w = Window::new(
            vec![
                IndexPoint::from_integer(3),
                IndexPoint::from_integer(1),
                IndexPoint::from_integer(3),
            ],
            vec![IndexPoint::from_integer(0)],
        );
        assert_eq!(w.rows().len(), 2);
        assert!(w.rows()[0] < w.rows()[1]);
    }
}
