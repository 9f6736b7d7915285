//! Countable and finite abelian groups presented uniformly.
//!
//! A [`GroupKernel`] packages a group operation, inverse, identity, a
//! canonical text codec for elements, and a deterministic enumeration
//! bijection with the naturals. Every builder and verifier in the crate is
//! written against this surface, so constructions are group-generic.
//!
//! Descriptor grammar:
//!
//! ```text
//! Z | Q | E2 | Zn:<n> | sum(<desc>,...) | prod(<desc>,<desc>)
//! ```
//!
//! `E2` is the countable elementary abelian 2-group on the naturals under
//! bitwise exclusive-or.

mod nim;

pub use nim::{nim_inv_in_block, nim_mul};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("syntax error in group spec: {0}")]
    Syntax(String),
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
    #[error("element {element} does not belong to group {group}")]
    ElementMismatch { group: String, element: String },
    #[error("enumeration index {index} out of range for finite group of order {order}")]
    OutOfRange { index: u64, order: u128 },
    #[error("cannot parse element {text:?} for group {group}: {reason}")]
    BadElement {
        group: String,
        text: String,
        reason: String,
    },
}

/// Parsed form of the descriptor grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupDescriptor {
    Z,
    Q,
    Zn(u64),
    E2,
    Sum(Vec<GroupDescriptor>),
    Prod(Box<GroupDescriptor>, Box<GroupDescriptor>),
}

impl GroupDescriptor {
    pub fn parse(spec: &str) -> Result<Self, GroupError> {
        let s = spec.trim();
        let desc = Self::parse_inner(s)?;
        desc.validate_spec()?;
        Ok(desc)
    }

    fn parse_inner(s: &str) -> Result<Self, GroupError> {
        match s {
            "Z" => return Ok(GroupDescriptor::Z),
            "Q" => return Ok(GroupDescriptor::Q),
            "E2" => return Ok(GroupDescriptor::E2),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("Zn:") {
            let n: u64 = rest
                .parse()
                .map_err(|_| GroupError::Syntax(format!("bad modulus in {s:?}")))?;
            return Ok(GroupDescriptor::Zn(n));
        }
        if let Some(body) = s.strip_prefix("sum(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top_level(body)
                .into_iter()
                .map(Self::parse_inner)
                .collect::<Result<Vec<_>, _>>()?;
            if parts.is_empty() {
                return Err(GroupError::Syntax("sum() needs at least one part".into()));
            }
            return Ok(GroupDescriptor::Sum(parts));
        }
        if let Some(body) = s.strip_prefix("prod(").and_then(|r| r.strip_suffix(')')) {
            let parts = split_top_level(body)
                .into_iter()
                .map(Self::parse_inner)
                .collect::<Result<Vec<_>, _>>()?;
            if parts.len() != 2 {
                return Err(GroupError::Syntax(
                    "prod(...) takes exactly two parts".into(),
                ));
            }
            let mut it = parts.into_iter();
            return Ok(GroupDescriptor::Prod(
                Box::new(it.next().unwrap()),
                Box::new(it.next().unwrap()),
            ));
        }
        Err(GroupError::Syntax(format!("unrecognized group spec {s:?}")))
    }

    fn validate_spec(&self) -> Result<(), GroupError> {
        match self {
            GroupDescriptor::Zn(n) if *n == 0 => {
                Err(GroupError::Syntax("Zn:<n> requires n >= 1".into()))
            }
            GroupDescriptor::Sum(parts) => parts.iter().try_for_each(|p| p.validate_spec()),
            GroupDescriptor::Prod(a, b) => {
                a.validate_spec()?;
                b.validate_spec()
            }
            _ => Ok(()),
        }
    }

    pub fn render(&self) -> String {
        match self {
            GroupDescriptor::Z => "Z".into(),
            GroupDescriptor::Q => "Q".into(),
            GroupDescriptor::E2 => "E2".into(),
            GroupDescriptor::Zn(n) => format!("Zn:{n}"),
            GroupDescriptor::Sum(parts) => {
                let inner: Vec<String> = parts.iter().map(|p| p.render()).collect();
                format!("sum({})", inner.join(","))
            }
            GroupDescriptor::Prod(a, b) => format!("prod({},{})", a.render(), b.render()),
        }
    }

    fn order(&self) -> Option<u128> {
        match self {
            GroupDescriptor::Z | GroupDescriptor::Q | GroupDescriptor::E2 => None,
            GroupDescriptor::Zn(n) => Some(*n as u128),
            GroupDescriptor::Sum(parts) => parts
                .iter()
                .try_fold(1u128, |acc, p| acc.checked_mul(p.order()?)),
            GroupDescriptor::Prod(a, b) => a.order()?.checked_mul(b.order()?),
        }
    }

    /// Every element satisfies g + g = identity.
    fn exponent_divides_two(&self) -> bool {
        match self {
            GroupDescriptor::Z | GroupDescriptor::Q => false,
            GroupDescriptor::E2 => true,
            GroupDescriptor::Zn(n) => *n <= 2,
            GroupDescriptor::Sum(parts) => parts.iter().all(|p| p.exponent_divides_two()),
            GroupDescriptor::Prod(a, b) => a.exponent_divides_two() && b.exponent_divides_two(),
        }
    }

    /// The set of squares {g+g} is infinite.
    fn squares_infinite(&self) -> bool {
        match self {
            GroupDescriptor::Z | GroupDescriptor::Q => true,
            GroupDescriptor::E2 | GroupDescriptor::Zn(_) => false,
            GroupDescriptor::Sum(parts) => parts.iter().any(|p| p.squares_infinite()),
            GroupDescriptor::Prod(a, b) => a.squares_infinite() || b.squares_infinite(),
        }
    }

    fn involution_free(&self) -> bool {
        match self {
            GroupDescriptor::Z | GroupDescriptor::Q => true,
            GroupDescriptor::E2 => false,
            GroupDescriptor::Zn(n) => n % 2 == 1,
            GroupDescriptor::Sum(parts) => parts.iter().all(|p| p.involution_free()),
            GroupDescriptor::Prod(a, b) => a.involution_free() && b.involution_free(),
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// A group element in its canonical internal form. Equal elements always
/// have identical representations, so derived equality and ordering are the
/// group's element equality and a stable total order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElement {
    /// Z and Zn (canonical range [0, n) for Zn).
    Int(BigInt),
    /// Q, always reduced with positive denominator.
    Rat(BigRational),
    /// E2: a natural, acting by bitwise xor.
    Nat(u64),
    /// sum(...) and prod(...): componentwise.
    Tuple(Vec<GroupElement>),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Int(v) => write!(f, "{v}"),
            GroupElement::Rat(v) => {
                if v.denom().is_one() {
                    write!(f, "{}", v.numer())
                } else {
                    write!(f, "{}/{}", v.numer(), v.denom())
                }
            }
            GroupElement::Nat(v) => write!(f, "{v}"),
            GroupElement::Tuple(parts) => {
                write!(f, "(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// How a group interacts with the square-related hypotheses of the
/// constructions: `Squareful` groups have as many squares as elements
/// (finite groups are trivially classified squareful), `AllInvolutions`
/// groups square everything to the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Squareful,
    AllInvolutions,
    Other,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Squareful => write!(f, "squareful"),
            Classification::AllInvolutions => write!(f, "all-involutions"),
            Classification::Other => write!(f, "other"),
        }
    }
}

/// A concrete group: operation, inverse, identity, canonical element codec,
/// and a deterministic enumeration bijection with the naturals (errors past
/// the order for finite groups). Immutable after construction.
#[derive(Debug, Clone)]
pub struct GroupKernel {
    desc: GroupDescriptor,
}

impl GroupKernel {
    pub fn parse(spec: &str) -> Result<Self, GroupError> {
        let desc = GroupDescriptor::parse(spec)?;
        // Reject finite orders we could never enumerate anyway.
        if let GroupDescriptor::Sum(_) | GroupDescriptor::Prod(_, _) = &desc {
            if desc.has_finite_overflow() {
                return Err(GroupError::UnsupportedGroup(format!(
                    "finite order of {} overflows",
                    desc.render()
                )));
            }
        }
        Ok(GroupKernel { desc })
    }

    pub fn from_descriptor(desc: GroupDescriptor) -> Result<Self, GroupError> {
        Self::parse(&desc.render())
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.desc
    }

    pub fn render(&self) -> String {
        self.desc.render()
    }

    pub fn order(&self) -> Option<u128> {
        self.desc.order()
    }

    pub fn is_finite(&self) -> bool {
        self.order().is_some()
    }

    pub fn classification(&self) -> Classification {
        if self.desc.order().is_some() {
            Classification::Squareful
        } else if self.desc.exponent_divides_two() {
            Classification::AllInvolutions
        } else if self.desc.squares_infinite() {
            Classification::Squareful
        } else {
            Classification::Other
        }
    }

    pub fn involution_free(&self) -> bool {
        self.desc.involution_free()
    }

    pub fn identity(&self) -> GroupElement {
        identity_of(&self.desc)
    }

    pub fn op(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(op_unchecked(&self.desc, a, b))
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.validate(a)?;
        Ok(inv_unchecked(&self.desc, a))
    }

    /// a^{-1} b, the ubiquitous difference in sequencing computations.
    pub fn diff(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        let ai = self.inv(a)?;
        self.op(&ai, b)
    }

    pub fn validate(&self, e: &GroupElement) -> Result<(), GroupError> {
        if validate_of(&self.desc, e) {
            Ok(())
        } else {
            Err(GroupError::ElementMismatch {
                group: self.render(),
                element: e.to_string(),
            })
        }
    }

    /// Deterministic enumeration bijection ℕ → G. Injective, and every
    /// element appears at some index; finite groups error past their order.
    pub fn enumerate(&self, k: u64) -> Result<GroupElement, GroupError> {
        enumerate_of(&self.desc, k)
    }

    /// All elements of a finite group, in enumeration order.
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        let order = self.order().ok_or_else(|| {
            GroupError::UnsupportedGroup(format!("{} is infinite", self.render()))
        })?;
        (0..order as u64).map(|k| self.enumerate(k)).collect()
    }

    pub fn render_element(&self, e: &GroupElement) -> String {
        e.to_string()
    }

    /// Parse an element in the group's canonical text form. Non-canonical
    /// spellings (unreduced fractions, out-of-range residues, leading plus
    /// signs) are rejected so persisted artifacts stay diff-stable.
    pub fn parse_element(&self, s: &str) -> Result<GroupElement, GroupError> {
        let e = parse_element_of(&self.desc, s).map_err(|reason| GroupError::BadElement {
            group: self.render(),
            text: s.to_string(),
            reason,
        })?;
        if e.to_string() != s {
            return Err(GroupError::BadElement {
                group: self.render(),
                text: s.to_string(),
                reason: format!("non-canonical spelling (canonical is {e})"),
            });
        }
        self.validate(&e)?;
        Ok(e)
    }
}

impl GroupDescriptor {
    fn has_finite_overflow(&self) -> bool {
        match self {
            GroupDescriptor::Sum(parts) => {
                parts.iter().all(|p| p.order().is_some()) && self.order().is_none()
            }
            GroupDescriptor::Prod(a, b) => {
                a.order().is_some() && b.order().is_some() && self.order().is_none()
            }
            _ => false,
        }
    }
}

fn identity_of(desc: &GroupDescriptor) -> GroupElement {
    match desc {
        GroupDescriptor::Z | GroupDescriptor::Zn(_) => GroupElement::Int(BigInt::zero()),
        GroupDescriptor::Q => GroupElement::Rat(BigRational::zero()),
        GroupDescriptor::E2 => GroupElement::Nat(0),
        GroupDescriptor::Sum(parts) => {
            GroupElement::Tuple(parts.iter().map(identity_of).collect())
        }
        GroupDescriptor::Prod(a, b) => GroupElement::Tuple(vec![identity_of(a), identity_of(b)]),
    }
}

fn op_unchecked(desc: &GroupDescriptor, a: &GroupElement, b: &GroupElement) -> GroupElement {
    match (desc, a, b) {
        (GroupDescriptor::Z, GroupElement::Int(x), GroupElement::Int(y)) => {
            GroupElement::Int(x + y)
        }
        (GroupDescriptor::Zn(n), GroupElement::Int(x), GroupElement::Int(y)) => {
            let n = BigInt::from(*n);
            GroupElement::Int((x + y) % n)
        }
        (GroupDescriptor::Q, GroupElement::Rat(x), GroupElement::Rat(y)) => {
            GroupElement::Rat(x + y)
        }
        (GroupDescriptor::E2, GroupElement::Nat(x), GroupElement::Nat(y)) => {
            GroupElement::Nat(x ^ y)
        }
        (GroupDescriptor::Sum(parts), GroupElement::Tuple(xs), GroupElement::Tuple(ys)) => {
            GroupElement::Tuple(
                parts
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .map(|(p, (x, y))| op_unchecked(p, x, y))
                    .collect(),
            )
        }
        (GroupDescriptor::Prod(p, q), GroupElement::Tuple(xs), GroupElement::Tuple(ys)) => {
            GroupElement::Tuple(vec![
                op_unchecked(p, &xs[0], &ys[0]),
                op_unchecked(q, &xs[1], &ys[1]),
            ])
        }
        _ => unreachable!("validated before dispatch"),
    }
}

fn inv_unchecked(desc: &GroupDescriptor, a: &GroupElement) -> GroupElement {
    match (desc, a) {
        (GroupDescriptor::Z, GroupElement::Int(x)) => GroupElement::Int(-x),
        (GroupDescriptor::Zn(n), GroupElement::Int(x)) => {
            let n = BigInt::from(*n);
            GroupElement::Int((n.clone() - x) % n)
        }
        (GroupDescriptor::Q, GroupElement::Rat(x)) => GroupElement::Rat(-x),
        (GroupDescriptor::E2, GroupElement::Nat(x)) => GroupElement::Nat(*x),
        (GroupDescriptor::Sum(parts), GroupElement::Tuple(xs)) => GroupElement::Tuple(
            parts
                .iter()
                .zip(xs)
                .map(|(p, x)| inv_unchecked(p, x))
                .collect(),
        ),
        (GroupDescriptor::Prod(p, q), GroupElement::Tuple(xs)) => {
            GroupElement::Tuple(vec![inv_unchecked(p, &xs[0]), inv_unchecked(q, &xs[1])])
        }
        _ => unreachable!("validated before dispatch"),
    }
}

fn validate_of(desc: &GroupDescriptor, e: &GroupElement) -> bool {
    match (desc, e) {
        (GroupDescriptor::Z, GroupElement::Int(_)) => true,
        (GroupDescriptor::Zn(n), GroupElement::Int(x)) => {
            !x.is_negative() && *x < BigInt::from(*n)
        }
        (GroupDescriptor::Q, GroupElement::Rat(_)) => true,
        (GroupDescriptor::E2, GroupElement::Nat(_)) => true,
        (GroupDescriptor::Sum(parts), GroupElement::Tuple(xs)) => {
            parts.len() == xs.len() && parts.iter().zip(xs).all(|(p, x)| validate_of(p, x))
        }
        (GroupDescriptor::Prod(p, q), GroupElement::Tuple(xs)) => {
            xs.len() == 2 && validate_of(p, &xs[0]) && validate_of(q, &xs[1])
        }
        _ => false,
    }
}

/// (stern(n), stern(n+1)) of Stern's diatomic sequence.
fn stern_pair(n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 1);
    }
    let (a, b) = stern_pair(n / 2);
    if n % 2 == 0 {
        (a, a + b)
    } else {
        (a + b, b)
    }
}

/// k-th positive rational in the Calkin–Wilf order, 1-indexed.
fn calkin_wilf(k: u64) -> BigRational {
    debug_assert!(k >= 1);
    let (num, den) = stern_pair(k);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Cantor unpairing: z ↦ (x, y) with π(x, y) = (x+y)(x+y+1)/2 + y.
pub fn cantor_unpair(z: u64) -> (u64, u64) {
    let w = ((8u128 * z as u128 + 1).isqrt() as u64 - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = z - t;
    let x = w - y;
    (x, y)
}

fn enumerate_of(desc: &GroupDescriptor, k: u64) -> Result<GroupElement, GroupError> {
    match desc {
        GroupDescriptor::Z => {
            // 0, 1, -1, 2, -2, ...
            let v = if k == 0 {
                BigInt::zero()
            } else if k % 2 == 1 {
                BigInt::from((k + 1) / 2)
            } else {
                -BigInt::from(k / 2)
            };
            Ok(GroupElement::Int(v))
        }
        GroupDescriptor::Zn(n) => {
            if k < *n {
                Ok(GroupElement::Int(BigInt::from(k)))
            } else {
                Err(GroupError::OutOfRange {
                    index: k,
                    order: *n as u128,
                })
            }
        }
        GroupDescriptor::Q => {
            // 0, then the Calkin–Wilf positives interleaved with negatives.
            let v = if k == 0 {
                BigRational::zero()
            } else if k % 2 == 1 {
                calkin_wilf((k + 1) / 2)
            } else {
                -calkin_wilf(k / 2)
            };
            Ok(GroupElement::Rat(v))
        }
        GroupDescriptor::E2 => Ok(GroupElement::Nat(k)),
        GroupDescriptor::Sum(parts) => {
            let mut components = Vec::with_capacity(parts.len());
            let mut rest = k;
            for (i, part) in parts.iter().enumerate() {
                if i + 1 == parts.len() {
                    components.push(enumerate_of(part, rest)?);
                } else {
                    let tail_order: Option<u128> = parts[i + 1..]
                        .iter()
                        .try_fold(1u128, |acc, p| acc.checked_mul(p.order()?));
                    let (kp, kr) = split_index(part.order(), tail_order, rest, desc)?;
                    components.push(enumerate_of(part, kp)?);
                    rest = kr;
                }
            }
            Ok(GroupElement::Tuple(components))
        }
        GroupDescriptor::Prod(a, b) => {
            let (ka, kb) = split_index(a.order(), b.order(), k, desc)?;
            Ok(GroupElement::Tuple(vec![
                enumerate_of(a, ka)?,
                enumerate_of(b, kb)?,
            ]))
        }
    }
}

/// Split one enumeration index into indices for a pair of factors, using a
/// bijection appropriate to the (finite/infinite) shape of the factors.
fn split_index(
    left: Option<u128>,
    right: Option<u128>,
    k: u64,
    whole: &GroupDescriptor,
) -> Result<(u64, u64), GroupError> {
    match (left, right) {
        (Some(n), Some(m)) => {
            let total = n.checked_mul(m).ok_or_else(|| GroupError::UnsupportedGroup(
                format!("finite order of {} overflows", whole.render()),
            ))?;
            if (k as u128) >= total {
                return Err(GroupError::OutOfRange {
                    index: k,
                    order: total,
                });
            }
            Ok((k % n as u64, k / n as u64))
        }
        (Some(n), None) => Ok((k % n as u64, k / n as u64)),
        (None, Some(m)) => Ok((k / m as u64, k % m as u64)),
        (None, None) => Ok(cantor_unpair(k)),
    }
}

fn parse_element_of(desc: &GroupDescriptor, s: &str) -> Result<GroupElement, String> {
    match desc {
        GroupDescriptor::Z | GroupDescriptor::Zn(_) => BigInt::from_str(s)
            .map(GroupElement::Int)
            .map_err(|e| e.to_string()),
        GroupDescriptor::Q => {
            let v = match s.split_once('/') {
                Some((num, den)) => {
                    let n = BigInt::from_str(num).map_err(|e| e.to_string())?;
                    let d = BigInt::from_str(den).map_err(|e| e.to_string())?;
                    if d.is_zero() {
                        return Err("zero denominator".into());
                    }
                    BigRational::new(n, d)
                }
                None => BigRational::from(BigInt::from_str(s).map_err(|e| e.to_string())?),
            };
            Ok(GroupElement::Rat(v))
        }
        GroupDescriptor::E2 => s
            .parse::<u64>()
            .map(GroupElement::Nat)
            .map_err(|e| e.to_string()),
        GroupDescriptor::Sum(parts) => {
            let body = s
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or("expected (..)")?;
            let pieces = split_top_level(body);
            if pieces.len() != parts.len() {
                return Err(format!("expected {} components", parts.len()));
            }
            let comps = parts
                .iter()
                .zip(pieces)
                .map(|(p, s)| parse_element_of(p, s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroupElement::Tuple(comps))
        }
        GroupDescriptor::Prod(a, b) => {
            let body = s
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or("expected (..)")?;
            let pieces = split_top_level(body);
            if pieces.len() != 2 {
                return Err("expected 2 components".into());
            }
            Ok(GroupElement::Tuple(vec![
                parse_element_of(a, pieces[0])?,
                parse_element_of(b, pieces[1])?,
            ]))
        }
    }
}
