//! Partial directed terraces with constraint-checked extension.
//!
//! A partial terrace is a finite injective partial map `a: I ⇀ G` together
//! with its induced sequencings `a_(d)(i) = a(i)^{-1} a(i+d)` for every
//! realized distance `d`. Three kinds are supported:
//!
//! * `T`: every sequencing is injective and avoids the identity,
//! * `S`: additionally at most one of `{x, x^{-1}}` may occur per distance
//!   (the group must be involution-free),
//! * `R`: like `T`, but the map itself also avoids the identity.
//!
//! Extension is greedy first-fit over the group's deterministic enumeration;
//! the `meet_*` operations realize the three dense requirement families
//! (domain point hit, range value hit, sequencing value hit at a distance).
//! Range and sequencing placements go "far out" beyond everything built so
//! far, so every cross-distance they create is fresh and only local
//! constraints can bind.

use crate::group::{GroupElement, GroupError, GroupKernel};
use crate::index::{IndexPoint, IndexSet};
use crate::report::{VerificationReport, Witness};
use crate::scheduler::{fair_unpair, GreedyConstruction};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

/// Candidates tried per first-fit search before giving up loudly.
pub const SEARCH_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerraceKind {
    T,
    S,
    R,
}

impl TerraceKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "T" => Some(TerraceKind::T),
            "S" => Some(TerraceKind::S),
            "R" => Some(TerraceKind::R),
            _ => None,
        }
    }
}

impl fmt::Display for TerraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerraceKind::T => write!(f, "T"),
            TerraceKind::S => write!(f, "S"),
            TerraceKind::R => write!(f, "R"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("index {0} is already assigned")]
    Occupied(String),
    #[error("value {0} is already in the range")]
    ValueUsed(String),
    #[error("sequencing clash at distance {distance}: value {value} would repeat")]
    SequencingClash { distance: String, value: String },
    #[error("square clash at distance {distance}: midpoint square equals the flanking product")]
    SquareClash { distance: String },
    #[error("pair clash at distance {distance}: both {value} and its inverse would occur")]
    PairClash { distance: String, value: String },
    #[error("identity value is not allowed here")]
    IdentityValue,
    #[error("point {0} is not in the index set")]
    NotInIndex(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Error)]
pub enum TerraceError {
    #[error("extension failed: {0}")]
    ExtensionFailed(String),
    #[error(transparent)]
    Assign(#[from] AssignError),
    #[error("distance {0} is not admissible for this index set")]
    InvalidDistance(String),
    #[error("kind S requires an involution-free group, got {0}")]
    InvolutionObstruction(String),
    #[error("terrace construction needs an infinite group, got {0}")]
    FiniteGroup(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Rejection counters from the first-fit searches, by binding constraint.
/// Diagnostic only; not part of the persisted state.
#[derive(Debug, Clone, Copy, Default)]
pub struct RejectStats {
    pub value_used: u64,
    pub sequencing_clash: u64,
    pub square_clash: u64,
    pub pair_clash: u64,
    pub other: u64,
}

impl RejectStats {
    fn count(&mut self, err: &AssignError) {
        match err {
            AssignError::ValueUsed(_) => self.value_used += 1,
            AssignError::SequencingClash { .. } => self.sequencing_clash += 1,
            AssignError::SquareClash { .. } => self.square_clash += 1,
            AssignError::PairClash { .. } => self.pair_clash += 1,
            _ => self.other += 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SeqTable {
    values: BTreeSet<GroupElement>,
    /// Kind S only: canonical representatives min(v, v^{-1}) of realized
    /// inverse pairs.
    pair_reps: BTreeSet<GroupElement>,
}

/// One requirement of the three dense families.
#[derive(Debug, Clone, PartialEq)]
pub enum TerraceReq {
    /// i ∈ dom a.
    Domain(IndexPoint),
    /// g ∈ ran a.
    Range(GroupElement),
    /// g ∈ ran a_(d).
    SeqRange(BigRational, GroupElement),
}

impl fmt::Display for TerraceReq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerraceReq::Domain(i) => write!(f, "domain i={i}"),
            TerraceReq::Range(g) => write!(f, "range g={g}"),
            TerraceReq::SeqRange(d, g) => {
                write!(f, "seq d={} g={g}", crate::index::render_rational(d))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartialTerrace {
    kind: TerraceKind,
    group: GroupKernel,
    index: IndexSet,
    forward: BTreeMap<IndexPoint, GroupElement>,
    backward: BTreeMap<GroupElement, IndexPoint>,
    seq: HashMap<BigRational, SeqTable>,
    stats: RejectStats,
}

/// A validated batch of assignments, ready to commit.
struct Staged {
    points: Vec<(IndexPoint, GroupElement)>,
    entries: Vec<(BigRational, GroupElement)>,
}

impl PartialTerrace {
    pub fn new(kind: TerraceKind, group: GroupKernel, index: IndexSet) -> Result<Self, TerraceError> {
        if group.is_finite() {
            return Err(TerraceError::FiniteGroup(group.render()));
        }
        if kind == TerraceKind::S && !group.involution_free() {
            return Err(TerraceError::InvolutionObstruction(group.render()));
        }
        Ok(PartialTerrace {
            kind,
            group,
            index,
            forward: BTreeMap::new(),
            backward: BTreeMap::new(),
            seq: HashMap::new(),
            stats: RejectStats::default(),
        })
    }

    pub fn kind(&self) -> TerraceKind {
        self.kind
    }

    pub fn group(&self) -> &GroupKernel {
        &self.group
    }

    pub fn index(&self) -> &IndexSet {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&IndexPoint, &GroupElement)> {
        self.forward.iter()
    }

    pub fn value_at(&self, i: &IndexPoint) -> Option<&GroupElement> {
        self.forward.get(i)
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<&IndexPoint> {
        self.backward.get(g)
    }

    pub fn stats(&self) -> RejectStats {
        self.stats
    }

    /// Number of sequencing values realized at distance `d`.
    pub fn seq_len(&self, d: &BigRational) -> usize {
        self.seq.get(d).map(|t| t.values.len()).unwrap_or(0)
    }

    pub fn seq_contains(&self, d: &BigRational, v: &GroupElement) -> bool {
        self.seq.get(d).map(|t| t.values.contains(v)).unwrap_or(false)
    }

    /// Distances whose sequencing table is nonempty.
    pub fn realized_distances(&self) -> Vec<BigRational> {
        let mut ds: Vec<BigRational> = self.seq.keys().cloned().collect();
        ds.sort();
        ds
    }

    fn pair_rep(&self, v: &GroupElement) -> GroupElement {
        let inv = self.group.inv(v).expect("value already validated");
        if *v <= inv {
            v.clone()
        } else {
            inv
        }
    }

    /// Orientation-normalized sequencing entry for the pair {p, q}:
    /// (distance, a_(d)(left) computed from the given values).
    fn entry_for(
        &self,
        p: &IndexPoint,
        gp: &GroupElement,
        q: &IndexPoint,
        gq: &GroupElement,
    ) -> (BigRational, IndexPoint, GroupElement) {
        debug_assert!(p != q);
        if p < q {
            let d = q - p;
            let v = self.group.diff(gp, gq).expect("validated");
            (d, p.clone(), v)
        } else {
            let d = p - q;
            let v = self.group.diff(gq, gp).expect("validated");
            (d, q.clone(), v)
        }
    }

    /// Validate a batch of new assignments against every invariant, without
    /// mutating the state.
    fn stage(&self, batch: &[(IndexPoint, GroupElement)]) -> Result<Staged, AssignError> {
        let identity = self.group.identity();
        for (bi, (i, g)) in batch.iter().enumerate() {
            if !self.index.contains(i) {
                return Err(AssignError::NotInIndex(i.to_string()));
            }
            self.group.validate(g)?;
            if self.kind == TerraceKind::R && *g == identity {
                return Err(AssignError::IdentityValue);
            }
            if self.forward.contains_key(i) {
                return Err(AssignError::Occupied(i.to_string()));
            }
            if self.backward.contains_key(g) {
                return Err(AssignError::ValueUsed(g.to_string()));
            }
            for (i2, g2) in &batch[..bi] {
                if i2 == i {
                    return Err(AssignError::Occupied(i.to_string()));
                }
                if g2 == g {
                    return Err(AssignError::ValueUsed(g.to_string()));
                }
            }
        }

        // All sequencing entries the batch would create, each checked
        // against the existing tables as soon as it is computed. Existing
        // points are visited in order of increasing distance from the new
        // point: clashes concentrate in the dense small-distance tables, so
        // doomed candidates are rejected after a handful of entries instead
        // of a full scan.
        let mut entries: Vec<(BigRational, IndexPoint, GroupElement)> =
            Vec::with_capacity(batch.len() * (self.forward.len() + batch.len()));
        let check_entry = |entry: &(BigRational, IndexPoint, GroupElement)| {
            let (d, _left, v) = entry;
            debug_assert!(*v != identity, "fresh values cannot induce identity entries");
            if let Some(table) = self.seq.get(d) {
                if table.values.contains(v) {
                    return Err(AssignError::SequencingClash {
                        distance: crate::index::render_rational(d),
                        value: v.to_string(),
                    });
                }
                if self.kind == TerraceKind::S && table.pair_reps.contains(&self.pair_rep(v)) {
                    return Err(AssignError::PairClash {
                        distance: crate::index::render_rational(d),
                        value: v.to_string(),
                    });
                }
            }
            Ok(())
        };
        for (bi, (i, g)) in batch.iter().enumerate() {
            let mut below = self.forward.range::<IndexPoint, _>(..i).rev().peekable();
            let mut above = self.forward.range::<IndexPoint, _>((
                std::ops::Bound::Excluded(i),
                std::ops::Bound::Unbounded,
            ))
            .peekable();
            loop {
                let take_below = match (below.peek(), above.peek()) {
                    (None, None) => break,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (Some((bj, _)), Some((aj, _))) => (i - bj) <= (*aj - i),
                };
                let (j, aj) = if take_below {
                    below.next().unwrap()
                } else {
                    above.next().unwrap()
                };
                let entry = self.entry_for(i, g, j, aj);
                check_entry(&entry)?;
                entries.push(entry);
            }
            for (j, gj) in &batch[..bi] {
                let entry = self.entry_for(i, g, j, gj);
                check_entry(&entry)?;
                entries.push(entry);
            }
        }

        // Within the batch itself. A repeated value at distance d whose two
        // left endpoints are d apart is the abelian square obstruction
        // (the new point is the midpoint of an arithmetic triple).
        let mut seen: HashMap<(&BigRational, &GroupElement), &IndexPoint> = HashMap::new();
        let mut seen_reps: HashMap<(&BigRational, GroupElement), ()> = HashMap::new();
        for (d, left, v) in &entries {
            if let Some(prev_left) = seen.get(&(d, v)) {
                let gap = if *prev_left < left {
                    left - prev_left
                } else {
                    *prev_left - left
                };
                if gap == *d {
                    return Err(AssignError::SquareClash {
                        distance: crate::index::render_rational(d),
                    });
                }
                return Err(AssignError::SequencingClash {
                    distance: crate::index::render_rational(d),
                    value: v.to_string(),
                });
            }
            seen.insert((d, v), left);
            if self.kind == TerraceKind::S {
                let rep = self.pair_rep(v);
                if seen_reps.insert((d, rep), ()).is_some() {
                    return Err(AssignError::PairClash {
                        distance: crate::index::render_rational(d),
                        value: v.to_string(),
                    });
                }
            }
        }

        Ok(Staged {
            points: batch.to_vec(),
            entries: entries.into_iter().map(|(d, _l, v)| (d, v)).collect(),
        })
    }

    fn commit(&mut self, staged: Staged) -> u64 {
        let growth = staged.points.len() as u64;
        for (i, g) in staged.points {
            self.backward.insert(g.clone(), i.clone());
            self.forward.insert(i, g);
        }
        for (d, v) in staged.entries {
            let rep = (self.kind == TerraceKind::S).then(|| self.pair_rep(&v));
            let table = self.seq.entry(d).or_default();
            if let Some(rep) = rep {
                table.pair_reps.insert(rep);
            }
            table.values.insert(v);
        }
        growth
    }

    /// Assign `a(i) = g`, re-establishing every invariant or failing without
    /// any change.
    pub fn assign(&mut self, i: IndexPoint, g: GroupElement) -> Result<(), AssignError> {
        let staged = self.stage(&[(i, g)])?;
        self.commit(staged);
        Ok(())
    }

    /// First fresh index beyond everything realized: max + diam + extra + 1.
    /// Every distance from it to an existing point exceeds every realized
    /// distance, so placements there disturb no existing sequencing table.
    fn far_point(&self, extra: &BigRational) -> IndexPoint {
        let min = self.forward.keys().next().expect("nonempty");
        let max = self.forward.keys().next_back().expect("nonempty");
        let diam = max - min;
        let one = BigRational::from(BigInt::one());
        max + &(diam + extra + one)
    }

    /// Dense family D_i: ensure `i ∈ dom a`. First-fit over the group
    /// enumeration, no-op when already assigned.
    pub fn meet_domain(&mut self, i: &IndexPoint) -> Result<u64, TerraceError> {
        if !self.index.contains(i) {
            return Err(AssignError::NotInIndex(i.to_string()).into());
        }
        if self.forward.contains_key(i) {
            return Ok(0);
        }
        let identity = self.group.identity();
        for k in 0..SEARCH_BUDGET {
            let g = match self.group.enumerate(k) {
                Ok(g) => g,
                Err(_) => {
                    return Err(TerraceError::ExtensionFailed(format!(
                        "group enumeration exhausted after {k} candidates for domain point {i}"
                    )))
                }
            };
            if self.kind == TerraceKind::R && g == identity {
                continue;
            }
            if self.backward.contains_key(&g) {
                self.stats.value_used += 1;
                continue;
            }
            match self.stage(&[(i.clone(), g)]) {
                Ok(staged) => {
                    self.commit(staged);
                    return Ok(1);
                }
                Err(e) => self.stats.count(&e),
            }
        }
        Err(TerraceError::ExtensionFailed(format!(
            "search budget exhausted for domain point {i}"
        )))
    }

    /// Dense family D_g: ensure `g ∈ ran a`, placed far out so that no
    /// previously realized sequencing table grows.
    pub fn meet_range(&mut self, g: &GroupElement) -> Result<u64, TerraceError> {
        self.group.validate(g)?;
        if self.backward.contains_key(g) {
            return Ok(0);
        }
        let target = if self.forward.is_empty() {
            self.index.enumerate_points(0)
        } else {
            self.far_point(&BigRational::from(BigInt::ZERO))
        };
        match self.stage(&[(target.clone(), g.clone())]) {
            Ok(staged) => {
                self.commit(staged);
                Ok(1)
            }
            Err(e) => Err(TerraceError::ExtensionFailed(format!(
                "far placement of {g} at {target} unexpectedly failed: {e}"
            ))),
        }
    }

    /// Dense family D^d_g: ensure `g ∈ ran a_(d)` by placing a fresh pair
    /// `a(ḡ) = x`, `a(ḡ+d) = x·g` far out, first-fit over `x`.
    pub fn meet_seq_range(
        &mut self,
        d: &BigRational,
        g: &GroupElement,
    ) -> Result<u64, TerraceError> {
        if !self.index.has_distance(d) {
            return Err(TerraceError::InvalidDistance(
                crate::index::render_rational(d),
            ));
        }
        self.group.validate(g)?;
        let identity = self.group.identity();
        if *g == identity {
            return Err(AssignError::IdentityValue.into());
        }
        if self.seq_realizes(d, g) {
            return Ok(0);
        }
        let base = if self.forward.is_empty() {
            self.index.enumerate_points(0)
        } else {
            self.far_point(d)
        };
        let second = &base + d;
        for k in 0..SEARCH_BUDGET {
            let x = match self.group.enumerate(k) {
                Ok(x) => x,
                Err(_) => {
                    return Err(TerraceError::ExtensionFailed(format!(
                        "group enumeration exhausted for seq target d={} g={g}",
                        crate::index::render_rational(d)
                    )))
                }
            };
            if self.kind == TerraceKind::R && x == identity {
                continue;
            }
            let xg = self.group.op(&x, g).expect("validated");
            if self.kind == TerraceKind::R && xg == identity {
                continue;
            }
            if self.backward.contains_key(&x) || self.backward.contains_key(&xg) {
                self.stats.value_used += 1;
                continue;
            }
            match self.stage(&[(base.clone(), x), (second.clone(), xg)]) {
                Ok(staged) => {
                    self.commit(staged);
                    return Ok(2);
                }
                Err(e) => self.stats.count(&e),
            }
        }
        Err(TerraceError::ExtensionFailed(format!(
            "search budget exhausted for seq target d={} g={g}",
            crate::index::render_rational(d)
        )))
    }

    /// Is the requirement `g ∈ ran a_(d)` already met (for kind S, met by
    /// either member of the inverse pair)?
    fn seq_realizes(&self, d: &BigRational, g: &GroupElement) -> bool {
        match self.seq.get(d) {
            None => false,
            Some(table) => {
                if self.kind == TerraceKind::S {
                    table.pair_reps.contains(&self.pair_rep(g))
                } else {
                    table.values.contains(g)
                }
            }
        }
    }

    /// The target of the k-th D^d_g group-element stream entry: skips the
    /// identity, and for kind S keeps one representative per inverse pair.
    fn seq_range_target(&self, gi: u64) -> GroupElement {
        match self.kind {
            TerraceKind::T | TerraceKind::R => self
                .group
                .enumerate(gi + 1)
                .expect("infinite group enumeration"),
            TerraceKind::S => {
                let mut found = 0u64;
                let mut k = 1u64;
                loop {
                    let g = self.group.enumerate(k).expect("infinite group enumeration");
                    let inv = self.group.inv(&g).expect("validated");
                    if g <= inv {
                        if found == gi {
                            return g;
                        }
                        found += 1;
                    }
                    k += 1;
                }
            }
        }
    }

    /// Recompute every invariant from scratch, independent of the
    /// incremental bookkeeping, and additionally compare the bookkeeping
    /// against the recomputation.
    pub fn check(&self) -> VerificationReport {
        let mut report = VerificationReport::new("terrace");
        let identity = self.group.identity();

        // Forward map sanity: membership, element validity, kind R identity.
        let mut values_seen: BTreeMap<&GroupElement, &IndexPoint> = BTreeMap::new();
        for (i, g) in &self.forward {
            if !self.index.contains(i) {
                report.fail(Witness::new("not-in-index", format!("point {i}")));
            }
            if self.group.validate(g).is_err() {
                report.fail(Witness::new("bad-element", format!("value {g} at {i}")));
            }
            if self.kind == TerraceKind::R && *g == identity {
                report.fail(Witness::new("identity-value", format!("a({i}) = identity")));
            }
            if let Some(other) = values_seen.insert(g, i) {
                report.fail(Witness::new(
                    "not-injective",
                    format!("value {g} at both {other} and {i}"),
                ));
            }
        }

        // Backward consistency.
        if self.backward.len() != self.forward.len() {
            report.fail(Witness::new(
                "backward-inconsistent",
                format!(
                    "backward has {} entries, forward {}",
                    self.backward.len(),
                    self.forward.len()
                ),
            ));
        }
        for (g, i) in &self.backward {
            if self.forward.get(i) != Some(g) {
                report.fail(Witness::new(
                    "backward-inconsistent",
                    format!("backward says a({i}) = {g}"),
                ));
            }
        }

        // Recompute all sequencing entries pairwise.
        let points: Vec<(&IndexPoint, &GroupElement)> = self.forward.iter().collect();
        let mut recomputed: HashMap<BigRational, SeqTable> = HashMap::new();
        let mut entry_count = 0u64;
        for (a, (i, gi)) in points.iter().enumerate() {
            for (j, gj) in points.iter().skip(a + 1).map(|&(j, gj)| (j, gj)) {
                let (d, left, v) = self.entry_for(i, gi, j, gj);
                entry_count += 1;
                if v == identity {
                    report.fail(Witness::new(
                        "identity-sequencing",
                        format!("a_({})({left}) is the identity", crate::index::render_rational(&d)),
                    ));
                }
                let table = recomputed.entry(d.clone()).or_default();
                if !table.values.insert(v.clone()) {
                    let kind = if self.kind == TerraceKind::S {
                        "pair-or-seq-clash"
                    } else {
                        "sequencing-not-injective"
                    };
                    report.fail(Witness::new(
                        kind,
                        format!(
                            "value {v} repeats at distance {} (left endpoint {left})",
                            crate::index::render_rational(&d)
                        ),
                    ));
                }
                if self.kind == TerraceKind::S {
                    let rep = self.pair_rep(&v);
                    if !table.pair_reps.insert(rep) && !table.values.contains(&v) {
                        // values-insert above already flagged exact repeats;
                        // this flags x together with x^{-1}.
                        report.fail(Witness::new(
                            "pair-clash",
                            format!(
                                "both {v} and its inverse occur at distance {}",
                                crate::index::render_rational(&d)
                            ),
                        ));
                    }
                }
            }
        }

        // Kind S: a value and its inverse both realized at one distance.
        if self.kind == TerraceKind::S {
            for (d, table) in &recomputed {
                for v in &table.values {
                    let inv = self.group.inv(v).expect("validated");
                    if inv != *v && v < &inv && table.values.contains(&inv) {
                        report.fail(Witness::new(
                            "pair-clash",
                            format!(
                                "both {v} and {inv} realized at distance {}",
                                crate::index::render_rational(d)
                            ),
                        ));
                    }
                }
            }
        }

        // Differential: incremental bookkeeping vs recomputation.
        if recomputed.len() != self.seq.len() {
            report.fail(Witness::new(
                "bookkeeping-drift",
                format!(
                    "{} recomputed distance tables vs {} stored",
                    recomputed.len(),
                    self.seq.len()
                ),
            ));
        }
        for (d, table) in &recomputed {
            match self.seq.get(d) {
                None => report.fail(Witness::new(
                    "bookkeeping-drift",
                    format!("distance {} missing from bookkeeping", crate::index::render_rational(d)),
                )),
                Some(stored) => {
                    if stored.values != table.values {
                        report.fail(Witness::new(
                            "bookkeeping-drift",
                            format!(
                                "value set differs at distance {}",
                                crate::index::render_rational(d)
                            ),
                        ));
                    }
                    if self.kind == TerraceKind::S && stored.pair_reps != table.pair_reps {
                        report.fail(Witness::new(
                            "bookkeeping-drift",
                            format!(
                                "pair representatives differ at distance {}",
                                crate::index::render_rational(d)
                            ),
                        ));
                    }
                }
            }
        }

        report.stat("points", self.forward.len() as u64);
        report.stat("distances", recomputed.len() as u64);
        report.stat("sequencing_entries", entry_count);
        report
    }
}

impl GreedyConstruction for PartialTerrace {
    type Req = TerraceReq;

    fn requirement_at(&self, pos: u64) -> TerraceReq {
        let (family, k) = fair_unpair(pos, 3);
        match family {
            0 => TerraceReq::Domain(self.index.enumerate_points(k)),
            1 => {
                let g = match self.kind {
                    // Kind R never has the identity in its range.
                    TerraceKind::R => self.group.enumerate(k + 1),
                    _ => self.group.enumerate(k),
                };
                TerraceReq::Range(g.expect("infinite group enumeration"))
            }
            _ => {
                let (di, gi) = crate::group::cantor_unpair(k);
                let d = self.index.enumerate_distances(di);
                TerraceReq::SeqRange(d, self.seq_range_target(gi))
            }
        }
    }

    fn is_satisfied(&self, req: &TerraceReq) -> bool {
        match req {
            TerraceReq::Domain(i) => self.forward.contains_key(i),
            TerraceReq::Range(g) => self.backward.contains_key(g),
            TerraceReq::SeqRange(d, g) => self.seq_realizes(d, g),
        }
    }

    fn meet(&mut self, req: &TerraceReq) -> Result<u64, String> {
        let result = match req {
            TerraceReq::Domain(i) => self.meet_domain(i),
            TerraceReq::Range(g) => self.meet_range(g),
            TerraceReq::SeqRange(d, g) => self.meet_seq_range(d, g),
        };
        result.map_err(|e| e.to_string())
    }

    fn full_check(&self) -> Result<(), Vec<String>> {
        let report = self.check();
        if report.pass {
            Ok(())
        } else {
            Err(report
                .witnesses
                .iter()
                .map(|w| format!("{}: {}", w.kind, w.note))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IndexKind;
    use crate::scheduler::run;

    fn zzt() -> PartialTerrace {
        PartialTerrace::new(
            TerraceKind::T,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap()
    }

    fn pt(v: i64) -> IndexPoint {
        IndexPoint::from_integer(v)
    }

    fn el(t: &PartialTerrace, s: &str) -> GroupElement {
        t.group().parse_element(s).unwrap()
    }

    #[test]
    fn empty_terrace_checks_out() {
        let t = zzt();
        assert!(t.check().pass);
    }

    #[test]
    fn sequencing_clash_on_repeated_difference() {
        let mut t = zzt();
        t.assign(pt(0), el(&t, "0")).unwrap();
        t.assign(pt(1), el(&t, "1")).unwrap();
        // differences 1,1 at distance 1 would repeat
        let err = t.assign(pt(2), el(&t, "2")).unwrap_err();
        assert!(matches!(err, AssignError::SequencingClash { .. }), "{err}");
    }

    #[test]
    fn square_clash_at_midpoint() {
        let mut t = zzt();
        t.assign(pt(0), el(&t, "0")).unwrap();
        t.assign(pt(2), el(&t, "4")).unwrap();
        // 2·2 = 0 + 4: the abelian square obstruction
        let err = t.assign(pt(1), el(&t, "2")).unwrap_err();
        assert!(matches!(err, AssignError::SquareClash { .. }), "{err}");
        // state unchanged by the failed assign
        assert_eq!(t.len(), 2);
        assert!(t.check().pass);
    }

    #[test]
    fn occupied_and_value_used() {
        let mut t = zzt();
        t.assign(pt(0), el(&t, "5")).unwrap();
        assert!(matches!(
            t.assign(pt(0), el(&t, "6")),
            Err(AssignError::Occupied(_))
        ));
        assert!(matches!(
            t.assign(pt(1), el(&t, "5")),
            Err(AssignError::ValueUsed(_))
        ));
    }

    #[test]
    fn kind_r_rejects_identity_value() {
        let mut t = PartialTerrace::new(
            TerraceKind::R,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        assert!(matches!(
            t.assign(pt(0), el(&t, "0")),
            Err(AssignError::IdentityValue)
        ));
    }

    #[test]
    fn kind_s_requires_involution_free() {
        let err = PartialTerrace::new(
            TerraceKind::S,
            GroupKernel::parse("E2").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap_err();
        assert!(matches!(err, TerraceError::InvolutionObstruction(_)));
    }

    #[test]
    fn kind_s_pair_clash() {
        let mut t = PartialTerrace::new(
            TerraceKind::S,
            GroupKernel::parse("Q").unwrap(),
            IndexSet::new(IndexKind::Q),
        )
        .unwrap();
        t.assign(pt(0), el(&t, "0")).unwrap();
        t.assign(pt(2), el(&t, "5")).unwrap(); // a_(2)(0) = 5
        t.assign(pt(10), el(&t, "7")).unwrap();
        // a_(2)(10) = 2 - 7 = -5 would realize the inverse of 5 at distance 2
        let err = t.assign(pt(12), el(&t, "2")).unwrap_err();
        assert!(matches!(err, AssignError::PairClash { .. }), "{err}");
    }

    #[test]
    fn meet_domain_first_fit() {
        let mut t = zzt();
        assert_eq!(t.meet_domain(&pt(0)).unwrap(), 1);
        assert_eq!(t.value_at(&pt(0)).unwrap().to_string(), "0");
        // already assigned → no-op
        assert_eq!(t.meet_domain(&pt(0)).unwrap(), 0);
    }

    #[test]
    fn meet_range_far_placement_leaves_existing_tables_alone() {
        let mut t = zzt();
        for v in 0..10 {
            t.meet_domain(&pt(v)).unwrap();
        }
        let before: Vec<(BigRational, usize)> = t
            .realized_distances()
            .into_iter()
            .map(|d| {
                let n = t.seq_len(&d);
                (d, n)
            })
            .collect();
        let g = el(&t, "1000");
        assert_eq!(t.meet_range(&g).unwrap(), 1);
        for (d, n) in before {
            assert_eq!(t.seq_len(&d), n, "table at {d} grew");
        }
        assert!(t.check().pass);
        // already in range → no-op
        assert_eq!(t.meet_range(&g).unwrap(), 0);
    }

    #[test]
    fn meet_range_on_empty_uses_first_point() {
        let mut t = zzt();
        let g = el(&t, "5");
        t.meet_range(&g).unwrap();
        assert_eq!(t.index_of(&g).unwrap(), &pt(0));
    }

    #[test]
    fn meet_seq_range_first_fit_on_empty() {
        let mut t = zzt();
        let d = BigRational::from(BigInt::one());
        let g = el(&t, "7");
        assert_eq!(t.meet_seq_range(&d, &g).unwrap(), 2);
        assert_eq!(t.value_at(&pt(0)).unwrap().to_string(), "0");
        assert_eq!(t.value_at(&pt(1)).unwrap().to_string(), "7");
        assert!(t.seq_contains(&d, &g));
        // already realized → no-op
        assert_eq!(t.meet_seq_range(&d, &g).unwrap(), 0);
    }

    #[test]
    fn meet_seq_range_rejects_identity_and_bad_distance() {
        let mut t = zzt();
        let d = BigRational::from(BigInt::one());
        assert!(matches!(
            t.meet_seq_range(&d, &el(&t, "0")),
            Err(TerraceError::Assign(AssignError::IdentityValue))
        ));
        let half = crate::index::parse_rational("1/2").unwrap();
        assert!(matches!(
            t.meet_seq_range(&half, &el(&t, "1")),
            Err(TerraceError::InvalidDistance(_))
        ));
    }

    #[test]
    fn scheduler_run_satisfies_prefix() {
        let mut t = zzt();
        let log = run(&mut t, 0, 120, false).unwrap();
        assert_eq!(log.records.len(), 120);
        assert!(log.max_growth() <= 2);
        for pos in 0..120 {
            let req = t.requirement_at(pos);
            assert!(t.is_satisfied(&req), "requirement {req} not satisfied");
        }
        assert!(t.check().pass);
    }

    #[test]
    fn requirement_stream_injective_prefix() {
        let t = zzt();
        let mut seen: Vec<String> = Vec::new();
        for pos in 0..1000 {
            let r = t.requirement_at(pos).to_string();
            assert!(!seen.contains(&r), "duplicate requirement {r}");
            seen.push(r);
        }
    }

    #[test]
    fn kind_r_stream_never_targets_identity_range() {
        let t = PartialTerrace::new(
            TerraceKind::R,
            GroupKernel::parse("Z").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        for pos in 0..500 {
            if let TerraceReq::Range(g) = t.requirement_at(pos) {
                assert_ne!(g, t.group().identity());
            }
        }
    }

    #[test]
    fn e2_square_clash_never_binds() {
        let mut t = PartialTerrace::new(
            TerraceKind::T,
            GroupKernel::parse("E2").unwrap(),
            IndexSet::new(IndexKind::Z),
        )
        .unwrap();
        let log = run(&mut t, 0, 150, false).unwrap();
        assert_eq!(log.records.len(), 150);
        assert_eq!(t.stats().square_clash, 0);
        assert!(t.check().pass);
    }

    #[test]
    fn corrupted_state_fails_check() {
        let mut t = zzt();
        run(&mut t, 0, 40, false).unwrap();
        // Corrupt the bookkeeping behind the checker's back.
        let d = BigRational::from(BigInt::one());
        t.seq
            .entry(d)
            .or_default()
            .values
            .insert(GroupElement::Int(BigInt::from(987654321)));
        assert!(!t.check().pass);
    }

    #[test]
    fn s_terrace_over_q_scheduler_run() {
        let mut t = PartialTerrace::new(
            TerraceKind::S,
            GroupKernel::parse("Q").unwrap(),
            IndexSet::new(IndexKind::Q),
        )
        .unwrap();
        run(&mut t, 0, 120, false).unwrap();
        assert!(t.check().pass);
        // Exhaustive inverse-pair scan over the finite state.
        for d in t.realized_distances() {
            let table = &t.seq[&d];
            for v in &table.values {
                let inv = t.group().inv(v).unwrap();
                if inv != *v {
                    assert!(
                        !(table.values.contains(&inv) && v < &inv),
                        "pair {{{v}, {inv}}} realized twice at {d}"
                    );
                }
            }
        }
    }
}
