//! Latin regions and their verifiers.
//!
//! A [`LatinRegion`] is a sparse finite grid (row, col) → symbol with the
//! Latin safety invariant (no symbol repeats within a row or column)
//! enforced on insertion. The verifiers recompute their properties from
//! scratch on an immutable snapshot; "exactly once" conditions of the
//! infinite objects are split into verified safety (at most once) plus
//! reported coverage statistics, since totality is unreachable at any
//! finite stage.

use crate::group::{GroupDescriptor, GroupElement, GroupKernel};
use crate::index::{render_rational, IndexPoint, Window};
use crate::report::{VerificationReport, Witness};
use crate::terrace::PartialTerrace;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::Signed;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("index {0} has no assigned value in the terrace")]
    UnassignedIndex(String),
    #[error("cell ({row}, {col}) already holds a symbol")]
    CellOccupied { row: String, col: String },
    #[error("symbol {symbol} already appears in {axis} {at}")]
    LatinViolation {
        symbol: String,
        axis: &'static str,
        at: String,
    },
    #[error("regions have different cell footprints")]
    ShapeMismatch,
    #[error("quadrangle search budget of {0} candidate tests exceeded")]
    SearchBudgetExceeded(u64),
    #[error("order must be even and at least 2, got {0}")]
    OddOrder(u64),
    #[error("region parse error: {0}")]
    Parse(String),
}

/// What the symbols of a region are drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolUniverse {
    Group(GroupDescriptor),
    Naturals,
}

impl SymbolUniverse {
    pub fn render(&self) -> String {
        match self {
            SymbolUniverse::Group(d) => d.render(),
            SymbolUniverse::Naturals => "nat".to_string(),
        }
    }

    pub fn parse(s: &str) -> Result<Self, RegionError> {
        if s == "nat" {
            Ok(SymbolUniverse::Naturals)
        } else {
            GroupDescriptor::parse(s)
                .map(SymbolUniverse::Group)
                .map_err(|e| RegionError::Parse(e.to_string()))
        }
    }

    pub fn parse_symbol(&self, s: &str) -> Result<GroupElement, RegionError> {
        match self {
            SymbolUniverse::Naturals => s
                .parse::<u64>()
                .map(GroupElement::Nat)
                .map_err(|e| RegionError::Parse(format!("bad natural {s:?}: {e}"))),
            SymbolUniverse::Group(d) => GroupKernel::from_descriptor(d.clone())
                .and_then(|k| k.parse_element(s))
                .map_err(|e| RegionError::Parse(e.to_string())),
        }
    }
}

/// Sparse finite grid with Latin safety enforced on insertion.
#[derive(Debug, Clone)]
pub struct LatinRegion {
    universe: SymbolUniverse,
    cells: BTreeMap<(IndexPoint, IndexPoint), GroupElement>,
    row_syms: BTreeMap<IndexPoint, BTreeSet<GroupElement>>,
    col_syms: BTreeMap<IndexPoint, BTreeSet<GroupElement>>,
}

impl LatinRegion {
    pub fn new(universe: SymbolUniverse) -> Self {
        LatinRegion {
            universe,
            cells: BTreeMap::new(),
            row_syms: BTreeMap::new(),
            col_syms: BTreeMap::new(),
        }
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, row: &IndexPoint, col: &IndexPoint) -> Option<&GroupElement> {
        self.cells.get(&(row.clone(), col.clone()))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(IndexPoint, IndexPoint), &GroupElement)> {
        self.cells.iter()
    }

    pub fn rows(&self) -> impl Iterator<Item = &IndexPoint> {
        self.row_syms.keys()
    }

    pub fn cols(&self) -> impl Iterator<Item = &IndexPoint> {
        self.col_syms.keys()
    }

    pub fn row_contains(&self, row: &IndexPoint, sym: &GroupElement) -> bool {
        self.row_syms.get(row).map(|s| s.contains(sym)).unwrap_or(false)
    }

    pub fn col_contains(&self, col: &IndexPoint, sym: &GroupElement) -> bool {
        self.col_syms.get(col).map(|s| s.contains(sym)).unwrap_or(false)
    }

    /// Insert a symbol, enforcing Latin safety.
    pub fn insert(
        &mut self,
        row: IndexPoint,
        col: IndexPoint,
        sym: GroupElement,
    ) -> Result<(), RegionError> {
        if self.cells.contains_key(&(row.clone(), col.clone())) {
            return Err(RegionError::CellOccupied {
                row: row.to_string(),
                col: col.to_string(),
            });
        }
        if self.row_contains(&row, &sym) {
            return Err(RegionError::LatinViolation {
                symbol: sym.to_string(),
                axis: "row",
                at: row.to_string(),
            });
        }
        if self.col_contains(&col, &sym) {
            return Err(RegionError::LatinViolation {
                symbol: sym.to_string(),
                axis: "column",
                at: col.to_string(),
            });
        }
        self.row_syms
            .entry(row.clone())
            .or_default()
            .insert(sym.clone());
        self.col_syms
            .entry(col.clone())
            .or_default()
            .insert(sym.clone());
        self.cells.insert((row, col), sym);
        Ok(())
    }

    /// Cells of one row, sorted by column.
    fn row_cells(&self) -> BTreeMap<&IndexPoint, Vec<(&IndexPoint, &GroupElement)>> {
        let mut rows: BTreeMap<&IndexPoint, Vec<(&IndexPoint, &GroupElement)>> = BTreeMap::new();
        for ((r, c), s) in &self.cells {
            rows.entry(r).or_default().push((c, s));
        }
        rows
    }

    fn col_cells(&self) -> BTreeMap<&IndexPoint, Vec<(&IndexPoint, &GroupElement)>> {
        let mut cols: BTreeMap<&IndexPoint, Vec<(&IndexPoint, &GroupElement)>> = BTreeMap::new();
        for ((r, c), s) in &self.cells {
            cols.entry(c).or_default().push((r, s));
        }
        cols
    }
}

/// The Cayley-style window `ℓ_ij = a(i)^{-1} a(j)` of a terrace prefix.
/// Every requested row and column must already be assigned.
pub fn cayley_window(t: &PartialTerrace, window: &Window) -> Result<LatinRegion, RegionError> {
    let mut region = LatinRegion::new(SymbolUniverse::Group(t.group().descriptor().clone()));
    for i in window.rows() {
        let ai = t
            .value_at(i)
            .ok_or_else(|| RegionError::UnassignedIndex(i.to_string()))?;
        for j in window.cols() {
            let aj = t
                .value_at(j)
                .ok_or_else(|| RegionError::UnassignedIndex(j.to_string()))?;
            let sym = t.group().diff(ai, aj).expect("terrace elements are valid");
            // A Latin violation here would contradict terrace injectivity.
            region.insert(i.clone(), j.clone(), sym)?;
        }
    }
    Ok(region)
}

/// Window over the first `n` assigned index points of a terrace.
pub fn window_of_first(t: &PartialTerrace, n: usize) -> Window {
    let pts: Vec<IndexPoint> = t.assignments().take(n).map(|(i, _)| i.clone()).collect();
    Window::square(pts)
}

/// From-scratch Latin check: no symbol repeats within any row or column.
pub fn verify_latin(region: &LatinRegion) -> VerificationReport {
    let mut report = VerificationReport::new("latin");
    for (axis, groups) in [("row", region.row_cells()), ("column", region.col_cells())] {
        for (line, cells) in groups {
            let mut seen: HashMap<&GroupElement, &IndexPoint> = HashMap::new();
            for (pos, sym) in cells {
                if let Some(prev) = seen.insert(sym, pos) {
                    let cells = if axis == "row" {
                        vec![
                            (line.to_string(), prev.to_string(), sym.to_string()),
                            (line.to_string(), pos.to_string(), sym.to_string()),
                        ]
                    } else {
                        vec![
                            (prev.to_string(), line.to_string(), sym.to_string()),
                            (pos.to_string(), line.to_string(), sym.to_string()),
                        ]
                    };
                    report.fail(
                        Witness::new(
                            "latin-repeat",
                            format!("symbol {sym} twice in {axis} {line}"),
                        )
                        .with_cells(cells),
                    );
                }
            }
        }
    }
    report.stat("cells", region.len() as u64);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairMode {
    Ordered,
    Unordered,
}

/// Shared engine for the distance-balance safety checks: for every positive
/// distance realized in the window and every symbol pair, occurrences at
/// that distance must be unique per direction. `max_distance` restricts to
/// d ≤ D.
fn verify_balance(
    region: &LatinRegion,
    property: &str,
    mode: PairMode,
    max_distance: Option<&BigRational>,
) -> VerificationReport {
    let mut report = VerificationReport::new(property);
    let mut row_occurrences = 0u64;
    let mut col_occurrences = 0u64;
    let mut row_distinct: HashMap<(BigRational, GroupElement, GroupElement), (IndexPoint, IndexPoint, IndexPoint)> =
        HashMap::new();
    let mut col_distinct: HashMap<(BigRational, GroupElement, GroupElement), (IndexPoint, IndexPoint, IndexPoint)> =
        HashMap::new();

    for (axis, groups) in [("row", region.row_cells()), ("column", region.col_cells())] {
        let (counter, table) = if axis == "row" {
            (&mut row_occurrences, &mut row_distinct)
        } else {
            (&mut col_occurrences, &mut col_distinct)
        };
        for (line, cells) in groups {
            // cells sorted by position already (BTreeMap iteration order).
            for (a, (p1, s1)) in cells.iter().enumerate() {
                for (p2, s2) in cells.iter().skip(a + 1) {
                    let d = *p2 - *p1;
                    debug_assert!(d.is_positive());
                    if let Some(limit) = max_distance {
                        if d > *limit {
                            continue;
                        }
                    }
                    let (x, y) = match mode {
                        PairMode::Ordered => ((*s1).clone(), (*s2).clone()),
                        PairMode::Unordered => {
                            if s1 <= s2 {
                                ((*s1).clone(), (*s2).clone())
                            } else {
                                ((*s2).clone(), (*s1).clone())
                            }
                        }
                    };
                    *counter += 1;
                    let key = (d, x, y);
                    if let Some((oline, op1, op2)) =
                        table.insert(key.clone(), (line.clone(), (*p1).clone(), (*p2).clone()))
                    {
                        let (d, x, y) = key;
                        let note = format!(
                            "pair ({x}, {y}) at distance {} twice in {axis}s {oline} and {line}",
                            render_rational(&d)
                        );
                        let wit_cells = if axis == "row" {
                            vec![
                                (oline.to_string(), op1.to_string(), x.to_string()),
                                (oline.to_string(), op2.to_string(), y.to_string()),
                                (line.to_string(), p1.to_string(), x.to_string()),
                                (line.to_string(), p2.to_string(), y.to_string()),
                            ]
                        } else {
                            vec![
                                (op1.to_string(), oline.to_string(), x.to_string()),
                                (op2.to_string(), oline.to_string(), y.to_string()),
                                (p1.to_string(), line.to_string(), x.to_string()),
                                (p2.to_string(), line.to_string(), y.to_string()),
                            ]
                        };
                        report.fail(Witness::new("balance-repeat", note).with_cells(wit_cells));
                    }
                }
            }
        }
    }

    report.stat("row_pair_occurrences", row_occurrences);
    report.stat("col_pair_occurrences", col_occurrences);
    report.stat("row_distinct_pairs", row_distinct.len() as u64);
    report.stat("col_distinct_pairs", col_distinct.len() as u64);
    report
}

/// Vatican safety: every ordered pair of symbols occurs at most once at each
/// distance in rows, and at most once in columns.
pub fn verify_vatican_safety(region: &LatinRegion) -> VerificationReport {
    verify_balance(region, "vatican-safety", PairMode::Ordered, None)
}

/// D-complete safety: Vatican safety restricted to distances ≤ D.
pub fn verify_d_complete(region: &LatinRegion, max_distance: &BigRational) -> VerificationReport {
    verify_balance(
        region,
        "d-complete-safety",
        PairMode::Ordered,
        Some(max_distance),
    )
}

/// Semi-Vatican safety: the unordered-pair version.
pub fn verify_semivatican_safety(region: &LatinRegion) -> VerificationReport {
    verify_balance(region, "semivatican-safety", PairMode::Unordered, None)
}

/// A quadrangle-criterion violation: two quadrangles agreeing on three
/// points but not the fourth, which certifies the region is not group-based.
#[derive(Debug, Clone)]
pub struct QuadrangleWitness {
    /// ((i1,j1),(i2,j2),(k1,j1),(k2,j2),(i1,l1),(i2,l2),(k1,l1),(k2,l2))
    pub cells: Vec<((IndexPoint, IndexPoint), GroupElement)>,
}

const DEFAULT_QUADRANGLE_BUDGET: u64 = 10_000_000;

/// Search for a quadrangle-criterion violation. Returns `Ok(None)` when no
/// violation exists in the region, `Err(SearchBudgetExceeded)` when the
/// candidate cap was hit before the search space was exhausted.
pub fn find_quadrangle_violation(
    region: &LatinRegion,
    budget: Option<u64>,
) -> Result<Option<QuadrangleWitness>, RegionError> {
    let budget = budget.unwrap_or(DEFAULT_QUADRANGLE_BUDGET);
    // Cells grouped by symbol, each list in deterministic (row, col) order.
    let mut by_symbol: BTreeMap<&GroupElement, Vec<(&IndexPoint, &IndexPoint)>> = BTreeMap::new();
    for ((r, c), s) in region.cells() {
        by_symbol.entry(s).or_default().push((r, c));
    }

    // Same-symbol cell pairs indexed by their (ordered) column pair and row pair.
    type PointPair<'a> = (&'a IndexPoint, &'a IndexPoint);
    let mut by_col_pair: HashMap<PointPair, Vec<PointPair>> = HashMap::new();
    let mut by_row_pair: HashMap<PointPair, Vec<PointPair>> = HashMap::new();
    let mut agreements: Vec<(PointPair, PointPair)> = Vec::new();
    for cells in by_symbol.values() {
        for &(r1, c1) in cells {
            for &(r2, c2) in cells {
                if (r1, c1) == (r2, c2) || c1 == c2 {
                    continue;
                }
                by_col_pair.entry((c1, c2)).or_default().push((r1, r2));
                if r1 != r2 {
                    by_row_pair.entry((r1, r2)).or_default().push((c1, c2));
                }
                agreements.push(((r1, c1), (r2, c2)));
            }
        }
    }

    let mut tested = 0u64;
    for ((i1, j1), (i2, j2)) in &agreements {
        let row_mates = match by_col_pair.get(&(*j1, *j2)) {
            Some(v) => v,
            None => continue,
        };
        let col_mates = match by_row_pair.get(&(*i1, *i2)) {
            Some(v) => v,
            None => continue,
        };
        for &(k1, k2) in row_mates {
            if (k1, k2) == (*i1, *i2) {
                continue;
            }
            for &(l1, l2) in col_mates {
                if (l1, l2) == (*j1, *j2) {
                    continue;
                }
                tested += 1;
                if tested > budget {
                    return Err(RegionError::SearchBudgetExceeded(budget));
                }
                let fourth_a = region.get(k1, l1);
                let fourth_b = region.get(k2, l2);
                if let (Some(va), Some(vb)) = (fourth_a, fourth_b) {
                    if va != vb {
                        let grab = |r: &IndexPoint, c: &IndexPoint| {
                            ((r.clone(), c.clone()), region.get(r, c).unwrap().clone())
                        };
                        return Ok(Some(QuadrangleWitness {
                            cells: vec![
                                grab(i1, j1),
                                grab(i2, j2),
                                grab(k1, j1),
                                grab(k2, j2),
                                grab(i1, l1),
                                grab(i2, l2),
                                grab(k1, l1),
                                grab(k2, l2),
                            ],
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Report wrapper for the quadrangle criterion: passes when the region
/// admits no violation (i.e. it could still be group-based).
pub fn verify_quadrangle(region: &LatinRegion, budget: Option<u64>) -> Result<VerificationReport, RegionError> {
    let mut report = VerificationReport::new("quadrangle-criterion");
    if let Some(w) = find_quadrangle_violation(region, budget)? {
        let cells = w
            .cells
            .iter()
            .map(|((r, c), s)| (r.to_string(), c.to_string(), s.to_string()))
            .collect();
        report.fail(
            Witness::new(
                "quadrangle-violation",
                "quadrangles agree on three cells but not the fourth".to_string(),
            )
            .with_cells(cells),
        );
    }
    Ok(report)
}

/// Orthogonality safety of two regions with identical cell footprints: no
/// superimposed ordered symbol pair occurs twice.
pub fn verify_orthogonal(a: &LatinRegion, b: &LatinRegion) -> Result<VerificationReport, RegionError> {
    let mut report = VerificationReport::new("orthogonal");
    let a_keys: Vec<&(IndexPoint, IndexPoint)> = a.cells().map(|(k, _)| k).collect();
    let b_keys: Vec<&(IndexPoint, IndexPoint)> = b.cells().map(|(k, _)| k).collect();
    if a_keys != b_keys {
        return Err(RegionError::ShapeMismatch);
    }
    let mut seen: HashMap<(&GroupElement, &GroupElement), &(IndexPoint, IndexPoint)> =
        HashMap::new();
    for ((pos, sa), (_, sb)) in a.cells().zip(b.cells()) {
        if let Some(prev) = seen.insert((sa, sb), pos) {
            report.fail(
                Witness::new(
                    "orthogonality-repeat",
                    format!(
                        "superimposed pair ({sa}, {sb}) at ({}, {}) and ({}, {})",
                        prev.0, prev.1, pos.0, pos.1
                    ),
                )
                .with_cells(vec![
                    (prev.0.to_string(), prev.1.to_string(), sa.to_string()),
                    (pos.0.to_string(), pos.1.to_string(), sb.to_string()),
                ]),
            );
        }
    }
    report.stat("cells", a.len() as u64);
    report.stat("distinct_pairs", seen.len() as u64);
    Ok(report)
}

/// Knut Vic verification. With `modulus = Some(n)` the region must be a full
/// n×n square on coordinates 0..n-1 and every row, column, left diagonal
/// (j − i ≡ k) and right diagonal (i + j ≡ k) must be a permutation of the
/// symbols. Without a modulus, safety (no repeats per partial diagonal) is
/// checked on integer-coordinate windows.
pub fn verify_knutvic(region: &LatinRegion, modulus: Option<u64>) -> VerificationReport {
    let mut report = VerificationReport::new("knutvic");
    let latin = verify_latin(region);
    for w in latin.witnesses {
        report.fail(w);
    }

    let diag_classes = |left: bool| -> BTreeMap<BigRational, Vec<(&IndexPoint, &GroupElement)>> {
        let mut classes: BTreeMap<BigRational, Vec<(&IndexPoint, &GroupElement)>> = BTreeMap::new();
        for ((r, c), s) in region.cells() {
            let key = if left {
                // left diagonal k: cells (i, k+i) ⇒ k = j − i
                c - r
            } else {
                // right diagonal k: cells (i, k−i) ⇒ k = i + j
                r.rational() + c.rational()
            };
            let key = match modulus {
                Some(n) => {
                    let n = BigInt::from(n);
                    let int = key.numer().clone();
                    BigRational::from(((int % &n) + &n) % &n)
                }
                None => key,
            };
            classes.entry(key).or_default().push((r, s));
        }
        classes
    };

    for (left, name) in [(true, "left"), (false, "right")] {
        for (k, cells) in diag_classes(left) {
            let mut seen: BTreeSet<&GroupElement> = BTreeSet::new();
            for (r, s) in &cells {
                if !seen.insert(s) {
                    report.fail(Witness::new(
                        "diagonal-repeat",
                        format!(
                            "symbol {s} twice on {name} diagonal {} (row {r})",
                            render_rational(&k)
                        ),
                    ));
                }
            }
            if let Some(n) = modulus {
                if cells.len() != n as usize {
                    report.fail(Witness::new(
                        "diagonal-incomplete",
                        format!(
                            "{name} diagonal {} has {} of {n} cells",
                            render_rational(&k),
                            cells.len()
                        ),
                    ));
                }
            }
        }
    }

    if let Some(n) = modulus {
        if region.len() != (n * n) as usize {
            report.fail(Witness::new(
                "not-a-square",
                format!("{} cells, expected {}", region.len(), n * n),
            ));
        }
    }
    report
}

/// The classical zig-zag complete Latin square of even order n: the terrace
/// 0, 1, n−1, 2, n−2, … on Z_n, squared up as ℓ_ij = t_j − t_i. Used as a
/// known-good oracle for the 1-completeness verifier.
pub fn williams_complete_square(n: u64) -> Result<LatinRegion, RegionError> {
    if n < 2 || n % 2 != 0 {
        return Err(RegionError::OddOrder(n));
    }
    let mut terrace = Vec::with_capacity(n as usize);
    terrace.push(0i64);
    for k in 1..=(n / 2) {
        terrace.push(k as i64);
        if k < n / 2 {
            terrace.push((n - k) as i64);
        }
    }
    debug_assert_eq!(terrace.len(), n as usize);
    let mut region = LatinRegion::new(SymbolUniverse::Naturals);
    let n_i = n as i64;
    for (i, ti) in terrace.iter().enumerate() {
        for (j, tj) in terrace.iter().enumerate() {
            let sym = ((tj - ti) % n_i + n_i) % n_i;
            region
                .insert(
                    IndexPoint::from_integer(i as i64),
                    IndexPoint::from_integer(j as i64),
                    GroupElement::Nat(sym as u64),
                )
                .expect("zig-zag square is Latin");
        }
    }
    Ok(region)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Csv,
    Json,
}

impl fmt::Display for RenderFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderFormat::Csv => write!(f, "csv"),
            RenderFormat::Json => write!(f, "json"),
        }
    }
}

/// Deterministic text form of a region. CSV carries `row,col,symbol`
/// triples; JSON is the versioned document from the persistence layer.
pub fn render(region: &LatinRegion, format: RenderFormat) -> String {
    match format {
        RenderFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["row", "col", "symbol"]).unwrap();
            for ((r, c), s) in region.cells() {
                w.write_record([r.to_string(), c.to_string(), s.to_string()])
                    .unwrap();
            }
            String::from_utf8(w.into_inner().unwrap()).unwrap()
        }
        RenderFormat::Json => crate::persist::region_to_json(region),
    }
}

/// Parse a region from CSV text (header `row,col,symbol`).
pub fn parse_csv(text: &str, universe: SymbolUniverse) -> Result<LatinRegion, RegionError> {
    let mut region = LatinRegion::new(universe.clone());
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    {
        let headers = reader
            .headers()
            .map_err(|e| RegionError::Parse(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != vec!["row", "col", "symbol"] {
            return Err(RegionError::Parse(format!("unexpected header {headers:?}")));
        }
    }
    for record in reader.records() {
        let record = record.map_err(|e| RegionError::Parse(e.to_string()))?;
        if record.len() != 3 {
            return Err(RegionError::Parse(format!("bad record {record:?}")));
        }
        let row = IndexPoint::parse(&record[0]).map_err(|e| RegionError::Parse(e.to_string()))?;
        let col = IndexPoint::parse(&record[1]).map_err(|e| RegionError::Parse(e.to_string()))?;
        let sym = universe.parse_symbol(&record[2])?;
        region.insert(row, col, sym)?;
    }
    Ok(region)
}
