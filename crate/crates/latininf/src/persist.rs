//! Versioned JSON persistence for all builder states and regions.
//!
//! Every document carries `format_version` and an `artifact` tag. Element
//! and coordinate encodings are the canonical text forms, and collections
//! are serialized in their canonical sorted order, so identical states
//! always produce identical bytes and a load/save round trip is the
//! identity. Loaders rebuild states through the same checked insertion
//! paths the builders use, so a loaded artifact has already re-established
//! every invariant.

use crate::construct::{BalanceMode, ImmuneRegion, VaticanBuilder};
use crate::group::GroupKernel;
use crate::index::{IndexKind, IndexPoint, IndexSet};
use crate::ortho::{MappingKind, MooFamily, PartialMapping};
use crate::square::{LatinRegion, SymbolUniverse};
use crate::terrace::{PartialTerrace, TerraceKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("bad document: {0}")]
    BadDocument(String),
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("expected artifact {expected}, found {found}")]
    WrongArtifact { expected: String, found: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn check_header(version: u32, artifact: &str, expected: &str) -> Result<(), PersistError> {
    if version != FORMAT_VERSION {
        return Err(PersistError::BadVersion(version));
    }
    if artifact != expected {
        return Err(PersistError::WrongArtifact {
            expected: expected.to_string(),
            found: artifact.to_string(),
        });
    }
    Ok(())
}

fn bad(detail: impl std::fmt::Display) -> PersistError {
    PersistError::BadDocument(detail.to_string())
}

fn render(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable documents");
    text.push('\n');
    text
}

#[derive(Serialize, Deserialize)]
struct TerraceDoc {
    format_version: u32,
    artifact: String,
    kind: String,
    group: String,
    index: String,
    assignments: Vec<(String, String)>,
    cursor: u64,
}

pub fn terrace_to_json(t: &PartialTerrace, cursor: u64) -> String {
    render(&TerraceDoc {
        format_version: FORMAT_VERSION,
        artifact: "terrace".into(),
        kind: t.kind().to_string(),
        group: t.group().render(),
        index: t.index().kind().to_string(),
        assignments: t
            .assignments()
            .map(|(i, g)| (i.to_string(), g.to_string()))
            .collect(),
        cursor,
    })
}

pub fn terrace_from_json(text: &str) -> Result<(PartialTerrace, u64), PersistError> {
    let doc: TerraceDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "terrace")?;
    let kind = TerraceKind::parse(&doc.kind).ok_or_else(|| bad("bad terrace kind"))?;
    let group = GroupKernel::parse(&doc.group).map_err(bad)?;
    let index_kind = IndexKind::parse(&doc.index).ok_or_else(|| bad("bad index kind"))?;
    let mut t =
        PartialTerrace::new(kind, group, IndexSet::new(index_kind)).map_err(bad)?;
    for (i, g) in &doc.assignments {
        let point = IndexPoint::parse(i).map_err(bad)?;
        let value = t.group().parse_element(g).map_err(bad)?;
        t.assign(point, value).map_err(bad)?;
    }
    Ok((t, doc.cursor))
}

#[derive(Serialize, Deserialize)]
struct RegionDoc {
    format_version: u32,
    artifact: String,
    universe: String,
    cells: Vec<(String, String, String)>,
}

pub fn region_to_json(region: &LatinRegion) -> String {
    render(&RegionDoc {
        format_version: FORMAT_VERSION,
        artifact: "region".into(),
        universe: region.universe().render(),
        cells: region
            .cells()
            .map(|((r, c), s)| (r.to_string(), c.to_string(), s.to_string()))
            .collect(),
    })
}

pub fn region_from_json(text: &str) -> Result<LatinRegion, PersistError> {
    let doc: RegionDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "region")?;
    let universe = SymbolUniverse::parse(&doc.universe).map_err(bad)?;
    let mut region = LatinRegion::new(universe.clone());
    for (r, c, s) in &doc.cells {
        let row = IndexPoint::parse(r).map_err(bad)?;
        let col = IndexPoint::parse(c).map_err(bad)?;
        let sym = universe.parse_symbol(s).map_err(bad)?;
        region.insert(row, col, sym).map_err(bad)?;
    }
    Ok(region)
}

/// Extract the Latin region from any region-bearing document: a plain
/// region, an immune-region build state, or a vatican-region build state.
pub fn any_region_from_json(text: &str) -> Result<LatinRegion, PersistError> {
    #[derive(Deserialize)]
    struct Probe {
        artifact: String,
    }
    let probe: Probe = serde_json::from_str(text)?;
    match probe.artifact.as_str() {
        "region" => region_from_json(text),
        "immune-region" => Ok(immune_from_json(text)?.0.region().clone()),
        "vatican-region" => Ok(vatican_from_json(text)?.0.region().clone()),
        other => Err(PersistError::WrongArtifact {
            expected: "region, immune-region, or vatican-region".into(),
            found: other.to_string(),
        }),
    }
}

#[derive(Serialize, Deserialize)]
struct ImmuneDoc {
    format_version: u32,
    artifact: String,
    cells: Vec<(String, String, String)>,
    ledger: Vec<(u64, u64, u64, u64)>,
    cursor: u64,
}

pub fn immune_to_json(state: &ImmuneRegion, cursor: u64) -> String {
    render(&ImmuneDoc {
        format_version: FORMAT_VERSION,
        artifact: "immune-region".into(),
        cells: state
            .region()
            .cells()
            .map(|((r, c), s)| (r.to_string(), c.to_string(), s.to_string()))
            .collect(),
        ledger: state
            .ledger()
            .iter()
            .map(|((a, b, c), g)| (*a, *b, *c, *g))
            .collect(),
        cursor,
    })
}

pub fn immune_from_json(text: &str) -> Result<(ImmuneRegion, u64), PersistError> {
    let doc: ImmuneDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "immune-region")?;
    let mut region = LatinRegion::new(SymbolUniverse::Naturals);
    for (r, c, s) in &doc.cells {
        // Immune regions live on natural-number coordinates.
        for coord in [r, c] {
            if coord.parse::<u64>().is_err() {
                return Err(bad(format!("non-natural coordinate {coord:?}")));
            }
        }
        let row = IndexPoint::parse(r).map_err(bad)?;
        let col = IndexPoint::parse(c).map_err(bad)?;
        let sym = SymbolUniverse::Naturals.parse_symbol(s).map_err(bad)?;
        region.insert(row, col, sym).map_err(bad)?;
    }
    let ledger: BTreeMap<(u64, u64, u64), u64> = doc
        .ledger
        .into_iter()
        .map(|(a, b, c, g)| ((a, b, c), g))
        .collect();
    Ok((ImmuneRegion::from_parts(region, ledger), doc.cursor))
}

#[derive(Serialize, Deserialize)]
struct VaticanDoc {
    format_version: u32,
    artifact: String,
    mode: String,
    cells: Vec<(String, String, String)>,
    cursor: u64,
}

pub fn vatican_to_json(state: &VaticanBuilder, cursor: u64) -> String {
    render(&VaticanDoc {
        format_version: FORMAT_VERSION,
        artifact: "vatican-region".into(),
        mode: match state.mode() {
            BalanceMode::Vatican => "vatican".into(),
            BalanceMode::SemiVatican => "semivatican".into(),
        },
        cells: state
            .region()
            .cells()
            .map(|((r, c), s)| (r.to_string(), c.to_string(), s.to_string()))
            .collect(),
        cursor,
    })
}

pub fn vatican_from_json(text: &str) -> Result<(VaticanBuilder, u64), PersistError> {
    let doc: VaticanDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "vatican-region")?;
    let mode = match doc.mode.as_str() {
        "vatican" => BalanceMode::Vatican,
        "semivatican" => BalanceMode::SemiVatican,
        other => return Err(bad(format!("bad balance mode {other:?}"))),
    };
    let mut cells = Vec::with_capacity(doc.cells.len());
    for (r, c, s) in &doc.cells {
        cells.push((
            IndexPoint::parse(r).map_err(bad)?,
            IndexPoint::parse(c).map_err(bad)?,
            SymbolUniverse::Naturals.parse_symbol(s).map_err(bad)?,
        ));
    }
    let state = VaticanBuilder::from_cells(mode, cells).map_err(bad)?;
    Ok((state, doc.cursor))
}

#[derive(Serialize, Deserialize)]
struct MappingDoc {
    format_version: u32,
    artifact: String,
    group: String,
    kind: String,
    pairs: Vec<(String, String)>,
    cursor: u64,
}

pub fn mapping_to_json(m: &PartialMapping, cursor: u64) -> String {
    render(&MappingDoc {
        format_version: FORMAT_VERSION,
        artifact: "mapping".into(),
        group: m.group().render(),
        kind: m.kind().render().into(),
        pairs: m
            .pairs()
            .map(|(g, h)| (g.to_string(), h.to_string()))
            .collect(),
        cursor,
    })
}

pub fn mapping_from_json(text: &str) -> Result<(PartialMapping, u64), PersistError> {
    let doc: MappingDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "mapping")?;
    let group = GroupKernel::parse(&doc.group).map_err(bad)?;
    let kind = MappingKind::parse(&doc.kind).ok_or_else(|| bad("bad mapping kind"))?;
    let mut mapping = PartialMapping::new(group, kind);
    for (g, h) in &doc.pairs {
        let g = mapping.group().parse_element(g).map_err(bad)?;
        let h = mapping.group().parse_element(h).map_err(bad)?;
        mapping.insert(g, h).map_err(bad)?;
    }
    Ok((mapping, doc.cursor))
}

#[derive(Serialize, Deserialize)]
struct MooDoc {
    format_version: u32,
    artifact: String,
    group: String,
    k: usize,
    mappings: Vec<Vec<(String, String)>>,
    cursor: u64,
}

pub fn moo_to_json(fam: &MooFamily, cursor: u64) -> String {
    render(&MooDoc {
        format_version: FORMAT_VERSION,
        artifact: "moo-family".into(),
        group: fam.group().render(),
        k: fam.size(),
        mappings: (0..fam.size())
            .map(|i| {
                fam.theta(i)
                    .iter()
                    .map(|(g, h)| (g.to_string(), h.to_string()))
                    .collect()
            })
            .collect(),
        cursor,
    })
}

pub fn moo_from_json(text: &str) -> Result<(MooFamily, u64), PersistError> {
    let doc: MooDoc = serde_json::from_str(text)?;
    check_header(doc.format_version, &doc.artifact, "moo-family")?;
    if doc.mappings.len() != doc.k || doc.k == 0 {
        return Err(bad("family size mismatch"));
    }
    let group = GroupKernel::parse(&doc.group).map_err(bad)?;
    let mut fam = MooFamily::new(group, doc.k).map_err(bad)?;
    // Insert domain-point-major so shared points see consistent η_ij
    // bookkeeping regardless of which member gained them first.
    let mut triples: Vec<(String, usize, String)> = Vec::new();
    for (i, pairs) in doc.mappings.iter().enumerate() {
        for (g, h) in pairs {
            triples.push((g.clone(), i, h.clone()));
        }
    }
    triples.sort();
    for (g, i, h) in triples {
        let g = fam.group().parse_element(&g).map_err(bad)?;
        let h = fam.group().parse_element(&h).map_err(bad)?;
        fam.insert(i, g, h).map_err(bad)?;
    }
    Ok((fam, doc.cursor))
}
