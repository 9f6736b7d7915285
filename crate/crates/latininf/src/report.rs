//! Verification reports with machine-readable witnesses.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A located piece of evidence for a failed property: the cells (or other
/// coordinates) involved, plus a human-readable note.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    /// Each cell as (row, col, symbol) in canonical text form.
    pub cells: Vec<(String, String, String)>,
    pub note: String,
}

impl Witness {
    pub fn new(kind: &str, note: String) -> Self {
        Witness {
            kind: kind.to_string(),
            cells: Vec::new(),
            note,
        }
    }

    pub fn with_cells(mut self, cells: Vec<(String, String, String)>) -> Self {
        self.cells = cells;
        self
    }
}

/// Outcome of running a verifier: the property name, pass/fail, the
/// witnesses for any violations, and coverage statistics. A failing report
/// always carries at least one witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub property: String,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    pub stats: BTreeMap<String, u64>,
}

impl VerificationReport {
    pub fn new(property: &str) -> Self {
        VerificationReport {
            property: property.to_string(),
            pass: true,
            witnesses: Vec::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn fail(&mut self, witness: Witness) {
        self.pass = false;
        self.witnesses.push(witness);
    }

    pub fn stat(&mut self, key: &str, value: u64) {
        self.stats.insert(key.to_string(), value);
    }

    pub fn bump(&mut self, key: &str) {
        *self.stats.entry(key.to_string()).or_insert(0) += 1;
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            self.property,
            if self.pass { "pass" } else { "FAIL" }
        )?;
        for w in self.witnesses.iter().take(3) {
            write!(f, "\n  {} {}", w.kind, w.note)?;
        }
        if self.witnesses.len() > 3 {
            write!(f, "\n  ... {} more witnesses", self.witnesses.len() - 3)?;
        }
        Ok(())
    }
}
