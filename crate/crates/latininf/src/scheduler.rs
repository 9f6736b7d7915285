//! Generic fair greedy engine.
//!
//! Each construction exposes countably many requirement families; the
//! scheduler interleaves them fairly and extends the construction state to
//! meet requirement `n` at step `n`. Greedy first-fit over deterministic
//! enumerations stands in for the arbitrary choices of the existence proofs,
//! so identical inputs always rebuild identical states. A failed extension
//! aborts loudly: for the supported groups a legal extension always exists,
//! so failure signals a policy bug rather than a mathematical impossibility.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("extension failed at step {step} for requirement {requirement}: {detail}")]
    ExtensionFailed {
        step: u64,
        requirement: String,
        detail: String,
    },
    #[error("full verification failed at step {step}: {detail}")]
    VerifyFailed { step: u64, detail: String },
}

/// Per-step record: which requirement was met, whether it was already
/// satisfied, and how much the construction grew (new assignments).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub requirement: String,
    pub already_satisfied: bool,
    pub growth: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BuildLog {
    pub records: Vec<StepRecord>,
}

impl BuildLog {
    pub fn total_growth(&self) -> u64 {
        self.records.iter().map(|r| r.growth).sum()
    }

    pub fn max_growth(&self) -> u64 {
        self.records.iter().map(|r| r.growth).max().unwrap_or(0)
    }
}

/// A construction that the greedy engine can drive.
pub trait GreedyConstruction {
    type Req: Clone + fmt::Display;

    /// The requirement at stream position `pos` (a fair interleave of the
    /// construction's requirement families).
    fn requirement_at(&self, pos: u64) -> Self::Req;

    fn is_satisfied(&self, req: &Self::Req) -> bool;

    /// Extend the state to meet `req`; returns the number of new
    /// assignments. Must leave the state unchanged on failure.
    fn meet(&mut self, req: &Self::Req) -> Result<u64, String>;

    /// Recompute every invariant from scratch; Err carries the violations.
    fn full_check(&self) -> Result<(), Vec<String>>;
}

/// Run `steps` scheduler steps starting at stream position `cursor`.
/// After step `n` every requirement at positions `cursor..=n` is satisfied.
pub fn run<C: GreedyConstruction>(
    state: &mut C,
    cursor: u64,
    steps: u64,
    verify_each: bool,
) -> Result<BuildLog, SchedulerError> {
    let mut log = BuildLog::default();
    for step in cursor..cursor + steps {
        let req = state.requirement_at(step);
        let already = state.is_satisfied(&req);
        let growth = if already {
            0
        } else {
            state
                .meet(&req)
                .map_err(|detail| SchedulerError::ExtensionFailed {
                    step,
                    requirement: req.to_string(),
                    detail,
                })?
        };
        if verify_each {
            state
                .full_check()
                .map_err(|violations| SchedulerError::VerifyFailed {
                    step,
                    detail: violations.join("; "),
                })?;
        }
        log.records.push(StepRecord {
            step,
            requirement: req.to_string(),
            already_satisfied: already,
            growth,
        });
    }
    Ok(log)
}

/// Fair interleaving of `m` streams by anti-diagonals: position `pos` of the
/// merged stream maps to `(stream j, element k)`. The `k`-th element of
/// stream `j` appears no later than merged position `(j + k + 1)^2`.
pub fn fair_unpair(pos: u64, m: usize) -> (usize, u64) {
    assert!(m > 0, "need at least one stream");
    let m64 = m as u64;
    let mut remaining = pos;
    let mut s = 0u64;
    loop {
        let on_diagonal = (s + 1).min(m64);
        if remaining < on_diagonal {
            // Diagonal s emits (j, s - j) for j = min(s, m-1) down to 0.
            let j = s.min(m64 - 1) - remaining;
            return (j as usize, s - j);
        }
        remaining -= on_diagonal;
        s += 1;
    }
}

/// Inverse of [`fair_unpair`]: the merged position of element `k` of stream `j`.
pub fn fair_pair(j: usize, k: u64, m: usize) -> u64 {
    let m64 = m as u64;
    let j = j as u64;
    debug_assert!(j < m64);
    let s = j + k;
    let before: u64 = (0..s).map(|t| (t + 1).min(m64)).sum();
    before + (s.min(m64 - 1) - j)
}

/// Merge explicit requirement enumerations fairly. Streams are indexed
/// functions position → requirement.
pub struct Interleave<R> {
    streams: Vec<Box<dyn Fn(u64) -> R>>,
}

impl<R> Interleave<R> {
    pub fn new(streams: Vec<Box<dyn Fn(u64) -> R>>) -> Self {
        assert!(!streams.is_empty());
        Interleave { streams }
    }

    pub fn at(&self, pos: u64) -> R {
        let (j, k) = fair_unpair(pos, self.streams.len());
        (self.streams[j])(k)
    }
}
