//! Construction and verification toolkit for infinite Latin squares.
//!
//! The crate builds finite approximations to countably infinite combinatorial
//! objects: directed terraces over countable abelian groups, Latin regions
//! with neighbor-balance (Vatican / semi-Vatican) safety, orthomorphism and
//! strong-complete-mapping families, Knut Vic designs, and an explicit
//! real-line semi-Vatican terrace. Builders are deterministic greedy engines
//! that interleave countably many requirement families fairly; every verifier
//! recomputes its property from scratch so it can serve as an independent
//! oracle for the incremental bookkeeping.

pub mod construct;
pub mod group;
pub mod index;
pub mod ortho;
pub mod persist;
pub mod realline;
pub mod report;
pub mod scheduler;
pub mod square;
pub mod terrace;

pub use group::{Classification, GroupDescriptor, GroupElement, GroupKernel};
pub use index::{IndexKind, IndexPoint, IndexSet, Window};
pub use report::{VerificationReport, Witness};
