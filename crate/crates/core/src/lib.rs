//! Finite behavioural system models.
//!
//! A system is a finite set of behaviours together with a table that maps
//! every behaviour to a snapshot of its components' local behaviours. On top
//! of that representation this crate decides implementations between systems,
//! builds canonical free compositions (pullbacks over the shared interface),
//! model-checks a small modal logic with separation-style structural
//! connectives, certifies local-reasoning rules, and verifies the generalized
//! CAP impossibility result on explicitly enumerated instances.
//!
//! Everything is finite and explicitly enumerated. Wherever a witness has to
//! be chosen, the smallest one in the canonical order is returned, so every
//! result is reproducible.

pub mod cap_scenario;
pub mod error;
pub mod guarantees;
pub mod kernel;
pub mod label;
pub mod limits;
pub mod logic;
pub mod model_io;
pub mod timed;

pub use error::{Error, Result};
pub use limits::Limits;
