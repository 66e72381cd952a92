//! Problem-token questionnaire analysis.
//!
//! The crate covers two workflows over end-of-call survey data:
//!
//! * **Token subset selection.** Given a star rating and a set of binary
//!   problem tokens per call, pick a small subset of tokens that carries as
//!   much information about the poor-call indicator (rating 1 or 2) as
//!   possible. [`selection::select_rits`] is the greedy information-gain
//!   maximizer; [`evaluation`] scores selections with hold-out AUC and
//!   pairwise Jaccard redundancy.
//! * **Display-order experiments.** [`synthgen`] simulates fixed and
//!   randomized token presentation with position bias, and [`abtest`]
//!   computes per-arm response-rate deltas with two-proportion z-tests.
//!
//! All randomized operations take an explicit seed and are reproducible
//! regardless of thread scheduling.

pub mod abtest;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod infotheory;
pub mod rng;
pub mod selection;
pub mod synthgen;

pub use dataset::{Arm, Dataset, Panel, ResponseRecord, Selections, TokenCatalog, TokenId};
pub use error::{Error, Result};
pub use infotheory::IgValue;
pub use selection::{SelectionTrace, Strategy};
