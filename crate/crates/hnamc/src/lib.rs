//! Model checker for asynchronous hyperproperties: hypernode logic,
//! stutter-free automata with their closure operations, and the
//! model-checking pipeline for hypernode automata over action-labeled
//! Kripke structures.
//!
//! The crate is organized around the pipeline:
//!
//! * [`segments`] — domains, variable sets, (un)zipped trace segments,
//!   stutter reduction, and the stutter-reduced prefixing relation.
//! * [`logic`] — hypernode-logic formulas and their direct satisfaction
//!   semantics over explicit segment sets (the semantic oracle).
//! * [`sfa`] — stutter-free automata and their closure operations.
//! * [`filtration`] — formula filtration and the hypernode-logic decision
//!   procedure.
//! * [`kripke`] — Kripke structures, action labelings, and the translation
//!   of open Kripke structures to stutter-free automata.
//! * [`hna`] — hypernode automata, trace slicing, and direct acceptance.
//! * [`slicing`] — the slicing automaton, the Join product, and the
//!   top-level model check.
//! * [`oracle`] — brute-force reference engines used by tests and the
//!   `oracle` CLI subcommands.
//! * [`parse`] — text formats for all of the above.

pub mod filtration;
pub mod hna;
pub mod kripke;
pub mod logic;
pub mod oracle;
pub mod parse;
pub mod segments;
pub mod sfa;
pub mod slicing;

pub use filtration::{check_formula_against_open_kripke, check_formula_against_sfa};
pub use logic::Formula;
pub use segments::{Domain, UnzippedSegment, VarSet};
pub use sfa::Sfa;
pub use slicing::{model_check, Verdict};
