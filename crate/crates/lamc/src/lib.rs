//! Workbench for a Krivine machine with control, finite classical-realizability
//! models, rule-generated multi-evaluation relations, and the cardinality
//! instructions built on top of them.
//!
//! The crate is organized in layers:
//!
//! - [`syntax`]: terms, stacks, processes, parsing and printing. Terms use de
//!   Bruijn indices internally; binder names are display hints only, so
//!   structural equality is alpha-equivalence.
//! - [`machine`]: the deterministic head-reduction machine (four rules: push,
//!   grab, save, restore) with traces and fuel bounds.
//! - [`multieval`]: finite process worlds, poles (anti-reduction-closed sets),
//!   rule-generated multi-evaluation relations, their closure under the
//!   relation axioms, and the duality between pole families and relations.
//! - [`logic`]: second-order formulas over a finite first-order structure,
//!   falsity/truth-value computation per pole, and the realizability tests
//!   built on them.
//! - [`adequacy`]: a proof checker for the ten typing rules, realizer
//!   extraction, Horn-clause realizers, Church numerals and the fixpoint
//!   combinator.
//! - [`nondet`]: may/must instruction kits, boolean and parallel-or
//!   specifications, voting specifications and the bridge terms between them.
//! - [`gimel`]: the cardinality-instruction rule set, stratified pole
//!   membership, marker contents, and the cover check.
//! - [`suites`]: named self-check suites shared by the CLI and the tests.

pub mod adequacy;
pub mod gimel;
pub mod logic;
pub mod machine;
pub mod multieval;
pub mod nondet;
pub mod sampler;
pub mod suites;
pub mod syntax;

pub use syntax::{Process, Stack, Term};
