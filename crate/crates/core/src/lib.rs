//! Graded behavioural distances on finite quantitative transition systems.
//!
//! The crate computes bounded-depth behavioural distances for four built-in
//! trace-style semantics (metric traces, fuzzy traces, probabilistic trace
//! distributions, streams), evaluates the matching quantitative modal
//! logics, measures logical distance by bounded formula enumeration, and
//! checks graded quantitative equational derivations against their free
//! models.
//!
//! Modules:
//! - [`metric`]: finite (pseudo)metric spaces, tensors, separation checks;
//! - [`lifting`]: Hausdorff / Kantorovich / fuzzy-Hausdorff liftings with an
//!   exact transport solver;
//! - [`system`]: the four coalgebraic system kinds and their JSON format;
//! - [`graded`]: depth-indexed behaviour maps and behavioural distance;
//! - [`logic`]: formulas, evaluation, logical distance, witness search;
//! - [`quanteq`]: graded quantitative equational theories, the derivation
//!   checker and free-model interpretation.

pub mod graded;
pub mod lifting;
pub mod logic;
pub mod metric;
pub mod num;
pub mod quanteq;
pub mod system;
