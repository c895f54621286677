//! Exact-arithmetic engine for gapped twisted A-infinity algebras over
//! Novikov rings.
//!
//! The crate is organized around a small number of layers:
//!
//! * [`scalar`], [`grading`], [`module`], [`matrix`] — bidegrees, exact
//!   coefficient rings (rationals and polynomials in the alpha generators),
//!   graded modules and degree-checked sparse matrices.
//! * [`novikov`] — discrete submonoids of energy/index pairs and truncated
//!   Novikov scalars.
//! * [`words`] — the word-level operator engine: coderivation extensions,
//!   morphism application and the one-sided homotopy extension, with all
//!   Koszul and epsilon-crossing signs in one place.
//! * [`ainfty`], [`morphism`] — structures, morphisms and their validators.
//! * [`hpl`], [`trees`] — retractions, homological perturbation transfer and
//!   the independent ribbon-tree oracle.
//! * [`equivariant`] — T*-modules, the Cartan complex, equivariant extension
//!   and the equivariant cyclic unital retraction.
//! * [`fixtures`], [`format`] — the named example structures and the textual
//!   file format shared with the CLI.
//!
//! All arithmetic is exact; no floating point appears anywhere. Validators
//! evaluate independent basis tuples in parallel when the `parallel` feature
//! (on by default) is enabled, and reports are deterministic either way.

pub mod ainfty;
pub mod equivariant;
pub mod exec;
pub mod fixtures;
pub mod format;
pub mod grading;
pub mod hpl;
pub mod matrix;
pub mod module;
pub mod morphism;
pub mod novikov;
pub mod report;
pub mod scalar;
pub mod trees;
pub mod words;

pub use grading::Bidegree;
pub use module::{GradedModule, ModuleElt};
pub use novikov::{GappedMonoid, MonoidElt};
pub use scalar::{CoefficientRing, RingElt};
