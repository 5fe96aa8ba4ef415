//! Genetic programming of XSLT stylesheets from a single example pair.
//!
//! Given an input XML document and the target XML document it should be
//! transformed into, this crate searches for a stylesheet in a restricted
//! three-instruction XSLT subset (`template`, `apply-templates`, `value-of`)
//! that performs the transformation. Candidate stylesheets are constrained
//! to one of three fixed structure types, varied by route- and tree-level
//! operators, and scored by a line-diff fitness function. The crate embeds
//! its own XML document model, XPath-subset evaluator, and XSLT-subset
//! interpreter, so evolved stylesheets can be evaluated without an external
//! processor; emitted `.xsl` files are nevertheless standard XSLT 1.0.

pub mod config;
pub mod engine;
pub mod evolution;
pub mod experiment;
pub mod fitness;
pub mod genome;
pub mod variation;
pub mod xml;
pub mod xpath;

pub use config::{load_config, parse_config, RunConfig};
pub use engine::{parse_stylesheet, render_stylesheet, transform, Stylesheet};
pub use evolution::{run, EvolutionConfig, RunResult};
pub use experiment::{run_experiment, ExperimentOutcome, RunRecord};
pub use fitness::{evaluate, evaluate_sheet, FitnessReport};
pub use genome::{build_profile, random_genome, validate, DocProfile, Genome, StructureType};
pub use variation::{apply_operator, select_operator, vary, OperatorId, OperatorTable};
pub use xml::{diff_count, parse_document, DiffStats, Document};
pub use xpath::PathExpr;
