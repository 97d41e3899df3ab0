//! Requirements analysis for decisional information systems.
//!
//! A `.dis` document describes an organization (business, activities,
//! contexts), its actors, and a strategic → tactical → informational goal
//! hierarchy. The analysis pipeline runs the five analysis patterns in
//! dependency order, and formalized informational goals are turned into
//! star schemas and analysis reports.

pub mod catalog;
pub mod cli;
pub mod dsl;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod schema;

pub use catalog::{builtin_catalog, Catalog, Pattern};
pub use dsl::{emit, parse, ParseDiagnostic};
pub use model::{Goal, GoalKind, RequirementsModel, TraceChain};
pub use pipeline::{run_pipeline, PipelineResult};
pub use schema::{build_star_schemas, StarSchema};
