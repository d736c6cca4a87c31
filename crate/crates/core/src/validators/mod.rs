//! Pre-compilation checks: two advisory linters and the blocking Safety Gate.
//!
//! The linters only ever return warnings and never influence control flow.
//! [`safety_gate`] is the one check whose verdict stops the pipeline.

mod gate;
mod general;
mod panos;

pub use gate::{safety_gate, GateResult};
pub use general::lint_general;
pub use panos::{infer_direction, lint_panos};
