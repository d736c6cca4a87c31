//! Natural-language firewall policy compiler.
//!
//! Requests are grounded against a [`context::NetworkContext`], turned into a
//! typed [`ir::IrPolicy`], checked by two advisory linters and the blocking
//! Safety Gate ([`validators`]), compiled to PAN-OS set commands
//! ([`compiler`]), and statically verified against a synthetic device
//! ([`verifier`]). [`pipeline`] runs the stages and records a trace;
//! [`eval`] scores the pipeline against (query, IR, CLI) triplets.

pub mod apps;
pub mod compiler;
pub mod context;
pub mod doc;
pub mod eval;
pub mod findings;
pub mod fixtures;
pub mod intent;
pub mod ir;
pub mod json;
pub mod net;
pub mod pipeline;
pub mod validators;
pub mod verifier;

pub use findings::{Finding, Layer, Severity};
