//! Request understanding: controlled-grammar parsing, context resolution and
//! IR construction, with an optional external agent for either role.

pub mod agent;
mod build;
mod grammar;
mod model;
mod resolve;

pub use agent::{agent_build, agent_resolve, AgentClient, AgentError, AgentRole, HttpAgent};
pub use build::build_ir;
pub use grammar::{parse_controlled, ClauseAst, ParseError, SchedulePhrase};
pub use model::{intent_from_value, intent_to_value, Binding, ResolvedClause, ResolvedIntent, ANY_ZONE};
pub use resolve::{resolve, window_name};
