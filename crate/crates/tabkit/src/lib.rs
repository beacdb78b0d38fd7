//! A tabled logic-programming engine built on an explicit nondeterministic
//! goal machine with multi-prompt delimited control, plus a benchmark
//! harness that reports producer/consumer/solution counters.
//!
//! The pieces:
//! - [`term`]: terms, bindings with an undo trail, variant-class keys.
//! - [`machine`]: the goal interpreter; reset/shift suspension with
//!   multiply-invocable continuations.
//! - [`tabling`]: the tabling driver; variant-class tables, consumer
//!   registration, producer-first dispatch, incremental delivery.
//! - [`memolist`]: the list-reifying memoised-nondeterminism reference
//!   implementation, used as an independent oracle.
//! - [`program`]: clause-file parser and the `table` directive transform.
//! - [`builtins`]: integer arithmetic and comparisons.
//! - [`metrics`]: producer/consumer/solution counters and ratios.
//! - [`bench`]: the benchmark suite and the `tabkit` command line.

pub mod bench;
pub mod builtins;
pub mod machine;
pub mod memolist;
pub mod metrics;
pub mod program;
pub mod tabling;
pub mod term;

pub use machine::{solve, Goal, Machine, Outcome, Prompt, Solution};
pub use program::{parse_program, parse_query, ClauseDB, Query};
pub use tabling::{run_tabled, SolveOptions, TabledSolutions};
pub use term::{variant_key, Bindings, Term, Var, VariantKey};

/// All engine failure modes. Goal failure is not an error; it is a normal
/// outcome of search.
#[derive(Debug, Clone, thiserror::Error)]
pub enum EngineError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("unknown predicate {name}/{arity}")]
    UnknownPredicate { name: String, arity: u32 },
    #[error("unhandled shift on prompt '{prompt}' with signal {signal}")]
    UnhandledShift { prompt: String, signal: String },
    #[error("arguments insufficiently instantiated in {0}")]
    Instantiation(String),
    #[error("type error: expected {expected}, got {got}")]
    Type { expected: String, got: String },
    #[error("continuation expects {expected} answer arguments, got {got}")]
    ResumeArity { expected: usize, got: usize },
    #[error("step budget exhausted after {0} steps")]
    StepBudget(u64),
    #[error("goal is not callable: {0}")]
    NotCallable(String),
    #[error("metrics events out of order: ordinal {got} after {seen}")]
    EventOrder { got: u64, seen: u64 },
    #[error("internal error: {0}")]
    Internal(String),
}
