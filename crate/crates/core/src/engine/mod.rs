//! A small logic-programming engine: parser, stratification, depth-bounded
//! resolution with negation as failure, and a bottom-up evaluator for
//! function-free programs.

mod fixpoint;
mod number;
mod parser;
mod program;
mod proof;
mod solve;
mod strata;
mod term;

use std::fmt;

pub use fixpoint::{ground_entails, least_model, LeastModel, DEFAULT_DEPTH};
pub use number::{Fixed, FixedParseError, SCALE_DIGITS};
pub use parser::{parse_clauses, parse_ground_term, parse_query, tokens, Query};
pub use program::Program;
pub use proof::{replay, Leaf, Proof, ReplayError};
pub use solve::{solve, Solution, SolveResult, Solver};
pub use strata::{check_stratification, Stratification};
pub use term::{BodyItem, Builtin, Clause, Literal, PredKey, Symbol, Term, VarId, LIST_CONS, LIST_NIL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("program is not stratified: negative cycle {}", Cycle(.cycle))]
    Stratification { cycle: Vec<PredKey> },
    #[error("goal flounders (unbound variables reached): {goal}")]
    Flounders { goal: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("depth limit must be at least 1")]
    InvalidDepth,
}

struct Cycle<'a>(&'a [PredKey]);

impl fmt::Display for Cycle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}
