//! Parses a small program with negation as failure and prints every answer
//! to a query together with the rules its proof used.
//!
//! Usage: `cargo run --example parse_and_solve [query]`

use repolicy::engine::{parse_query, Program, Solver, DEFAULT_DEPTH};

const PROGRAM: &str = r#"
parent(ann, bob).
parent(bob, cal).
parent(bob, dee).
retired(ann).

% @ancestor.base
ancestor(X, Y) :- parent(X, Y).
% @ancestor.step
ancestor(X, Z) :- parent(X, Y), ancestor(Y, Z).

% @working.ancestor
workingAncestor(X, Y) :- ancestor(X, Y), \+(retired(X)).
"#;

fn main() {
    let query = std::env::args().nth(1).unwrap_or_else(|| "workingAncestor(X, Y)".into());
    let program = Program::parse(PROGRAM).expect("program parses");
    let query = parse_query(&query).unwrap_or_else(|e| panic!("bad query: {e}"));
    let result = Solver::new(&program, DEFAULT_DEPTH).solve(&query).expect("solves");
    for s in &result.solutions {
        println!("{:<32} via {}", s.answer.to_string(), s.proof.rule_ids().join(", "));
    }
    println!("{} answer(s){}", result.solutions.len(), if result.truncated { ", truncated" } else { "" });
}
