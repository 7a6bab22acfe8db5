//! Searches the FERPA release rules for contradictions and silence.

use std::time::Instant;

use repolicy::domain::{detect_contradictions, detect_silence, Action, ActionKind};
use repolicy::ferpa;

fn main() {
    let bound: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(9);
    let ctx = ferpa::context();
    let template = Action::template(ActionKind::Release, "ds");

    let start = Instant::now();
    let contradictions = detect_contradictions(&ctx, "ferpa", &template, bound).expect("contradiction audit");
    println!("contradictions at bound {bound}: {}", contradictions.len());
    for c in &contradictions {
        println!("  {} with {}", c.assignment, c.conditions);
    }
    eprintln!("contradiction audit took {:?}", start.elapsed());

    let start = Instant::now();
    let silent = detect_silence(&ctx, "ferpa", &template, bound).expect("silence audit");
    println!("silent assignments at bound {bound}: {}", silent.len());
    for a in &silent {
        println!("  {a}");
    }
    eprintln!("silence audit took {:?}", start.elapsed());
}
