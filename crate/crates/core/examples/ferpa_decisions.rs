//! Prints FERPA's verdict on a release for every fact assignment.

use std::time::Instant;

use repolicy::ferpa::ferpa_decision_table;

fn main() {
    let bound: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(9);
    let start = Instant::now();
    let table = ferpa_decision_table(bound).expect("table");
    for row in &table {
        let sets: Vec<String> = row.verdict.condition_sets().iter().map(|c| c.to_string()).collect();
        println!("{:<110} {:<12} {}", row.assignment.to_string(), row.verdict.label(), sets.join(" | "));
    }
    eprintln!("{} rows in {:?}", table.len(), start.elapsed());
}
