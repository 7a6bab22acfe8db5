//! Triages purpose requests against the sample purpose profile.
//!
//! Usage: `cargo run --example purpose_triage [code ...]`

use repolicy::packs;
use repolicy::purpose::{evaluate_purpose, PurposeRequest, Triage};

fn main() {
    let taxonomy = packs::sample_taxonomy();
    let profile = packs::sample_purpose_profile();
    println!("profile: {}", profile.human_readable);
    println!("  always permitted: {}", profile.always_permitted_source());
    println!("  always denied:    {}", profile.always_denied_source());

    let args: Vec<String> = std::env::args().skip(1).collect();
    let requests: Vec<Vec<String>> = if args.is_empty() {
        [&["3206", "2194"][..], &["2194", "5878"], &["4006"], &["2194"]]
            .iter()
            .map(|codes| codes.iter().map(|c| c.to_string()).collect())
            .collect()
    } else {
        vec![args]
    };
    for codes in requests {
        let labels: Vec<String> = codes
            .iter()
            .map(|c| taxonomy.node(c).map_or_else(|| c.clone(), |n| format!("{c} {}", n.label)))
            .collect();
        let request = PurposeRequest::new(codes.iter().map(String::as_str), "free text supplied by the requester");
        match evaluate_purpose(&profile, &request, &taxonomy) {
            Ok(Triage::HumanReview { free_text }) => println!("[{}] -> human review ({free_text})", labels.join(", ")),
            Ok(t) => println!("[{}] -> {}", labels.join(", "), t.label()),
            Err(e) => println!("[{}] -> error: {e}", labels.join(", ")),
        }
    }
}
