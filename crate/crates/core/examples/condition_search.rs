//! Searches for the minimal condition sets that permit releasing a dataset
//! covered by the studies exception, at each bound from 0 to 9.

use repolicy::domain::{find_condition_sets, Action, FactBase};
use repolicy::packs;

fn main() {
    let module = packs::build_ferpa_module();
    let facts = FactBase::for_dataset("ds1")
        .with("ferpa_datasetInScope(ds1)")
        .with("ferpa_identifiable(ds1)")
        .with("ferpa_studiesException(ds1)");
    let action = Action::release("repository", "ds1", "researcher", "depositor");
    for bound in 0..=9 {
        let sets = find_condition_sets(&module, &action, &facts, bound).expect("search");
        if sets.is_empty() {
            println!("bound {bound}: none");
        }
        for cs in sets {
            println!("bound {bound}: {} condition(s) {cs}", cs.len());
        }
    }
}
