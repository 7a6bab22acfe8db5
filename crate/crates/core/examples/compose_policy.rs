//! Composes FERPA with the CMR stub domain under the universityX policy and
//! prints each domain's verdict next to the combined one.

use repolicy::compose::compose;
use repolicy::domain::{Action, FactBase};
use repolicy::packs;

fn main() {
    let policy = packs::university_x_policy();
    let ctx = policy.context(&packs::builtin_domains()).expect("context");
    let action = Action::release(&policy.id, "ds1", "researcher", "depositor");
    let consent = FactBase::for_dataset("ds1")
        .with("ferpa_datasetInScope(ds1)")
        .with("ferpa_identifiable(ds1)")
        .with("ferpa_allConsented(ds1)");
    let scenarios = [
        ("consented student records", consent.clone(), 9),
        ("also restricted medical records", consent.clone().with("cmr_datasetInScope(ds1)").with("cmr_restrictedRecords(ds1)"), 9),
        ("consented, no conditions allowed", consent, 0),
    ];
    for (name, facts, bound) in scenarios {
        let out = compose(&policy, &ctx, &action, &facts, bound).expect("compose");
        println!("{name} (bound {bound})");
        for (domain, v) in &out.domains {
            println!("  {domain:<6} {}", v.label());
        }
        println!("  => {:?}", out.verdict);
    }
}
