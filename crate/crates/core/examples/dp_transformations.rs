//! Registers differentially private derivations of one source dataset and
//! shows the lineage budget crossing the release threshold.

use chrono::Utc;

use repolicy::domain::{Action, DomainVerdict, FactBase};
use repolicy::ferpa;
use repolicy::transform::{register_derivation, total_budget, Derivation, ParamValue, ToolAffirmation};

fn main() {
    let ctx = ferpa::context();
    let mut facts = FactBase::parse("@dataset ds1\nferpa_datasetInScope(ds1).\nferpa_identifiable(ds1).\n").expect("facts");
    let psi = ToolAffirmation {
        tool: "psi".into(),
        condition: "differentialPrivacy".into(),
        affirmed_by: "repository owner".into(),
        timestamp: Utc::now(),
    };
    let steps = [("dp1", "0.05"), ("dp2", "0.05"), ("dp3", "0.02")];
    for (output, budget) in steps {
        let d = Derivation::new(output, "ds1", "psi").param("totalBudget", ParamValue::parse(budget));
        facts = register_derivation(&facts, d, std::slice::from_ref(&psi)).expect("derivation accepted");
        let mut view = facts
            .clone()
            .with(&format!("ferpa_datasetInScope({output})"))
            .with(&format!("ferpa_identifiable({output})"));
        view.set_dataset(output);
        let action = Action::release("repository", output, "researcher", "depositor");
        let verdict = ctx.world(&view).and_then(|w| w.evaluate("ferpa", &action, 9)).expect("evaluates");
        let total = total_budget(output, &facts).expect("dp lineage");
        let note = match &verdict {
            DomainVerdict::Permitted { condition_sets, .. } if condition_sets.iter().any(|c| c.is_empty()) => "no conditions needed",
            DomainVerdict::Permitted { .. } => "conditions needed",
            _ => "",
        };
        println!("{output}: lineage budget {total}, {} {note}", verdict.label());
    }
}
