use chrono::{TimeZone, Utc};
use proptest::prelude::*;

use repolicy::domain::FactBase;
use repolicy::engine::Fixed;
use repolicy::store::{DatasetRecord, Store};
use repolicy::transform::{register_derivation, total_budget, Derivation, ParamValue, ToolAffirmation, TransformError};

fn atom() -> impl Strategy<Value = String> {
    ("[a-z][a-zA-Z]{0,6}", prop::collection::vec("[a-z][a-z0-9]{0,3}", 0..3)).prop_map(|(p, args)| {
        if args.is_empty() {
            p
        } else {
            format!("{p}({})", args.join(", "))
        }
    })
}

fn fact_base() -> impl Strategy<Value = FactBase> {
    (
        prop::collection::vec(atom(), 0..6),
        prop::collection::btree_map("[a-z]{1,5}:supplied:[a-z]{1,6}", "[a-z][a-z ,.]{0,12}[a-z.]", 0..3),
        prop::collection::vec(1i64..200_000, 0..4),
        prop::option::of(0i64..2_000_000_000),
    )
        .prop_map(|(atoms, values, budgets, affirmed_at)| {
            let mut fb = FactBase::for_dataset("ds0");
            for a in &atoms {
                fb = fb.with(a);
            }
            for (k, v) in &values {
                fb.set_value(k, v);
            }
            let affirmations: Vec<ToolAffirmation> = affirmed_at
                .map(|secs| ToolAffirmation {
                    tool: "psi".into(),
                    condition: "differentialPrivacy".into(),
                    affirmed_by: "owner".into(),
                    timestamp: Utc.timestamp_opt(secs, 0).unwrap(),
                })
                .into_iter()
                .collect();
            for (i, micros) in budgets.iter().enumerate() {
                let tool = if affirmations.is_empty() { "differentialPrivacy" } else { "psi" };
                let d = Derivation::new(&format!("ds{}", i + 1), &format!("ds{i}"), tool)
                    .param("totalBudget", ParamValue::Number(Fixed::from_micros(*micros)));
                fb = register_derivation(&fb, d, &affirmations).unwrap();
            }
            fb
        })
}

proptest! {
    #[test]
    fn text_format_round_trips(fb in fact_base()) {
        let text = fb.to_text();
        prop_assert_eq!(FactBase::parse(&text).unwrap(), fb, "{}", text);
    }

    #[test]
    fn json_round_trips(fb in fact_base()) {
        let json = serde_json::to_string(&fb).unwrap();
        prop_assert_eq!(serde_json::from_str::<FactBase>(&json).unwrap(), fb);
    }

    #[test]
    fn lineage_budget_is_the_sum(budgets in prop::collection::vec(1i64..300_000, 1..6)) {
        let mut fb = FactBase::new();
        for (i, b) in budgets.iter().enumerate() {
            let d = Derivation::new(&format!("dp{i}"), "src", "differentialPrivacy")
                .param("totalBudget", ParamValue::Number(Fixed::from_micros(*b)));
            fb = register_derivation(&fb, d, &[]).unwrap();
        }
        let sum = Fixed::from_micros(budgets.iter().sum());
        for i in 0..budgets.len() {
            prop_assert_eq!(total_budget(&format!("dp{i}"), &fb), Some(sum));
        }
    }
}

#[test]
fn derivation_errors() {
    let fb = FactBase::parse("@derivation b <- a differentialPrivacy totalBudget=0.05\n").unwrap();
    let cyc = register_derivation(&fb, Derivation::new("a", "b", "aggregate"), &[]);
    assert!(matches!(cyc, Err(TransformError::Cycle { .. })));
    let dup = register_derivation(&fb, Derivation::new("b", "c", "aggregate"), &[]);
    assert!(matches!(dup, Err(TransformError::DuplicateOutput(_))));
    let missing = register_derivation(&fb, Derivation::new("c", "a", "differentialPrivacy"), &[]);
    assert!(matches!(missing, Err(TransformError::MissingParam { .. })));
    let zero = Derivation::new("c", "a", "differentialPrivacy").param("totalBudget", ParamValue::parse("0"));
    assert!(matches!(register_derivation(&fb, zero, &[]), Err(TransformError::NonPositive { .. })));
    assert!(register_derivation(&fb, Derivation::new("c", "a", "aggregate"), &[]).is_ok());
}

#[test]
fn non_ground_facts_are_rejected() {
    assert!(FactBase::parse("p(X).\n").is_err());
    assert!(FactBase::parse("p(a) :- q(a).\n").is_err());
    assert!(FactBase::parse("@frobnicate x\n").is_err());
}

#[test]
fn store_versions_survive_reopen() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut store = Store::open(dir.path()).unwrap();
        for i in 0..5 {
            let mut rec = DatasetRecord::new("ds1");
            rec.facts = FactBase::for_dataset("ds1").with(&format!("note(v{i})"));
            store.put_dataset(rec).unwrap();
        }
        store.put_dataset(DatasetRecord::new("ds2")).unwrap();
    }
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.lines().len(), 6);
    let latest = store.dataset("ds1").unwrap();
    assert_eq!(latest.version, 5);
    assert_eq!(latest.facts, FactBase::for_dataset("ds1").with("note(v4)"));
    let versions: Vec<u32> = store.dataset_history("ds1").iter().map(|r| r.version).collect();
    assert_eq!(versions, vec![1, 2, 3, 4, 5]);
    assert_eq!(store.dataset("ds2").unwrap().version, 1);
    assert!(store.dataset("ds3").is_none());
}
