mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use repolicy::domain::{assignments, minimal_sets, Action, ConditionSet, AUDIT_DATASET};
use repolicy::ferpa;

use common::*;

fn registry(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn cs_of(mask: u32, reg: &[String]) -> ConditionSet {
    reg.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| c.clone()).collect()
}

proptest! {
    /// With an upward-closed acceptance family, the search returns exactly
    /// the minimal generators within the bound.
    #[test]
    fn search_returns_minimal_generators(n in 1usize..7, gens in prop::collection::vec(any::<u32>(), 0..5), max_n in 0usize..8) {
        let reg = registry(n);
        let gens: Vec<u32> = gens.iter().map(|g| g & ((1 << n) - 1)).collect();
        let accepts = |m: u32| gens.iter().any(|g| g & m == *g);
        let found = minimal_sets(&reg, max_n, |cs| {
            let m = reg.iter().enumerate().filter(|(_, c)| cs.contains(c)).fold(0u32, |m, (i, _)| m | 1 << i);
            Ok::<_, ()>(accepts(m).then_some(()))
        }).unwrap();
        let found: BTreeSet<ConditionSet> = found.into_iter().map(|(cs, _)| cs).collect();

        let expected: BTreeSet<ConditionSet> = (0u32..1 << n)
            .filter(|&m| accepts(m) && m.count_ones() as usize <= max_n)
            .filter(|&m| (0..n).all(|i| m & (1 << i) == 0 || !accepts(m & !(1 << i))))
            .map(|m| cs_of(m, &reg))
            .collect();
        prop_assert_eq!(found, expected);
    }
}

/// Every set FERPA reports is permitted, no set with one condition removed
/// is, and lowering the bound only drops the sets that no longer fit.
#[test]
fn ferpa_sets_are_minimal_and_bound_monotone() {
    let ctx = ferpa::context();
    let module = ctx.domain("ferpa").unwrap();
    let action = Action::release("repository", AUDIT_DATASET, "user", "depositor");
    let mut checked = 0;
    for a in assignments(module).unwrap() {
        let world = ctx.world(a.facts()).unwrap();
        let mut solver = world.solver();
        let at9: Vec<ConditionSet> =
            world.find_condition_sets("ferpa", &action, 9).unwrap().into_iter().map(|(cs, _)| cs).collect();
        for cs in &at9 {
            assert!(world.permitted(&mut solver, "ferpa", &action, cs, cs.len()).unwrap().is_some(), "{a}: {cs}");
            for drop in cs.iter() {
                let smaller: ConditionSet = cs.iter().filter(|c| *c != drop).map(String::from).collect();
                assert!(
                    world.permitted(&mut solver, "ferpa", &action, &smaller, smaller.len()).unwrap().is_none(),
                    "{a}: {cs} without {drop} still permitted"
                );
            }
            checked += 1;
        }
        for k in [0, 2, 6, 8] {
            let at_k: Vec<ConditionSet> =
                world.find_condition_sets("ferpa", &action, k).unwrap().into_iter().map(|(cs, _)| cs).collect();
            let fitting: Vec<ConditionSet> = at9.iter().filter(|cs| cs.len() <= k).cloned().collect();
            assert_eq!(at_k, fitting, "{a} at bound {k}");
        }
    }
    assert!(checked > 0);
}

#[test]
fn table_matches_oracle_at_small_bounds() {
    for bound in [0, 2, 6] {
        for row in ferpa::ferpa_decision_table(bound).unwrap() {
            let expected = ferpa_release_oracle(&FerpaCase::from_assignment(&row.assignment), bound);
            assert_eq!(row.verdict.label(), expected.label(), "{} at {bound}", row.assignment);
            if let Expected::Permitted(sets) = expected {
                let mut got: Vec<BTreeSet<String>> =
                    row.verdict.condition_sets().iter().map(|cs| cs.iter().map(String::from).collect()).collect();
                got.sort();
                assert_eq!(got, sets, "{} at {bound}", row.assignment);
            }
        }
    }
}
