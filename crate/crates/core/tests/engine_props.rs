mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use repolicy::engine::{least_model, parse_ground_term, parse_query, replay, Fixed, Program, Solver, Term, DEFAULT_DEPTH};

use common::RandomProgram;

fn program_for(seed: u64) -> (RandomProgram, Program) {
    let p = RandomProgram::generate(&mut ChaCha8Rng::seed_from_u64(seed));
    let program = Program::parse(&p.to_source()).expect("generated programs parse");
    (p, program)
}

fn strip(s: &BTreeSet<String>) -> BTreeSet<String> {
    s.iter().map(|a| a.replace(' ', "")).collect()
}

fn solve_all(p: &RandomProgram, program: &Program) -> Vec<(String, Vec<String>)> {
    let mut solver = Solver::new(program, DEFAULT_DEPTH);
    p.queries()
        .iter()
        .map(|q| {
            let res = solver.solve(&parse_query(q).unwrap()).unwrap();
            (q.clone(), res.solutions.iter().map(|s| s.answer.to_string()).collect())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn answers_match_fixpoint_oracle(seed in any::<u64>()) {
        let (p, program) = program_for(seed);
        let derived: BTreeSet<String> = solve_all(&p, &program).into_iter().flat_map(|(_, a)| a).collect();
        prop_assert_eq!(strip(&derived), strip(&p.fixpoint_oracle()), "{}", p.to_source());
    }

    #[test]
    fn bottom_up_model_matches_oracle(seed in any::<u64>()) {
        let (p, program) = program_for(seed);
        let model = least_model(&program).unwrap().expect("function-free");
        let atoms: BTreeSet<String> = model.atoms().iter().map(Term::to_string).collect();
        prop_assert_eq!(strip(&atoms), strip(&p.fixpoint_oracle()), "{}", p.to_source());
    }

    #[test]
    fn every_proof_replays(seed in any::<u64>()) {
        let (p, program) = program_for(seed);
        let mut solver = Solver::new(&program, DEFAULT_DEPTH);
        for q in p.queries() {
            for s in solver.solve(&parse_query(&q).unwrap()).unwrap().solutions {
                prop_assert!(replay(&program, &s.proof, DEFAULT_DEPTH).is_ok(), "{} in\n{}", s.answer, p.to_source());
                prop_assert_eq!(s.proof.atom(), Some(&s.answer));
            }
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>()) {
        let (p, program) = program_for(seed);
        prop_assert_eq!(solve_all(&p, &program), solve_all(&p, &Program::parse(&p.to_source()).unwrap()));
    }

    #[test]
    fn printed_program_reparses_to_same_model(seed in any::<u64>()) {
        let (_, program) = program_for(seed);
        let again = Program::parse(&program.to_string()).unwrap();
        let a = least_model(&program).unwrap().unwrap().atoms();
        let b = least_model(&again).unwrap().unwrap().atoms();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn fixed_point_text_round_trips(micros in -10_000_000_000i64..10_000_000_000) {
        let x = Fixed::from_micros(micros);
        prop_assert_eq!(x.to_string().parse::<Fixed>().unwrap(), x);
        let t = parse_ground_term(&format!("budget({x})")).unwrap();
        prop_assert_eq!(t.args()[0].as_number(), Some(x));
    }
}

#[test]
fn seven_fractional_digits_are_rejected() {
    assert!("0.1000001".parse::<Fixed>().is_err());
    assert_eq!("0.100000".parse::<Fixed>().unwrap(), "0.1".parse::<Fixed>().unwrap());
}

#[test]
fn negation_cycle_is_rejected() {
    assert!(Program::parse("p :- \\+(q).\nq :- \\+(p).\n").is_err());
}
