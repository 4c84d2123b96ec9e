use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ctxrecomp::cli::{compress_to_node, verify_allowing_empty};
use ctxrecomp::compress::{chain_comp, decompress, find_good_partition, tree_comp, CompressionLog};
use ctxrecomp::corpus::{random_equation, random_ground_term, tree_signature, CorpusParams};
use ctxrecomp::equation::{
    chain_crossing_report, classify_chain_occurrences, classify_pair_occurrences, classify_parent_leaf_occurrences,
    pair_crossing_report, parent_leaf_crossing_report, simplify_solution, verify_solution, Equation, OccurrenceClass,
};
use ctxrecomp::guided::remove_empty_cvars;
use ctxrecomp::oracle::{enumerate_ground_contexts, enumerate_ground_terms, oracle_solve, EnumBounds, OracleVerdict};
use ctxrecomp::solver::{replay, solve, Limits, Verdict};
use ctxrecomp::term::{Letter, Substitution, Term};

fn equation(seed: u64, max_size: usize) -> Equation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_equation(&mut rng, &CorpusParams { max_size, ..CorpusParams::default() })
}

/// Random images for every variable, none of the contexts empty.
fn random_substitution(eq: &Equation, seed: u64) -> Substitution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = enumerate_ground_terms(&eq.sig, 4).unwrap();
    let contexts: Vec<Term> =
        enumerate_ground_contexts(&eq.sig, 4).unwrap().into_iter().filter(|c| *c != Term::Hole).collect();
    let mut s = Substitution::new();
    for x in eq.used_cvars() {
        s.set_cvar(x, contexts.choose(&mut rng).cloned().unwrap_or(Term::Hole));
    }
    for x in eq.used_vars() {
        s.set_var(x, terms.choose(&mut rng).unwrap().clone());
    }
    s
}

fn has_crossing<T>(occ: &[T], class: impl Fn(&T) -> OccurrenceClass) -> bool {
    occ.iter().any(|o| class(o) == OccurrenceClass::Crossing)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn compression_round_trips(seed in any::<u64>(), unary in 0usize..8, size in 1usize..150) {
        let sig = tree_signature(unary);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_ground_term(&mut rng, &sig, size);
        let mut s = sig.clone();
        let mut log = CompressionLog::new(&s);
        let c = tree_comp(&t, find_good_partition, &mut s, &mut log).unwrap();
        prop_assert!(c.size() <= t.size());
        prop_assert_eq!(decompress(&log, &c, &s).unwrap(), t.clone());
        let (one, s2, log2) = compress_to_node(&t, &sig).unwrap();
        prop_assert_eq!(one.size(), 1);
        prop_assert_eq!(decompress(&log2, &one, &s2).unwrap(), t);
    }

    #[test]
    fn chain_compression_separates_parents(seed in any::<u64>(), unary in 1usize..6, size in 2usize..100) {
        let sig = tree_signature(unary);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_ground_term(&mut rng, &sig, size);
        let mut s = sig.clone();
        let gamma: BTreeSet<Letter> = sig.letters_of_arity(1).collect();
        let c = chain_comp(&gamma, &t, &mut s, &mut CompressionLog::new(&sig)).unwrap();
        for n in c.nodes() {
            if let Term::App(l, kids) = n {
                if s.arity(*l) == 1 {
                    prop_assert_ne!(kids[0].root_letter(), Some(*l));
                }
            }
        }
    }

    #[test]
    fn problem_text_round_trips(seed in any::<u64>()) {
        let eq = equation(seed, 9);
        let text = eq.to_problem_text();
        let back = Equation::parse(&text).unwrap();
        prop_assert_eq!(back.to_problem_text(), text);
        prop_assert_eq!(back.to_string(), eq.to_string());
    }

    #[test]
    fn crossing_tests_match_classification(seed in any::<u64>(), images in any::<u64>()) {
        let eq = equation(seed, 7);
        let s = random_substitution(&eq, images);
        let letters: Vec<Letter> = eq.sig.letters().collect();
        for &a in &letters {
            for &b in &letters {
                if eq.sig.arity(a) == 1 && eq.sig.arity(b) == 1 && a != b {
                    let occ = classify_pair_occurrences(&eq, &s, a, b).unwrap();
                    prop_assert_eq!(has_crossing(&occ, |o| o.1), pair_crossing_report(&eq, &s, a, b).is_crossing());
                }
                if eq.sig.arity(a) == 0 && eq.sig.arity(b) >= 1 {
                    let occ = classify_parent_leaf_occurrences(&eq, &s, b, a).unwrap();
                    prop_assert_eq!(has_crossing(&occ, |o| o.2), parent_leaf_crossing_report(&eq, &s, b, a).is_crossing());
                }
            }
            if eq.sig.arity(a) == 1 {
                let occ = classify_chain_occurrences(&eq, &s, a).unwrap();
                prop_assert_eq!(has_crossing(&occ, |o| o.2), chain_crossing_report(&eq, &s, a).is_crossing());
            }
        }
    }

    #[test]
    fn solver_answers_are_sound_and_replayable(seed in any::<u64>()) {
        let eq = equation(seed, 6);
        let limits = Limits { max_solution_budget: 6, ..Limits::default() };
        let verdict = solve(&eq, &limits);
        let oracle = oracle_solve(&eq, &EnumBounds::new(6));
        match &verdict {
            Verdict::Sat(sol) => {
                prop_assert!(verify_allowing_empty(&eq, &sol.substitution).unwrap());
                let again = replay(&eq, &sol.trace.join("\n"), &limits).unwrap();
                prop_assert_eq!(again.solution().map(|s| s.substitution.clone()), Some(sol.substitution.clone()));
            }
            Verdict::Unsat => prop_assert!(!oracle.is_sat(), "UNSAT on solvable {}", eq),
            Verdict::Unknown(_) => {}
        }
        if oracle.is_sat() {
            prop_assert!(verdict.is_sat(), "missed {}", eq);
        }
    }

    #[test]
    fn simplification_keeps_solutions(seed in any::<u64>()) {
        let eq = equation(seed, 7);
        if let OracleVerdict::Sat { solution, .. } = oracle_solve(&eq, &EnumBounds::new(7)) {
            let (eq, s) = remove_empty_cvars(&eq, &solution).unwrap();
            let simple = simplify_solution(&eq, &s).unwrap();
            prop_assert!(verify_solution(&eq, &simple).unwrap());
            prop_assert!(simple.size() <= s.size());
        }
    }
}
