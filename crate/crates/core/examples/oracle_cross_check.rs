//! Solves a small seeded corpus and compares every verdict with the brute-force oracle.

use ctxrecomp::corpus::{generate_corpus, CorpusParams};
use ctxrecomp::equation::is_solution;
use ctxrecomp::oracle::{oracle_solve, EnumBounds, OracleVerdict};
use ctxrecomp::solver::{solve, Limits, Verdict};

fn main() {
    let corpus = generate_corpus(&CorpusParams { count: 200, seed: 11, ..CorpusParams::default() });
    let limits = Limits { max_solution_budget: 8, ..Limits::default() };
    let (mut agree, mut sat, mut unknown, mut unsat) = (0, 0, 0, 0);
    for eq in &corpus {
        let oracle = oracle_solve(eq, &EnumBounds::new(8));
        let verdict = solve(eq, &limits);
        if let Verdict::Sat(s) = &verdict {
            assert!(is_solution(eq, &s.substitution).unwrap(), "unsound on {eq}");
        }
        match (&oracle, &verdict) {
            (OracleVerdict::Sat { .. }, Verdict::Sat(_)) => {
                sat += 1;
                agree += 1
            }
            (OracleVerdict::BoundedUnsat { .. }, Verdict::Unsat) => {
                unsat += 1;
                agree += 1
            }
            (OracleVerdict::Sat { size, .. }, v) => println!("missed: {eq} (oracle size {size}, solver {v:?})"),
            (_, Verdict::Unknown(l)) => {
                unknown += 1;
                println!("unknown ({l}): {eq}")
            }
            (_, _) => agree += 1,
        }
    }
    println!("{} equations: {agree} agree ({sat} SAT, {unsat} UNSAT), {unknown} UNKNOWN", corpus.len());
}
