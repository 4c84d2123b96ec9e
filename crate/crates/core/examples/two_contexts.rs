//! Solves `X(a) = Y(b)` over `f/2, a/0, b/0`, prints the branch that found the solution and
//! checks minimality against the oracle.

use ctxrecomp::equation::{verify_solution, Equation};
use ctxrecomp::oracle::{all_solutions, minimal_solution_size, EnumBounds};
use ctxrecomp::solver::{solve_with_stats, Limits, Verdict};

fn main() {
    let eq = Equation::parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)").unwrap();
    let (verdict, stats) = solve_with_stats(&eq, &Limits::default());
    let Verdict::Sat(sol) = verdict else { panic!("expected SAT") };
    print!("solution:\n{}", eq.substitution_text(&sol.substitution));
    println!("verified: {}", verify_solution(&eq, &sol.substitution).unwrap());
    println!("nodes explored: {}, budget: {}", stats.nodes, stats.budget);
    println!("\ncompressed form:\n{}", sol.grammar_text(&eq));
    println!("trace:");
    for line in sol.trace.iter().flat_map(|l| l.lines()) {
        println!("  {line}");
    }

    let bounds = EnumBounds::new(3);
    println!("\nminimal |S(u)| = {:?}", minimal_solution_size(&eq, &bounds));
    let f = eq.sig.lookup("f").unwrap();
    for (s, n) in all_solutions(&eq, &bounds, 100) {
        let uses_f = s.cvars.values().chain(s.vars.values()).any(|t| t.letters().contains(&f));
        print!("size {n}, uses f: {uses_f}\n{}", eq.substitution_text(&s));
    }
}
