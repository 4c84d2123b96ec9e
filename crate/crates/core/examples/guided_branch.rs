//! Follows a known solution through the main loop and reports every subphase.

use ctxrecomp::equation::Equation;
use ctxrecomp::guided::{guided_run, phase_bound};

fn main() {
    let eq = Equation::parse("sig a/1 b/1 f/2 c/0\ncvar X\nvar x\neq f(X(a(c)), x) = f(a(X(c)), b(c))").unwrap();
    let s = eq.parse_substitution("X := a(a(a(_)))\nx := b(c)").unwrap();
    let r = guided_run(&eq, &s, 20).unwrap();
    for sub in &r.subphases {
        println!(
            "phase {}: |S(u)| {} -> {}, equation size {}, clean {}",
            sub.phase,
            sub.solution_before,
            sub.solution_after,
            sub.equation_after,
            sub.is_clean()
        );
    }
    let n = r.subphases.first().map_or(1, |s| s.solution_before);
    println!("trivial after {} phases (bound for N = {n}: {})", r.phases, phase_bound(n) + 2);
}
