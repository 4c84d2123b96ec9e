//! Equations over unary letters and one constant, the word-equation case.

use ctxrecomp::equation::Equation;
use ctxrecomp::oracle::{oracle_solve, EnumBounds};
use ctxrecomp::solver::{solve, Limits, Verdict};

const PROBLEMS: &[&str] = &[
    "sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))",
    "sig a/1 b/1 c/0\ncvar X Y\neq X(a(b(c))) = Y(b(a(c)))",
    "sig a/1 b/1 c/0\ncvar X Y\neq X(Y(a(c))) = Y(X(b(c)))",
    "sig a/1 b/1 c/0\ncvar X\neq X(b(c)) = a(b(a(c)))",
];

fn main() {
    for text in PROBLEMS {
        let eq = Equation::parse(text).unwrap();
        let oracle = oracle_solve(&eq, &EnumBounds::new(8));
        match solve(&eq, &Limits::default()) {
            Verdict::Sat(s) => {
                print!("{eq}\n  SAT (oracle sat: {})\n", oracle.is_sat());
                for line in eq.substitution_text(&s.substitution).lines() {
                    println!("    {line}");
                }
            }
            v => println!("{eq}\n  {v:?} (oracle sat: {})", oracle.is_sat()),
        }
    }
}
