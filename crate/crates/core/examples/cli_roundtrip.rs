//! Drives the command line in-process: generate problems, solve one with a trace, replay it.

use ctxrecomp::cli::run;

fn call(args: &[&str]) -> (i32, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("ctxrecomp").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap() + &String::from_utf8(err).unwrap())
}

fn main() {
    let dir = std::env::temp_dir().join(format!("ctxrecomp-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (_, corpus) = call(&["gen", "--count", "3", "--seed", "5"]);
    println!("gen:\n{corpus}");

    let problem = dir.join("problem.txt");
    let trace = dir.join("problem.trace");
    std::fs::write(&problem, "sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)\n").unwrap();
    let (p, t) = (problem.to_str().unwrap(), trace.to_str().unwrap());
    let (code, out) = call(&["solve", p, "--trace", t]);
    println!("solve (exit {code}):\n{out}");
    let (code, out) = call(&["solve", p, "--replay", t, "--emit-grammar"]);
    println!("replay (exit {code}):\n{out}");

    let term = dir.join("term.txt");
    std::fs::write(&term, "f(g(g(g(a))), f(g(a), b))").unwrap();
    let (code, out) = call(&["compress", term.to_str().unwrap()]);
    println!("compress (exit {code}):\n{out}");
    std::fs::remove_dir_all(&dir).unwrap();
}
