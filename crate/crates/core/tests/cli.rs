use std::path::Path;

use ctxrecomp::cli::{run, EXIT_FAIL, EXIT_OK, EXIT_PARSE, EXIT_UNKNOWN, EXIT_USAGE};

const TWO_CONTEXTS: &str = "sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)\n";

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("ctxrecomp").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_two_contexts_and_verify_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p", TWO_CONTEXTS);
    let (code, out, _) = call(&["solve", &p]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("SAT"));
    let subst: String = lines.map(|l| format!("{l}\n")).collect();
    let s = write(dir.path(), "s", &subst);
    assert_eq!(call(&["verify", &p, &s]).1, "OK\n");
}

#[test]
fn verify_known_substitution() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p", TWO_CONTEXTS);
    let good = write(dir.path(), "good", "X := f(_, b)\nY := f(a, _)\n");
    assert_eq!(call(&["verify", &p, &good]), (EXIT_OK, "OK\n".into(), String::new()));
    let empty = write(dir.path(), "empty", "X := _\nY := f(a, _)\n");
    assert_eq!(call(&["verify", &p, &empty]).0, EXIT_FAIL);
    let partial = write(dir.path(), "partial", "X := f(_, b)\n");
    assert_eq!(call(&["verify", &p, &partial]).1, "FAIL\n");
}

#[test]
fn unsat_and_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p", "sig a/1 b/1 c/0\neq a(c) = b(c)\n");
    assert_eq!(call(&["solve", &p]), (EXIT_FAIL, "UNSAT\n".into(), String::new()));
    let q = write(dir.path(), "q", TWO_CONTEXTS);
    let (code, out, _) = call(&["solve", &q, "--max-nodes", "1"]);
    assert_eq!((code, out.as_str()), (EXIT_UNKNOWN, "UNKNOWN max-nodes\n"));
}

#[test]
fn trace_replays_to_the_same_answer() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p", "sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))\n");
    let t = dir.path().join("trace");
    let t = t.to_str().unwrap();
    let first = call(&["solve", &p, "--trace", t]);
    assert_eq!(first.0, EXIT_OK);
    assert_eq!(call(&["solve", &p, "--replay", t]), first);
    let (code, grammar, _) = call(&["solve", &p, "--emit-grammar"]);
    assert_eq!(code, EXIT_OK);
    assert!(grammar.starts_with("SAT\nX := "));
}

#[test]
fn parse_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("noconst", "sig g/1\nvar x\neq x = g(x)\n"),
        ("arity", "sig f/2 a/0\neq f(a) = a\n"),
        ("syntax", "sig f/2 a/0\neq f(a, = a\n"),
        ("dup", "sig a/0\nvar a\neq a = a\n"),
    ] {
        let p = write(dir.path(), name, text);
        let (code, _, err) = call(&["solve", &p]);
        assert_eq!(code, EXIT_PARSE, "{name}: {err}");
    }
    let p = write(dir.path(), "p", TWO_CONTEXTS);
    let s = write(dir.path(), "s", "X := f(_, c)\n");
    assert_eq!(call(&["verify", &p, &s]).0, EXIT_PARSE);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(call(&["solve"]).0, EXIT_USAGE);
    assert_eq!(call(&["gen", "--seed", "x"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "/no/such/file", "/no/such/file"]).0, EXIT_USAGE);
}

#[test]
fn gen_is_reproducible_and_parses() {
    let a = call(&["gen", "--seed", "9", "--count", "40"]);
    assert_eq!(a, call(&["gen", "--seed", "9", "--count", "40"]));
    assert_ne!(a.1, call(&["gen", "--seed", "10", "--count", "40"]).1);
    let problems: Vec<&str> = a.1.split("\n\n").collect();
    assert_eq!(problems.len(), 40);
    for p in problems {
        ctxrecomp::equation::Equation::parse(p).unwrap();
    }
}

#[test]
fn compress_prints_one_node_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "t", "f(g(g(a)), g(h(b)))\n");
    let (code, out, _) = call(&["compress", &t]);
    assert_eq!(code, EXIT_OK);
    let first = out.lines().next().unwrap();
    assert!(!first.contains('('));
    assert!(out.lines().skip(1).all(|l| ["CHAIN", "PAIR", "LEAF"].iter().any(|k| l.starts_with(k))), "{out}");
    let bad = write(dir.path(), "bad", "f(a, f(a))\n");
    assert_eq!(call(&["compress", &bad]).0, EXIT_PARSE);
}
