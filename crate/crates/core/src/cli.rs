//! The `ctxrecomp` command line: problem files in, verdicts, substitutions and compression logs
//! out.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::compress::{find_good_partition, tree_comp, CompressionLog};
use crate::corpus::{generate_corpus, CorpusParams};
use crate::equation::{is_solution, verify_solution, Equation};
use crate::error::{Error, Result};
use crate::oracle::{oracle_solve, EnumBounds, OracleVerdict};
use crate::solver::{replay, solve_with_stats, Limits, Verdict};
use crate::term::{parse_term, Signature, Term, VarTable};
use crate::uncross::remove_cvar;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;

#[derive(Parser, Debug)]
#[command(name = "ctxrecomp", version, about = "Context unification by tree recompression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a problem file: SAT with a substitution, UNSAT, or UNKNOWN with the limit hit.
    Solve(SolveArgs),
    /// Search all substitutions up to a total size.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        bound: usize,
    },
    /// Check a substitution file against a problem file.
    Verify { file: PathBuf, substitution: PathBuf },
    /// Compress one ground term to a single node and print the log.
    Compress { file: PathBuf },
    /// Print a seeded corpus of problems separated by blank lines.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long)]
    max_phases: Option<usize>,
    #[arg(long)]
    max_eq_size: Option<usize>,
    #[arg(long)]
    exp_cap: Option<u64>,
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Largest solution size tried by iterative deepening.
    #[arg(long)]
    max_budget: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the branch that produced the solution.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Follow a trace written by `--trace` instead of searching.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,
    /// Print the solution in compressed form followed by the letter definitions.
    #[arg(long)]
    emit_grammar: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 3)]
    max_letters: usize,
    #[arg(long, default_value_t = 2)]
    max_arity: usize,
    #[arg(long, default_value_t = 2)]
    max_vars: usize,
    #[arg(long, default_value_t = 2)]
    max_cvars: usize,
    #[arg(long, default_value_t = 7)]
    max_size: usize,
}

fn limits_from(a: &SolveArgs) -> Limits {
    let mut l = Limits::default();
    if let Some(v) = a.max_phases {
        l.max_phases = v;
    }
    l.max_equation_size = a.max_eq_size;
    if let Some(v) = a.exp_cap {
        l.exponent_cap = v;
    }
    if let Some(v) = a.max_nodes {
        l.max_nodes_explored = v;
    }
    if let Some(v) = a.max_budget {
        l.max_solution_budget = v;
    }
    if let Some(v) = a.seed {
        l.random_seed = v;
    }
    l
}

enum Failure {
    Usage(String),
    Parse(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Parse(e.to_string())
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> std::result::Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Reads a problem file.
pub fn parse_problem(text: &str) -> Result<Equation> {
    Equation::parse(text)
}

/// A solution once the context variables it maps to the hole are removed from the equation.
pub fn verify_allowing_empty(eq: &Equation, s: &crate::term::Substitution) -> Result<bool> {
    let mut reduced = eq.clone();
    let mut events = Vec::new();
    for x in eq.used_cvars() {
        if s.cvar(x) == Some(&Term::Hole) {
            reduced = remove_cvar(&reduced, x, &mut events);
        }
    }
    Ok(is_solution(eq, s)? && verify_solution(&reduced, s)?)
}

/// The signature of a ground term, every name taking the arity it is used with.
pub fn infer_signature(src: &str) -> Result<Signature> {
    let chars: Vec<char> = src.chars().collect();
    let mut sig = Signature::new();
    let mut pos = 0;
    let syntax = |pos: usize, msg: &str| {
        let before: String = chars[..pos.min(chars.len())].iter().collect();
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Error::Syntax { line, col, msg: msg.into() }
    };
    let skip = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    // (name, children seen) for every open application
    let mut stack: Vec<(String, usize)> = Vec::new();
    let record = |sig: &mut Signature, name: &str, arity: usize| -> Result<()> {
        match sig.lookup(name) {
            Some(l) if sig.arity(l) != arity => {
                Err(Error::ArityMismatch { name: name.into(), expected: sig.arity(l), found: arity })
            }
            Some(_) => Ok(()),
            None => sig.add(name, arity).map(|_| ()),
        }
    };
    loop {
        skip(&mut pos);
        if pos >= chars.len() || !chars[pos].is_ascii_alphabetic() {
            return Err(syntax(pos, "expected a name"));
        }
        let start = pos;
        while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
            pos += 1;
        }
        let name: String = chars[start..pos].iter().collect();
        skip(&mut pos);
        if pos < chars.len() && chars[pos] == '(' {
            pos += 1;
            stack.push((name, 1));
            continue;
        }
        record(&mut sig, &name, 0)?;
        loop {
            skip(&mut pos);
            let Some(top) = stack.last_mut() else {
                if pos < chars.len() {
                    return Err(syntax(pos, "trailing input"));
                }
                return Ok(sig);
            };
            match chars.get(pos) {
                Some(',') => {
                    top.1 += 1;
                    pos += 1;
                    break;
                }
                Some(')') => {
                    pos += 1;
                    let (name, n) = stack.pop().unwrap();
                    record(&mut sig, &name, n)?;
                }
                _ => return Err(syntax(pos, "expected `,` or `)`")),
            }
        }
    }
}

/// Runs tree compression until one node is left. Returns the final term, the signature knowing
/// its letters and the log.
pub fn compress_to_node(t: &Term, sig: &Signature) -> Result<(Term, Signature, CompressionLog)> {
    let mut sig = sig.clone();
    let mut log = CompressionLog::new(&sig);
    let mut t = t.clone();
    while t.size() > 1 {
        let before = t.size();
        t = tree_comp(&t, find_good_partition, &mut sig, &mut log)?;
        if t.size() >= before {
            return Err(Error::InvariantViolation("a compression round did not shrink the term".into()));
        }
    }
    Ok((t, sig, log))
}

fn print_verdict(eq: &Equation, v: &Verdict, grammar: bool, out: &mut dyn Write) -> std::io::Result<i32> {
    Ok(match v {
        Verdict::Sat(s) => {
            writeln!(out, "SAT")?;
            if grammar {
                write!(out, "{}", s.grammar_text(eq))?;
            } else {
                write!(out, "{}", eq.substitution_text(&s.substitution))?;
            }
            EXIT_OK
        }
        Verdict::Unsat => {
            writeln!(out, "UNSAT")?;
            EXIT_FAIL
        }
        Verdict::Unknown(l) => {
            writeln!(out, "UNKNOWN {l}")?;
            EXIT_UNKNOWN
        }
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("output: {e}"));
    match cli.command {
        Command::Solve(a) => {
            let eq = parse_problem(&read_input(&a.file)?)?;
            let limits = limits_from(&a);
            let verdict = match &a.replay {
                Some(path) => replay(&eq, &read_input(path)?, &limits)?,
                None => solve_with_stats(&eq, &limits).0,
            };
            if let (Some(path), Some(s)) = (&a.trace, verdict.solution()) {
                let mut text = s.trace.join("\n");
                text.push('\n');
                write_file(path, &text)?;
            }
            print_verdict(&eq, &verdict, a.emit_grammar, out).map_err(io)
        }
        Command::Oracle { file, bound } => {
            let eq = parse_problem(&read_input(&file)?)?;
            match oracle_solve(&eq, &EnumBounds::new(bound)) {
                OracleVerdict::Sat { solution, size } => {
                    writeln!(out, "SAT {size}").map_err(io)?;
                    write!(out, "{}", eq.substitution_text(&solution)).map_err(io)?;
                    Ok(EXIT_OK)
                }
                OracleVerdict::BoundedUnsat { bound } => {
                    writeln!(out, "UNSAT <= {bound}").map_err(io)?;
                    Ok(EXIT_FAIL)
                }
            }
        }
        Command::Verify { file, substitution } => {
            let eq = parse_problem(&read_input(&file)?)?;
            let s = eq.parse_substitution(&read_input(&substitution)?)?;
            let ok = match verify_allowing_empty(&eq, &s) {
                Ok(ok) => ok,
                Err(Error::UndefinedVariable(_)) => false,
                Err(e) => return Err(e.into()),
            };
            writeln!(out, "{}", if ok { "OK" } else { "FAIL" }).map_err(io)?;
            Ok(if ok { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Compress { file } => {
            let text = read_input(&file)?;
            let sig = infer_signature(&text)?;
            if !sig.has_constant() {
                return Err(Error::NoConstant.into());
            }
            let t = parse_term(&text, &sig, &VarTable::new(), false)?;
            let (c, sig2, log) = compress_to_node(&t, &sig)?;
            let vars = VarTable::new();
            writeln!(out, "{}", c.display(&sig2, &vars)).map_err(io)?;
            write!(out, "{}", log.to_text(&sig2)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Gen(g) => {
            let params = CorpusParams {
                count: g.count,
                max_letters: g.max_letters,
                max_arity: g.max_arity,
                max_vars: g.max_vars,
                max_cvars: g.max_cvars,
                max_size: g.max_size,
                seed: g.seed,
            };
            let texts: Vec<String> = generate_corpus(&params).iter().map(Equation::to_problem_text).collect();
            write!(out, "{}", texts.join("\n")).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs the command line with `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Parse(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_PARSE
        }
    }
}
