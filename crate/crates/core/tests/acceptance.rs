//! One line per acceptance criterion, then a failing assertion if any of them failed.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ctxrecomp::cli::verify_allowing_empty;
use ctxrecomp::compress::{
    all_partitions, chain_comp, decompress, find_good_partition, leaf_comp, pair_comp, tree_comp, CompressionLog,
};
use ctxrecomp::corpus::{generate_corpus, random_ground_term, tree_signature, CorpusParams};
use ctxrecomp::equation::{verify_solution, Equation};
use ctxrecomp::guided::{guided_run, guided_subphase, phase_bound, remove_empty_cvars};
use ctxrecomp::oracle::{all_solutions, oracle_solve, EnumBounds, OracleVerdict};
use ctxrecomp::solver::{solve, solve_with_stats, Limits, SolveStats, Verdict};
use ctxrecomp::term::{Letter, Signature, Term};

const BOUND: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn corpus_limits() -> Limits {
    Limits { max_solution_budget: BOUND as u64, ..Limits::default() }
}

fn two_contexts() -> Outcome {
    let start = Instant::now();
    let eq = Equation::parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)").unwrap();
    let verdict = solve(&eq, &Limits::default());
    let Some(sol) = verdict.solution() else { return outcome(false, format!("solver said {verdict:?}")) };
    let verified = verify_solution(&eq, &sol.substitution).unwrap();
    let bounds = EnumBounds::new(3);
    let minimal = match oracle_solve(&eq, &bounds) {
        OracleVerdict::Sat { size, .. } => Some(size),
        OracleVerdict::BoundedUnsat { .. } => None,
    };
    let f = eq.sig.lookup("f").unwrap();
    let small = all_solutions(&eq, &bounds, usize::MAX);
    let all_use_f = small.iter().all(|(s, _)| s.cvars.values().chain(s.vars.values()).any(|t| t.letters().contains(&f)));
    let elapsed = start.elapsed();
    outcome(
        verified && minimal == Some(3) && all_use_f && !small.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "verified {verified}, minimal size {minimal:?}, {} solutions of size <= 3 all use f: {all_use_f}, {elapsed:.2?}",
            small.len()
        ),
    )
}

struct CorpusRun {
    eq: Equation,
    oracle: OracleVerdict,
    verdict: Verdict,
    stats: SolveStats,
}

fn corpus_runs() -> (Vec<CorpusRun>, Duration, Option<String>) {
    let start = Instant::now();
    let corpus = generate_corpus(&CorpusParams { count: 600, seed: 0, ..CorpusParams::default() });
    let runs: Vec<std::result::Result<CorpusRun, String>> = corpus
        .into_par_iter()
        .map(|eq| {
            let oracle = oracle_solve(&eq, &EnumBounds::new(BOUND));
            catch_unwind(AssertUnwindSafe(|| solve_with_stats(&eq, &corpus_limits())))
                .map(|(verdict, stats)| CorpusRun { eq: eq.clone(), oracle, verdict, stats })
                .map_err(|e| {
                    let msg = e.downcast_ref::<String>().cloned().unwrap_or_default();
                    format!("{eq}: {msg}")
                })
        })
        .collect();
    let panic = runs.iter().find_map(|r| r.as_ref().err().cloned());
    (runs.into_iter().filter_map(|r| r.ok()).collect(), start.elapsed(), panic)
}

fn oracle_agreement(runs: &[CorpusRun], elapsed: Duration) -> Outcome {
    let mut oracle_sat = 0;
    let mut missed = Vec::new();
    let mut unsound = Vec::new();
    for r in runs {
        if let Some(s) = r.verdict.solution() {
            if !verify_allowing_empty(&r.eq, &s.substitution).unwrap() {
                unsound.push(r.eq.to_string());
            }
        }
        if r.oracle.is_sat() {
            oracle_sat += 1;
            if !r.verdict.is_sat() {
                missed.push(format!("{} ({:?})", r.eq, r.verdict));
            }
        }
    }
    outcome(
        missed.is_empty() && unsound.is_empty() && runs.len() >= 500 && elapsed < Duration::from_secs(600),
        format!(
            "{} equations, {}/{oracle_sat} oracle-SAT solved, {} verification failures, {elapsed:.2?}{}",
            runs.len(),
            oracle_sat - missed.len(),
            unsound.len(),
            missed.first().map(|m| format!(", first miss {m}")).unwrap_or_default()
        ),
    )
}

fn unary_of(t: &Term, sig: &Signature) -> Vec<Letter> {
    t.letters().into_iter().filter(|&l| sig.arity(l) == 1).collect()
}

fn chain_letters(t: &Term, sig: &Signature) -> usize {
    let mut sig = sig.clone();
    let u: BTreeSet<Letter> = unary_of(t, &sig).into_iter().collect();
    let mut log = CompressionLog::new(&sig);
    let chained = chain_comp(&u, t, &mut sig, &mut log).unwrap();
    unary_of(&chained, &sig).len()
}

/// Searches every partition of the unary letters of the chain-compressed tree for one whose
/// round ends below `3|t|/4`, most covered pair occurrences first. Returns the best size seen and
/// the number of letters partitioned.
fn best_round(t: &Term, sig: &Signature) -> (usize, usize) {
    let mut sig = sig.clone();
    let mut log = CompressionLog::new(&sig);
    let u: BTreeSet<Letter> = unary_of(t, &sig).into_iter().collect();
    let chained = chain_comp(&u, t, &mut sig, &mut log).unwrap();
    let letters = unary_of(&chained, &sig);
    let mut pairs: HashMap<(usize, usize), usize> = HashMap::new();
    for n in chained.nodes() {
        if let Term::App(a, kids) = n {
            if let [Term::App(b, _)] = kids.as_slice() {
                if let (Some(i), Some(j)) = (letters.iter().position(|l| l == a), letters.iter().position(|l| l == b)) {
                    *pairs.entry((i, j)).or_default() += 1;
                }
            }
        }
    }
    let partitions: Vec<_> = all_partitions(&letters).collect();
    let covered = |p: &ctxrecomp::compress::Partition| {
        pairs
            .iter()
            .filter(|((i, j), _)| p.gamma1.contains(&letters[*i]) && p.gamma2.contains(&letters[*j]))
            .map(|(_, c)| c)
            .sum::<usize>()
    };
    let mut order: Vec<(usize, usize)> = partitions.iter().enumerate().map(|(i, p)| (covered(p), i)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = usize::MAX;
    for (_, i) in order {
        let mut sig = sig.clone();
        let mut log = CompressionLog::new(&sig);
        let paired = pair_comp(&partitions[i], &chained, &mut sig, &mut log).unwrap();
        let used = paired.letters();
        let g0: BTreeSet<Letter> = used.iter().copied().filter(|&l| sig.arity(l) == 0).collect();
        let ge1: BTreeSet<Letter> = used.iter().copied().filter(|&l| sig.arity(l) > 0).collect();
        best = best.min(leaf_comp(&ge1, &g0, &paired, &mut sig, &mut log).unwrap().size());
        if 4 * best < 3 * t.size() {
            break;
        }
    }
    (best, letters.len())
}

fn tree_size_drop() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // the partitioned letters are those left after chain compression; trees with more than 12
    // of them are drawn again
    let mut trees: Vec<(Term, Signature)> = Vec::new();
    let mut redrawn = 0;
    while trees.len() < 100 {
        let sig = tree_signature(rng.gen_range(1..=12));
        let size = rng.gen_range(20..=200);
        let t = random_ground_term(&mut rng, &sig, size);
        if chain_letters(&t, &sig) > 12 {
            redrawn += 1;
            continue;
        }
        trees.push((t, sig));
    }
    let results: Vec<(usize, usize, usize)> = trees
        .par_iter()
        .map(|(t, sig)| {
            let (best, letters) = best_round(t, sig);
            (t.size(), best, letters)
        })
        .collect();
    let failures = results.iter().filter(|(n, best, _)| 4 * best >= 3 * n).count();
    let over = results.iter().filter(|(_, _, l)| *l > 12).count();
    let worst = results.iter().map(|(n, b, _)| *b as f64 / *n as f64).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && over == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{} trees, {failures} without a partition below 3/4, worst ratio {worst:.3}, {over} with more than 12 letters, {redrawn} redrawn, {elapsed:.2?}",
            results.len()
        ),
    )
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..1000 {
        let sig = tree_signature(rng.gen_range(0..=8));
        let size = rng.gen_range(1..=200);
        let t = random_ground_term(&mut rng, &sig, size);
        let mut s = sig.clone();
        let mut log = CompressionLog::new(&s);
        let c = tree_comp(&t, find_good_partition, &mut s, &mut log).unwrap();
        if decompress(&log, &c, &s).ok().as_ref() != Some(&t) {
            bad += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(bad == 0 && elapsed < Duration::from_secs(60), format!("1000 trees, {bad} mismatches, {elapsed:.2?}"))
}

fn father_and_son(t: &Term, sig: &Signature) -> bool {
    t.nodes().all(|n| match n {
        Term::App(l, kids) if sig.arity(*l) == 1 => kids[0].root_letter() != Some(*l),
        Term::Pow(..) => false,
        _ => true,
    })
}

fn invariants(runs: &[CorpusRun], panic: Option<String>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut chain_bad = 0;
    let mut arity_bad = 0;
    for _ in 0..300 {
        let sig = tree_signature(rng.gen_range(1..=6));
        let size = rng.gen_range(2..=120);
        let mut t = random_ground_term(&mut rng, &sig, size);
        let k = t.max_arity(&sig);
        let mut s = sig.clone();
        let mut log = CompressionLog::new(&s);
        let u: BTreeSet<Letter> = unary_of(&t, &s).into_iter().collect();
        let mut cs = s.clone();
        if !father_and_son(&chain_comp(&u, &t, &mut cs, &mut log.clone()).unwrap(), &cs) {
            chain_bad += 1;
        }
        while t.size() > 1 {
            t = tree_comp(&t, find_good_partition, &mut s, &mut log).unwrap();
            if t.max_arity(&s) > k {
                arity_bad += 1;
            }
        }
    }
    let checks: u64 = runs.iter().map(|r| r.stats.invariant_checks).sum();
    let ratio = runs.iter().map(|r| r.stats.max_size_ratio).fold(0.0, f64::max);
    let occ = runs.iter().map(|r| r.stats.max_var_occurrences).max().unwrap_or(0);
    let owned = runs.iter().map(|r| r.stats.max_owned).max().unwrap_or(0);
    let debug = cfg!(debug_assertions);
    outcome(
        chain_bad == 0 && arity_bad == 0 && panic.is_none() && (!debug || checks > 0),
        format!(
            "chain parents {chain_bad} bad, arity increases {arity_bad}, {checks} solver states checked{}, max var occurrences {occ}, max owned {owned}, max |eq|/(n0 k) {ratio:.2}{}",
            if debug { "" } else { " (release build: runtime checks off)" },
            panic.map(|p| format!(", violation: {p}")).unwrap_or_default()
        ),
    )
}

fn guided(runs: &[CorpusRun]) -> (Outcome, Outcome) {
    let start = Instant::now();
    let sat: Vec<(&Equation, &ctxrecomp::term::Substitution, usize)> = runs
        .iter()
        .filter_map(|r| match &r.oracle {
            OracleVerdict::Sat { solution, size } => Some((&r.eq, solution, *size)),
            _ => None,
        })
        .collect();
    let reports: Vec<_> = sat.par_iter().map(|(eq, s, n)| (eq, *n, guided_run(eq, s, 64))).collect();
    let mut unclean = Vec::new();
    // one subphase on every instance, also those already trivial
    for (eq, s, _) in &sat {
        let single = remove_empty_cvars(eq, s).and_then(|(e, s)| {
            let mut log = CompressionLog::new(&e.sig);
            guided_subphase(&e, &s, 1, &mut log)
        });
        match single {
            Ok((_, _, rep)) if rep.is_clean() => {}
            Ok((_, _, rep)) => unclean.push(format!("{eq}: {rep:?}")),
            Err(e) => unclean.push(format!("{eq}: {e}")),
        }
    }
    let mut over = Vec::new();
    let mut worst = i64::MIN;
    for (eq, n, r) in &reports {
        match r {
            Ok(r) => {
                if !r.subphases.iter().all(|s| s.is_clean()) {
                    unclean.push(eq.to_string());
                }
                let bound = phase_bound(*n) + 2;
                worst = worst.max(r.phases as i64 - bound as i64);
                if !r.reached_trivial || r.phases > bound {
                    over.push(format!("{eq} (N {n}, {} phases)", r.phases));
                }
            }
            Err(e) => unclean.push(format!("{eq}: {e}")),
        }
    }
    let subphases: usize = sat.len() + reports.iter().filter_map(|(_, _, r)| r.as_ref().ok()).map(|r| r.subphases.len()).sum::<usize>();
    let elapsed = start.elapsed();
    let sixth = outcome(
        unclean.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{} oracle-SAT instances, {subphases} subphases, {} with a remaining crossing or broken solution, {elapsed:.2?}{}",
            sat.len(),
            unclean.len(),
            unclean.first().map(|m| format!(", first {m}")).unwrap_or_default()
        ),
    );
    let eighth = outcome(
        over.is_empty(),
        format!(
            "{} branches, {} over the phase bound, closest margin {}{}",
            sat.len(),
            over.len(),
            worst,
            over.first().map(|m| format!(", first {m}")).unwrap_or_default()
        ),
    );
    (sixth, eighth)
}

const WORD_EQUATIONS: &[&str] = &[
    "sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))",
    "sig a/1 c/0\ncvar X Y\neq X(a(c)) = Y(a(a(c)))",
    "sig a/1 b/1 c/0\ncvar X\neq X(a(c)) = X(b(c))",
    "sig a/1 b/1 c/0\ncvar X\neq a(X(c)) = X(b(c))",
    "sig a/1 b/1 c/0\ncvar X Y\neq X(Y(a(c))) = Y(X(b(c)))",
    "sig a/1 b/1 c/0\ncvar X Y\neq X(a(b(c))) = Y(b(c))",
    "sig a/1 b/1 c/0\ncvar X\neq X(b(c)) = a(b(a(c)))",
    "sig a/1 b/1 c/0\ncvar X Y\neq X(b(a(c))) = a(Y(a(c)))",
    "sig a/1 b/1 c/0\ncvar X\neq X(X(c)) = a(b(a(b(c))))",
    "sig a/1 b/1 c/0\nvar x\ncvar X\neq X(a(x)) = a(X(b(c)))",
];

fn word_equations() -> Outcome {
    let mut agree = 0;
    let mut sat = 0;
    let mut wrong = Vec::new();
    for text in WORD_EQUATIONS {
        let eq = Equation::parse(text).unwrap();
        let oracle = oracle_solve(&eq, &EnumBounds::new(10));
        let verdict = solve(&eq, &Limits::default());
        let ok = match (&oracle, &verdict) {
            (OracleVerdict::Sat { .. }, Verdict::Sat(s)) => verify_solution(&eq, &s.substitution).unwrap(),
            (OracleVerdict::BoundedUnsat { .. }, Verdict::Unsat) => true,
            _ => false,
        };
        if ok {
            agree += 1;
            sat += usize::from(verdict.is_sat());
        } else {
            wrong.push(format!("{eq}: oracle sat {}, solver {verdict:?}", oracle.is_sat()));
        }
    }
    outcome(
        wrong.is_empty(),
        format!(
            "{agree}/{} agree ({sat} SAT){}",
            WORD_EQUATIONS.len(),
            wrong.first().map(|m| format!(", first disagreement {m}")).unwrap_or_default()
        ),
    )
}

// written to the process stderr so that the lines show without `--nocapture`
fn report(n: usize, o: Outcome, failed: &mut Vec<usize>) {
    let line = format!("criterion {n}: {} - {}\n", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    let _ = std::io::stderr().write_all(line.as_bytes());
    if !o.pass {
        failed.push(n);
    }
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    report(1, two_contexts(), &mut failed);
    let (runs, elapsed, panic) = corpus_runs();
    report(2, oracle_agreement(&runs, elapsed), &mut failed);
    report(3, tree_size_drop(), &mut failed);
    report(4, round_trip(), &mut failed);
    report(5, invariants(&runs, panic), &mut failed);
    let (sixth, eighth) = guided(&runs);
    report(6, sixth, &mut failed);
    report(7, word_equations(), &mut failed);
    report(8, eighth, &mut failed);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
