//! The main loop as a bounded depth-first search over guess sheets.
//!
//! Every branch carries an upper bound on the size of the solution it is looking for. Uncrossing
//! keeps that size, compressions shrink it by at least the savings on the equation, and an
//! equation whose explicit size exceeds the bound is cut. Iterative deepening raises the bound
//! up to [`Limits::max_solution_budget`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::compress::{all_partitions, best_partition, decompress, pair_occurrences, CompressionLog, Flat, Partition};
use crate::equation::{is_solution, spare_letter, Equation};
use crate::error::{Error, Result};
use crate::ncr::{unary_letters, EqCompressor};
use crate::term::{CVar, Letter, Origin, Signature, Substitution, Term, Var};
use crate::uncross::{
    cvars_on_constants, gen_pop, pop, pref_suff, remove_cvar, replay_solution_backward, CvarGuess, GuessSheet,
    Ownership, ReconstructionEvent, Stage, VarGuess,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_phases: usize,
    /// `None` means `size_factor · n · k` for the input.
    pub max_equation_size: Option<usize>,
    pub size_factor: usize,
    pub exponent_cap: u64,
    pub max_nodes_explored: u64,
    pub random_seed: u64,
    /// Largest bound on `|S(u)|` tried by iterative deepening.
    pub max_solution_budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_phases: 16,
            max_equation_size: None,
            size_factor: 100,
            exponent_cap: 1 << 16,
            max_nodes_explored: 2_000_000,
            random_seed: 0,
            max_solution_budget: 16,
        }
    }
}

impl Limits {
    pub fn equation_size_bound(&self, eq: &Equation) -> usize {
        self.max_equation_size.unwrap_or_else(|| self.size_factor * eq.size() * eq.sig.max_arity().max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Limit {
    Phases,
    EquationSize,
    Nodes,
    SolutionBudget,
}

impl Limit {
    pub fn name(self) -> &'static str {
        match self {
            Limit::Phases => "max-phases",
            Limit::EquationSize => "max-eq-size",
            Limit::Nodes => "max-nodes",
            Limit::SolutionBudget => "solution-budget",
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A solution of the input equation.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Ground images over the input signature; contexts may be the bare hole.
    pub substitution: Substitution,
    /// The same images before decompression.
    pub compressed: Substitution,
    /// Definitions of the letters occurring in `compressed`.
    pub log: CompressionLog,
    /// Signature knowing every letter of `compressed`.
    pub sig: Signature,
    /// The guesses and compressions of the branch, replayable with [`replay`].
    pub trace: Vec<String>,
}

impl Solution {
    /// `compressed` followed by the letter definitions it needs.
    pub fn grammar_text(&self, eq0: &Equation) -> String {
        let mut s = String::new();
        for (x, t) in &self.compressed.cvars {
            s.push_str(&format!("{} := {}\n", eq0.vars.cvar_name(*x), t.display(&self.sig, &eq0.vars)));
        }
        for (x, t) in &self.compressed.vars {
            s.push_str(&format!("{} := {}\n", eq0.vars.var_name(*x), t.display(&self.sig, &eq0.vars)));
        }
        s.push_str(&self.log.to_text(&self.sig));
        s
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Sat(Box<Solution>),
    Unsat,
    Unknown(Limit),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Verdict::Sat(s) => Some(s),
            _ => None,
        }
    }

    fn sat(substitution: Substitution, sig: &Signature) -> Verdict {
        Verdict::Sat(Box::new(Solution {
            compressed: substitution.clone(),
            substitution,
            log: CompressionLog::new(sig),
            sig: sig.clone(),
            trace: Vec::new(),
        }))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub max_equation_size: usize,
    /// Largest `|u| + |v|` seen, divided by `n0 · k`.
    pub max_size_ratio: f64,
    pub invariant_checks: u64,
    pub max_var_occurrences: usize,
    pub max_owned: usize,
    /// Phases on the branch that found the solution.
    pub phases: usize,
    /// The bound on `|S(u)|` in force when the search stopped.
    pub budget: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub var_occurrences: usize,
    pub max_owned: usize,
    pub max_arity: usize,
}

/// Checks the resource bounds that hold on every branch: context-variable occurrences never
/// grow, variable occurrences stay within `k · n0`, a context variable owns at most `k - 1`
/// variables, and no letter exceeds arity `k`.
pub fn check_runtime_invariants(
    eq: &Equation,
    n0: usize,
    k: usize,
    ownership: &Ownership,
    cvar_occ0: &BTreeMap<CVar, usize>,
) -> Result<InvariantReport> {
    let (cocc, vocc) = occurrences(eq);
    for (x, o) in &cocc {
        let before = cvar_occ0.get(x).copied().unwrap_or(0);
        if (o[0] + o[1]) as usize > before {
            return Err(Error::InvariantViolation(format!(
                "`{}` occurs {} times, initially {before}",
                eq.vars.cvar_name(*x),
                o[0] + o[1]
            )));
        }
    }
    let var_occurrences: usize = vocc.values().map(|o| (o[0] + o[1]) as usize).sum();
    if var_occurrences > k * n0 {
        return Err(Error::InvariantViolation(format!("{var_occurrences} variable occurrences exceed {}", k * n0)));
    }
    let counts = ownership.counts(eq);
    let max_owned = counts.values().copied().max().unwrap_or(0);
    if max_owned > k.saturating_sub(1) {
        return Err(Error::InvariantViolation(format!("a context variable owns {max_owned} variables")));
    }
    let max_arity = eq.max_arity();
    if max_arity > k {
        return Err(Error::InvariantViolation(format!("arity {max_arity} exceeds {k}")));
    }
    Ok(InvariantReport { var_occurrences, max_owned, max_arity })
}

type Occ<K> = BTreeMap<K, [i64; 2]>;

fn occurrences(eq: &Equation) -> (Occ<CVar>, Occ<Var>) {
    let (mut c, mut v): (Occ<CVar>, Occ<Var>) = Default::default();
    for (side, t) in [&eq.lhs, &eq.rhs].into_iter().enumerate() {
        for n in t.nodes() {
            match n {
                Term::CVar(x, _) => c.entry(*x).or_default()[side] += 1,
                Term::Var(x) => v.entry(*x).or_default()[side] += 1,
                _ => {}
            }
        }
    }
    (c, v)
}

/// Lower bounds on `|S(u)|` and `|S(v)|` for any solution non-empty on the context variables.
pub fn lower_bound(eq: &Equation) -> [u64; 2] {
    [eq.lhs.weight(), eq.rhs.weight()]
}

fn letter_counts(t: &Term) -> BTreeMap<Letter, i64> {
    let mut out = BTreeMap::new();
    for n in t.nodes() {
        match n {
            Term::App(l, _) => *out.entry(*l).or_default() += 1,
            Term::Pow(l, e, _) => *out.entry(*l).or_default() += *e as i64,
            _ => {}
        }
    }
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Whether `sum d_i w_i + c = 0` has no solution with every `w_i >= lo`.
fn linear_refuted(d: &[i64], c: i64, lo: i64) -> bool {
    if d.iter().all(|&x| x == 0) {
        return c != 0;
    }
    let g = d.iter().fold(0, |g, &x| gcd(g, x));
    if c % g != 0 {
        return true;
    }
    let min_sum: i64 = d.iter().map(|&x| x * lo).sum();
    if d.iter().all(|&x| x >= 0) && c + min_sum > 0 {
        return true;
    }
    d.iter().all(|&x| x <= 0) && c + min_sum < 0
}

/// Over a signature without letters of arity two or more every term is a word read from the
/// root down to its only constant. Returns the letters below the lowest variable, bottom first;
/// the constant comes first when there is no variable at all.
fn bottom_run(t: &Term) -> Vec<Letter> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::App(a, cs) if cs.is_empty() => {
                out.push(*a);
                break;
            }
            Term::App(a, cs) => {
                out.push(*a);
                cur = &cs[0];
            }
            Term::Pow(a, e, c) => {
                out.extend(std::iter::repeat(*a).take((*e).min(1 << 12) as usize));
                cur = c;
            }
            Term::CVar(_, c) => {
                out.clear();
                cur = c;
            }
            Term::Var(_) | Term::Hole => {
                out.clear();
                out.push(Letter(u32::MAX));
                break;
            }
        }
    }
    out.reverse();
    out
}

/// Refutations valid for every solution that is non-empty on the context variables: clashing
/// root letters, different ground sides, different bottom letters over unary signatures, and
/// letter or size counts that no image sizes balance.
pub fn certified_unsat(eq: &Equation) -> bool {
    if eq.lhs.is_ground() && eq.rhs.is_ground() {
        return eq.lhs.expand_powers() != eq.rhs.expand_powers();
    }
    if let (Some(a), Some(b)) = (eq.lhs.root_letter(), eq.rhs.root_letter()) {
        if a != b {
            return true;
        }
    }
    if eq.sig.max_arity() <= 1 {
        let (l, r) = (bottom_run(&eq.lhs), bottom_run(&eq.rhs));
        let unknown = Letter(u32::MAX);
        if l.iter().zip(&r).take_while(|(a, b)| **a != unknown && **b != unknown).any(|(a, b)| a != b) {
            return true;
        }
    }
    let (cocc, vocc) = occurrences(eq);
    let coeff: Vec<[i64; 2]> = cocc.values().chain(vocc.values()).copied().collect();
    let d: Vec<i64> = coeff.iter().map(|o| o[0] - o[1]).collect();
    let (lc, rc) = (letter_counts(&eq.lhs), letter_counts(&eq.rhs));
    let letters: BTreeSet<Letter> = lc.keys().chain(rc.keys()).copied().collect();
    for a in letters {
        let c = lc.get(&a).copied().unwrap_or(0) - rc.get(&a).copied().unwrap_or(0);
        if linear_refuted(&d, c, 0) {
            return true;
        }
    }
    // a context contributes at least one letter besides the hole, a variable at least one node
    let c = lc.values().sum::<i64>() - rc.values().sum::<i64>();
    linear_refuted(&d, c, 1)
}

/// Strips what both sides share at the root. Returns the new equation and a lower bound on the
/// number of solution nodes removed from each side.
pub fn peel(eq: &Equation) -> (Equation, u64) {
    let (mut l, mut r) = (eq.lhs.clone(), eq.rhs.clone());
    let mut removed = 0u64;
    loop {
        let next = match (&l, &r) {
            (Term::App(f, a), Term::App(g, b)) if f == g && !a.is_empty() => {
                let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
                if diff.len() != 1 {
                    break;
                }
                let j = diff[0];
                removed += 1 + (0..a.len()).filter(|&i| i != j).map(|i| a[i].weight()).sum::<u64>();
                (a[j].clone(), b[j].clone())
            }
            (Term::Pow(a, e, s), Term::Pow(b, e2, t)) if a == b => {
                let m = (*e).min(*e2);
                removed += m;
                (Term::pow(*a, e - m, (**s).clone()), Term::pow(*b, e2 - m, (**t).clone()))
            }
            (Term::Pow(a, e, s), Term::App(b, t)) if a == b => {
                removed += 1;
                (Term::pow(*a, e - 1, (**s).clone()), t[0].clone())
            }
            (Term::App(b, t), Term::Pow(a, e, s)) if a == b => {
                removed += 1;
                (t[0].clone(), Term::pow(*a, e - 1, (**s).clone()))
            }
            (Term::CVar(x, s), Term::CVar(y, t)) if x == y => {
                removed += 1;
                ((**s).clone(), (**t).clone())
            }
            _ => break,
        };
        (l, r) = next;
    }
    (eq.with_sides(l, r), removed)
}

fn least_constant(sig: &Signature) -> Option<Letter> {
    sig.by_name_order().into_iter().find(|&l| sig.arity(l) == 0)
}

/// Solves an equation whose sides have at most one node each.
pub fn trivial_solve(eq: &Equation) -> Result<Verdict> {
    if eq.lhs.size() > 1 || eq.rhs.size() > 1 {
        return Err(Error::PreconditionViolated("a side has more than one node".into()));
    }
    let c = least_constant(&eq.sig).ok_or(Error::NoConstant)?;
    let mut s = Substitution::new();
    match (&eq.lhs, &eq.rhs) {
        (Term::App(a, _), Term::App(b, _)) if a != b => return Ok(Verdict::Unsat),
        (Term::Var(x), t @ Term::App(..)) | (t @ Term::App(..), Term::Var(x)) => s.set_var(*x, t.clone()),
        (Term::Var(x), Term::Var(y)) => {
            s.set_var(*x, Term::constant(c));
            s.set_var(*y, Term::constant(c));
        }
        _ => {}
    }
    Ok(Verdict::sat(s, &eq.sig))
}

/// What a stage of a subphase guesses over.
#[derive(Clone, Debug)]
pub enum StageInput {
    PrefSuff(BTreeSet<Letter>),
    Pop(Partition),
    GenPop(BTreeSet<Letter>, BTreeSet<Letter>),
}

/// The alphabets of the parent pop: non-constants of the equation plus an absent letter of each
/// arity from 2 to `k`, and constants of the equation plus an absent constant.
pub fn genpop_alphabets(eq: &Equation) -> (BTreeSet<Letter>, BTreeSet<Letter>) {
    let letters = eq.letters();
    let mut ge1: BTreeSet<Letter> = letters.iter().copied().filter(|&l| eq.sig.arity(l) >= 1).collect();
    let mut g0: BTreeSet<Letter> = letters.iter().copied().filter(|&l| eq.sig.arity(l) == 0).collect();
    for arity in 2..=eq.sig.max_arity() {
        ge1.extend(spare_letter(eq, arity));
    }
    g0.extend(spare_letter(eq, 0));
    (ge1, g0)
}

/// Candidate partitions of the unary letters: the one chosen by the partition search first,
/// then every other one when there are at most `max_letters` letters. The flag tells whether
/// the list is complete.
pub fn partition_candidates(eq: &Equation, seed: u64, max_letters: usize) -> (Vec<Partition>, bool) {
    let letters: Vec<Letter> = unary_letters(eq).into_iter().collect();
    let flat = Flat::from_equation(&eq.lhs, &eq.rhs);
    let pairs = pair_occurrences(&flat, &eq.sig);
    let good = best_partition(&pairs, &letters, seed);
    let mut out = vec![good.clone()];
    if letters.len() > max_letters {
        return (out, false);
    }
    out.extend(all_partitions(&letters).filter(|p| *p != good));
    (out, true)
}

struct Opt<T> {
    val: T,
    cost: [i64; 2],
}

fn times(o: [i64; 2], k: i64) -> [i64; 2] {
    [o[0] * k, o[1] * k]
}

fn fits(c: [i64; 2], bound: [i64; 2]) -> bool {
    c[0] <= bound[0] && c[1] <= bound[1]
}

/// Combinations of one option per list whose summed cost fits `slack`, in lexicographic order.
fn product<T: Clone>(lists: &[Vec<Opt<T>>], slack: [i64; 2], pruned: &mut bool) -> Vec<Vec<T>> {
    let n = lists.len();
    let mut mins = vec![[0i64; 2]; n + 1];
    for i in (0..n).rev() {
        for s in 0..2 {
            mins[i][s] = mins[i + 1][s] + lists[i].iter().map(|o| o.cost[s]).min().unwrap_or(0);
        }
    }
    let mut out = Vec::new();
    let mut cur: Vec<T> = Vec::with_capacity(n);
    fn go<T: Clone>(
        i: usize,
        acc: [i64; 2],
        lists: &[Vec<Opt<T>>],
        mins: &[[i64; 2]],
        slack: [i64; 2],
        cur: &mut Vec<T>,
        out: &mut Vec<Vec<T>>,
        pruned: &mut bool,
    ) {
        if i == lists.len() {
            out.push(cur.clone());
            return;
        }
        for o in &lists[i] {
            let next = [acc[0] + o.cost[0], acc[1] + o.cost[1]];
            if !fits([next[0] + mins[i + 1][0], next[1] + mins[i + 1][1]], slack) {
                *pruned = true;
                continue;
            }
            cur.push(o.val.clone());
            go(i + 1, next, lists, mins, slack, cur, out, pruned);
            cur.pop();
        }
    }
    go(0, [0, 0], lists, &mins, slack, &mut cur, &mut out, pruned);
    out
}

#[derive(Clone)]
enum Entry {
    C(CVar, CvarGuess),
    V(Var, VarGuess),
}

fn sheet_from(stage: Stage, partition: &Partition, entries: &[Entry]) -> GuessSheet {
    let mut g = GuessSheet::new(stage);
    g.partition = partition.clone();
    for e in entries {
        match e {
            Entry::C(x, cg) if *cg != CvarGuess::default() => {
                g.cvars.insert(*x, cg.clone());
            }
            Entry::V(x, vg) if *vg != VarGuess::default() => {
                g.vars.insert(*x, vg.clone());
            }
            _ => {}
        }
    }
    g
}

/// Per-entity cost bound: the slack minus the most the other entities can give back.
fn entity_bound(slack: [i64; 2], give_back: [i64; 2], own: [i64; 2]) -> [i64; 2] {
    [slack[0] + give_back[0] - own[0], slack[1] + give_back[1] - own[1]]
}

fn chains(
    gamma: &BTreeSet<Letter>,
    o: [i64; 2],
    cap: u64,
    bound: [i64; 2],
    pruned: &mut bool,
) -> Vec<Option<(Letter, u64)>> {
    let mut out = vec![None];
    for &a in gamma {
        for l in 1..=cap {
            if !fits(times(o, l as i64 - 1), bound) {
                *pruned = true;
                break;
            }
            out.push(Some((a, l)));
        }
        if fits(times(o, cap as i64), bound) {
            *pruned = true;
        }
    }
    out
}

fn prefsuff_lists(
    eq: &Equation,
    gamma1: &BTreeSet<Letter>,
    cap: u64,
    slack: [i64; 2],
    pruned: &mut bool,
) -> Vec<Vec<Opt<Entry>>> {
    let (cocc, vocc) = occurrences(eq);
    let give_back = cocc.values().fold([0, 0], |a, o| [a[0] + o[0], a[1] + o[1]]);
    let mut lists = Vec::new();
    for (&x, &o) in &cocc {
        let bound = entity_bound(slack, give_back, o);
        let mut opts = Vec::new();
        let ends = chains(gamma1, o, cap, bound, pruned);
        for f in &ends {
            for l in &ends {
                for empty in [false, true] {
                    if empty && (f.is_none() && l.is_none() || matches!((f, l), (Some(a), Some(b)) if a.0 == b.0)) {
                        continue;
                    }
                    let n = f.map_or(0, |p| p.1) + l.map_or(0, |p| p.1);
                    let cost = times(o, n as i64 - empty as i64);
                    if !fits(cost, bound) {
                        *pruned = true;
                        continue;
                    }
                    let cg = CvarGuess {
                        first: f.map(|p| p.0),
                        prefix: f.map(|p| p.1),
                        last: l.map(|p| p.0),
                        suffix: l.map(|p| p.1),
                        empty_after: empty,
                        ..Default::default()
                    };
                    opts.push(Opt { val: Entry::C(x, cg), cost });
                }
            }
        }
        lists.push(opts);
    }
    for (&x, &o) in &vocc {
        let bound = entity_bound(slack, give_back, [0, 0]);
        let opts = chains(gamma1, o, cap, bound, pruned)
            .into_iter()
            .map(|f| {
                let vg = VarGuess { first: f.map(|p| p.0), prefix: f.map(|p| p.1), constant: None };
                Opt { val: Entry::V(x, vg), cost: times(o, f.map_or(0, |p| p.1) as i64) }
            })
            .collect();
        lists.push(opts);
    }
    lists
}

fn pop_lists(eq: &Equation, p: &Partition) -> Vec<Vec<Opt<Entry>>> {
    let (cocc, vocc) = occurrences(eq);
    let mut lists = Vec::new();
    let downs: Vec<Option<Letter>> = std::iter::once(None).chain(p.gamma1.iter().copied().map(Some)).collect();
    let ups: Vec<Option<Letter>> = std::iter::once(None).chain(p.gamma2.iter().copied().map(Some)).collect();
    for (&x, &o) in &cocc {
        let mut opts = Vec::new();
        for &last in &downs {
            for &first in &ups {
                for empty in [false, true] {
                    let pops = last.is_some() as i64 + first.is_some() as i64;
                    if empty && pops == 0 {
                        continue;
                    }
                    let cg = CvarGuess { first, last, empty_after: empty, ..Default::default() };
                    opts.push(Opt { val: Entry::C(x, cg), cost: times(o, pops - empty as i64) });
                }
            }
        }
        lists.push(opts);
    }
    for (&x, &o) in &vocc {
        let opts = ups
            .iter()
            .map(|&first| Opt {
                val: Entry::V(x, VarGuess { first, ..Default::default() }),
                cost: times(o, first.is_some() as i64),
            })
            .collect();
        lists.push(opts);
    }
    lists
}

fn genpop_sheets(
    eq: &Equation,
    ge1: &BTreeSet<Letter>,
    g0: &BTreeSet<Letter>,
    slack: [i64; 2],
    pruned: &mut bool,
) -> Vec<GuessSheet> {
    let (cocc, vocc) = occurrences(eq);
    let consts: Vec<Option<Letter>> = std::iter::once(None).chain(g0.iter().copied().map(Some)).collect();
    let var_lists: Vec<Vec<Opt<Entry>>> = vocc
        .keys()
        .map(|&x| {
            consts
                .iter()
                .map(|&c| Opt { val: Entry::V(x, VarGuess { constant: c, ..Default::default() }), cost: [0, 0] })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for var_choice in product(&var_lists, slack, pruned) {
        let mut substituted = eq.clone();
        for e in &var_choice {
            if let Entry::V(x, VarGuess { constant: Some(c), .. }) = e {
                let t = Term::constant(*c);
                let f = |n: Term| if n == Term::Var(*x) { t.clone() } else { n };
                substituted.lhs = substituted.lhs.map_bottom_up(&mut { f });
                substituted.rhs = substituted.rhs.map_bottom_up(&mut { f });
            }
        }
        let on_const = cvars_on_constants(&substituted, g0);
        let mut lists = Vec::new();
        for (&x, &o) in &cocc {
            let mut opts = vec![Opt { val: Entry::C(x, CvarGuess::default()), cost: [0, 0] }];
            if on_const.contains(&x) {
                for &f in ge1 {
                    let m = eq.sig.arity(f);
                    for hole in 1..=m {
                        let positions: Vec<usize> = (1..=m).filter(|&i| i != hole).collect();
                        let arg_lists: Vec<Vec<Opt<Option<(usize, Letter)>>>> = positions
                            .iter()
                            .map(|&i| consts.iter().map(|c| Opt { val: c.map(|c| (i, c)), cost: [0, 0] }).collect())
                            .collect();
                        for args in product(&arg_lists, [0, 0], &mut false) {
                            for empty in [false, true] {
                                let cg = CvarGuess {
                                    last: Some(f),
                                    hole: Some(hole),
                                    arg_consts: args.iter().flatten().copied().collect(),
                                    empty_after: empty,
                                    ..Default::default()
                                };
                                opts.push(Opt { val: Entry::C(x, cg), cost: times(o, m as i64 - empty as i64) });
                            }
                        }
                    }
                }
            }
            lists.push(opts);
        }
        for cvar_choice in product(&lists, slack, pruned) {
            let mut all = cvar_choice;
            all.extend(var_choice.iter().cloned());
            out.push(sheet_from(Stage::GenPop, &Partition::default(), &all));
        }
    }
    out
}

fn slack_of(eq: &Equation, budget: u64) -> [i64; 2] {
    let lb = lower_bound(eq);
    [budget as i64 - lb[0] as i64, budget as i64 - lb[1] as i64]
}

/// The sheets of one stage that keep the explicit size within `budget`; the flag tells whether
/// any sheet was left out for that reason or for the exponent cap.
fn sheets_within(eq: &Equation, input: &StageInput, cap: u64, budget: u64) -> (Vec<GuessSheet>, bool) {
    let slack = slack_of(eq, budget);
    let mut pruned = false;
    let sheets = match input {
        StageInput::PrefSuff(g1) => {
            let lists = prefsuff_lists(eq, g1, cap, slack, &mut pruned);
            product(&lists, slack, &mut pruned)
                .iter()
                .map(|es| sheet_from(Stage::PrefSuff, &Partition::default(), es))
                .collect()
        }
        StageInput::Pop(p) => product(&pop_lists(eq, p), slack, &mut pruned)
            .iter()
            .map(|es| sheet_from(Stage::Pop, p, es))
            .collect(),
        StageInput::GenPop(ge1, g0) => genpop_sheets(eq, ge1, g0, slack, &mut pruned),
    };
    (sheets, pruned)
}

/// Every guess sheet for one stage in search order: no-pop guesses first, then letters in
/// interned order, exponents ascending and hole positions ascending. Sheets that would make the
/// explicit size exceed `limits.max_solution_budget` are left out.
pub fn enumerate_guess_sheets(eq: &Equation, input: &StageInput, limits: &Limits) -> Vec<GuessSheet> {
    sheets_within(eq, input, limits.exponent_cap, limits.max_solution_budget).0
}

/// A structural key identifying equations up to renaming of compression letters and variables.
fn canonical_key(eq: &Equation) -> Vec<u64> {
    let mut letters: HashMap<Letter, u64> = HashMap::new();
    let mut vars: HashMap<Var, u64> = HashMap::new();
    let mut cvars: HashMap<CVar, u64> = HashMap::new();
    let mut out = Vec::new();
    for t in [&eq.lhs, &eq.rhs] {
        for n in t.nodes() {
            let mut code = |l: Letter| match eq.sig.origin(l) {
                Origin::Input | Origin::Fresh => l.index() as u64,
                _ => {
                    let next = letters.len() as u64;
                    (1 << 40) | (eq.sig.arity(l) as u64) << 32 | *letters.entry(l).or_insert(next)
                }
            };
            match n {
                Term::App(l, _) => out.push(code(*l)),
                Term::Pow(l, e, _) => {
                    let c = code(*l);
                    out.extend([1 << 41 | c, *e]);
                }
                Term::Var(x) => {
                    let next = vars.len() as u64;
                    out.push(2 << 41 | *vars.entry(*x).or_insert(next));
                }
                Term::CVar(x, _) => {
                    let next = cvars.len() as u64;
                    out.push(3 << 41 | *cvars.entry(*x).or_insert(next));
                }
                Term::Hole => out.push(u64::MAX),
            }
        }
        out.push(u64::MAX - 1);
    }
    for arity in 0..=eq.sig.max_arity() {
        out.push(spare_letter(eq, arity).is_some() as u64);
    }
    out
}

#[derive(Clone, Copy, Debug, Default)]
struct Cut {
    /// Some branch was cut by the solution budget or an incomplete enumeration.
    truncated: bool,
    /// Some branch was cut because it returned to a state on the current path.
    cycle: bool,
    limit: Option<Limit>,
}

impl Cut {
    fn merge(&mut self, o: Cut) {
        self.truncated |= o.truncated;
        self.cycle |= o.cycle;
        self.limit = self.limit.or(o.limit);
    }

    fn truncated() -> Cut {
        Cut { truncated: true, ..Default::default() }
    }

    fn limit(l: Limit) -> Cut {
        Cut { limit: Some(l), ..Default::default() }
    }
}

enum Outcome {
    Found(Box<Solution>),
    Failed(Cut),
}

struct Step {
    events: Vec<ReconstructionEvent>,
    log: Option<CompressionLog>,
    trace: Vec<String>,
}

struct Node {
    eq: Equation,
    budget: u64,
    own: Ownership,
    phase: usize,
    sub: usize,
}

#[derive(Clone, Copy)]
enum Next {
    AfterChain,
    AfterPair,
    Subphase,
}

enum Forced {
    Empty(Vec<String>),
    Sheet(Vec<(usize, String)>),
}

struct Search<'a> {
    eq0: &'a Equation,
    limits: &'a Limits,
    eq_bound: usize,
    n0: usize,
    k: usize,
    cvar_occ0: BTreeMap<CVar, usize>,
    memo: HashMap<Vec<u64>, (u64, bool)>,
    on_path: Vec<(Vec<u64>, u64)>,
    path: Vec<Step>,
    stats: SolveStats,
    forced: Option<VecDeque<Forced>>,
}

impl<'a> Search<'a> {
    fn new(eq0: &'a Equation, limits: &'a Limits) -> Self {
        let (cocc, _) = occurrences(eq0);
        Search {
            eq0,
            limits,
            eq_bound: limits.equation_size_bound(eq0),
            n0: eq0.size(),
            k: eq0.sig.max_arity().max(1),
            cvar_occ0: cocc.iter().map(|(x, o)| (*x, (o[0] + o[1]) as usize)).collect(),
            memo: HashMap::new(),
            on_path: Vec::new(),
            path: Vec::new(),
            stats: SolveStats::default(),
            forced: None,
        }
    }

    fn observe(&mut self, eq: &Equation, own: &Ownership) {
        let size = eq.size();
        self.stats.max_equation_size = self.stats.max_equation_size.max(size);
        let ratio = size as f64 / (self.n0 * self.k) as f64;
        if ratio > self.stats.max_size_ratio {
            self.stats.max_size_ratio = ratio;
        }
        if cfg!(debug_assertions) {
            let report = check_runtime_invariants(eq, self.n0, self.k, own, &self.cvar_occ0)
                .unwrap_or_else(|e| panic!("{e} in `{eq}`"));
            self.stats.invariant_checks += 1;
            self.stats.max_var_occurrences = self.stats.max_var_occurrences.max(report.var_occurrences);
            self.stats.max_owned = self.stats.max_owned.max(report.max_owned);
        }
    }

    fn next_forced_sheet(&mut self, eq: &Equation) -> Option<Vec<GuessSheet>> {
        let forced = self.forced.as_mut()?;
        match forced.pop_front() {
            Some(Forced::Sheet(lines)) => {
                let sheet = GuessSheet::parse_lines(lines.iter().map(|(n, l)| (*n, l.as_str())), &eq.sig, &eq.vars);
                Some(sheet.into_iter().collect())
            }
            _ => Some(Vec::new()),
        }
    }

    fn stage_sheets(&mut self, node: &Node, input: &StageInput, cut: &mut Cut) -> Vec<GuessSheet> {
        if let StageInput::Pop(_) = input {
        } else if let Some(s) = self.next_forced_sheet(&node.eq) {
            return s;
        }
        let (sheets, pruned) = sheets_within(&node.eq, input, self.limits.exponent_cap, node.budget);
        cut.truncated |= pruned;
        sheets
    }

    fn run(&mut self, budget: u64) -> Outcome {
        let eq0 = self.eq0;
        let cvars: Vec<CVar> = eq0.used_cvars().into_iter().collect();
        let can_be_nonempty = eq0.sig.letters().any(|l| eq0.sig.arity(l) >= 1);
        let masks: Vec<u64> = match self.forced.as_mut().map(|f| f.pop_front()) {
            Some(Some(Forced::Empty(names))) => {
                let mask = cvars
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| names.iter().any(|n| n == eq0.vars.cvar_name(**x)))
                    .fold(0u64, |m, (i, _)| m | 1 << i);
                vec![mask]
            }
            Some(_) => Vec::new(),
            None if !can_be_nonempty => vec![(1u64 << cvars.len()) - 1],
            None => (0..1u64 << cvars.len()).collect(),
        };
        let mut cut = Cut::default();
        for mask in masks {
            let mut eq = eq0.clone();
            let mut events = Vec::new();
            let mut names = Vec::new();
            for (i, &x) in cvars.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    eq = remove_cvar(&eq, x, &mut events);
                    names.push(eq0.vars.cvar_name(x).to_string());
                }
            }
            let line = if names.is_empty() { "EMPTY".to_string() } else { format!("EMPTY {}", names.join(" ")) };
            self.path.push(Step { events, log: None, trace: vec![line] });
            let out = self.subphase(Node { eq, budget, own: Ownership::default(), phase: 1, sub: 1 });
            self.path.pop();
            match out {
                Outcome::Found(s) => return Outcome::Found(s),
                Outcome::Failed(c) => cut.merge(c),
            }
        }
        Outcome::Failed(cut)
    }

    fn tick(&mut self) -> Option<Cut> {
        self.stats.nodes += 1;
        (self.stats.nodes > self.limits.max_nodes_explored).then(|| Cut::limit(Limit::Nodes))
    }

    fn subphase(&mut self, mut node: Node) -> Outcome {
        if let Some(c) = self.tick() {
            return Outcome::Failed(c);
        }
        let (eq, removed) = peel(&node.eq);
        node.eq = eq;
        node.budget = node.budget.saturating_sub(removed);
        if node.eq.lhs == node.eq.rhs {
            return self.finish(&node, identity_witness(&node.eq));
        }
        if certified_unsat(&node.eq) {
            return Outcome::Failed(Cut::default());
        }
        if lower_bound(&node.eq).into_iter().max().unwrap() > node.budget {
            return Outcome::Failed(Cut::truncated());
        }
        if node.eq.lhs.size() <= 1 && node.eq.rhs.size() <= 1 {
            return match trivial_solve(&node.eq) {
                Ok(Verdict::Sat(s)) => self.finish(&node, s.substitution),
                _ => Outcome::Failed(Cut::default()),
            };
        }
        if node.phase > self.limits.max_phases {
            return Outcome::Failed(Cut::limit(Limit::Phases));
        }
        let key = canonical_key(&node.eq);
        if let Some(&(b, truncated)) = self.memo.get(&key) {
            if !truncated || node.budget <= b {
                return Outcome::Failed(Cut { truncated, ..Default::default() });
            }
        }
        if self.on_path.iter().any(|(k, b)| *k == key && *b >= node.budget) {
            return Outcome::Failed(Cut { cycle: true, ..Default::default() });
        }
        self.on_path.push((key.clone(), node.budget));
        let head = format!("PHASE {} SUBPHASE {}", node.phase, node.sub);
        let gamma1 = unary_letters(&node.eq);
        let mut cut = Cut::default();
        let sheets = self.stage_sheets(&node, &StageInput::PrefSuff(gamma1.clone()), &mut cut);
        for g in sheets {
            let mut events = Vec::new();
            let Ok(eq1) = pref_suff(&gamma1, &node.eq, &g, self.limits.exponent_cap, &mut events) else { continue };
            let trace = vec![head.clone(), sheet_text(&g, &node.eq)];
            match self.advance(&node, eq1, events, EqCompressor::chain(&gamma1), trace, Next::AfterChain) {
                Outcome::Found(s) => {
                    self.on_path.pop();
                    return Outcome::Found(s);
                }
                Outcome::Failed(c) => cut.merge(c),
            }
        }
        self.on_path.pop();
        if cut.limit.is_none() && !cut.cycle {
            let e = self.memo.entry(key).or_insert((node.budget, cut.truncated));
            if e.1 && (!cut.truncated || node.budget > e.0) {
                *e = (node.budget, cut.truncated);
            }
        }
        Outcome::Failed(cut)
    }

    fn after_chain(&mut self, node: Node) -> Outcome {
        let mut cut = Cut::default();
        let candidates: Vec<(Partition, Vec<GuessSheet>)> = match self.next_forced_sheet(&node.eq) {
            Some(sheets) => sheets.into_iter().map(|g| (g.partition.clone(), vec![g])).collect(),
            None => {
                let (parts, complete) = partition_candidates(&node.eq, self.limits.random_seed, 12);
                if !complete {
                    cut.truncated = true;
                }
                parts.into_iter().map(|p| (p, Vec::new())).collect()
            }
        };
        for (p, forced) in candidates {
            let sheets =
                if self.forced.is_some() { forced } else { self.stage_sheets(&node, &StageInput::Pop(p.clone()), &mut cut) };
            for g in sheets {
                let mut events = Vec::new();
                let Ok(eq3) = pop(&p, &node.eq, &g, &mut events) else { continue };
                let trace = vec![sheet_text(&g, &node.eq)];
                match self.advance(&node, eq3, events, EqCompressor::pair(&p), trace, Next::AfterPair) {
                    Outcome::Found(s) => return Outcome::Found(s),
                    Outcome::Failed(c) => cut.merge(c),
                }
            }
        }
        Outcome::Failed(cut)
    }

    fn after_pair(&mut self, node: Node) -> Outcome {
        let (ge1, g0) = genpop_alphabets(&node.eq);
        let mut cut = Cut::default();
        let sheets = self.stage_sheets(&node, &StageInput::GenPop(ge1.clone(), g0.clone()), &mut cut);
        for g in sheets {
            let mut events = Vec::new();
            let Ok(eq5) = gen_pop(&ge1, &g0, &node.eq, &g, &mut events) else { continue };
            let trace = vec![sheet_text(&g, &eq5)];
            match self.advance(&node, eq5, events, EqCompressor::leaf(&ge1, &g0), trace, Next::Subphase) {
                Outcome::Found(s) => return Outcome::Found(s),
                Outcome::Failed(c) => cut.merge(c),
            }
        }
        Outcome::Failed(cut)
    }

    fn advance(
        &mut self,
        node: &Node,
        eq: Equation,
        events: Vec<ReconstructionEvent>,
        mut comp: EqCompressor,
        mut trace: Vec<String>,
        next: Next,
    ) -> Outcome {
        if let Some(c) = self.tick() {
            return Outcome::Failed(c);
        }
        let mut own = node.own.clone();
        own.record(&events);
        self.observe(&eq, &own);
        if lower_bound(&eq).into_iter().max().unwrap() > node.budget {
            return Outcome::Failed(Cut::truncated());
        }
        if eq.size() > self.eq_bound {
            return Outcome::Failed(Cut::limit(Limit::EquationSize));
        }
        let mut log = CompressionLog::new(&eq.sig);
        let Ok(eq2) = comp.apply_eq(&eq, &mut log) else {
            debug_assert!(false, "compression failed on `{eq}`");
            return Outcome::Failed(Cut::truncated());
        };
        self.observe(&eq2, &own);
        let (before, after) = (lower_bound(&eq), lower_bound(&eq2));
        let saved = (before[0] - after[0]).max(before[1] - after[1]);
        let budget = node.budget.saturating_sub(saved);
        if certified_unsat(&eq2) {
            return Outcome::Failed(Cut::default());
        }
        if after.into_iter().max().unwrap() > budget {
            return Outcome::Failed(Cut::truncated());
        }
        trace.extend(log.to_text(&eq2.sig).lines().map(str::to_string));
        trace.push("END".into());
        self.path.push(Step { events, log: Some(log), trace });
        let (phase, sub) = match (next, node.sub) {
            (Next::Subphase, 1) => (node.phase, 2),
            (Next::Subphase, _) => (node.phase + 1, 1),
            _ => (node.phase, node.sub),
        };
        let child = Node { eq: eq2, budget, own, phase, sub };
        let out = match next {
            Next::AfterChain => self.after_chain(child),
            Next::AfterPair => self.after_pair(child),
            Next::Subphase => self.subphase(child),
        };
        self.path.pop();
        out
    }

    /// Turns a solution of the branch's last equation into one of the input equation.
    fn finish(&mut self, node: &Node, mut s: Substitution) -> Outcome {
        let eq0 = self.eq0;
        let c = least_constant(&eq0.sig).expect("normalized signature has a constant");
        for x in node.eq.vars.vars() {
            s.vars.entry(x).or_insert_with(|| Term::constant(c));
        }
        let events: Vec<ReconstructionEvent> = self.path.iter().flat_map(|st| st.events.iter().cloned()).collect();
        let back = replay_solution_backward(&events, &s);
        let mut log = CompressionLog::new(&eq0.sig);
        for st in &self.path {
            if let Some(l) = &st.log {
                log.extend_from(l);
            }
        }
        let mut compressed = Substitution::new();
        for x in eq0.used_cvars() {
            compressed.set_cvar(x, back.cvar(x).cloned().unwrap_or(Term::Hole));
        }
        for x in eq0.used_vars() {
            compressed.set_var(x, back.var(x).cloned().unwrap_or_else(|| Term::constant(c)));
        }
        let sig = &node.eq.sig;
        let mut substitution = Substitution::new();
        for (x, t) in &compressed.cvars {
            match decompress(&log, t, sig) {
                Ok(t) => substitution.set_cvar(*x, t.expand_powers()),
                Err(_) => return self.reject(),
            }
        }
        for (x, t) in &compressed.vars {
            match decompress(&log, t, sig) {
                Ok(t) => substitution.set_var(*x, t.expand_powers()),
                Err(_) => return self.reject(),
            }
        }
        if !is_solution(eq0, &substitution).unwrap_or(false) {
            return self.reject();
        }
        self.stats.phases = node.phase;
        let trace = self.path.iter().flat_map(|st| st.trace.iter().cloned()).collect();
        Outcome::Found(Box::new(Solution { substitution, compressed, log, sig: sig.clone(), trace }))
    }

    fn reject(&self) -> Outcome {
        debug_assert!(false, "reconstructed substitution does not solve the input");
        Outcome::Failed(Cut::truncated())
    }
}

fn sheet_text(g: &GuessSheet, eq: &Equation) -> String {
    g.to_text(&eq.sig, &eq.vars).trim_end().to_string()
}

/// Any substitution solves `t = t`; contexts get the least unary letter when there is one.
fn identity_witness(eq: &Equation) -> Substitution {
    let mut s = Substitution::new();
    let unary = eq.sig.by_name_order().into_iter().find(|&l| eq.sig.arity(l) == 1);
    for x in eq.used_cvars() {
        s.set_cvar(x, unary.map_or(Term::Hole, |g| Term::unary(g, Term::Hole)));
    }
    s
}

pub fn solve(eq0: &Equation, limits: &Limits) -> Verdict {
    solve_with_stats(eq0, limits).0
}

pub fn solve_with_stats(eq0: &Equation, limits: &Limits) -> (Verdict, SolveStats) {
    let mut search = Search::new(eq0, limits);
    let start = lower_bound(eq0).into_iter().max().unwrap().max(1);
    let mut cut = Cut::default();
    for budget in start..=limits.max_solution_budget.max(start) {
        search.stats.budget = budget;
        match search.run(budget) {
            Outcome::Found(s) => return (Verdict::Sat(s), search.stats),
            Outcome::Failed(c) => {
                cut = c;
                if !c.truncated || c.limit == Some(Limit::Nodes) {
                    break;
                }
            }
        }
    }
    let verdict = match cut.limit {
        Some(l) => Verdict::Unknown(l),
        None if cut.truncated => Verdict::Unknown(Limit::SolutionBudget),
        None => Verdict::Unsat,
    };
    (verdict, search.stats)
}

/// Re-runs the single branch recorded in a trace.
pub fn replay(eq0: &Equation, trace: &str, limits: &Limits) -> Result<Verdict> {
    let mut items = VecDeque::new();
    let mut lines = trace.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).peekable();
    while let Some((no, line)) = lines.next() {
        let head = line.split_whitespace().next().unwrap_or("");
        match head {
            "EMPTY" => items.push_back(Forced::Empty(line.split_whitespace().skip(1).map(str::to_string).collect())),
            "STAGE" => {
                let mut sheet = vec![(no, line.to_string())];
                while let Some(&(n, l)) = lines.peek() {
                    let h = l.split_whitespace().next().unwrap_or("");
                    if matches!(h, "STAGE" | "PHASE" | "CHAIN" | "PAIR" | "LEAF" | "EMPTY" | "END") {
                        break;
                    }
                    sheet.push((n, l.to_string()));
                    lines.next();
                }
                items.push_back(Forced::Sheet(sheet));
            }
            "" | "PHASE" | "CHAIN" | "PAIR" | "LEAF" | "END" => {}
            _ if head.starts_with('#') => {}
            _ => return Err(Error::Syntax { line: no, col: 1, msg: format!("unexpected trace line `{line}`") }),
        }
    }
    let relaxed = Limits { max_phases: usize::MAX / 2, ..limits.clone() };
    let mut search = Search::new(eq0, &relaxed);
    search.forced = Some(items);
    Ok(match search.run(u64::MAX / 4) {
        Outcome::Found(s) => Verdict::Sat(s),
        Outcome::Failed(c) => Verdict::Unknown(c.limit.unwrap_or(Limit::SolutionBudget)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Equation {
        Equation::parse(text).unwrap()
    }

    fn small() -> Limits {
        Limits { max_solution_budget: 8, ..Limits::default() }
    }

    #[test]
    fn trivial_cases() {
        let eq = parse("sig c/0 d/0\nvar x\neq c = c");
        assert!(trivial_solve(&eq).unwrap().is_sat());
        let eq = parse("sig c/0 d/0\nvar x\neq c = d");
        assert!(matches!(trivial_solve(&eq).unwrap(), Verdict::Unsat));
        let eq = parse("sig c/0 d/0\nvar x\neq x = d");
        let Verdict::Sat(s) = trivial_solve(&eq).unwrap() else { panic!() };
        assert_eq!(eq.substitution_text(&s.substitution), "x := d\n");
        let eq = parse("sig g/1 c/0\neq g(c) = c");
        assert!(matches!(trivial_solve(&eq), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn two_contexts() {
        let eq = parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)");
        let v = solve(&eq, &small());
        let s = v.solution().expect("sat");
        assert!(crate::equation::verify_solution(&eq, &s.substitution).unwrap());
        let u = s.substitution.apply(&eq.lhs, &eq.vars).unwrap();
        assert_eq!(u.size(), 3);
    }

    #[test]
    fn small_verdicts() {
        let eq = parse("sig a/1 b/1 c/0\neq a(c) = b(c)");
        assert!(matches!(solve(&eq, &small()), Verdict::Unsat));
        let eq = parse("sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))");
        let v = solve(&eq, &small());
        assert!(is_solution(&eq, &v.solution().unwrap().substitution).unwrap());
        let eq = parse("sig a/1 c/0\nvar x\neq a(x) = x");
        assert!(matches!(solve(&eq, &small()), Verdict::Unsat));
    }

    #[test]
    fn refutation_rules() {
        assert!(certified_unsat(&parse("sig a/1 b/1 c/0\ncvar X\neq a(X(c)) = X(b(c))")));
        assert!(!certified_unsat(&parse("sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))")));
        assert!(certified_unsat(&parse("sig f/2 c/0\nvar x\neq f(x, x) = x")));
        let (e, n) = peel(&parse("sig f/2 g/1 c/0\nvar x\ncvar X\neq X(f(c, g(x))) = X(f(c, c))"));
        assert_eq!(e.to_string(), "g(x) = c");
        assert_eq!(n, 3);
    }

    #[test]
    fn sheet_enumeration() {
        let eq = parse("sig c/0\neq c = c");
        let sheets = enumerate_guess_sheets(&eq, &StageInput::PrefSuff(BTreeSet::new()), &Limits::default());
        assert_eq!(sheets.len(), 1);
        assert!(sheets[0].cvars.is_empty() && sheets[0].vars.is_empty());

        let eq = parse("sig a/1 c/0\ncvar X\neq X(c) = a(c)");
        let a = eq.sig.lookup("a").unwrap();
        let p = Partition::new([a], []);
        let sheets = enumerate_guess_sheets(&eq, &StageInput::Pop(p), &Limits::default());
        let texts: Vec<String> = sheets.iter().map(|g| sheet_text(g, &eq)).collect();
        assert_eq!(
            texts,
            vec!["STAGE pop\nPARTITION a |", "STAGE pop\nPARTITION a |\nX last a", "STAGE pop\nPARTITION a |\nX last a\nX empty"]
        );

        let limits = Limits { exponent_cap: 3, max_solution_budget: 100, ..Limits::default() };
        let sheets = enumerate_guess_sheets(&eq, &StageInput::PrefSuff([a].into()), &limits);
        assert!(sheets.iter().all(|g| g.cvars.values().all(|c| c.prefix.unwrap_or(0) <= 3)));
        let prefixes: BTreeSet<u64> = sheets.iter().filter_map(|g| g.cvars.values().next()?.prefix).collect();
        assert_eq!(prefixes, [1, 2, 3].into());
    }

    #[test]
    fn trace_replays() {
        let eq = parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)");
        let v = solve(&eq, &small());
        let s = v.solution().unwrap();
        let text = s.trace.join("\n");
        let again = replay(&eq, &text, &small()).unwrap();
        assert_eq!(again.solution().unwrap().substitution, s.substitution);
    }

    #[test]
    fn invariants_on_two_contexts() {
        let eq = parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)");
        let (_, stats) = solve_with_stats(&eq, &small());
        assert!(stats.invariant_checks > 0);
        assert!(stats.max_owned <= 1);
    }
}
