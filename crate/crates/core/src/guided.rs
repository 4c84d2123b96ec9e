//! The branch of the main loop that follows a known solution: every guess sheet is extracted
//! from the solution, which is carried through each transformation and compressed along with
//! the equation. Used to check that uncrossing really removes crossings and that a phase
//! shrinks the solution.

use std::collections::BTreeSet;

use crate::compress::{all_partitions, leaf_comp, pair_comp, CompressionLog, Partition};
use crate::equation::{
    chains_are_crossing, is_solution, parent_leaf_is_crossing, partition_is_crossing, simplify_solution, Equation,
};
use crate::error::{Error, Result};
use crate::ncr::{unary_letters, EqCompressor};
use crate::solver::genpop_alphabets;
use crate::term::{Letter, Signature, Substitution, Term};
use crate::uncross::{
    carry_forward, extract_gen_pop, extract_pop, extract_pref_suff, gen_pop, pop, pref_suff, remove_cvar, Stage,
};

/// What one subphase of the guided branch did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubphaseReport {
    pub phase: usize,
    /// `|S(u)|` at the start and at the end.
    pub solution_before: usize,
    pub solution_after: usize,
    pub equation_after: usize,
    /// Stages after which a targeted crossing remained.
    pub still_crossing: Vec<Stage>,
    /// Stages after which the carried solution failed to solve the equation or `S(u)` changed
    /// in a way the stage does not allow.
    pub broken: Vec<Stage>,
}

impl SubphaseReport {
    pub fn is_clean(&self) -> bool {
        self.still_crossing.is_empty() && self.broken.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuidedReport {
    pub subphases: Vec<SubphaseReport>,
    /// Phases begun before both sides had at most one node.
    pub phases: usize,
    pub reached_trivial: bool,
    pub max_equation_size: usize,
}

fn apply(s: &Substitution, eq: &Equation) -> Result<Term> {
    Ok(s.apply(&eq.lhs, &eq.vars)?.expand_powers())
}

fn compress_images(
    comp: &mut EqCompressor,
    s: &Substitution,
    sig: &mut Signature,
    log: &mut CompressionLog,
) -> Result<Substitution> {
    let mut out = Substitution::new();
    for (x, t) in &s.cvars {
        out.set_cvar(*x, comp.apply_term(t, sig, log)?);
    }
    for (x, t) in &s.vars {
        out.set_var(*x, comp.apply_term(t, sig, log)?);
    }
    Ok(out)
}

/// Compresses the equation, the solution images and `S(u)` with one table. Returns the new
/// equation and solution, and whether the new solution instantiates to the compressed `S(u)`.
fn compress_all(
    mut comp: EqCompressor,
    eq: &Equation,
    s: &Substitution,
    log: &mut CompressionLog,
) -> Result<(Equation, Substitution, bool)> {
    let mut out = comp.apply_eq(eq, log)?;
    let mut sig = out.sig.clone();
    let images = compress_images(&mut comp, s, &mut sig, log)?;
    let su = comp.apply_term(&apply(s, eq)?, &mut sig, log)?;
    out.sig = sig;
    let ok = is_solution(&out, &images)? && apply(&images, &out)? == su.expand_powers();
    Ok((out, images, ok))
}

/// The partition that shrinks `t` most under pair and then leaf compression.
fn best_partition_for(t: &Term, letters: &[Letter], sig: &Signature) -> Result<Partition> {
    let mut best: Option<(usize, Partition)> = None;
    for p in all_partitions(letters) {
        let mut sig = sig.clone();
        let mut log = CompressionLog::new(&sig);
        let t1 = pair_comp(&p, t, &mut sig, &mut log)?;
        let used = t1.letters();
        let g0: BTreeSet<Letter> = used.iter().copied().filter(|&l| sig.arity(l) == 0).collect();
        let ge1: BTreeSet<Letter> = used.iter().copied().filter(|&l| sig.arity(l) > 0).collect();
        let size = leaf_comp(&ge1, &g0, &t1, &mut sig, &mut log)?.size();
        if best.as_ref().map_or(true, |(b, _)| size < *b) {
            best = Some((size, p));
        }
    }
    Ok(best.map(|(_, p)| p).unwrap_or_default())
}

/// Removes the context variables that `s` maps to the hole; the result is non-empty on the rest.
pub fn remove_empty_cvars(eq0: &Equation, s: &Substitution) -> Result<(Equation, Substitution)> {
    if !is_solution(eq0, s)? {
        return Err(Error::NotASolution);
    }
    let mut eq = eq0.clone();
    let mut events = Vec::new();
    for x in eq0.used_cvars() {
        if s.cvar(x) == Some(&Term::Hole) {
            eq = remove_cvar(&eq, x, &mut events);
        }
    }
    let s = carry_forward(&events, s)?;
    Ok((eq, s))
}

/// Runs the branch that follows `s`, a solution of `eq0` that may empty some context variables,
/// for at most `max_phases` phases. Partitions are chosen to shrink the solution most; with more
/// than 12 unary letters the letters are split in half by index.
pub fn guided_run(eq0: &Equation, s: &Substitution, max_phases: usize) -> Result<GuidedReport> {
    let (mut eq, mut s) = remove_empty_cvars(eq0, s)?;
    let mut log = CompressionLog::new(&eq0.sig);
    let mut report = GuidedReport { subphases: Vec::new(), phases: 0, reached_trivial: false, max_equation_size: eq.size() };
    let trivial = |eq: &Equation| eq.lhs.size() <= 1 && eq.rhs.size() <= 1;
    'phases: while !trivial(&eq) {
        if report.phases == max_phases {
            break;
        }
        report.phases += 1;
        for _ in 0..2 {
            let (next, next_s, sub) = guided_subphase(&eq, &s, report.phases, &mut log)?;
            report.max_equation_size = report.max_equation_size.max(next.size());
            report.subphases.push(sub);
            eq = next;
            s = next_s;
            if trivial(&eq) {
                break 'phases;
            }
        }
    }
    report.reached_trivial = trivial(&eq);
    Ok(report)
}

/// One subphase along the solution `s` of `eq`, which must be non-empty on its context
/// variables.
pub fn guided_subphase(
    eq: &Equation,
    s: &Substitution,
    phase: usize,
    log: &mut CompressionLog,
) -> Result<(Equation, Substitution, SubphaseReport)> {
    let before = apply(s, eq)?.size();
    let mut rep = SubphaseReport {
        phase,
        solution_before: before,
        solution_after: before,
        equation_after: 0,
        still_crossing: Vec::new(),
        broken: Vec::new(),
    };
    let s = simplify_solution(eq, s)?;

    let gamma1 = unary_letters(eq);
    let g = extract_pref_suff(eq, &s, &gamma1);
    let mut ev = Vec::new();
    let eq1 = pref_suff(&gamma1, eq, &g, u64::MAX, &mut ev)?;
    let s1 = carry_forward(&ev, &s)?;
    if chains_are_crossing(&eq1, &s1, &gamma1) {
        rep.still_crossing.push(Stage::PrefSuff);
    }
    if !is_solution(&eq1, &s1)? || apply(&s1, &eq1)? != apply(&s, eq)? {
        rep.broken.push(Stage::PrefSuff);
    }
    let (eq2, s2, ok) = compress_all(EqCompressor::chain(&gamma1), &eq1, &s1, log)?;
    if !ok {
        rep.broken.push(Stage::PrefSuff);
    }

    let s2 = simplify_solution(&eq2, &s2)?;
    let letters: Vec<Letter> = unary_letters(&eq2).into_iter().collect();
    let p = if letters.len() <= 12 {
        best_partition_for(&apply(&s2, &eq2)?, &letters, &eq2.sig)?
    } else {
        Partition::new(letters.iter().copied().take(letters.len() / 2), letters.iter().copied().skip(letters.len() / 2))
    };
    let g = extract_pop(&eq2, &s2, &p);
    let mut ev = Vec::new();
    let eq3 = pop(&p, &eq2, &g, &mut ev)?;
    let s3 = carry_forward(&ev, &s2)?;
    if partition_is_crossing(&eq3, &s3, &p.gamma1, &p.gamma2) {
        rep.still_crossing.push(Stage::Pop);
    }
    if !is_solution(&eq3, &s3)? || apply(&s3, &eq3)? != apply(&s2, &eq2)? {
        rep.broken.push(Stage::Pop);
    }
    let (eq4, s4, ok) = compress_all(EqCompressor::pair(&p), &eq3, &s3, log)?;
    if !ok {
        rep.broken.push(Stage::Pop);
    }

    let s4 = simplify_solution(&eq4, &s4)?;
    let (ge1, g0) = genpop_alphabets(&eq4);
    let g = extract_gen_pop(&eq4, &s4, &ge1, &g0);
    let mut ev = Vec::new();
    let eq5 = gen_pop(&ge1, &g0, &eq4, &g, &mut ev)?;
    let s5 = carry_forward(&ev, &s4)?;
    if parent_leaf_is_crossing(&eq5, &s5, &ge1, &g0) {
        rep.still_crossing.push(Stage::GenPop);
    }
    if !is_solution(&eq5, &s5)? || apply(&s5, &eq5)? != apply(&s4, &eq4)? {
        rep.broken.push(Stage::GenPop);
    }
    let (eq6, s6, ok) = compress_all(EqCompressor::leaf(&ge1, &g0), &eq5, &s5, log)?;
    if !ok {
        rep.broken.push(Stage::GenPop);
    }
    rep.solution_after = apply(&s6, &eq6)?.size();
    rep.equation_after = eq6.size();
    Ok((eq6, s6, rep))
}

/// `⌈log_{4/3} n⌉`.
pub fn phase_bound(n: usize) -> usize {
    let mut k = 0;
    let mut x = 1.0f64;
    while x < n as f64 {
        x *= 4.0 / 3.0;
        k += 1;
    }
    k
}
