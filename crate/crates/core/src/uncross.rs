//! Uncrossing transformations driven by explicit guess sheets: popping letters out of
//! (context) variables, popping whole chain prefixes and suffixes, and popping a parent letter
//! with its side arguments out of a context variable.
//!
//! Every transformation records [`ReconstructionEvent`]s. Replaying them backward turns a
//! solution of the new equation into one of the old equation; carrying them forward turns a
//! solution of the old equation that agrees with the guesses into one of the new equation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::compress::Partition;
use crate::equation::{first_letter, hole_position, last_letter, Equation};
use crate::error::{Error, Result};
use crate::term::{fill_hole, CVar, Letter, Lexer, Signature, Substitution, Term, Tok, Var, VarTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    PrefSuff,
    Pop,
    GenPop,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::PrefSuff => "prefsuff",
            Stage::Pop => "pop",
            Stage::GenPop => "genpop",
        }
    }
}

/// Guesses about one context variable's image. Which fields matter depends on the stage:
/// prefix and suffix pops use `first`/`prefix` and `last`/`suffix`, letter pops use `last` and
/// `first`, and parent pops use `last`, `hole` and `arg_consts`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CvarGuess {
    pub first: Option<Letter>,
    pub last: Option<Letter>,
    pub prefix: Option<u64>,
    pub suffix: Option<u64>,
    pub hole: Option<usize>,
    /// Constants guessed for the fresh side-argument variables, by 1-based position.
    pub arg_consts: BTreeMap<usize, Letter>,
    /// The image is the bare hole once this stage's pops are done.
    pub empty_after: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct VarGuess {
    pub first: Option<Letter>,
    pub prefix: Option<u64>,
    pub constant: Option<Letter>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GuessSheet {
    pub stage: Stage,
    pub partition: Partition,
    pub cvars: BTreeMap<CVar, CvarGuess>,
    pub vars: BTreeMap<Var, VarGuess>,
}

impl GuessSheet {
    pub fn new(stage: Stage) -> Self {
        GuessSheet { stage, partition: Partition::default(), cvars: BTreeMap::new(), vars: BTreeMap::new() }
    }

    pub fn cvar(&mut self, x: CVar) -> &mut CvarGuess {
        self.cvars.entry(x).or_default()
    }

    pub fn var(&mut self, x: Var) -> &mut VarGuess {
        self.vars.entry(x).or_default()
    }

    /// One line per guess, starting with the stage line.
    pub fn to_text(&self, sig: &Signature, vt: &VarTable) -> String {
        let mut s = format!("STAGE {}\n", self.stage.name());
        if self.stage == Stage::Pop {
            let _ = writeln!(s, "{}", self.partition.to_line(sig));
        }
        for (x, g) in &self.cvars {
            let n = vt.cvar_name(*x);
            match self.stage {
                Stage::PrefSuff => {
                    if let (Some(a), Some(l)) = (g.first, g.prefix) {
                        let _ = writeln!(s, "{n} prefix {} {l}", sig.name(a));
                    }
                    if let (Some(b), Some(r)) = (g.last, g.suffix) {
                        let _ = writeln!(s, "{n} suffix {} {r}", sig.name(b));
                    }
                }
                Stage::Pop => {
                    if let Some(a) = g.last {
                        let _ = writeln!(s, "{n} last {}", sig.name(a));
                    }
                    if let Some(b) = g.first {
                        let _ = writeln!(s, "{n} first {}", sig.name(b));
                    }
                }
                Stage::GenPop => {
                    if let Some(f) = g.last {
                        match g.hole {
                            Some(i) => {
                                let _ = writeln!(s, "{n} last {} hole {i}", sig.name(f));
                            }
                            None => {
                                let _ = writeln!(s, "{n} last {}", sig.name(f));
                            }
                        }
                    }
                    for (i, a) in &g.arg_consts {
                        let _ = writeln!(s, "{n} arg {i} {}", sig.name(*a));
                    }
                }
            }
            if g.empty_after {
                let _ = writeln!(s, "{n} empty");
            }
        }
        for (x, g) in &self.vars {
            let n = vt.var_name(*x);
            if let (Some(a), Some(l)) = (g.first, g.prefix) {
                let _ = writeln!(s, "{n} prefix {} {l}", sig.name(a));
            } else if let Some(b) = g.first {
                let _ = writeln!(s, "{n} first {}", sig.name(b));
            }
            if let Some(a) = g.constant {
                let _ = writeln!(s, "{n} const {}", sig.name(a));
            }
        }
        s
    }

    /// Parses the lines written by [`GuessSheet::to_text`]; the first line must be the stage.
    pub fn parse_lines<'a>(lines: impl IntoIterator<Item = (usize, &'a str)>, sig: &Signature, vt: &VarTable) -> Result<Self> {
        let mut it = lines.into_iter();
        let (no, first) = it.next().ok_or_else(|| Error::Syntax { line: 1, col: 1, msg: "empty guess sheet".into() })?;
        let mut lx = Lexer::new(first, no);
        let stage = match (lx.next_tok(), lx.next_tok()) {
            (Some(Tok::Name(k)), Some(Tok::Name(st))) if k == "STAGE" => match st.as_str() {
                "prefsuff" => Stage::PrefSuff,
                "pop" => Stage::Pop,
                "genpop" => Stage::GenPop,
                _ => return Err(lx.error(format!("unknown stage `{st}`"))),
            },
            _ => return Err(lx.error("expected `STAGE`")),
        };
        let mut sheet = GuessSheet::new(stage);
        for (no, line) in it {
            let mut lx = Lexer::new(line, no);
            let mut words = Vec::new();
            while let Some(t) = lx.next_tok() {
                words.push(t);
            }
            let name = |t: &Tok| match t {
                Tok::Name(n) => Some(n.clone()),
                _ => None,
            };
            let letter = |t: Option<&Tok>| -> Result<Letter> {
                let n = t.and_then(name).ok_or_else(|| lx.error("expected a letter"))?;
                sig.lookup(&n).ok_or(Error::UnknownLetter(n))
            };
            let int = |t: Option<&Tok>| -> Result<u64> {
                match t {
                    Some(Tok::Int(i)) => Ok(*i),
                    _ => Err(lx.error("expected an integer")),
                }
            };
            let Some(head) = words.first().and_then(name) else {
                if words.is_empty() {
                    continue;
                }
                return Err(lx.error("expected a name"));
            };
            if head == "PARTITION" {
                let mut top = true;
                for w in &words[1..] {
                    match w {
                        Tok::Other('|') => top = false,
                        _ => {
                            let l = letter(Some(w))?;
                            if top {
                                sheet.partition.gamma1.insert(l);
                            } else {
                                sheet.partition.gamma2.insert(l);
                            }
                        }
                    }
                }
                continue;
            }
            let kw = words.get(1).and_then(name).ok_or_else(|| lx.error("expected a guess keyword"))?;
            let mut rest = &words[2..];
            let empty_tail = rest.last().and_then(name).as_deref() == Some("empty") && kw != "empty";
            if empty_tail {
                rest = &rest[..rest.len() - 1];
            }
            if let Some(x) = vt.cvar(&head) {
                let g = sheet.cvar(x);
                match kw.as_str() {
                    "prefix" => {
                        g.first = Some(letter(rest.first())?);
                        g.prefix = Some(int(rest.get(1))?);
                    }
                    "suffix" => {
                        g.last = Some(letter(rest.first())?);
                        g.suffix = Some(int(rest.get(1))?);
                    }
                    "first" => g.first = Some(letter(rest.first())?),
                    "last" => {
                        g.last = Some(letter(rest.first())?);
                        if rest.get(1).and_then(name).as_deref() == Some("hole") {
                            g.hole = Some(int(rest.get(2))? as usize);
                        }
                    }
                    "arg" => {
                        let i = int(rest.first())? as usize;
                        g.arg_consts.insert(i, letter(rest.get(1))?);
                    }
                    "empty" => g.empty_after = true,
                    other => return Err(lx.error(format!("unknown guess `{other}`"))),
                }
                if empty_tail {
                    g.empty_after = true;
                }
            } else if let Some(x) = vt.var(&head) {
                let g = sheet.var(x);
                match kw.as_str() {
                    "prefix" => {
                        g.first = Some(letter(rest.first())?);
                        g.prefix = Some(int(rest.get(1))?);
                    }
                    "first" => g.first = Some(letter(rest.first())?),
                    "const" => g.constant = Some(letter(rest.first())?),
                    other => return Err(lx.error(format!("unknown guess `{other}`"))),
                }
            } else {
                return Err(Error::UndefinedVariable(head));
            }
        }
        Ok(sheet)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ReconstructionEvent {
    /// Every `X` became `c X`; `c` is a context chunk.
    PrependToCvar(CVar, Term),
    /// Every `X` became `X c`.
    AppendToCvar(CVar, Term),
    /// Every `X(t)` became `t`.
    RemoveEmptyCvar(CVar),
    /// Every `x` became the constant.
    SubstVarConst(Var, Letter),
    /// Every `X` became `X f(x1, .., _, .., xm)` with the hole at `hole` and `vars` at the other
    /// positions in order.
    GenPopDown { cvar: CVar, letter: Letter, hole: usize, vars: Vec<Var> },
    /// Every `x` became `c x`.
    PrependToVar(Var, Term),
}

fn chunk_context(f: Letter, hole: usize, vars: &[Var]) -> Term {
    let mut vs = vars.iter();
    let m = vars.len() + 1;
    Term::App(f, (1..=m).map(|i| if i == hole { Term::Hole } else { Term::Var(*vs.next().unwrap()) }).collect())
}

impl ReconstructionEvent {
    pub fn to_line(&self, sig: &Signature, vt: &VarTable) -> String {
        let show = |t: &Term| t.display(sig, vt).to_string();
        match self {
            ReconstructionEvent::PrependToCvar(x, c) => format!("PREPEND {} {}", vt.cvar_name(*x), show(c)),
            ReconstructionEvent::AppendToCvar(x, c) => format!("APPEND {} {}", vt.cvar_name(*x), show(c)),
            ReconstructionEvent::RemoveEmptyCvar(x) => format!("REMOVE {}", vt.cvar_name(*x)),
            ReconstructionEvent::SubstVarConst(x, a) => format!("SUBST {} {}", vt.var_name(*x), sig.name(*a)),
            ReconstructionEvent::GenPopDown { cvar, letter, hole, vars } => {
                format!("POPDOWN {} {}", vt.cvar_name(*cvar), show(&chunk_context(*letter, *hole, vars)))
            }
            ReconstructionEvent::PrependToVar(x, c) => format!("PREPEND {} {}", vt.var_name(*x), show(c)),
        }
    }
}

fn map_cvar(t: &Term, x: CVar, f: &impl Fn(Term) -> Term) -> Term {
    t.map_bottom_up(&mut |n| match n {
        Term::CVar(y, arg) if y == x => f(Term::CVar(y, arg)),
        other => other,
    })
}

fn map_var(t: &Term, x: Var, f: &impl Fn(Term) -> Term) -> Term {
    t.map_bottom_up(&mut |n| match n {
        Term::Var(y) if y == x => f(n),
        other => other,
    })
}

fn arg_of(t: Term) -> Term {
    match t {
        Term::CVar(_, a) => *a,
        _ => unreachable!("context variable node"),
    }
}

/// Applies one event's rewrite to both sides of the equation.
fn rewrite(eq: &mut Equation, e: &ReconstructionEvent) {
    let sides = [std::mem::replace(&mut eq.lhs, Term::Hole), std::mem::replace(&mut eq.rhs, Term::Hole)];
    let [l, r] = sides.map(|t| match e {
        ReconstructionEvent::PrependToCvar(x, c) => map_cvar(&t, *x, &|n| fill_hole(c, &n)),
        ReconstructionEvent::AppendToCvar(x, c) => {
            map_cvar(&t, *x, &|n| Term::CVar(*x, Box::new(fill_hole(c, &arg_of(n)))))
        }
        ReconstructionEvent::RemoveEmptyCvar(x) => map_cvar(&t, *x, &arg_of),
        ReconstructionEvent::SubstVarConst(x, a) => map_var(&t, *x, &|_| Term::constant(*a)),
        ReconstructionEvent::GenPopDown { cvar, letter, hole, vars } => {
            let c = chunk_context(*letter, *hole, vars);
            map_cvar(&t, *cvar, &|n| Term::CVar(*cvar, Box::new(fill_hole(&c, &arg_of(n)))))
        }
        ReconstructionEvent::PrependToVar(x, c) => map_var(&t, *x, &|n| fill_hole(c, &n)),
    });
    eq.lhs = l;
    eq.rhs = r;
}

fn push(eq: &mut Equation, events: &mut Vec<ReconstructionEvent>, e: ReconstructionEvent) {
    rewrite(eq, &e);
    events.push(e);
}

fn check_known(eq: &Equation, g: &GuessSheet) -> Result<()> {
    for x in g.cvars.keys() {
        if x.0 as usize >= eq.vars.num_cvars() {
            return Err(Error::InconsistentGuess(format!("unknown context variable {x:?}")));
        }
    }
    for x in g.vars.keys() {
        if x.0 as usize >= eq.vars.num_vars() {
            return Err(Error::InconsistentGuess(format!("unknown variable {x:?}")));
        }
    }
    Ok(())
}

fn empty_without_pop(eq: &Equation, x: CVar) -> Error {
    Error::InconsistentGuess(format!("`{}` guessed empty without a pop", eq.vars.cvar_name(x)))
}

/// Letter pops for a partition: last letters in the top side are popped down, then first
/// letters in the bottom side are popped up.
pub fn pop(p: &Partition, eq: &Equation, g: &GuessSheet, events: &mut Vec<ReconstructionEvent>) -> Result<Equation> {
    check_known(eq, g)?;
    if let Some(l) = p.gamma1.intersection(&p.gamma2).next() {
        return Err(Error::InconsistentGuess(format!("`{}` on both sides of the partition", eq.sig.name(*l))));
    }
    let mut out = eq.clone();
    let present = eq.used_cvars();
    let mut popped = BTreeSet::new();
    let mut removed = BTreeSet::new();
    for (&x, cg) in &g.cvars {
        if !present.contains(&x) {
            continue;
        }
        if let Some(a) = cg.last.filter(|a| p.gamma1.contains(a)) {
            push(&mut out, events, ReconstructionEvent::AppendToCvar(x, Term::unary(a, Term::Hole)));
            popped.insert(x);
            let up_follows = cg.first.is_some_and(|b| p.gamma2.contains(&b));
            if cg.empty_after && !up_follows {
                push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
                removed.insert(x);
            }
        }
    }
    for (&x, cg) in &g.cvars {
        if !present.contains(&x) || removed.contains(&x) {
            continue;
        }
        if let Some(b) = cg.first.filter(|b| p.gamma2.contains(b)) {
            push(&mut out, events, ReconstructionEvent::PrependToCvar(x, Term::unary(b, Term::Hole)));
            popped.insert(x);
            if cg.empty_after {
                push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
            }
        }
        if cg.empty_after && !popped.contains(&x) {
            return Err(empty_without_pop(eq, x));
        }
    }
    let present_vars = eq.used_vars();
    for (&x, vg) in &g.vars {
        if let Some(b) = vg.first.filter(|b| p.gamma2.contains(b) && present_vars.contains(&x)) {
            push(&mut out, events, ReconstructionEvent::PrependToVar(x, Term::unary(b, Term::Hole)));
        }
    }
    Ok(out)
}

fn check_exponent(e: u64, cap: u64) -> Result<()> {
    if e == 0 {
        return Err(Error::InconsistentGuess("chain exponent must be at least 1".into()));
    }
    if e > cap {
        return Err(Error::ExponentOverCap { exponent: e, cap });
    }
    Ok(())
}

/// Chain pops: whole `a`-prefixes are popped up and whole `b`-suffixes popped down, for
/// letters of `gamma1`. Chunks are stored as single chain nodes.
pub fn pref_suff(
    gamma1: &BTreeSet<Letter>,
    eq: &Equation,
    g: &GuessSheet,
    exp_cap: u64,
    events: &mut Vec<ReconstructionEvent>,
) -> Result<Equation> {
    check_known(eq, g)?;
    let mut out = eq.clone();
    let present = eq.used_cvars();
    let mut removed = BTreeSet::new();
    for (&x, cg) in &g.cvars {
        if !present.contains(&x) {
            continue;
        }
        let suffix_follows = cg.last.is_some_and(|b| gamma1.contains(&b));
        match (cg.first.filter(|a| gamma1.contains(a)), cg.prefix) {
            (Some(a), Some(l)) => {
                check_exponent(l, exp_cap)?;
                push(&mut out, events, ReconstructionEvent::PrependToCvar(x, Term::pow(a, l, Term::Hole)));
                if cg.empty_after && !suffix_follows {
                    push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
                    removed.insert(x);
                }
            }
            (Some(_), None) => return Err(Error::InconsistentGuess("prefix letter without exponent".into())),
            _ => {
                if cg.empty_after && !suffix_follows {
                    return Err(empty_without_pop(eq, x));
                }
            }
        }
    }
    for (&x, cg) in &g.cvars {
        if !present.contains(&x) || removed.contains(&x) {
            continue;
        }
        match (cg.last.filter(|b| gamma1.contains(b)), cg.suffix) {
            (Some(b), Some(r)) => {
                check_exponent(r, exp_cap)?;
                push(&mut out, events, ReconstructionEvent::AppendToCvar(x, Term::pow(b, r, Term::Hole)));
                if cg.empty_after {
                    push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
                }
            }
            (Some(_), None) => return Err(Error::InconsistentGuess("suffix letter without exponent".into())),
            _ => {}
        }
    }
    let present_vars = eq.used_vars();
    for (&x, vg) in &g.vars {
        if !present_vars.contains(&x) {
            continue;
        }
        match (vg.first.filter(|a| gamma1.contains(a)), vg.prefix) {
            (Some(a), Some(l)) => {
                check_exponent(l, exp_cap)?;
                push(&mut out, events, ReconstructionEvent::PrependToVar(x, Term::pow(a, l, Term::Hole)));
            }
            (Some(_), None) => return Err(Error::InconsistentGuess("prefix letter without exponent".into())),
            _ => {}
        }
    }
    Ok(out)
}

/// Context variables applied to a constant of `gamma0` somewhere in the equation.
pub fn cvars_on_constants(eq: &Equation, gamma0: &BTreeSet<Letter>) -> BTreeSet<CVar> {
    let mut out = BTreeSet::new();
    for t in [&eq.lhs, &eq.rhs] {
        for n in t.nodes() {
            if let Term::CVar(x, arg) = n {
                if matches!(arg.as_ref(), Term::App(a, cs) if cs.is_empty() && gamma0.contains(a)) {
                    out.insert(*x);
                }
            }
        }
    }
    out
}

/// Parent pops: variables guessed to be constants are replaced, then context variables whose
/// last letter is in `gamma_ge1` and that are applied to a constant pop that letter down with
/// fresh variables as side arguments, then fresh variables guessed constant are replaced.
pub fn gen_pop(
    gamma_ge1: &BTreeSet<Letter>,
    gamma0: &BTreeSet<Letter>,
    eq: &Equation,
    g: &GuessSheet,
    events: &mut Vec<ReconstructionEvent>,
) -> Result<Equation> {
    check_known(eq, g)?;
    let mut out = eq.clone();
    let present_vars = eq.used_vars();
    for (&x, vg) in &g.vars {
        if let Some(a) = vg.constant.filter(|a| gamma0.contains(a) && present_vars.contains(&x)) {
            push(&mut out, events, ReconstructionEvent::SubstVarConst(x, a));
        }
    }
    let on_const = cvars_on_constants(&out, gamma0);
    let mut later = Vec::new();
    for (&x, cg) in &g.cvars {
        let Some(f) = cg.last.filter(|f| gamma_ge1.contains(f) && on_const.contains(&x)) else {
            if cg.empty_after {
                return Err(empty_without_pop(eq, x));
            }
            continue;
        };
        let m = out.sig.arity(f);
        let hole = match (cg.hole, m) {
            (Some(i), _) if i == 0 || i > m => return Err(Error::HolePositionOutOfRange { position: i, arity: m }),
            (Some(i), _) => i,
            (None, 1) => 1,
            (None, _) => return Err(Error::InconsistentGuess("hole position missing".into())),
        };
        let mut vars = Vec::with_capacity(m - 1);
        for i in (1..=m).filter(|&i| i != hole) {
            let v = out.vars.fresh_var();
            if let Some(&a) = cg.arg_consts.get(&i) {
                if !gamma0.contains(&a) {
                    return Err(Error::InconsistentGuess(format!("`{}` is not a guessed constant", out.sig.name(a))));
                }
                later.push((v, a));
            }
            vars.push(v);
        }
        if let Some(&i) = cg.arg_consts.keys().find(|&&i| i == hole || i > m || i == 0) {
            return Err(Error::HolePositionOutOfRange { position: i, arity: m });
        }
        push(&mut out, events, ReconstructionEvent::GenPopDown { cvar: x, letter: f, hole, vars });
        if cg.empty_after {
            push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
        }
    }
    for (v, a) in later {
        push(&mut out, events, ReconstructionEvent::SubstVarConst(v, a));
    }
    Ok(out)
}

/// Replaces every `X(t)` by `t`.
pub fn remove_cvar(eq: &Equation, x: CVar, events: &mut Vec<ReconstructionEvent>) -> Equation {
    let mut out = eq.clone();
    push(&mut out, events, ReconstructionEvent::RemoveEmptyCvar(x));
    out
}

/// Turns a solution of the transformed equation into one of the original by undoing the events
/// in reverse order. Images missing from `s` are treated as the bare hole (context variables)
/// or left undefined (variables).
pub fn replay_solution_backward(events: &[ReconstructionEvent], s: &Substitution) -> Substitution {
    let mut s = s.clone();
    for e in events.iter().rev() {
        match e {
            ReconstructionEvent::PrependToCvar(x, c) => {
                let cur = s.cvars.remove(x).unwrap_or(Term::Hole);
                s.set_cvar(*x, fill_hole(c, &cur));
            }
            ReconstructionEvent::AppendToCvar(x, c) => {
                let cur = s.cvars.remove(x).unwrap_or(Term::Hole);
                s.set_cvar(*x, fill_hole(&cur, c));
            }
            ReconstructionEvent::RemoveEmptyCvar(x) => s.set_cvar(*x, Term::Hole),
            ReconstructionEvent::SubstVarConst(x, a) => s.set_var(*x, Term::constant(*a)),
            ReconstructionEvent::GenPopDown { cvar, letter, hole, vars } => {
                let mut args = Vec::with_capacity(vars.len() + 1);
                let mut vs = vars.iter();
                for i in 1..=vars.len() + 1 {
                    if i == *hole {
                        args.push(Term::Hole);
                    } else {
                        let v = vs.next().unwrap();
                        args.push(s.vars.remove(v).unwrap_or(Term::Hole));
                    }
                }
                let cur = s.cvars.remove(cvar).unwrap_or(Term::Hole);
                s.set_cvar(*cvar, fill_hole(&cur, &Term::App(*letter, args)));
            }
            ReconstructionEvent::PrependToVar(x, c) => {
                if let Some(cur) = s.vars.remove(x) {
                    s.set_var(*x, fill_hole(c, &cur));
                }
            }
        }
    }
    s
}

fn mismatch(what: &str) -> Error {
    Error::InconsistentGuess(format!("solution does not agree with the guess: {what}"))
}

/// Removes `c` from the top of `t`, where `c` is a chain of one letter over the hole.
fn strip_top(t: &Term, c: &Term) -> Option<Term> {
    let (a, mut n) = match c {
        Term::App(a, _) => (*a, 1u64),
        Term::Pow(a, e, _) => (*a, *e),
        _ => return Some(t.clone()),
    };
    let mut cur = t.clone();
    while n > 0 {
        cur = match cur {
            Term::App(b, mut cs) if b == a && cs.len() == 1 => {
                n -= 1;
                cs.pop().unwrap()
            }
            Term::Pow(b, e, c) if b == a => {
                if e > n {
                    let rest = Term::pow(a, e - n, *c);
                    n = 0;
                    rest
                } else {
                    n -= e;
                    *c
                }
            }
            _ => return None,
        };
    }
    Some(cur)
}

/// Splits a context as `s ∘ f(t1, .., _, .., tm)`.
fn split_last(ctx: &Term) -> Option<(Term, Letter, usize, Vec<Term>)> {
    match ctx {
        Term::App(f, cs) if cs.iter().any(|c| *c == Term::Hole) => {
            let i = cs.iter().position(|c| *c == Term::Hole).unwrap();
            let args = cs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
            Some((Term::Hole, *f, i + 1, args))
        }
        Term::App(f, cs) => {
            let i = cs.iter().position(|c| c.count_holes() > 0)?;
            let (s, g, pos, args) = split_last(&cs[i])?;
            let mut cs = cs.clone();
            cs[i] = s;
            Some((Term::App(*f, cs), g, pos, args))
        }
        Term::Pow(a, e, c) => {
            if **c == Term::Hole {
                Some((Term::pow(*a, e - 1, Term::Hole), *a, 1, Vec::new()))
            } else {
                let (s, g, pos, args) = split_last(c)?;
                Some((Term::Pow(*a, *e, Box::new(s)), g, pos, args))
            }
        }
        _ => None,
    }
}

/// Removes `c` directly above the hole of `ctx`.
fn strip_bottom(ctx: &Term, c: &Term) -> Option<Term> {
    let (a, n) = match c {
        Term::App(a, _) => (*a, 1u64),
        Term::Pow(a, e, _) => (*a, *e),
        _ => return Some(ctx.clone()),
    };
    let mut cur = ctx.clone();
    for _ in 0..n {
        let (s, f, _, _) = split_last(&cur)?;
        if f != a {
            return None;
        }
        cur = s;
    }
    Some(cur)
}

/// Transforms a solution of the equation before the events into one of the equation after them.
/// Fails when the solution does not agree with the guesses behind the events.
pub fn carry_forward(events: &[ReconstructionEvent], s: &Substitution) -> Result<Substitution> {
    let mut s = s.clone();
    for e in events {
        match e {
            ReconstructionEvent::PrependToCvar(x, c) => {
                let img = s.cvars.get(x).ok_or_else(|| mismatch("missing image"))?;
                let rest = strip_top(img, c).ok_or_else(|| mismatch("prefix"))?;
                s.set_cvar(*x, rest);
            }
            ReconstructionEvent::AppendToCvar(x, c) => {
                let img = s.cvars.get(x).ok_or_else(|| mismatch("missing image"))?;
                let rest = strip_bottom(img, c).ok_or_else(|| mismatch("suffix"))?;
                s.set_cvar(*x, rest);
            }
            ReconstructionEvent::RemoveEmptyCvar(x) => {
                if s.cvars.remove(x) != Some(Term::Hole) {
                    return Err(mismatch("context not empty"));
                }
            }
            ReconstructionEvent::SubstVarConst(x, a) => {
                if s.vars.remove(x) != Some(Term::constant(*a)) {
                    return Err(mismatch("variable is not that constant"));
                }
            }
            ReconstructionEvent::GenPopDown { cvar, letter, hole, vars } => {
                let img = s.cvars.get(cvar).ok_or_else(|| mismatch("missing image"))?;
                let (rest, f, i, args) = split_last(img).ok_or_else(|| mismatch("empty context"))?;
                if f != *letter || i != *hole {
                    return Err(mismatch("last letter"));
                }
                s.set_cvar(*cvar, rest);
                for (v, t) in vars.iter().zip(args) {
                    s.set_var(*v, t);
                }
            }
            ReconstructionEvent::PrependToVar(x, c) => {
                let img = s.vars.get(x).ok_or_else(|| mismatch("missing image"))?;
                let rest = strip_top(img, c).ok_or_else(|| mismatch("prefix"))?;
                s.set_var(*x, rest);
            }
        }
    }
    Ok(s)
}

fn top_run(t: &Term, a: Letter) -> u64 {
    let mut n = 0u64;
    let mut cur = t;
    loop {
        match cur {
            Term::App(b, cs) if *b == a && cs.len() == 1 => {
                n += 1;
                cur = &cs[0];
            }
            Term::Pow(b, e, c) if *b == a => {
                n += e;
                cur = c;
            }
            _ => return n,
        }
    }
}

fn bottom_run(ctx: &Term, a: Letter) -> u64 {
    let mut n = 0u64;
    let mut cur = ctx.clone();
    while let Some((s, f, _, _)) = split_last(&cur) {
        if f != a {
            break;
        }
        n += 1;
        cur = s;
    }
    n
}

/// The prefix/suffix guesses that agree with `s`.
pub fn extract_pref_suff(eq: &Equation, s: &Substitution, gamma1: &BTreeSet<Letter>) -> GuessSheet {
    let mut g = GuessSheet::new(Stage::PrefSuff);
    for x in eq.used_cvars() {
        let Some(img) = s.cvar(x) else { continue };
        let mut cur = img.clone();
        let mut cg = CvarGuess::default();
        if let Some(a) = first_letter(&cur).filter(|a| gamma1.contains(a)) {
            let l = top_run(&cur, a);
            cg.first = Some(a);
            cg.prefix = Some(l);
            cur = strip_top(&cur, &Term::pow(a, l, Term::Hole)).unwrap();
        }
        if cur != Term::Hole {
            if let Some(b) = last_letter(&cur).filter(|b| gamma1.contains(b)) {
                let r = bottom_run(&cur, b);
                cg.last = Some(b);
                cg.suffix = Some(r);
                cur = strip_bottom(&cur, &Term::pow(b, r, Term::Hole)).unwrap();
            }
        }
        cg.empty_after = cur == Term::Hole;
        if cg != CvarGuess::default() {
            g.cvars.insert(x, cg);
        }
    }
    for x in eq.used_vars() {
        let Some(img) = s.var(x) else { continue };
        if let Some(a) = first_letter(img).filter(|a| gamma1.contains(a)) {
            g.vars.insert(x, VarGuess { first: Some(a), prefix: Some(top_run(img, a)), constant: None });
        }
    }
    g
}

/// The letter-pop guesses for `p` that agree with `s`.
pub fn extract_pop(eq: &Equation, s: &Substitution, p: &Partition) -> GuessSheet {
    let mut g = GuessSheet::new(Stage::Pop);
    g.partition = p.clone();
    for x in eq.used_cvars() {
        let Some(img) = s.cvar(x) else { continue };
        let mut cur = img.clone();
        let mut cg = CvarGuess::default();
        if let Some(a) = last_letter(&cur).filter(|a| p.gamma1.contains(a)) {
            cg.last = Some(a);
            cur = strip_bottom(&cur, &Term::unary(a, Term::Hole)).unwrap();
        }
        if let Some(b) = first_letter(&cur).filter(|b| p.gamma2.contains(b)) {
            cg.first = Some(b);
            cur = strip_top(&cur, &Term::unary(b, Term::Hole)).unwrap();
        }
        cg.empty_after = cur == Term::Hole;
        if cg != CvarGuess::default() {
            g.cvars.insert(x, cg);
        }
    }
    for x in eq.used_vars() {
        if let Some(b) = s.var(x).and_then(first_letter).filter(|b| p.gamma2.contains(b)) {
            g.var(x).first = Some(b);
        }
    }
    g
}

/// The parent-pop guesses that agree with `s`. Guesses are only recorded for context variables
/// that will actually pop.
pub fn extract_gen_pop(eq: &Equation, s: &Substitution, gamma_ge1: &BTreeSet<Letter>, gamma0: &BTreeSet<Letter>) -> GuessSheet {
    let mut g = GuessSheet::new(Stage::GenPop);
    let mut after = eq.clone();
    for x in eq.used_vars() {
        if let Some(Term::App(a, cs)) = s.var(x) {
            if cs.is_empty() && gamma0.contains(a) {
                g.var(x).constant = Some(*a);
                rewrite(&mut after, &ReconstructionEvent::SubstVarConst(x, *a));
            }
        }
    }
    let on_const = cvars_on_constants(&after, gamma0);
    for x in eq.used_cvars() {
        let Some(img) = s.cvar(x) else { continue };
        let Some(f) = last_letter(img).filter(|f| gamma_ge1.contains(f)) else { continue };
        if !on_const.contains(&x) {
            continue;
        }
        let (rest, _, hole, args) = split_last(img).unwrap();
        let mut cg = CvarGuess { last: Some(f), hole: Some(hole), empty_after: rest == Term::Hole, ..Default::default() };
        debug_assert_eq!(hole_position(img), Some(hole));
        let positions = (1..=args.len() + 1).filter(|&i| i != hole);
        for (i, t) in positions.zip(&args) {
            if let Term::App(a, cs) = t {
                if cs.is_empty() && gamma0.contains(a) {
                    cg.arg_consts.insert(i, *a);
                }
            }
        }
        g.cvars.insert(x, cg);
    }
    g
}

/// Variables introduced by parent pops, with the context variable that introduced them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Ownership {
    owner: BTreeMap<Var, CVar>,
}

impl Ownership {
    pub fn record(&mut self, events: &[ReconstructionEvent]) {
        for e in events {
            match e {
                ReconstructionEvent::GenPopDown { cvar, vars, .. } => {
                    for v in vars {
                        self.owner.insert(*v, *cvar);
                    }
                }
                ReconstructionEvent::RemoveEmptyCvar(x) => self.owner.retain(|_, o| o != x),
                ReconstructionEvent::SubstVarConst(v, _) => {
                    self.owner.remove(v);
                }
                _ => {}
            }
        }
    }

    /// Number of variables of the equation owned by each context variable.
    pub fn counts(&self, eq: &Equation) -> BTreeMap<CVar, usize> {
        let used = eq.used_vars();
        let mut out = BTreeMap::new();
        for (v, x) in &self.owner {
            if used.contains(v) {
                *out.entry(*x).or_insert(0) += 1;
            }
        }
        out
    }
}
