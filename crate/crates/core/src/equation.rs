//! Context equations: problem syntax, solution checks, signature normalization, solution
//! simplification and the crossing classification of compressible subpatterns.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::term::{
    parse_term_with, well_formed, CVar, Letter, Lexer, Origin, Signature, Substitution, Term, Tok, Var, VarTable,
};

#[derive(Clone, Debug)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
    pub sig: Signature,
    pub vars: VarTable,
}

/// Occurrence counts of an equation; stored chains count with their exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SizeStats {
    pub constants: u64,
    pub unary: u64,
    pub higher: u64,
    pub var_occurrences: u64,
    pub cvar_occurrences: u64,
}

impl SizeStats {
    pub fn letters(&self) -> u64 {
        self.constants + self.unary + self.higher
    }

    pub fn total(&self) -> u64 {
        self.letters() + self.var_occurrences + self.cvar_occurrences
    }
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term, sig: Signature, vars: VarTable) -> Result<Self> {
        for t in [&lhs, &rhs] {
            if t.count_holes() > 0 {
                return Err(Error::PreconditionViolated("hole in an equation".into()));
            }
            if !well_formed(t, &sig) {
                return Err(Error::PreconditionViolated("ill-formed equation side".into()));
            }
        }
        Ok(Equation { lhs, rhs, sig, vars })
    }

    /// Parses the line-oriented problem format and normalizes the signature.
    pub fn parse(text: &str) -> Result<Self> {
        normalize_signature(&parse_raw(text)?)
    }

    /// Stored node count of both sides; a stored chain is one node.
    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size()
    }

    pub fn stats(&self) -> SizeStats {
        let mut st = SizeStats::default();
        for t in [&self.lhs, &self.rhs] {
            for n in t.nodes() {
                match n {
                    Term::App(l, _) => match self.sig.arity(*l) {
                        0 => st.constants += 1,
                        1 => st.unary += 1,
                        _ => st.higher += 1,
                    },
                    Term::Pow(_, e, _) => st.unary += e,
                    Term::Var(_) => st.var_occurrences += 1,
                    Term::CVar(..) => st.cvar_occurrences += 1,
                    Term::Hole => {}
                }
            }
        }
        st
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        let mut s = self.lhs.letters();
        s.extend(self.rhs.letters());
        s
    }

    pub fn used_vars(&self) -> BTreeSet<Var> {
        let mut s = self.lhs.vars();
        s.extend(self.rhs.vars());
        s
    }

    pub fn used_cvars(&self) -> BTreeSet<CVar> {
        let mut s = self.lhs.cvars();
        s.extend(self.rhs.cvars());
        s
    }

    pub fn max_arity(&self) -> usize {
        self.lhs.max_arity(&self.sig).max(self.rhs.max_arity(&self.sig))
    }

    pub fn with_sides(&self, lhs: Term, rhs: Term) -> Equation {
        Equation { lhs, rhs, sig: self.sig.clone(), vars: self.vars.clone() }
    }

    pub fn display_term<'a>(&'a self, t: &'a Term) -> impl fmt::Display + 'a {
        t.display(&self.sig, &self.vars)
    }

    /// Problem-file rendering; `Equation::parse` reads it back.
    pub fn to_problem_text(&self) -> String {
        let mut out = String::from("sig");
        for l in self.sig.letters().filter(|&l| self.sig.origin(l) == Origin::Input || self.sig.origin(l) == Origin::Fresh)
        {
            out += &format!(" {}/{}", self.sig.name(l), self.sig.arity(l));
        }
        out.push('\n');
        if self.vars.num_vars() > 0 {
            let names: Vec<&str> = self.vars.vars().map(|v| self.vars.var_name(v)).collect();
            out += &format!("var {}\n", names.join(" "));
        }
        if self.vars.num_cvars() > 0 {
            let names: Vec<&str> = self.vars.cvars().map(|x| self.vars.cvar_name(x)).collect();
            out += &format!("cvar {}\n", names.join(" "));
        }
        out += &format!("eq {}\n", self);
        out
    }

    /// Renders `s` in the substitution-file format, one `NAME := TERM` line per image.
    pub fn substitution_text(&self, s: &Substitution) -> String {
        let mut out = String::new();
        for (x, t) in &s.cvars {
            out += &format!("{} := {}\n", self.vars.cvar_name(*x), self.display_term(t));
        }
        for (x, t) in &s.vars {
            out += &format!("{} := {}\n", self.vars.var_name(*x), self.display_term(t));
        }
        out
    }

    /// Reads a substitution file: one `NAME := TERM` per line, `_` for the hole.
    pub fn parse_substitution(&self, text: &str) -> Result<Substitution> {
        let mut s = Substitution::new();
        for (no, line) in text.lines().enumerate() {
            let line_no = no + 1;
            let content = line.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let mut lx = Lexer::new(content, line_no);
            let name = match lx.next_tok() {
                Some(Tok::Name(n)) => n,
                _ => return Err(lx.error("expected a variable name")),
            };
            match (lx.next_tok(), lx.next_tok()) {
                (Some(Tok::Other(':')), Some(Tok::Eq)) => {}
                _ => return Err(lx.error("expected `:=`")),
            }
            let t = parse_term_with(&mut lx, &self.sig, &self.vars, true)?;
            if !lx.at_end() {
                return Err(lx.error("trailing input"));
            }
            if !t.vars().is_empty() || !t.cvars().is_empty() {
                return Err(lx.error("images must be ground"));
            }
            if let Some(x) = self.vars.cvar(&name) {
                if t.count_holes() != 1 {
                    return Err(Error::NotAContext(t.count_holes()));
                }
                s.set_cvar(x, t);
            } else if let Some(v) = self.vars.var(&name) {
                if t.count_holes() != 0 {
                    return Err(lx.error("variable image contains a hole"));
                }
                s.set_var(v, t);
            } else {
                return Err(Error::UndefinedVariable(name));
            }
        }
        Ok(s)
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.display_term(&self.lhs), self.display_term(&self.rhs))
    }
}

fn parse_raw(text: &str) -> Result<Equation> {
    let mut sig = Signature::new();
    let mut vars = VarTable::new();
    let mut eq_line = None;
    for (no, line) in text.lines().enumerate() {
        let line_no = no + 1;
        let content = line.split('#').next().unwrap_or("");
        let mut lx = Lexer::new(content, line_no);
        let kw = match lx.next_tok() {
            None => continue,
            Some(Tok::Name(kw)) => kw,
            Some(_) => return Err(lx.error("expected `sig`, `var`, `cvar` or `eq`")),
        };
        match kw.as_str() {
            "sig" => {
                while !lx.at_end() {
                    let name = match lx.next_tok() {
                        Some(Tok::Name(n)) => n,
                        _ => return Err(lx.error("expected a letter name")),
                    };
                    lx.expect(Tok::Slash)?;
                    let arity = match lx.next_tok() {
                        Some(Tok::Int(a)) => a as usize,
                        _ => return Err(lx.error("expected an arity")),
                    };
                    if vars.var(&name).is_some() || vars.cvar(&name).is_some() || sig.lookup(&name).is_some() {
                        return Err(Error::DuplicateName(name));
                    }
                    sig.add(&name, arity)?;
                }
            }
            "var" | "cvar" => {
                while !lx.at_end() {
                    let name = match lx.next_tok() {
                        Some(Tok::Name(n)) => n,
                        _ => return Err(lx.error("expected a variable name")),
                    };
                    if sig.lookup(&name).is_some() {
                        return Err(Error::DuplicateName(name));
                    }
                    if kw == "var" {
                        vars.add_var(&name)?;
                    } else {
                        vars.add_cvar(&name)?;
                    }
                }
            }
            "eq" => {
                if eq_line.is_some() {
                    return Err(lx.error("more than one equation"));
                }
                eq_line = Some((line_no, content));
            }
            other => return Err(lx.error(format!("unknown keyword `{other}`"))),
        }
    }
    let Some((line_no, content)) = eq_line else {
        return Err(Error::Syntax { line: text.lines().count().max(1), col: 1, msg: "missing `eq` line".into() });
    };
    let mut lx = Lexer::new(content, line_no);
    lx.next_tok();
    let lhs = parse_term_with(&mut lx, &sig, &vars, false)?;
    lx.expect(Tok::Eq)?;
    let rhs = parse_term_with(&mut lx, &sig, &vars, false)?;
    if !lx.at_end() {
        return Err(lx.error("trailing input"));
    }
    Ok(Equation { lhs, rhs, sig, vars })
}

/// `S(u) = S(v)`, with no requirement on the context images.
pub fn is_solution(eq: &Equation, s: &Substitution) -> Result<bool> {
    Ok(s.apply(&eq.lhs, &eq.vars)? == s.apply(&eq.rhs, &eq.vars)?)
}

/// No context variable of the equation is mapped to the bare hole.
pub fn is_nonempty_on(eq: &Equation, s: &Substitution) -> bool {
    eq.used_cvars().iter().all(|x| !matches!(s.cvar(*x), Some(Term::Hole)))
}

/// A non-empty solution.
pub fn verify_solution(eq: &Equation, s: &Substitution) -> Result<bool> {
    Ok(is_solution(eq, s)? && is_nonempty_on(eq, s))
}

/// Adds one fresh letter for every arity up to the maximal one that the signature lacks.
pub fn normalize_signature(eq: &Equation) -> Result<Equation> {
    if !eq.sig.has_constant() {
        return Err(Error::NoConstant);
    }
    let mut out = eq.clone();
    for arity in 1..=eq.sig.max_arity() {
        if eq.sig.letters_of_arity(arity).next().is_none() {
            out.sig.fresh_letter(arity, Origin::Fresh)?;
        }
    }
    Ok(out)
}

/// The least letter by name of the given arity that does not occur in the equation.
pub fn spare_letter(eq: &Equation, arity: usize) -> Option<Letter> {
    let used = eq.letters();
    eq.sig.by_name_order().into_iter().find(|&l| eq.sig.arity(l) == arity && !used.contains(&l))
}

/// Renames letters homomorphically; `None` splices out a unary letter.
pub fn rename_letters(t: &Term, map: &HashMap<Letter, Option<Letter>>) -> Term {
    t.map_bottom_up(&mut |n| match n {
        Term::App(l, mut kids) => match map.get(&l) {
            Some(None) => kids.pop().expect("only unary letters are deleted"),
            Some(Some(m)) => Term::App(*m, kids),
            None => Term::App(l, kids),
        },
        Term::Pow(l, e, kid) => match map.get(&l) {
            Some(None) => *kid,
            Some(Some(m)) => Term::Pow(*m, e, kid),
            None => Term::Pow(l, e, kid),
        },
        other => other,
    })
}

/// Merges, per arity, all letters absent from the equation into one, then deletes absent unary
/// letters. When a deletion would empty a context image, absent unary letters are merged
/// instead.
pub fn simplify_solution(eq: &Equation, s: &Substitution) -> Result<Substitution> {
    if !verify_solution(eq, s)? {
        return Err(Error::NotASolution);
    }
    let present = eq.letters();
    let mut used = BTreeSet::new();
    for t in s.cvars.values().chain(s.vars.values()) {
        used.extend(t.letters());
    }
    let absent: Vec<Letter> = used.into_iter().filter(|l| !present.contains(l)).collect();
    let mut map: HashMap<Letter, Option<Letter>> = HashMap::new();
    for &l in &absent {
        let arity = eq.sig.arity(l);
        if arity != 1 {
            let spare = spare_letter(eq, arity).expect("an absent letter of this arity exists");
            if spare != l {
                map.insert(l, Some(spare));
            }
        } else {
            map.insert(l, None);
        }
    }
    let mut out = s.map_images(|t| rename_letters(t, &map));
    if !is_nonempty_on(eq, &out) {
        let spare = spare_letter(eq, 1).expect("an absent unary letter exists");
        for &l in absent.iter().filter(|&&l| eq.sig.arity(l) == 1) {
            if l == spare {
                map.remove(&l);
            } else {
                map.insert(l, Some(spare));
            }
        }
        out = s.map_images(|t| rename_letters(t, &map));
    }
    debug_assert!(verify_solution(eq, &out).unwrap_or(false));
    Ok(out)
}

/// Topmost letter of an image; `None` for the bare hole.
pub fn first_letter(t: &Term) -> Option<Letter> {
    match t {
        Term::App(l, _) | Term::Pow(l, _, _) => Some(*l),
        _ => None,
    }
}

/// Parent of the hole in a context; `None` for the bare hole or a term without a hole.
pub fn last_letter(t: &Term) -> Option<Letter> {
    let mut cur = t;
    let mut last = None;
    loop {
        match cur {
            Term::Hole => return last,
            Term::Pow(l, _, c) => {
                last = Some(*l);
                cur = c;
            }
            Term::App(l, cs) => {
                last = Some(*l);
                cur = cs.iter().find(|c| c.count_holes() > 0)?;
            }
            _ => return None,
        }
    }
}

/// 1-based position of the hole below the last letter of a context.
pub fn hole_position(t: &Term) -> Option<usize> {
    let mut cur = t;
    let mut pos = None;
    loop {
        match cur {
            Term::Hole => return pos,
            Term::Pow(_, _, c) => {
                pos = Some(1);
                cur = c;
            }
            Term::App(_, cs) => {
                let i = cs.iter().position(|c| c.count_holes() > 0)?;
                pos = Some(i + 1);
                cur = &cs[i];
            }
            _ => return None,
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Crossing classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lhs,
    Rhs,
}

/// A node position: a side and the child indices from its root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occurrence {
    pub side: Side,
    pub path: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OccurrenceClass {
    Explicit,
    Implicit,
    Crossing,
}

/// Which of the three crossing conditions hold, each with the equation positions witnessing it.
/// In order: an explicit letter above a variable image, a context image above an explicit
/// letter, a context image above a variable image.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossingReport {
    pub first: Vec<Occurrence>,
    pub second: Vec<Occurrence>,
    pub third: Vec<Occurrence>,
}

impl CrossingReport {
    pub fn is_crossing(&self) -> bool {
        !(self.first.is_empty() && self.second.is_empty() && self.third.is_empty())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Explicit,
    Image(usize),
}

struct TNode {
    letter: Letter,
    kids: Vec<usize>,
    parent: Option<usize>,
    src: Source,
}

/// `S(side)` with every node tagged by where it comes from: the equation text or one particular
/// occurrence of a variable image.
struct Tagged {
    nodes: Vec<TNode>,
}

enum Task<'a> {
    Eq(&'a Term),
    Img(&'a Term, usize, Option<&'a Term>),
}

impl Tagged {
    fn build(t: &Term, s: &Substitution) -> Result<Tagged> {
        let mut tr = Tagged { nodes: Vec::new() };
        let mut instances = 0usize;
        let mut stack: Vec<(Task, Option<usize>)> = vec![(Task::Eq(t), None)];
        while let Some((task, parent)) = stack.pop() {
            match task {
                Task::Eq(Term::App(l, cs)) => {
                    let i = tr.push(*l, parent, Source::Explicit);
                    for c in cs.iter().rev() {
                        stack.push((Task::Eq(c), Some(i)));
                    }
                }
                Task::Eq(Term::Pow(l, e, c)) => {
                    let mut p = parent;
                    for _ in 0..*e {
                        p = Some(tr.push(*l, p, Source::Explicit));
                    }
                    stack.push((Task::Eq(c), p));
                }
                Task::Eq(Term::Var(v)) => {
                    let img = s.var(*v).ok_or_else(|| Error::UndefinedVariable(format!("{v:?}")))?;
                    instances += 1;
                    stack.push((Task::Img(img, instances, None), parent));
                }
                Task::Eq(Term::CVar(x, c)) => {
                    let img = s.cvar(*x).ok_or_else(|| Error::UndefinedVariable(format!("{x:?}")))?;
                    instances += 1;
                    stack.push((Task::Img(img, instances, Some(c)), parent));
                }
                Task::Eq(Term::Hole) => return Err(Error::PreconditionViolated("hole in an equation".into())),
                Task::Img(Term::Hole, _, arg) => {
                    let arg = arg.ok_or_else(|| Error::PreconditionViolated("hole in a term image".into()))?;
                    stack.push((Task::Eq(arg), parent));
                }
                Task::Img(Term::App(l, cs), k, arg) => {
                    let i = tr.push(*l, parent, Source::Image(k));
                    for c in cs.iter().rev() {
                        stack.push((Task::Img(c, k, arg), Some(i)));
                    }
                }
                Task::Img(Term::Pow(l, e, c), k, arg) => {
                    let mut p = parent;
                    for _ in 0..*e {
                        p = Some(tr.push(*l, p, Source::Image(k)));
                    }
                    stack.push((Task::Img(c, k, arg), p));
                }
                Task::Img(_, ..) => return Err(Error::PreconditionViolated("non-ground image".into())),
            }
        }
        Ok(tr)
    }

    fn push(&mut self, letter: Letter, parent: Option<usize>, src: Source) -> usize {
        let i = self.nodes.len();
        self.nodes.push(TNode { letter, kids: Vec::new(), parent, src });
        if let Some(p) = parent {
            self.nodes[p].kids.push(i);
        }
        i
    }

    fn path(&self, mut i: usize) -> Vec<usize> {
        let mut path = Vec::new();
        while let Some(p) = self.nodes[i].parent {
            path.push(self.nodes[p].kids.iter().position(|&c| c == i).unwrap());
            i = p;
        }
        path.reverse();
        path
    }
}

fn class_of(srcs: impl IntoIterator<Item = Source>) -> OccurrenceClass {
    let mut it = srcs.into_iter();
    let first = it.next().expect("non-empty occurrence");
    if it.all(|s| s == first) {
        match first {
            Source::Explicit => OccurrenceClass::Explicit,
            Source::Image(_) => OccurrenceClass::Implicit,
        }
    } else {
        OccurrenceClass::Crossing
    }
}

fn sides(eq: &Equation) -> [(Side, &Term); 2] {
    [(Side::Lhs, &eq.lhs), (Side::Rhs, &eq.rhs)]
}

/// Every occurrence of the 2-chain `ab` in `S(u)` and `S(v)` with its class.
pub fn classify_pair_occurrences(
    eq: &Equation,
    s: &Substitution,
    a: Letter,
    b: Letter,
) -> Result<Vec<(Occurrence, OccurrenceClass)>> {
    let mut out = Vec::new();
    for (side, t) in sides(eq) {
        let tr = Tagged::build(t, s)?;
        for (i, n) in tr.nodes.iter().enumerate() {
            if n.letter != a || eq.sig.arity(a) != 1 {
                continue;
            }
            let c = &tr.nodes[n.kids[0]];
            if c.letter == b {
                out.push((Occurrence { side, path: tr.path(i) }, class_of([n.src, c.src])));
            }
        }
    }
    Ok(out)
}

/// Every `a`-maximal chain in `S(u)` and `S(v)`: its top position, length and class.
pub fn classify_chain_occurrences(
    eq: &Equation,
    s: &Substitution,
    a: Letter,
) -> Result<Vec<(Occurrence, u64, OccurrenceClass)>> {
    let mut out = Vec::new();
    if eq.sig.arity(a) != 1 {
        return Ok(out);
    }
    for (side, t) in sides(eq) {
        let tr = Tagged::build(t, s)?;
        for (i, n) in tr.nodes.iter().enumerate() {
            if n.letter != a || n.parent.is_some_and(|p| tr.nodes[p].letter == a) {
                continue;
            }
            let mut srcs = vec![n.src];
            let mut j = n.kids[0];
            while tr.nodes[j].letter == a {
                srcs.push(tr.nodes[j].src);
                j = tr.nodes[j].kids[0];
            }
            out.push((Occurrence { side, path: tr.path(i) }, srcs.len() as u64, class_of(srcs)));
        }
    }
    Ok(out)
}

/// Every occurrence of `f` with a constant child `a`, identified by the position of `f` and the
/// 1-based child position.
pub fn classify_parent_leaf_occurrences(
    eq: &Equation,
    s: &Substitution,
    f: Letter,
    a: Letter,
) -> Result<Vec<(Occurrence, usize, OccurrenceClass)>> {
    let mut out = Vec::new();
    for (side, t) in sides(eq) {
        let tr = Tagged::build(t, s)?;
        for (i, n) in tr.nodes.iter().enumerate() {
            if n.letter != f {
                continue;
            }
            for (pos, &c) in n.kids.iter().enumerate() {
                let c = &tr.nodes[c];
                if c.letter == a && c.kids.is_empty() {
                    out.push((Occurrence { side, path: tr.path(i) }, pos + 1, class_of([n.src, c.src])));
                }
            }
        }
    }
    Ok(out)
}

/// One node of the equation text with its parent-facing view.
struct EqNode<'a> {
    at: Occurrence,
    term: &'a Term,
}

fn eq_nodes(eq: &Equation) -> Vec<EqNode<'_>> {
    let mut out = Vec::new();
    for (side, t) in sides(eq) {
        let mut stack = vec![(t, Vec::new())];
        while let Some((t, path)) = stack.pop() {
            for (i, c) in t.children().iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((c, p));
            }
            out.push(EqNode { at: Occurrence { side, path }, term: t });
        }
    }
    out
}

fn unary_label(t: &Term, sig: &Signature) -> Option<Letter> {
    match t {
        Term::App(l, _) if sig.arity(*l) == 1 => Some(*l),
        Term::Pow(l, _, _) => Some(*l),
        _ => None,
    }
}

/// First letter of the image of a variable or context variable node.
fn image_first(t: &Term, s: &Substitution) -> Option<Letter> {
    match t {
        Term::Var(v) => s.var(*v).and_then(first_letter),
        Term::CVar(x, _) => s.cvar(*x).and_then(first_letter),
        _ => None,
    }
}

fn image_last(t: &Term, s: &Substitution) -> Option<Letter> {
    match t {
        Term::CVar(x, _) => s.cvar(*x).and_then(last_letter),
        _ => None,
    }
}

fn is_variable_node(t: &Term) -> bool {
    matches!(t, Term::Var(_) | Term::CVar(..))
}

fn only_child(t: &Term) -> Option<&Term> {
    match t {
        Term::Pow(_, _, c) | Term::CVar(_, c) => Some(c),
        Term::App(_, cs) if cs.len() == 1 => Some(&cs[0]),
        _ => None,
    }
}

/// Operational crossing test for the pair `ab`.
pub fn pair_crossing_report(eq: &Equation, s: &Substitution, a: Letter, b: Letter) -> CrossingReport {
    let mut r = CrossingReport::default();
    for n in eq_nodes(eq) {
        let Some(c) = only_child(n.term) else { continue };
        let top = unary_label(n.term, &eq.sig);
        if top == Some(a) && is_variable_node(c) && image_first(c, s) == Some(b) {
            r.first.push(n.at.clone());
        }
        if image_last(n.term, s) == Some(a) {
            if unary_label(c, &eq.sig) == Some(b) {
                r.second.push(n.at.clone());
            }
            if image_first(c, s) == Some(b) {
                r.third.push(n.at);
            }
        }
    }
    r
}

/// Operational crossing test for `a`-chains.
pub fn chain_crossing_report(eq: &Equation, s: &Substitution, a: Letter) -> CrossingReport {
    pair_crossing_report(eq, s, a, a)
}

/// Operational crossing test for the parent-leaf pair `(f, a)`.
pub fn parent_leaf_crossing_report(eq: &Equation, s: &Substitution, f: Letter, a: Letter) -> CrossingReport {
    let is_a = |t: &Term| matches!(t, Term::Var(v) if s.var(*v) == Some(&Term::constant(a)));
    let mut r = CrossingReport::default();
    for n in eq_nodes(eq) {
        let f_here = match n.term {
            Term::App(l, _) | Term::Pow(l, _, _) => *l == f,
            _ => false,
        };
        if f_here && n.term.children().iter().any(is_a) {
            r.first.push(n.at.clone());
        }
        if image_last(n.term, s) == Some(f) {
            let c = only_child(n.term).expect("context variable has an argument");
            if *c == Term::constant(a) {
                r.second.push(n.at.clone());
            }
            if is_a(c) {
                r.third.push(n.at);
            }
        }
    }
    r
}

/// Some `ab` with `a` in the top side and `b` in the bottom side is crossing.
pub fn partition_is_crossing(eq: &Equation, s: &Substitution, gamma1: &BTreeSet<Letter>, gamma2: &BTreeSet<Letter>) -> bool {
    gamma1.iter().any(|&a| gamma2.iter().any(|&b| pair_crossing_report(eq, s, a, b).is_crossing()))
}

pub fn chains_are_crossing(eq: &Equation, s: &Substitution, gamma: &BTreeSet<Letter>) -> bool {
    gamma.iter().any(|&a| chain_crossing_report(eq, s, a).is_crossing())
}

pub fn parent_leaf_is_crossing(
    eq: &Equation,
    s: &Substitution,
    gamma_ge1: &BTreeSet<Letter>,
    gamma0: &BTreeSet<Letter>,
) -> bool {
    gamma_ge1.iter().any(|&f| gamma0.iter().any(|&a| parent_leaf_crossing_report(eq, s, f, a).is_crossing()))
}
