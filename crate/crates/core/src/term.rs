//! Ranked letters, terms with variables and context variables, and substitutions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Interned letter id. Ids index into the owning [`Signature`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Letter(pub(crate) u32);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// First-order variable (arity 0).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub(crate) u32);

/// Context variable (arity 1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CVar(pub(crate) u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Origin {
    Input,
    FreshChain,
    FreshPair,
    FreshLeaf,
    /// Letters added by signature normalization or as spare letters during solving.
    Fresh,
}

impl Origin {
    fn prefix(self) -> &'static str {
        match self {
            Origin::Input => "",
            Origin::FreshChain => "c",
            Origin::FreshPair => "p",
            Origin::FreshLeaf => "l",
            Origin::Fresh => "n",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LetterInfo {
    pub name: String,
    pub arity: usize,
    pub origin: Origin,
}

/// The growing ranked alphabet.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    letters: Vec<LetterInfo>,
    by_name: HashMap<String, Letter>,
    max_arity: usize,
    counter: u64,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an input letter. Re-adding a name with the same arity returns the existing letter.
    pub fn add(&mut self, name: &str, arity: usize) -> Result<Letter> {
        if let Some(&l) = self.by_name.get(name) {
            let found = self.arity(l);
            if found != arity {
                return Err(Error::ArityMismatch { name: name.to_string(), expected: found, found: arity });
            }
            return Ok(l);
        }
        if name == "_" || name == "=" {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.max_arity = self.max_arity.max(arity);
        Ok(self.push(name.to_string(), arity, Origin::Input))
    }

    fn push(&mut self, name: String, arity: usize, origin: Origin) -> Letter {
        let l = Letter(self.letters.len() as u32);
        self.by_name.insert(name.clone(), l);
        self.letters.push(LetterInfo { name, arity, origin });
        l
    }

    /// Creates a fresh letter named `origin$counter`. The counter is monotone, so replaying the
    /// same sequence of requests yields the same names.
    pub fn fresh_letter(&mut self, arity: usize, origin: Origin) -> Result<Letter> {
        if arity > self.max_arity {
            return Err(Error::ArityTooLarge { arity, max: self.max_arity });
        }
        let origin = if origin == Origin::Input { Origin::Fresh } else { origin };
        loop {
            let name = format!("{}${}", origin.prefix(), self.counter);
            self.counter += 1;
            if !self.by_name.contains_key(&name) {
                return Ok(self.push(name, arity, origin));
            }
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Letter> {
        self.by_name.get(name).copied()
    }

    pub fn info(&self, l: Letter) -> &LetterInfo {
        &self.letters[l.index()]
    }

    pub fn arity(&self, l: Letter) -> usize {
        self.letters[l.index()].arity
    }

    pub fn name(&self, l: Letter) -> &str {
        &self.letters[l.index()].name
    }

    pub fn origin(&self, l: Letter) -> Origin {
        self.letters[l.index()].origin
    }

    pub fn contains(&self, l: Letter) -> bool {
        l.index() < self.letters.len()
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.letters.len() as u32).map(Letter)
    }

    pub fn letters_of_arity(&self, arity: usize) -> impl Iterator<Item = Letter> + '_ {
        self.letters().filter(move |&l| self.arity(l) == arity)
    }

    pub fn has_constant(&self) -> bool {
        self.letters.iter().any(|i| i.arity == 0)
    }

    /// Letters in lexicographic order of their names.
    pub fn by_name_order(&self) -> Vec<Letter> {
        let mut ls: Vec<Letter> = self.letters().collect();
        ls.sort_by(|a, b| self.name(*a).cmp(self.name(*b)));
        ls
    }
}

/// Names of variables and context variables of an equation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarTable {
    vars: Vec<String>,
    cvars: Vec<String>,
    counter: u64,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: &str) -> Result<Var> {
        if self.var(name).is_some() || self.cvar(name).is_some() {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.vars.push(name.to_string());
        Ok(Var(self.vars.len() as u32 - 1))
    }

    pub fn add_cvar(&mut self, name: &str) -> Result<CVar> {
        if self.var(name).is_some() || self.cvar(name).is_some() {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.cvars.push(name.to_string());
        Ok(CVar(self.cvars.len() as u32 - 1))
    }

    /// A fresh variable named `v$counter`.
    pub fn fresh_var(&mut self) -> Var {
        loop {
            let name = format!("v${}", self.counter);
            self.counter += 1;
            if self.var(&name).is_none() && self.cvar(&name).is_none() {
                self.vars.push(name);
                return Var(self.vars.len() as u32 - 1);
            }
        }
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|n| n == name).map(|i| Var(i as u32))
    }

    pub fn cvar(&self, name: &str) -> Option<CVar> {
        self.cvars.iter().position(|n| n == name).map(|i| CVar(i as u32))
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.vars[v.0 as usize]
    }

    pub fn cvar_name(&self, v: CVar) -> &str {
        &self.cvars[v.0 as usize]
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.vars.len() as u32).map(Var)
    }

    pub fn cvars(&self) -> impl Iterator<Item = CVar> + '_ {
        (0..self.cvars.len() as u32).map(CVar)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_cvars(&self) -> usize {
        self.cvars.len()
    }
}

/// A term over letters, variables, context variables and the hole.
///
/// `Pow(a, l, t)` is the unary chain `a^l` above `t`, stored as a single node.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    App(Letter, Vec<Term>),
    Pow(Letter, u64, Box<Term>),
    Var(Var),
    CVar(CVar, Box<Term>),
    Hole,
}

impl Term {
    pub fn constant(l: Letter) -> Term {
        Term::App(l, Vec::new())
    }

    pub fn app(l: Letter, children: Vec<Term>) -> Term {
        Term::App(l, children)
    }

    pub fn unary(l: Letter, child: Term) -> Term {
        Term::App(l, vec![child])
    }

    pub fn cvar(x: CVar, child: Term) -> Term {
        Term::CVar(x, Box::new(child))
    }

    /// `a^l` above `t`; `l = 1` yields a plain node.
    pub fn pow(a: Letter, l: u64, t: Term) -> Term {
        match l {
            0 => t,
            1 => Term::App(a, vec![t]),
            _ => Term::Pow(a, l, Box::new(t)),
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::App(_, cs) => cs,
            Term::Pow(_, _, c) | Term::CVar(_, c) => std::slice::from_ref(c.as_ref()),
            Term::Var(_) | Term::Hole => &[],
        }
    }

    /// Number of nodes; a stored chain counts as one node.
    pub fn size(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            n += 1;
            stack.extend(t.children());
        }
        n
    }

    /// Number of nodes with stored chains expanded. For a ground term this is its size after
    /// expansion; for a term with variables it is a lower bound on the size of any non-empty
    /// instance, the hole not counted.
    pub fn weight(&self) -> u64 {
        let mut n = 0u64;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            n = n.saturating_add(match t {
                Term::Pow(_, l, _) => *l,
                Term::Hole => 0,
                _ => 1,
            });
            stack.extend(t.children());
        }
        n
    }

    pub fn count_holes(&self) -> usize {
        self.nodes().filter(|t| matches!(t, Term::Hole)).count()
    }

    pub fn is_ground(&self) -> bool {
        self.nodes().all(|t| matches!(t, Term::App(..) | Term::Pow(..)))
    }

    /// Ground context: no variables and exactly one hole.
    pub fn is_ground_context(&self) -> bool {
        let mut holes = 0;
        for t in self.nodes() {
            match t {
                Term::Hole => holes += 1,
                Term::Var(_) | Term::CVar(..) => return false,
                _ => {}
            }
        }
        holes == 1
    }

    /// Pre-order iterator over all subterms.
    pub fn nodes(&self) -> Nodes<'_> {
        Nodes { stack: vec![self] }
    }

    pub fn root_letter(&self) -> Option<Letter> {
        match self {
            Term::App(l, _) | Term::Pow(l, _, _) => Some(*l),
            _ => None,
        }
    }

    pub fn letters(&self) -> BTreeSet<Letter> {
        self.nodes().filter_map(Term::root_letter).collect()
    }

    pub fn var_occurrences(&self) -> usize {
        self.nodes().filter(|t| matches!(t, Term::Var(_))).count()
    }

    pub fn cvar_occurrences(&self) -> usize {
        self.nodes().filter(|t| matches!(t, Term::CVar(..))).count()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.nodes()
            .filter_map(|t| if let Term::Var(v) = t { Some(*v) } else { None })
            .collect()
    }

    pub fn cvars(&self) -> BTreeSet<CVar> {
        self.nodes()
            .filter_map(|t| if let Term::CVar(x, _) = t { Some(*x) } else { None })
            .collect()
    }

    /// Maximal arity of a letter occurring in the term.
    pub fn max_arity(&self, sig: &Signature) -> usize {
        self.nodes().filter_map(Term::root_letter).map(|l| sig.arity(l)).max().unwrap_or(0)
    }

    /// Rewrites the term bottom-up: `f` receives each node with already rewritten children.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let t = match self {
            Term::App(l, cs) => Term::App(*l, cs.iter().map(|c| c.map_bottom_up(f)).collect()),
            Term::Pow(l, e, c) => Term::Pow(*l, *e, Box::new(c.map_bottom_up(f))),
            Term::CVar(x, c) => Term::CVar(*x, Box::new(c.map_bottom_up(f))),
            Term::Var(_) | Term::Hole => self.clone(),
        };
        f(t)
    }

    /// Expands stored chains into explicit nodes.
    pub fn expand_powers(&self) -> Term {
        self.map_bottom_up(&mut |t| match t {
            Term::Pow(a, l, c) => {
                let mut t = *c;
                for _ in 0..l {
                    t = Term::App(a, vec![t]);
                }
                t
            }
            t => t,
        })
    }

    pub fn display<'a>(&'a self, sig: &'a Signature, vars: &'a VarTable) -> TermDisplay<'a> {
        TermDisplay { term: self, sig, vars }
    }
}

pub struct Nodes<'a> {
    stack: Vec<&'a Term>,
}

impl<'a> Iterator for Nodes<'a> {
    type Item = &'a Term;

    fn next(&mut self) -> Option<&'a Term> {
        let t = self.stack.pop()?;
        self.stack.extend(t.children().iter().rev());
        Some(t)
    }
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    sig: &'a Signature,
    vars: &'a VarTable,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.sig, self.vars)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, sig: &Signature, vars: &VarTable) -> fmt::Result {
    let (head, children): (String, &[Term]) = match t {
        Term::App(l, cs) => (sig.name(*l).to_string(), cs),
        Term::Pow(l, e, c) => (format!("{}^{}", sig.name(*l), e), std::slice::from_ref(c.as_ref())),
        Term::Var(v) => (vars.var_name(*v).to_string(), &[]),
        Term::CVar(x, c) => (vars.cvar_name(*x).to_string(), std::slice::from_ref(c.as_ref())),
        Term::Hole => ("_".to_string(), &[]),
    };
    f.write_str(&head)?;
    if !children.is_empty() {
        f.write_str("(")?;
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_term(f, c, sig, vars)?;
        }
        f.write_str(")")?;
    }
    Ok(())
}

/// True iff every node's child count matches its label and every letter belongs to `sig`.
pub fn well_formed(t: &Term, sig: &Signature) -> bool {
    t.nodes().all(|n| match n {
        Term::App(l, cs) => sig.contains(*l) && sig.arity(*l) == cs.len(),
        Term::Pow(l, e, _) => sig.contains(*l) && sig.arity(*l) == 1 && *e >= 1,
        Term::Var(_) | Term::CVar(..) | Term::Hole => true,
    })
}

pub fn term_size(t: &Term) -> usize {
    t.size()
}

/// Replaces the single hole of `s` by `t`.
pub fn compose_context(s: &Term, t: &Term) -> Result<Term> {
    let holes = s.count_holes();
    if holes != 1 {
        return Err(Error::NotAContext(holes));
    }
    Ok(fill_hole(s, t))
}

pub(crate) fn fill_hole(s: &Term, t: &Term) -> Term {
    match s {
        Term::Hole => t.clone(),
        Term::App(l, cs) => Term::App(*l, cs.iter().map(|c| fill_hole(c, t)).collect()),
        Term::Pow(l, e, c) => Term::Pow(*l, *e, Box::new(fill_hole(c, t))),
        Term::CVar(x, c) => Term::CVar(*x, Box::new(fill_hole(c, t))),
        Term::Var(_) => s.clone(),
    }
}

/// Assigns ground contexts to context variables and ground terms to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    pub cvars: BTreeMap<CVar, Term>,
    pub vars: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_cvar(&mut self, x: CVar, ctx: Term) {
        self.cvars.insert(x, ctx);
    }

    pub fn set_var(&mut self, x: Var, t: Term) {
        self.vars.insert(x, t);
    }

    pub fn cvar(&self, x: CVar) -> Option<&Term> {
        self.cvars.get(&x)
    }

    pub fn var(&self, x: Var) -> Option<&Term> {
        self.vars.get(&x)
    }

    /// Homomorphic extension to `t`; stored chains are expanded.
    pub fn apply(&self, t: &Term, vars: &VarTable) -> Result<Term> {
        Ok(match t {
            Term::App(l, cs) => {
                Term::App(*l, cs.iter().map(|c| self.apply(c, vars)).collect::<Result<_>>()?)
            }
            Term::Pow(a, l, c) => {
                let mut r = self.apply(c, vars)?;
                for _ in 0..*l {
                    r = Term::App(*a, vec![r]);
                }
                r
            }
            Term::Var(v) => self
                .vars
                .get(v)
                .ok_or_else(|| Error::UndefinedVariable(vars.var_name(*v).to_string()))?
                .expand_powers(),
            Term::CVar(x, c) => {
                let ctx = self
                    .cvars
                    .get(x)
                    .ok_or_else(|| Error::UndefinedVariable(vars.cvar_name(*x).to_string()))?;
                compose_context(&ctx.expand_powers(), &self.apply(c, vars)?)?
            }
            Term::Hole => return Err(Error::PreconditionViolated("hole in term".into())),
        })
    }

    /// Sum of the image sizes with the holes not counted.
    pub fn size(&self) -> u64 {
        self.cvars.values().chain(self.vars.values()).map(Term::weight).sum()
    }

    /// Applies `f` to every image.
    pub fn map_images(&self, mut f: impl FnMut(&Term) -> Term) -> Substitution {
        Substitution {
            cvars: self.cvars.iter().map(|(k, v)| (*k, f(v))).collect(),
            vars: self.vars.iter().map(|(k, v)| (*k, f(v))).collect(),
        }
    }
}

pub fn apply_substitution(t: &Term, s: &Substitution, vars: &VarTable) -> Result<Term> {
    s.apply(t, vars)
}

// ---------------------------------------------------------------------------------------------
// Text syntax

pub(crate) struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
}

#[derive(Debug, PartialEq, Eq, Clone)]
pub(crate) enum Tok {
    Name(String),
    Int(u64),
    LParen,
    RParen,
    Comma,
    Caret,
    Eq,
    Slash,
    Hole,
    Other(char),
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str, line: usize) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line, line_start: 0 }
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { line: self.line, col: self.pos - self.line_start + 1, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            if self.src[self.pos] == b'\n' {
                self.line += 1;
                self.line_start = self.pos + 1;
            }
            self.pos += 1;
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    pub(crate) fn peek(&mut self) -> Option<Tok> {
        let save = (self.pos, self.line, self.line_start);
        let t = self.next_tok();
        (self.pos, self.line, self.line_start) = save;
        t
    }

    pub(crate) fn next_tok(&mut self) -> Option<Tok> {
        self.skip_ws();
        let c = *self.src.get(self.pos)? as char;
        let start = self.pos;
        self.pos += 1;
        Some(match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '^' => Tok::Caret,
            '=' => Tok::Eq,
            '/' => Tok::Slash,
            '_' => Tok::Hole,
            c if c.is_ascii_digit() => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Tok::Int(s.parse().unwrap_or(u64::MAX))
            }
            c if c.is_ascii_alphabetic() => {
                while self.pos < self.src.len() {
                    let d = self.src[self.pos];
                    if d.is_ascii_alphanumeric() || d == b'_' || d == b'$' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                Tok::Name(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
            }
            c => Tok::Other(c),
        })
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<()> {
        match self.next_tok() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(self.error(format!("expected {tok:?}, found {t:?}"))),
            None => Err(self.error(format!("expected {tok:?}, found end of input"))),
        }
    }
}

/// Parses a term, resolving names against the signature and variable tables.
pub fn parse_term(src: &str, sig: &Signature, vars: &VarTable, allow_hole: bool) -> Result<Term> {
    let mut lx = Lexer::new(src, 1);
    let t = parse_term_with(&mut lx, sig, vars, allow_hole)?;
    if !lx.at_end() {
        return Err(lx.error("trailing input"));
    }
    Ok(t)
}

pub(crate) fn parse_term_with(
    lx: &mut Lexer<'_>,
    sig: &Signature,
    vars: &VarTable,
    allow_hole: bool,
) -> Result<Term> {
    let name = match lx.next_tok() {
        Some(Tok::Name(n)) => n,
        Some(Tok::Hole) if allow_hole => return Ok(Term::Hole),
        Some(Tok::Hole) => return Err(lx.error("hole `_` is only allowed in substitutions")),
        Some(t) => return Err(lx.error(format!("expected a name, found {t:?}"))),
        None => return Err(lx.error("expected a term, found end of input")),
    };
    let mut exponent = None;
    if lx.peek() == Some(Tok::Caret) {
        lx.next_tok();
        match lx.next_tok() {
            Some(Tok::Int(e)) if e >= 1 => exponent = Some(e),
            _ => return Err(lx.error("expected a positive exponent")),
        }
    }
    let mut children = Vec::new();
    if lx.peek() == Some(Tok::LParen) {
        lx.next_tok();
        loop {
            children.push(parse_term_with(lx, sig, vars, allow_hole)?);
            match lx.next_tok() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => return Err(lx.error("expected `,` or `)`")),
            }
        }
    }
    let mismatch = |expected: usize, found: usize| Error::ArityMismatch { name: name.clone(), expected, found };
    if let Some(l) = sig.lookup(&name) {
        let ar = sig.arity(l);
        if children.len() != ar {
            return Err(mismatch(ar, children.len()));
        }
        return Ok(match exponent {
            Some(e) if ar == 1 => Term::pow(l, e, children.pop().unwrap()),
            Some(_) => return Err(lx.error("exponent on a non-unary letter")),
            None => Term::App(l, children),
        });
    }
    if exponent.is_some() {
        return Err(lx.error("exponent on a variable"));
    }
    if let Some(v) = vars.var(&name) {
        if !children.is_empty() {
            return Err(mismatch(0, children.len()));
        }
        return Ok(Term::Var(v));
    }
    if let Some(x) = vars.cvar(&name) {
        if children.len() != 1 {
            return Err(mismatch(1, children.len()));
        }
        return Ok(Term::cvar(x, children.pop().unwrap()));
    }
    Err(lx.error(format!("unknown name `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> (Signature, Letter, Letter, Letter, Letter) {
        let mut s = Signature::new();
        let f = s.add("f", 2).unwrap();
        let g = s.add("g", 1).unwrap();
        let a = s.add("a", 0).unwrap();
        let b = s.add("b", 0).unwrap();
        (s, f, g, a, b)
    }

    #[test]
    fn well_formedness() {
        let (s, f, _, a, _) = sig();
        assert!(!well_formed(&Term::app(f, vec![Term::constant(a)]), &s));
        assert!(well_formed(&Term::constant(a), &s));
        let mut vt = VarTable::new();
        let x = vt.add_cvar("X").unwrap();
        assert!(well_formed(&Term::cvar(x, Term::constant(a)), &s));
    }

    #[test]
    fn substitution_on_two_contexts() {
        let (s, f, _, a, b) = sig();
        let mut vt = VarTable::new();
        let x = vt.add_cvar("X").unwrap();
        let v = vt.add_var("x").unwrap();
        let mut sub = Substitution::new();
        sub.set_cvar(x, Term::app(f, vec![Term::Hole, Term::constant(b)]));
        let t = Term::cvar(x, Term::constant(a));
        let r = sub.apply(&t, &vt).unwrap();
        assert_eq!(r, Term::app(f, vec![Term::constant(a), Term::constant(b)]));
        assert_eq!(sub.apply(&Term::constant(a), &vt).unwrap(), Term::constant(a));
        assert!(matches!(sub.apply(&Term::Var(v), &vt), Err(Error::UndefinedVariable(_))));
        let _ = s;
    }

    #[test]
    fn composition() {
        let (_, f, g, a, b) = sig();
        assert_eq!(compose_context(&Term::Hole, &Term::constant(a)).unwrap(), Term::constant(a));
        let fb = Term::app(f, vec![Term::Hole, Term::constant(b)]);
        let gf = compose_context(&Term::unary(g, Term::Hole), &fb).unwrap();
        assert_eq!(
            compose_context(&gf, &Term::constant(a)).unwrap(),
            Term::unary(g, Term::app(f, vec![Term::constant(a), Term::constant(b)]))
        );
        assert_eq!(compose_context(&Term::constant(a), &Term::constant(b)), Err(Error::NotAContext(0)));
        let two = Term::app(f, vec![Term::Hole, Term::Hole]);
        assert_eq!(compose_context(&two, &Term::constant(b)), Err(Error::NotAContext(2)));
    }

    #[test]
    fn fresh_letters() {
        let (mut s, ..) = sig();
        let p = s.fresh_letter(1, Origin::FreshPair).unwrap();
        let q = s.fresh_letter(1, Origin::FreshPair).unwrap();
        assert_ne!(p, q);
        assert_eq!(s.name(p), "p$0");
        assert_eq!(s.name(q), "p$1");
        assert_eq!(s.fresh_letter(3, Origin::FreshPair), Err(Error::ArityTooLarge { arity: 3, max: 2 }));
        let (mut s2, ..) = sig();
        s2.fresh_letter(1, Origin::FreshPair).unwrap();
        let q2 = s2.fresh_letter(1, Origin::FreshPair).unwrap();
        assert_eq!(s2.name(q2), "p$1");
    }

    #[test]
    fn sizes() {
        let (_, f, g, a, b) = sig();
        let mut vt = VarTable::new();
        let x = vt.add_cvar("X").unwrap();
        assert_eq!(term_size(&Term::constant(a)), 1);
        assert_eq!(term_size(&Term::app(f, vec![Term::constant(a), Term::constant(b)])), 3);
        assert_eq!(term_size(&Term::cvar(x, Term::constant(a))), 2);
        let p = Term::pow(g, 5, Term::constant(a));
        assert_eq!(p.size(), 2);
        assert_eq!(p.weight(), 6);
        assert_eq!(p.expand_powers().size(), 6);
    }

    #[test]
    fn parse_and_print() {
        let (s, ..) = sig();
        let mut vt = VarTable::new();
        vt.add_cvar("X").unwrap();
        vt.add_var("x").unwrap();
        let t = parse_term("f(X(g^3(a)), x)", &s, &vt, false).unwrap();
        assert_eq!(t.display(&s, &vt).to_string(), "f(X(g^3(a)), x)");
        assert!(matches!(parse_term("f(a)", &s, &vt, false), Err(Error::ArityMismatch { .. })));
        assert!(matches!(parse_term("f(_, a)", &s, &vt, false), Err(Error::Syntax { .. })));
        let c = parse_term("f(_, a)", &s, &vt, true).unwrap();
        assert!(c.is_ground_context());
    }
}
