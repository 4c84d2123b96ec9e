//! Brute-force ground truth: enumerate substitutions by the size of the instantiated equation
//! and test them.
//!
//! Context images range over all ground contexts including the bare hole, so solutions that
//! empty some context variables are found as well.

use std::collections::{BTreeSet, HashMap};

use crate::equation::{is_solution, spare_letter, Equation};
use crate::error::{Error, Result};
use crate::term::{CVar, Letter, Signature, Substitution, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumBounds {
    /// Bound on the node count of `S(u)`.
    pub max_solution_size: usize,
    /// Bound on the node count of a single image; a context's hole counts as a node.
    pub max_per_image_size: usize,
    /// Letters images may use; `None` means the equation's letters plus one absent letter per
    /// arity.
    pub letters: Option<Vec<Letter>>,
}

impl EnumBounds {
    pub fn new(max_solution_size: usize) -> Self {
        EnumBounds { max_solution_size, max_per_image_size: max_solution_size + 1, letters: None }
    }

    pub fn with_letters(mut self, letters: impl IntoIterator<Item = Letter>) -> Self {
        self.letters = Some(letters.into_iter().collect());
        self
    }

    /// Enumerate over the whole signature of `eq`.
    pub fn full_signature(self, eq: &Equation) -> Self {
        let letters: Vec<Letter> = eq.sig.letters().collect();
        self.with_letters(letters)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Sat { solution: Substitution, size: usize },
    BoundedUnsat { bound: usize },
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat { .. })
    }
}

/// The default enumeration alphabet: letters of the equation plus, for every arity up to the
/// maximal one, the least absent letter of that arity.
pub fn default_letters(eq: &Equation) -> Vec<Letter> {
    let mut out = eq.letters();
    for arity in 0..=eq.sig.max_arity() {
        if let Some(l) = spare_letter(eq, arity) {
            out.insert(l);
        }
    }
    out.into_iter().collect()
}

/// Size-indexed pools of ground terms and contexts over a fixed alphabet.
pub struct Pools<'s> {
    sig: &'s Signature,
    letters: Vec<Letter>,
    rank: HashMap<Letter, u32>,
    terms: Vec<Vec<Term>>,
    ctxs: Vec<Vec<Term>>,
}

impl<'s> Pools<'s> {
    pub fn new(sig: &'s Signature, letters: &[Letter]) -> Result<Self> {
        let mut letters: Vec<Letter> = letters.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        letters.sort_by(|a, b| sig.name(*a).cmp(sig.name(*b)));
        if !letters.iter().any(|&l| sig.arity(l) == 0) {
            return Err(Error::NoConstant);
        }
        let rank = letters.iter().enumerate().map(|(i, &l)| (l, i as u32 + 1)).collect();
        Ok(Pools { sig, letters, rank, terms: vec![Vec::new()], ctxs: vec![Vec::new()] })
    }

    fn key(&self, t: &Term) -> Vec<u32> {
        t.nodes().map(|n| n.root_letter().map_or(0, |l| self.rank[&l])).collect()
    }

    fn grow(&mut self, size: usize) {
        while self.terms.len() <= size {
            let s = self.terms.len();
            let mut terms = Vec::new();
            let mut ctxs = Vec::new();
            if s == 1 {
                ctxs.push(Term::Hole);
            }
            for &f in &self.letters.clone() {
                let m = self.sig.arity(f);
                if m == 0 {
                    if s == 1 {
                        terms.push(Term::constant(f));
                    }
                    continue;
                }
                if s < m + 1 {
                    continue;
                }
                for sizes in compositions(s - 1, m) {
                    self.products(&sizes, None, &mut |kids| terms.push(Term::App(f, kids)));
                    for hole in 0..m {
                        self.products(&sizes, Some(hole), &mut |kids| ctxs.push(Term::App(f, kids)));
                    }
                }
            }
            terms.sort_by_cached_key(|t| self.key(t));
            ctxs.sort_by_cached_key(|t| self.key(t));
            self.terms.push(terms);
            self.ctxs.push(ctxs);
        }
    }

    fn products(&self, sizes: &[usize], hole: Option<usize>, emit: &mut impl FnMut(Vec<Term>)) {
        let pools: Vec<&Vec<Term>> = sizes
            .iter()
            .enumerate()
            .map(|(i, &k)| if Some(i) == hole { &self.ctxs[k] } else { &self.terms[k] })
            .collect();
        if pools.iter().any(|p| p.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; pools.len()];
        loop {
            emit(idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect());
            let mut j = pools.len();
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < pools[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    /// Ground terms with exactly `size` nodes.
    pub fn terms(&mut self, size: usize) -> &[Term] {
        self.grow(size);
        &self.terms[size]
    }

    /// Ground contexts with exactly `size` nodes, the hole included.
    pub fn contexts(&mut self, size: usize) -> &[Term] {
        self.grow(size);
        &self.ctxs[size]
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn go(rem: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 1..=rem.saturating_sub(parts - 1) {
            cur.push(k);
            go(rem - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    go(total, parts, &mut cur, &mut out);
    out
}

/// Every ground term of size at most `max_size`, by size and then lexicographically.
pub fn enumerate_ground_terms(sig: &Signature, max_size: usize) -> Result<Vec<Term>> {
    let letters: Vec<Letter> = sig.letters().collect();
    let mut p = Pools::new(sig, &letters)?;
    Ok((1..=max_size).flat_map(|s| p.terms(s).to_vec()).collect())
}

/// Every ground context of size at most `max_size` (the hole counts), by size and then
/// lexicographically.
pub fn enumerate_ground_contexts(sig: &Signature, max_size: usize) -> Result<Vec<Term>> {
    let letters: Vec<Letter> = sig.letters().collect();
    let mut p = Pools::new(sig, &letters)?;
    Ok((1..=max_size).flat_map(|s| p.contexts(s).to_vec()).collect())
}

#[derive(Clone, Copy)]
enum Slot {
    C(CVar),
    V(Var),
}

struct Search<'a, 's> {
    eq: &'a Equation,
    pools: Pools<'s>,
    slots: Vec<(Slot, u64, u64)>,
    base: (u64, u64),
    max_image: usize,
    s: Substitution,
}

impl Search<'_, '_> {
    fn min_weight(slot: Slot) -> u64 {
        match slot {
            Slot::C(_) => 0,
            Slot::V(_) => 1,
        }
    }

    /// Visits every solution with `|S(u)| = n` in enumeration order until `visit` returns false.
    fn run(&mut self, n: u64, visit: &mut dyn FnMut(&Substitution) -> bool) -> bool {
        self.go(0, self.base.0, self.base.1, n, visit)
    }

    fn go(&mut self, i: usize, l: u64, r: u64, n: u64, visit: &mut dyn FnMut(&Substitution) -> bool) -> bool {
        if i == self.slots.len() {
            if l == n && r == n && is_solution(self.eq, &self.s).unwrap_or(false) {
                return visit(&self.s);
            }
            return true;
        }
        let (slot, cu, cv) = self.slots[i];
        let (rest_l, rest_r) = self.slots[i + 1..]
            .iter()
            .fold((0, 0), |(a, b), &(s, x, y)| (a + x * Self::min_weight(s), b + y * Self::min_weight(s)));
        let lo = Self::min_weight(slot);
        let hi = match slot {
            Slot::C(_) => self.max_image as u64 - 1,
            Slot::V(_) => self.max_image as u64,
        };
        for w in lo..=hi {
            let (nl, nr) = (l + cu * w, r + cv * w);
            if nl + rest_l > n || nr + rest_r > n {
                break;
            }
            let images: Vec<Term> = match slot {
                Slot::C(_) => self.pools.contexts(w as usize + 1).to_vec(),
                Slot::V(_) => self.pools.terms(w as usize).to_vec(),
            };
            for img in images {
                match slot {
                    Slot::C(x) => self.s.set_cvar(x, img),
                    Slot::V(x) => self.s.set_var(x, img),
                }
                if !self.go(i + 1, nl, nr, n, visit) {
                    return false;
                }
            }
        }
        true
    }
}

fn search<'a, 's>(eq: &'a Equation, b: &EnumBounds, sig: &'s Signature) -> Result<Search<'a, 's>> {
    let letters = b.letters.clone().unwrap_or_else(|| default_letters(eq));
    let pools = Pools::new(sig, &letters)?;
    let count = |t: &Term| {
        let (mut cs, mut vs): (HashMap<CVar, u64>, HashMap<Var, u64>) = Default::default();
        let mut letters = 0u64;
        for n in t.nodes() {
            match n {
                Term::CVar(x, _) => *cs.entry(*x).or_default() += 1,
                Term::Var(x) => *vs.entry(*x).or_default() += 1,
                Term::Pow(_, e, _) => letters += e,
                Term::App(..) => letters += 1,
                Term::Hole => {}
            }
        }
        (letters, cs, vs)
    };
    let (l0, lc, lv) = count(&eq.lhs);
    let (r0, rc, rv) = count(&eq.rhs);
    let mut slots = Vec::new();
    for x in eq.used_cvars() {
        slots.push((Slot::C(x), *lc.get(&x).unwrap_or(&0), *rc.get(&x).unwrap_or(&0)));
    }
    for x in eq.used_vars() {
        slots.push((Slot::V(x), *lv.get(&x).unwrap_or(&0), *rv.get(&x).unwrap_or(&0)));
    }
    Ok(Search { eq, pools, slots, base: (l0, r0), max_image: b.max_per_image_size.max(1), s: Substitution::new() })
}

/// The smallest solution within the bounds, ties broken by enumeration order.
pub fn oracle_solve(eq: &Equation, b: &EnumBounds) -> OracleVerdict {
    let Ok(mut st) = search(eq, b, &eq.sig) else {
        return OracleVerdict::BoundedUnsat { bound: b.max_solution_size };
    };
    for n in 1..=b.max_solution_size as u64 {
        let mut found = None;
        st.run(n, &mut |s| {
            found = Some(s.clone());
            false
        });
        if let Some(solution) = found {
            debug_assert!(is_solution(eq, &solution).unwrap());
            return OracleVerdict::Sat { solution, size: n as usize };
        }
    }
    OracleVerdict::BoundedUnsat { bound: b.max_solution_size }
}

pub fn minimal_solution_size(eq: &Equation, b: &EnumBounds) -> Option<usize> {
    match oracle_solve(eq, b) {
        OracleVerdict::Sat { size, .. } => Some(size),
        OracleVerdict::BoundedUnsat { .. } => None,
    }
}

/// Every solution with `|S(u)|` within the bounds, smallest first, at most `limit` of them.
pub fn all_solutions(eq: &Equation, b: &EnumBounds, limit: usize) -> Vec<(Substitution, usize)> {
    let mut out = Vec::new();
    let Ok(mut st) = search(eq, b, &eq.sig) else { return out };
    for n in 1..=b.max_solution_size as u64 {
        st.run(n, &mut |s| {
            out.push((s.clone(), n as usize));
            out.len() < limit
        });
        if out.len() >= limit {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::verify_solution;

    #[test]
    fn enumeration_examples() {
        let mut sig = Signature::new();
        let a = sig.add("a", 0).unwrap();
        assert_eq!(enumerate_ground_terms(&sig, 1).unwrap(), vec![Term::constant(a)]);
        let g = sig.add("g", 1).unwrap();
        assert_eq!(enumerate_ground_contexts(&sig, 2).unwrap(), vec![Term::Hole, Term::unary(g, Term::Hole)]);
        let mut prev = 0;
        for n in 1..6 {
            let c = enumerate_ground_terms(&sig, n).unwrap().len();
            assert!(c >= prev);
            prev = c;
        }
        let mut empty = Signature::new();
        empty.add("g", 1).unwrap();
        assert_eq!(enumerate_ground_terms(&empty, 2), Err(Error::NoConstant));
    }

    #[test]
    fn enumeration_counts() {
        let mut sig = Signature::new();
        sig.add("f", 2).unwrap();
        sig.add("a", 0).unwrap();
        // binary trees with n internal nodes: Catalan numbers
        let by_size: Vec<usize> = (1..=7).map(|s| enumerate_ground_terms(&sig, s).unwrap().len()).collect();
        assert_eq!(by_size, vec![1, 1, 2, 2, 4, 4, 9]);
        let ctx = enumerate_ground_contexts(&sig, 3).unwrap();
        assert_eq!(ctx.len(), 3);
        assert!(ctx.iter().all(|t| t.count_holes() == 1));
    }

    #[test]
    fn two_contexts() {
        let eq = Equation::parse("sig f/2 a/0 b/0\ncvar X Y\neq X(a) = Y(b)").unwrap();
        let v = oracle_solve(&eq, &EnumBounds::new(3));
        let OracleVerdict::Sat { solution, size } = v else { panic!() };
        assert_eq!(size, 3);
        assert_eq!(eq.substitution_text(&solution), "X := f(_, b)\nY := f(a, _)\n");
        assert!(verify_solution(&eq, &solution).unwrap());
        assert_eq!(minimal_solution_size(&eq, &EnumBounds::new(6)), Some(3));
    }

    #[test]
    fn simple_verdicts() {
        let eq = Equation::parse("sig a/1 b/1 c/0\neq a(c) = b(c)").unwrap();
        assert_eq!(oracle_solve(&eq, &EnumBounds::new(6)), OracleVerdict::BoundedUnsat { bound: 6 });
        let eq = Equation::parse("sig f/2 a/0 b/0\nvar x\neq x = f(a, b)").unwrap();
        let OracleVerdict::Sat { solution, size } = oracle_solve(&eq, &EnumBounds::new(5)) else { panic!() };
        assert_eq!(size, 3);
        assert_eq!(eq.substitution_text(&solution), "x := f(a, b)\n");
        let eq = Equation::parse("sig c/0\neq c = c").unwrap();
        assert_eq!(minimal_solution_size(&eq, &EnumBounds::new(3)), Some(1));
    }

    #[test]
    fn word_equation() {
        let eq = Equation::parse("sig a/1 b/1 c/0\ncvar X\neq X(a(b(c))) = a(X(b(c)))").unwrap();
        let OracleVerdict::Sat { solution, size } = oracle_solve(&eq, &EnumBounds::new(6)) else { panic!() };
        assert_eq!(size, 3);
        assert_eq!(eq.substitution_text(&solution), "X := _\n");
        let sols = all_solutions(&eq, &EnumBounds::new(4), 10);
        assert_eq!(
            sols.iter().map(|(s, n)| (eq.substitution_text(s), *n)).collect::<Vec<_>>(),
            vec![("X := _\n".to_string(), 3), ("X := a(_)\n".to_string(), 4)]
        );
    }
}
