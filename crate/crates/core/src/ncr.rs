//! Compressions applied to an equation viewed as one tree under an `=` root. Variables, context
//! variables and the root are never compressed.

use std::collections::BTreeSet;

use crate::compress::{ChainCompressor, CompressionLog, Flat, LeafCompressor, PairCompressor, Partition};
use crate::equation::Equation;
use crate::error::Result;
use crate::term::{Letter, Signature, Term};

/// One of the three compressions with its letter table, applicable to the equation and then
/// to any number of solution images so that they share fresh letters.
#[derive(Clone, Debug)]
pub enum EqCompressor {
    Chain(ChainCompressor),
    Pair(PairCompressor),
    Leaf(LeafCompressor),
}

impl EqCompressor {
    pub fn chain(gamma: &BTreeSet<Letter>) -> Self {
        EqCompressor::Chain(ChainCompressor::new(gamma.iter().copied()))
    }

    pub fn pair(p: &Partition) -> Self {
        EqCompressor::Pair(PairCompressor::new(p.clone()))
    }

    pub fn leaf(gamma_ge1: &BTreeSet<Letter>, gamma0: &BTreeSet<Letter>) -> Self {
        EqCompressor::Leaf(LeafCompressor::new(gamma_ge1.iter().copied(), gamma0.iter().copied()))
    }

    fn run(&mut self, flat: &Flat, sig: &mut Signature, log: &mut CompressionLog) -> Result<Flat> {
        match self {
            EqCompressor::Chain(c) => c.apply_flat(flat, sig, log),
            EqCompressor::Pair(c) => c.apply_flat(flat, sig, log),
            EqCompressor::Leaf(c) => c.apply_flat(flat, sig, log),
        }
    }

    pub fn apply_eq(&mut self, eq: &Equation, log: &mut CompressionLog) -> Result<Equation> {
        let mut out = eq.clone();
        let flat = self.run(&Flat::from_equation(&eq.lhs, &eq.rhs), &mut out.sig, log)?;
        (out.lhs, out.rhs) = flat.to_equation();
        Ok(out)
    }

    pub fn apply_term(&mut self, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
        Ok(self.run(&Flat::from_term(t), sig, log)?.to_term())
    }
}

pub fn pair_comp_ncr(p: &Partition, eq: &Equation, log: &mut CompressionLog) -> Result<Equation> {
    p.validate(&eq.sig)?;
    EqCompressor::pair(p).apply_eq(eq, log)
}

pub fn chain_comp_ncr(gamma: &BTreeSet<Letter>, eq: &Equation, log: &mut CompressionLog) -> Result<Equation> {
    EqCompressor::chain(gamma).apply_eq(eq, log)
}

pub fn child_comp_ncr(
    gamma_ge1: &BTreeSet<Letter>,
    gamma0: &BTreeSet<Letter>,
    eq: &Equation,
    log: &mut CompressionLog,
) -> Result<Equation> {
    EqCompressor::leaf(gamma_ge1, gamma0).apply_eq(eq, log)
}

/// Unary letters of the equation.
pub fn unary_letters(eq: &Equation) -> BTreeSet<Letter> {
    eq.letters().into_iter().filter(|&l| eq.sig.arity(l) == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Equation {
        Equation::parse(text).unwrap()
    }

    #[test]
    fn pair_examples() {
        let eq = parse("sig a/1 b/1 c/0\nvar x\ncvar X\neq a(b(x)) = X(a(b(c)))");
        let (a, b) = (eq.sig.lookup("a").unwrap(), eq.sig.lookup("b").unwrap());
        let mut log = CompressionLog::new(&eq.sig);
        let p = Partition::new([a], [b]);
        let out = pair_comp_ncr(&p, &eq, &mut log).unwrap();
        assert_eq!(out.to_string(), "p$0(x) = X(p$0(c))");
        assert_eq!(log.len(), 1);

        let eq2 = parse("sig a/1 b/1 c/0\ncvar X\neq a(X(b(c))) = b(a(c))");
        let out = pair_comp_ncr(&p, &eq2, &mut CompressionLog::new(&eq2.sig)).unwrap();
        assert_eq!(out.to_string(), eq2.to_string());
    }

    #[test]
    fn chain_examples() {
        let eq = parse("sig a/1 c/0\nvar x\ncvar X\neq a(a(x)) = X(a(a(c)))");
        let a = eq.sig.lookup("a").unwrap();
        let out = chain_comp_ncr(&[a].into(), &eq, &mut CompressionLog::new(&eq.sig)).unwrap();
        assert_eq!(out.to_string(), "c$0(x) = X(c$0(c))");

        let eq = parse("sig a/1 c/0\ncvar X\neq a(X(a(c))) = a(a(c))");
        let mut log = CompressionLog::new(&eq.sig);
        let out = chain_comp_ncr(&[a].into(), &eq, &mut log).unwrap();
        assert_eq!(out.to_string(), "a(X(a(c))) = c$0(c)");
    }

    #[test]
    fn child_examples() {
        let eq = parse("sig f/2 a/0 b/0\nvar x\ncvar X\neq f(a, b) = f(a, b)");
        let ge1: BTreeSet<Letter> = [eq.sig.lookup("f").unwrap()].into();
        let g0: BTreeSet<Letter> = [eq.sig.lookup("a").unwrap(), eq.sig.lookup("b").unwrap()].into();
        let out = child_comp_ncr(&ge1, &g0, &eq, &mut CompressionLog::new(&eq.sig)).unwrap();
        assert_eq!(out.size(), 2);
        assert_eq!(out.lhs, out.rhs);

        let eq = parse("sig f/2 a/0 b/0\nvar x\ncvar X\neq f(a, x) = X(a)");
        let out = child_comp_ncr(&ge1, &g0, &eq, &mut CompressionLog::new(&eq.sig)).unwrap();
        assert_eq!(out.to_string(), "l$1(x) = X(a)");
    }
}
