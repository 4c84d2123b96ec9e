//! Seeded random equations and ground trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equation::{normalize_signature, Equation};
use crate::term::{CVar, Letter, Signature, Term, Var, VarTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusParams {
    pub count: usize,
    pub max_letters: usize,
    pub max_arity: usize,
    pub max_vars: usize,
    pub max_cvars: usize,
    /// Bound on `|u| + |v|`.
    pub max_size: usize,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams { count: 500, max_letters: 3, max_arity: 2, max_vars: 2, max_cvars: 2, max_size: 7, seed: 0 }
    }
}

/// Splits `total` into `parts` random positive summands.
fn split(rng: &mut impl Rng, total: usize, parts: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain([total]) {
        out.push(c - prev);
        prev = c;
    }
    out
}

struct Pools {
    constants: Vec<Letter>,
    inner: Vec<(Letter, usize)>,
    vars: Vec<Var>,
    cvars: Vec<CVar>,
}

fn random_term(rng: &mut impl Rng, p: &Pools, size: usize) -> Term {
    if size == 1 {
        let k = p.constants.len() + p.vars.len();
        let i = rng.gen_range(0..k);
        return if i < p.constants.len() { Term::constant(p.constants[i]) } else { Term::Var(p.vars[i - p.constants.len()]) };
    }
    // heads that fit: a letter of arity m needs m + 1 nodes, a context variable two
    let fitting: Vec<(Option<Letter>, usize)> = p
        .inner
        .iter()
        .filter(|&&(_, m)| m < size)
        .map(|&(l, m)| (Some(l), m))
        .chain(p.cvars.iter().map(|_| (None, 1)))
        .collect();
    if fitting.is_empty() {
        return random_term(rng, p, 1);
    }
    let (head, m) = fitting[rng.gen_range(0..fitting.len())];
    let kids: Vec<Term> = split(rng, size - 1, m).into_iter().map(|s| random_term(rng, p, s)).collect();
    match head {
        Some(l) => Term::App(l, kids),
        None => Term::cvar(p.cvars[rng.gen_range(0..p.cvars.len())], kids.into_iter().next().unwrap()),
    }
}

/// One random equation; the letters are `a, b, c, ..` with random arities, at least one of them
/// a constant.
pub fn random_equation(rng: &mut impl Rng, params: &CorpusParams) -> Equation {
    let mut sig = Signature::new();
    let letters = rng.gen_range(1..=params.max_letters.max(1));
    let mut arities: Vec<usize> = (0..letters).map(|_| rng.gen_range(0..=params.max_arity)).collect();
    if !arities.contains(&0) {
        arities[0] = 0;
    }
    let mut pools = Pools { constants: Vec::new(), inner: Vec::new(), vars: Vec::new(), cvars: Vec::new() };
    for (i, &m) in arities.iter().enumerate() {
        let name = ((b'a' + i as u8) as char).to_string();
        let l = sig.add(&name, m).expect("distinct names");
        if m == 0 {
            pools.constants.push(l);
        } else {
            pools.inner.push((l, m));
        }
    }
    let mut vars = VarTable::new();
    for name in ["x", "y"].iter().take(rng.gen_range(0..=params.max_vars.min(2))) {
        pools.vars.push(vars.add_var(name).expect("distinct names"));
    }
    for name in ["X", "Y"].iter().take(rng.gen_range(0..=params.max_cvars.min(2))) {
        pools.cvars.push(vars.add_cvar(name).expect("distinct names"));
    }
    let total = rng.gen_range(2..=params.max_size.max(2));
    let l = rng.gen_range(1..total);
    let lhs = random_term(rng, &pools, l);
    let rhs = random_term(rng, &pools, total - l);
    let eq = Equation::new(lhs, rhs, sig, vars).expect("generated terms are well-formed");
    normalize_signature(&eq).expect("a constant exists")
}

/// `params.count` equations from `params.seed`.
pub fn generate_corpus(params: &CorpusParams) -> Vec<Equation> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.count).map(|_| random_equation(&mut rng, params)).collect()
}

/// A signature with `unary` unary letters `u0, u1, ..`, the binary letter `f` and constants
/// `a`, `b`.
pub fn tree_signature(unary: usize) -> Signature {
    let mut sig = Signature::new();
    sig.add("f", 2).unwrap();
    sig.add("a", 0).unwrap();
    sig.add("b", 0).unwrap();
    for i in 0..unary {
        sig.add(&format!("u{i}"), 1).unwrap();
    }
    sig
}

/// A random ground term with exactly `size` nodes over the letters of `sig`, which needs a
/// constant. Unary letters are favoured so that chains and pairs occur.
pub fn random_ground_term(rng: &mut impl Rng, sig: &Signature, size: usize) -> Term {
    let constants: Vec<Letter> = sig.letters_of_arity(0).collect();
    let unary: Vec<Letter> = sig.letters_of_arity(1).collect();
    let wider: Vec<Letter> = sig.letters().filter(|&l| sig.arity(l) >= 2).collect();
    assert!(!constants.is_empty(), "a constant is needed");
    fn build(
        rng: &mut impl Rng,
        sig: &Signature,
        size: usize,
        constants: &[Letter],
        unary: &[Letter],
        wider: &[Letter],
    ) -> Term {
        if size == 1 {
            return Term::constant(*constants.choose(rng).unwrap());
        }
        let fits: Vec<Letter> = wider.iter().copied().filter(|&l| sig.arity(l) < size).collect();
        let use_unary = !unary.is_empty() && (fits.is_empty() || rng.gen_bool(0.7));
        if use_unary {
            let mut chain = Vec::new();
            let mut rest = size;
            // long chains of one letter make chain compression matter
            let a = *unary.choose(rng).unwrap();
            while rest > 1 && (chain.is_empty() || rng.gen_bool(0.5)) {
                chain.push(if rng.gen_bool(0.5) { a } else { *unary.choose(rng).unwrap() });
                rest -= 1;
            }
            let mut t = build(rng, sig, rest, constants, unary, wider);
            for l in chain.into_iter().rev() {
                t = Term::unary(l, t);
            }
            return t;
        }
        if fits.is_empty() {
            return Term::constant(*constants.choose(rng).unwrap());
        }
        let f = *fits.choose(rng).unwrap();
        let kids = split(rng, size - 1, sig.arity(f)).into_iter().map(|s| build(rng, sig, s, constants, unary, wider)).collect();
        Term::App(f, kids)
    }
    build(rng, sig, size, &constants, &unary, &wider)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_respects_bounds() {
        let params = CorpusParams { count: 200, ..CorpusParams::default() };
        let corpus = generate_corpus(&params);
        assert_eq!(corpus.len(), 200);
        for eq in &corpus {
            assert!(eq.size() <= 7);
            assert!(eq.used_vars().len() <= 2 && eq.used_cvars().len() <= 2);
            assert!(eq.sig.letters().filter(|&l| eq.sig.origin(l) == crate::term::Origin::Input).count() <= 3);
            assert!(eq.sig.max_arity() <= 2);
        }
        let again = generate_corpus(&params);
        assert_eq!(corpus.iter().map(|e| e.to_string()).collect::<Vec<_>>(), again.iter().map(|e| e.to_string()).collect::<Vec<_>>());
    }

    #[test]
    fn ground_terms_have_requested_size() {
        let sig = tree_signature(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for size in [1, 2, 7, 40, 200] {
            let t = random_ground_term(&mut rng, &sig, size);
            assert_eq!(t.size(), size);
            assert!(t.is_ground());
        }
    }
}
