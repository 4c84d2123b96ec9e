//! Local tree compression: chain, pair and leaf compression, the combined round, partition
//! search, and log-based decompression.
//!
//! All passes run over a flattened pre-order copy of the tree with an explicit work stack, so
//! tree height never turns into recursion depth. Every pass classifies nodes against the labels
//! of its input and then rewrites, which gives the parallel semantics of the compressions: a
//! letter introduced by a pass is never examined by the same pass.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::term::{CVar, Letter, Origin, Signature, Term, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Label {
    Letter(Letter),
    Pow(Letter, u64),
    Var(Var),
    CVar(CVar),
    Hole,
    /// Root of an equation viewed as a tree; never a member of any compression alphabet.
    EqRoot,
}

/// Pre-order flattening: node 0 is the root and every parent precedes its children.
#[derive(Clone, Debug, Default)]
pub(crate) struct Flat {
    labels: Vec<Label>,
    children: Vec<Vec<usize>>,
}

impl Flat {
    pub(crate) fn from_term(t: &Term) -> Flat {
        let mut flat = Flat::default();
        flat.push_term(t, None);
        flat
    }

    pub(crate) fn from_equation(lhs: &Term, rhs: &Term) -> Flat {
        let mut flat = Flat { labels: vec![Label::EqRoot], children: vec![Vec::new()] };
        flat.push_term(lhs, Some(0));
        flat.push_term(rhs, Some(0));
        flat
    }

    fn push_term(&mut self, t: &Term, parent: Option<usize>) {
        let mut stack = vec![(t, parent)];
        while let Some((t, parent)) = stack.pop() {
            let label = match t {
                Term::App(l, _) => Label::Letter(*l),
                Term::Pow(l, e, _) => Label::Pow(*l, *e),
                Term::Var(v) => Label::Var(*v),
                Term::CVar(x, _) => Label::CVar(*x),
                Term::Hole => Label::Hole,
            };
            let idx = self.push_node(label, parent);
            for c in t.children().iter().rev() {
                stack.push((c, Some(idx)));
            }
        }
    }

    fn push_node(&mut self, label: Label, parent: Option<usize>) -> usize {
        let idx = self.labels.len();
        self.labels.push(label);
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(idx);
        }
        idx
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub(crate) fn kids(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.len()];
        for (i, cs) in self.children.iter().enumerate() {
            for &c in cs {
                p[c] = Some(i);
            }
        }
        p
    }

    fn build(&self, root: usize) -> Term {
        // Children carry larger indices than their parent, so a reverse sweep sees every
        // child before its parent.
        let mut built: Vec<Option<Term>> = vec![None; self.len()];
        for i in (root..self.len()).rev() {
            let mut take = |j: usize| built[j].take().expect("child built before parent");
            let t = match self.labels[i] {
                Label::Letter(l) => Term::App(l, self.children[i].iter().map(|&j| take(j)).collect()),
                Label::Pow(l, e) => Term::Pow(l, e, Box::new(take(self.children[i][0]))),
                Label::Var(v) => Term::Var(v),
                Label::CVar(x) => Term::CVar(x, Box::new(take(self.children[i][0]))),
                Label::Hole => Term::Hole,
                Label::EqRoot => continue,
            };
            built[i] = Some(t);
        }
        built[root].take().expect("root built")
    }

    pub(crate) fn to_term(&self) -> Term {
        self.build(0)
    }

    pub(crate) fn to_equation(&self) -> (Term, Term) {
        debug_assert_eq!(self.labels[0], Label::EqRoot);
        let (l, r) = (self.children[0][0], self.children[0][1]);
        // `build` walks indices from `root` upward; the right side occupies the tail.
        let rhs = self.build(r);
        let lhs = self.truncated(r).build(l);
        (lhs, rhs)
    }

    fn truncated(&self, end: usize) -> Flat {
        Flat {
            labels: self.labels[..end].to_vec(),
            children: self.children[..end].iter().map(|cs| cs.iter().copied().filter(|&c| c < end).collect()).collect(),
        }
    }

    /// Rebuilds the tree top-down. `step` maps a reached node to its new label and the nodes
    /// that become its children; nodes not returned by any step are dropped.
    fn rebuild(&self, mut step: impl FnMut(usize) -> Result<(Label, Vec<usize>)>) -> Result<Flat> {
        let mut out = Flat::default();
        let mut stack = vec![(0usize, None)];
        while let Some((i, parent)) = stack.pop() {
            let (label, kids) = step(i)?;
            let idx = out.push_node(label, parent);
            for &c in kids.iter().rev() {
                stack.push((c, Some(idx)));
            }
        }
        Ok(out)
    }

    fn unary_letter(&self, i: usize, sig: &Signature) -> Option<Letter> {
        match self.labels[i] {
            Label::Letter(l) if sig.arity(l) == 1 => Some(l),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompressionEvent {
    /// `letter^exponent` replaced by the unary `into`.
    Chain { letter: Letter, exponent: u64, into: Letter },
    /// The 2-chain `top bottom` replaced by the unary `into`.
    Pair { top: Letter, bottom: Letter, into: Letter },
    /// `parent` with constant children at the given 1-based positions replaced by `into`.
    Leaf { parent: Letter, absorbed: Vec<(usize, Letter)>, into: Letter },
}

impl CompressionEvent {
    pub fn into_letter(&self) -> Letter {
        match self {
            CompressionEvent::Chain { into, .. }
            | CompressionEvent::Pair { into, .. }
            | CompressionEvent::Leaf { into, .. } => *into,
        }
    }

    pub fn to_line(&self, sig: &Signature) -> String {
        match self {
            CompressionEvent::Chain { letter, exponent, into } => {
                format!("CHAIN {} {} -> {}", sig.name(*letter), exponent, sig.name(*into))
            }
            CompressionEvent::Pair { top, bottom, into } => {
                format!("PAIR {} {} -> {}", sig.name(*top), sig.name(*bottom), sig.name(*into))
            }
            CompressionEvent::Leaf { parent, absorbed, into } => {
                let list: Vec<String> = absorbed.iter().map(|(i, a)| format!("{}:{}", i, sig.name(*a))).collect();
                format!("LEAF {} [{}] -> {}", sig.name(*parent), list.join(","), sig.name(*into))
            }
        }
    }
}

/// Append-only, replayable record of compression events.
#[derive(Clone, Debug)]
pub struct CompressionLog {
    events: Vec<CompressionEvent>,
    initial: Signature,
    index: HashMap<Letter, usize>,
}

impl CompressionLog {
    pub fn new(initial: &Signature) -> Self {
        CompressionLog { events: Vec::new(), initial: initial.clone(), index: HashMap::new() }
    }

    pub fn push(&mut self, e: CompressionEvent) {
        let into = e.into_letter();
        debug_assert!(!self.index.contains_key(&into), "letter introduced twice");
        self.index.insert(into, self.events.len());
        self.events.push(e);
    }

    pub fn events(&self) -> &[CompressionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn initial_alphabet(&self) -> &Signature {
        &self.initial
    }

    pub fn event_for(&self, l: Letter) -> Option<&CompressionEvent> {
        self.index.get(&l).map(|&i| &self.events[i])
    }

    pub fn extend_from(&mut self, other: &CompressionLog) {
        for e in &other.events {
            if !self.index.contains_key(&e.into_letter()) {
                self.push(e.clone());
            }
        }
    }

    pub fn to_text(&self, sig: &Signature) -> String {
        let mut s = String::new();
        for e in &self.events {
            let _ = writeln!(s, "{}", e.to_line(sig));
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    pub gamma1: BTreeSet<Letter>,
    pub gamma2: BTreeSet<Letter>,
}

impl Partition {
    pub fn new(gamma1: impl IntoIterator<Item = Letter>, gamma2: impl IntoIterator<Item = Letter>) -> Self {
        Partition { gamma1: gamma1.into_iter().collect(), gamma2: gamma2.into_iter().collect() }
    }

    pub fn validate(&self, sig: &Signature) -> Result<()> {
        if let Some(l) = self.gamma1.intersection(&self.gamma2).next() {
            return Err(Error::InconsistentGuess(format!("`{}` on both sides of the partition", sig.name(*l))));
        }
        if let Some(l) = self.gamma1.iter().chain(&self.gamma2).find(|&&l| sig.arity(l) != 1) {
            return Err(Error::InconsistentGuess(format!("`{}` in a partition is not unary", sig.name(*l))));
        }
        Ok(())
    }

    pub fn to_line(&self, sig: &Signature) -> String {
        let names = |s: &BTreeSet<Letter>| s.iter().map(|l| sig.name(*l)).collect::<Vec<_>>().join(" ");
        format!("PARTITION {} | {}", names(&self.gamma1), names(&self.gamma2)).replace("  ", " ").trim_end().to_string()
    }
}

/// Every partition of `letters`, in mask order: bit `i` set puts `letters[i]` into the top side.
pub fn all_partitions(letters: &[Letter]) -> impl Iterator<Item = Partition> + '_ {
    let n = letters.len();
    (0u64..(1u64 << n)).map(move |mask| {
        let (mut g1, mut g2) = (BTreeSet::new(), BTreeSet::new());
        for (i, &l) in letters.iter().enumerate() {
            if mask >> i & 1 == 1 {
                g1.insert(l);
            } else {
                g2.insert(l);
            }
        }
        Partition { gamma1: g1, gamma2: g2 }
    })
}

fn fresh(sig: &mut Signature, arity: usize, origin: Origin) -> Result<Letter> {
    sig.fresh_letter(arity, origin)
}

/// Chain compression for a fixed set of unary letters. Reusing one compressor across several
/// trees gives them a shared letter per `(a, l)`.
#[derive(Clone, Debug)]
pub struct ChainCompressor {
    gamma: BTreeSet<Letter>,
    table: HashMap<(Letter, u64), Letter>,
}

impl ChainCompressor {
    pub fn new(gamma: impl IntoIterator<Item = Letter>) -> Self {
        ChainCompressor { gamma: gamma.into_iter().collect(), table: HashMap::new() }
    }

    pub fn apply(&mut self, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
        Ok(self.apply_flat(&Flat::from_term(t), sig, log)?.to_term())
    }

    pub(crate) fn apply_flat(&mut self, t: &Flat, sig: &mut Signature, log: &mut CompressionLog) -> Result<Flat> {
        let parents = t.parents();
        let chain_letter = |i: usize| match t.label(i) {
            Label::Letter(l) if sig.arity(l) == 1 => Some((l, 1)),
            Label::Pow(l, e) => Some((l, e)),
            _ => None,
        };
        let mut hits = Vec::new();
        let mut plan: HashMap<usize, (Label, usize)> = HashMap::new();
        for i in 0..t.len() {
            let Some((a, _)) = chain_letter(i) else { continue };
            if !self.gamma.contains(&a) {
                continue;
            }
            if parents[i].and_then(chain_letter).map(|(p, _)| p) == Some(a) {
                continue;
            }
            let (mut j, mut len) = (i, 0u64);
            while let Some((b, e)) = chain_letter(j) {
                if b != a {
                    break;
                }
                len = len.saturating_add(e);
                j = t.kids(j)[0];
            }
            hits.push((i, a, len, j));
        }
        for (i, a, len, below) in hits {
            let label = if len == 1 {
                Label::Letter(a)
            } else {
                let into = match self.table.get(&(a, len)) {
                    Some(&l) => l,
                    None => {
                        let l = fresh(sig, 1, Origin::FreshChain)?;
                        self.table.insert((a, len), l);
                        log.push(CompressionEvent::Chain { letter: a, exponent: len, into: l });
                        l
                    }
                };
                Label::Letter(into)
            };
            plan.insert(i, (label, below));
        }
        t.rebuild(|i| {
            Ok(match plan.get(&i) {
                Some(&(label, below)) => (label, vec![below]),
                None => (t.label(i), t.kids(i).to_vec()),
            })
        })
    }
}

/// Pair compression for a fixed partition.
#[derive(Clone, Debug)]
pub struct PairCompressor {
    partition: Partition,
    table: HashMap<(Letter, Letter), Letter>,
}

impl PairCompressor {
    pub fn new(partition: Partition) -> Self {
        PairCompressor { partition, table: HashMap::new() }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn apply(&mut self, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
        Ok(self.apply_flat(&Flat::from_term(t), sig, log)?.to_term())
    }

    pub(crate) fn apply_flat(&mut self, t: &Flat, sig: &mut Signature, log: &mut CompressionLog) -> Result<Flat> {
        let mut plan: HashMap<usize, (Letter, usize)> = HashMap::new();
        for i in 0..t.len() {
            let Some(a) = t.unary_letter(i, sig) else { continue };
            if !self.partition.gamma1.contains(&a) {
                continue;
            }
            let child = t.kids(i)[0];
            let Some(b) = t.unary_letter(child, sig) else { continue };
            if !self.partition.gamma2.contains(&b) {
                continue;
            }
            let into = match self.table.get(&(a, b)) {
                Some(&l) => l,
                None => {
                    let l = fresh(sig, 1, Origin::FreshPair)?;
                    self.table.insert((a, b), l);
                    log.push(CompressionEvent::Pair { top: a, bottom: b, into: l });
                    l
                }
            };
            plan.insert(i, (into, t.kids(child)[0]));
        }
        t.rebuild(|i| {
            Ok(match plan.get(&i) {
                Some(&(into, below)) => (Label::Letter(into), vec![below]),
                None => (t.label(i), t.kids(i).to_vec()),
            })
        })
    }
}

/// Leaf compression: parents from `gamma_ge1` absorb their constant children from `gamma0`.
#[derive(Clone, Debug)]
pub struct LeafCompressor {
    gamma_ge1: BTreeSet<Letter>,
    gamma0: BTreeSet<Letter>,
    table: HashMap<(Letter, Vec<(usize, Letter)>), Letter>,
}

impl LeafCompressor {
    pub fn new(gamma_ge1: impl IntoIterator<Item = Letter>, gamma0: impl IntoIterator<Item = Letter>) -> Self {
        LeafCompressor {
            gamma_ge1: gamma_ge1.into_iter().collect(),
            gamma0: gamma0.into_iter().collect(),
            table: HashMap::new(),
        }
    }

    pub fn apply(&mut self, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
        Ok(self.apply_flat(&Flat::from_term(t), sig, log)?.to_term())
    }

    pub(crate) fn apply_flat(&mut self, t: &Flat, sig: &mut Signature, log: &mut CompressionLog) -> Result<Flat> {
        let consts: Vec<Option<Letter>> = (0..t.len())
            .map(|i| match t.label(i) {
                Label::Letter(a) if sig.arity(a) == 0 && self.gamma0.contains(&a) => Some(a),
                _ => None,
            })
            .collect();
        let mut plan: HashMap<usize, (Letter, Vec<usize>)> = HashMap::new();
        for i in 0..t.len() {
            let Label::Letter(f) = t.label(i) else { continue };
            if sig.arity(f) == 0 || !self.gamma_ge1.contains(&f) {
                continue;
            }
            let mut absorbed = Vec::new();
            let mut rest = Vec::new();
            for (pos, &c) in t.kids(i).iter().enumerate() {
                match consts[c] {
                    Some(a) => absorbed.push((pos + 1, a)),
                    None => rest.push(c),
                }
            }
            if absorbed.is_empty() {
                continue;
            }
            let key = (f, absorbed);
            let into = match self.table.get(&key) {
                Some(&l) => l,
                None => {
                    let l = fresh(sig, rest.len(), Origin::FreshLeaf)?;
                    self.table.insert(key.clone(), l);
                    log.push(CompressionEvent::Leaf { parent: f, absorbed: key.1.clone(), into: l });
                    l
                }
            };
            plan.insert(i, (into, rest));
        }
        t.rebuild(|i| {
            Ok(match plan.get(&i) {
                Some((into, rest)) => (Label::Letter(*into), rest.clone()),
                None => (t.label(i), t.kids(i).to_vec()),
            })
        })
    }
}

pub fn chain_comp(gamma1: &BTreeSet<Letter>, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
    ChainCompressor::new(gamma1.iter().copied()).apply(t, sig, log)
}

pub fn pair_comp(p: &Partition, t: &Term, sig: &mut Signature, log: &mut CompressionLog) -> Result<Term> {
    p.validate(sig)?;
    PairCompressor::new(p.clone()).apply(t, sig, log)
}

pub fn leaf_comp(
    gamma_ge1: &BTreeSet<Letter>,
    gamma0: &BTreeSet<Letter>,
    t: &Term,
    sig: &mut Signature,
    log: &mut CompressionLog,
) -> Result<Term> {
    LeafCompressor::new(gamma_ge1.iter().copied(), gamma0.iter().copied()).apply(t, sig, log)
}

pub fn unary_letters(t: &Term, sig: &Signature) -> BTreeSet<Letter> {
    t.letters().into_iter().filter(|&l| sig.arity(l) == 1).collect()
}

/// One compression round: chains over all unary letters, then pairs for the chosen partition
/// of the remaining unary letters, then leaves.
pub fn tree_comp(
    t: &Term,
    mut chooser: impl FnMut(&Term, &Signature) -> Partition,
    sig: &mut Signature,
    log: &mut CompressionLog,
) -> Result<Term> {
    let t = chain_comp(&unary_letters(t, sig), t, sig, log)?;
    let p = chooser(&t, sig);
    let t = pair_comp(&p, &t, sig, log)?;
    let letters = t.letters();
    let gamma0: BTreeSet<Letter> = letters.iter().copied().filter(|&l| sig.arity(l) == 0).collect();
    let gamma_ge1: BTreeSet<Letter> = letters.iter().copied().filter(|&l| sig.arity(l) > 0).collect();
    leaf_comp(&gamma_ge1, &gamma0, &t, sig, log)
}

/// Number of unary nodes and number of maximal unary chains.
pub fn chain_stats(t: &Term, sig: &Signature) -> (usize, usize) {
    let flat = Flat::from_term(t);
    let parents = flat.parents();
    let unary = |i: usize| flat.unary_letter(i, sig).is_some();
    let n1 = (0..flat.len()).filter(|&i| unary(i)).count();
    let c = (0..flat.len()).filter(|&i| unary(i) && !parents[i].is_some_and(unary)).count();
    (n1, c)
}

/// All (top, bottom) unary parent/child letter pairs, one entry per occurrence.
pub(crate) fn pair_occurrences(t: &Flat, sig: &Signature) -> Vec<(Letter, Letter)> {
    (0..t.len())
        .filter_map(|i| {
            let a = t.unary_letter(i, sig)?;
            let b = t.unary_letter(t.kids(i)[0], sig)?;
            Some((a, b))
        })
        .collect()
}

/// Number of 2-chain occurrences `ab` with `a` in the top side and `b` in the bottom side.
pub fn covered_pairs(t: &Term, p: &Partition, sig: &Signature) -> usize {
    count_covered(&pair_occurrences(&Flat::from_term(t), sig), p)
}

fn count_covered(pairs: &[(Letter, Letter)], p: &Partition) -> usize {
    pairs.iter().filter(|(a, b)| p.gamma1.contains(a) && p.gamma2.contains(b)).count()
}

pub const EXHAUSTIVE_PARTITION_LETTERS: usize = 12;
const RANDOM_PARTITION_DRAWS: usize = 1000;

pub fn find_good_partition(t: &Term, sig: &Signature) -> Partition {
    find_good_partition_seeded(t, sig, 0)
}

/// Partition of the unary letters of `t` covering many 2-chain occurrences: exhaustive for up to
/// 12 letters, otherwise the best of 1000 seeded random draws refined by greedy single-letter
/// moves.
pub fn find_good_partition_seeded(t: &Term, sig: &Signature, seed: u64) -> Partition {
    let flat = Flat::from_term(t);
    let letters: Vec<Letter> = unary_letters(t, sig).into_iter().collect();
    best_partition(&pair_occurrences(&flat, sig), &letters, seed)
}

pub(crate) fn best_partition(pairs: &[(Letter, Letter)], letters: &[Letter], seed: u64) -> Partition {
    if letters.len() <= EXHAUSTIVE_PARTITION_LETTERS {
        let mut best = (0usize, Partition::new(letters.iter().copied(), []));
        let mut first = true;
        for p in all_partitions(letters) {
            let c = count_covered(pairs, &p);
            if first || c > best.0 {
                best = (c, p);
                first = false;
            }
        }
        return best.1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_mask: Vec<bool> = vec![true; letters.len()];
    let mut best_score = score(pairs, letters, &best_mask);
    for _ in 0..RANDOM_PARTITION_DRAWS {
        let mask: Vec<bool> = (0..letters.len()).map(|_| rng.gen()).collect();
        let s = score(pairs, letters, &mask);
        if s > best_score {
            best_score = s;
            best_mask = mask;
        }
    }
    loop {
        let mut improved = false;
        for i in 0..letters.len() {
            best_mask[i] = !best_mask[i];
            let s = score(pairs, letters, &best_mask);
            if s > best_score {
                best_score = s;
                improved = true;
            } else {
                best_mask[i] = !best_mask[i];
            }
        }
        if !improved {
            break;
        }
    }
    mask_partition(letters, &best_mask)
}

fn mask_partition(letters: &[Letter], mask: &[bool]) -> Partition {
    Partition::new(
        letters.iter().zip(mask).filter(|(_, &m)| m).map(|(l, _)| *l),
        letters.iter().zip(mask).filter(|(_, &m)| !m).map(|(l, _)| *l),
    )
}

fn score(pairs: &[(Letter, Letter)], letters: &[Letter], mask: &[bool]) -> usize {
    count_covered(pairs, &mask_partition(letters, mask))
}

/// Letters treated as atomic during decompression: the initial alphabet plus letters of input
/// or spare origin.
fn is_base(log: &CompressionLog, sig: &Signature, l: Letter) -> bool {
    l.index() < log.initial.len() || matches!(sig.origin(l), Origin::Input | Origin::Fresh)
}

/// Expands every compressed letter of `t` back into the letters it stands for.
pub fn decompress(log: &CompressionLog, t: &Term, sig: &Signature) -> Result<Term> {
    Ok(decompress_flat(log, Flat::from_term(t), sig)?.to_term())
}

pub(crate) fn decompress_flat(log: &CompressionLog, mut flat: Flat, sig: &Signature) -> Result<Flat> {
    let mut present = BTreeSet::new();
    for i in 0..flat.len() {
        if let Label::Letter(l) | Label::Pow(l, _) = flat.label(i) {
            if !is_base(log, sig, l) {
                if log.event_for(l).is_none() {
                    return Err(Error::UnknownLetter(sig.name(l).to_string()));
                }
                present.insert(l);
            }
        }
    }
    // Events only refer to earlier letters, so one reverse sweep expands everything.
    for e in log.events.iter().rev() {
        if !present.contains(&e.into_letter()) {
            continue;
        }
        present.extend(match e {
            CompressionEvent::Chain { letter, .. } => vec![*letter],
            CompressionEvent::Pair { top, bottom, .. } => vec![*top, *bottom],
            CompressionEvent::Leaf { parent, absorbed, .. } => {
                let mut v: Vec<Letter> = absorbed.iter().map(|(_, a)| *a).collect();
                v.push(*parent);
                v
            }
        }
        .into_iter()
        .filter(|&l| !is_base(log, sig, l)));
        flat = expand_one(&flat, e);
    }
    Ok(flat)
}

enum Task {
    Orig(usize),
    Leaf(Letter),
}

fn expand_one(t: &Flat, e: &CompressionEvent) -> Flat {
    let into = e.into_letter();
    let mut out = Flat::default();
    let mut stack = vec![(Task::Orig(0), None)];
    while let Some((task, parent)) = stack.pop() {
        let i = match task {
            Task::Leaf(a) => {
                out.push_node(Label::Letter(a), parent);
                continue;
            }
            Task::Orig(i) => i,
        };
        let expands = matches!(t.label(i), Label::Letter(l) | Label::Pow(l, _) if l == into);
        if !expands {
            let idx = out.push_node(t.label(i), parent);
            for &c in t.kids(i).iter().rev() {
                stack.push((Task::Orig(c), Some(idx)));
            }
            continue;
        }
        let repeat = match t.label(i) {
            Label::Pow(_, e) => e,
            _ => 1,
        };
        let mut p = parent;
        match e {
            CompressionEvent::Chain { letter, exponent, .. } => {
                for _ in 0..exponent.saturating_mul(repeat) {
                    p = Some(out.push_node(Label::Letter(*letter), p));
                }
                stack.push((Task::Orig(t.kids(i)[0]), p));
            }
            CompressionEvent::Pair { top, bottom, .. } => {
                for _ in 0..repeat {
                    p = Some(out.push_node(Label::Letter(*top), p));
                    p = Some(out.push_node(Label::Letter(*bottom), p));
                }
                stack.push((Task::Orig(t.kids(i)[0]), p));
            }
            CompressionEvent::Leaf { parent: f, absorbed, .. } => {
                let idx = out.push_node(Label::Letter(*f), p);
                let arity = t.kids(i).len() + absorbed.len();
                let mut rest = t.kids(i).iter();
                let mut tasks = Vec::with_capacity(arity);
                for pos in 1..=arity {
                    match absorbed.iter().find(|(q, _)| *q == pos) {
                        Some((_, a)) => tasks.push(Task::Leaf(*a)),
                        None => tasks.push(Task::Orig(*rest.next().expect("arity"))),
                    }
                }
                for task in tasks.into_iter().rev() {
                    stack.push((task, Some(idx)));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::VarTable;

    struct Fx {
        sig: Signature,
        f: Letter,
        g: Letter,
        a: Letter,
        b: Letter,
        c: Letter,
        k: Letter,
    }

    fn fx() -> Fx {
        let mut sig = Signature::new();
        let f = sig.add("f", 2).unwrap();
        let g = sig.add("g", 1).unwrap();
        let a = sig.add("a", 1).unwrap();
        let b = sig.add("b", 1).unwrap();
        let c = sig.add("c", 0).unwrap();
        let k = sig.add("k", 0).unwrap();
        Fx { sig, f, g, a, b, c, k }
    }

    fn u(l: Letter, t: Term) -> Term {
        Term::unary(l, t)
    }

    #[test]
    fn chain_examples() {
        let Fx { mut sig, f, a, b, c, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let t = u(a, u(a, u(a, Term::constant(c))));
        let r = chain_comp(&[a].into(), &t, &mut sig, &mut log).unwrap();
        let Term::App(a3, kids) = &r else { panic!() };
        assert_eq!(kids, &vec![Term::constant(c)]);
        assert_eq!(log.events(), &[CompressionEvent::Chain { letter: a, exponent: 3, into: *a3 }]);

        let t = Term::app(f, vec![u(a, Term::constant(c)), u(a, Term::constant(c))]);
        assert_eq!(chain_comp(&[a].into(), &t, &mut sig, &mut log).unwrap(), t);
        let t = u(a, u(b, u(a, Term::constant(c))));
        assert_eq!(chain_comp(&[a, b].into(), &t, &mut sig, &mut log).unwrap(), t);
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn chain_merges_stored_powers() {
        let Fx { mut sig, a, c, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let t = u(a, Term::pow(a, 4, Term::constant(c)));
        let r = chain_comp(&[a].into(), &t, &mut sig, &mut log).unwrap();
        assert_eq!(r.size(), 2);
        assert!(matches!(log.events()[0], CompressionEvent::Chain { exponent: 5, .. }));
        assert_eq!(decompress(&log, &r, &sig).unwrap(), t.expand_powers());
    }

    #[test]
    fn pair_examples() {
        let Fx { mut sig, f, a, b, c, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let p = Partition::new([a], [b]);
        let t = u(a, u(b, u(a, u(b, Term::constant(c)))));
        let r = pair_comp(&p, &t, &mut sig, &mut log).unwrap();
        let d = Letter(sig.len() as u32 - 1);
        assert_eq!(r, u(d, u(d, Term::constant(c))));
        let t = u(b, u(a, Term::constant(c)));
        assert_eq!(pair_comp(&p, &t, &mut sig, &mut log).unwrap(), t);
        let ab = u(a, u(b, Term::constant(c)));
        let r = pair_comp(&p, &Term::app(f, vec![ab.clone(), ab]), &mut sig, &mut log).unwrap();
        let Term::App(_, kids) = r else { panic!() };
        assert_eq!(kids[0], kids[1]);
        assert!(!p.gamma1.contains(&kids[0].root_letter().unwrap()));
    }

    #[test]
    fn leaf_examples() {
        let Fx { mut sig, f, g, c, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let ge1: BTreeSet<Letter> = [f, g].into();
        let g0: BTreeSet<Letter> = [c].into();
        let t = Term::app(f, vec![Term::constant(c), u(g, Term::constant(c))]);
        let r = leaf_comp(&ge1, &g0, &t, &mut sig, &mut log).unwrap();
        // f(c, g(c)) -> f'(g'): f' unary, g' a constant
        let Term::App(f1, kids) = &r else { panic!() };
        assert_eq!(sig.arity(*f1), 1);
        assert_eq!(kids.len(), 1);
        assert_eq!(sig.arity(kids[0].root_letter().unwrap()), 0);
        assert_eq!(decompress(&log, &r, &sig).unwrap(), t);
    }

    #[test]
    fn leaf_absorbs_both_and_skips_variables() {
        let Fx { mut sig, f, c, k, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let t = Term::app(f, vec![Term::constant(c), Term::constant(k)]);
        let r = leaf_comp(&[f].into(), &[c, k].into(), &t, &mut sig, &mut log).unwrap();
        assert_eq!(r.size(), 1);
        assert_eq!(
            log.events()[0],
            CompressionEvent::Leaf { parent: f, absorbed: vec![(1, c), (2, k)], into: r.root_letter().unwrap() }
        );
        let mut vt = VarTable::new();
        let x = vt.add_var("x").unwrap();
        let t = Term::app(f, vec![Term::Var(x), Term::constant(k)]);
        let r = leaf_comp(&[f].into(), &[c, k].into(), &t, &mut sig, &mut log).unwrap();
        let Term::App(f3, kids) = r else { panic!() };
        assert_eq!(kids, vec![Term::Var(x)]);
        assert!(matches!(log.event_for(f3), Some(CompressionEvent::Leaf { absorbed, .. }) if absorbed == &vec![(2, k)]));
    }

    #[test]
    fn tree_comp_example() {
        let Fx { mut sig, a, b, c, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        let t = u(a, u(b, u(a, u(b, Term::constant(c)))));
        let r = tree_comp(&t, |_, _| Partition::new([a], [b]), &mut sig, &mut log).unwrap();
        assert_eq!(r.size(), 2);
        assert_eq!(decompress(&log, &r, &sig).unwrap(), t);
        let single = Term::constant(c);
        assert_eq!(tree_comp(&single, |t, s| find_good_partition(t, s), &mut sig, &mut log).unwrap(), single);
    }

    #[test]
    fn good_partition_examples() {
        let Fx { sig, f, a, b, c, .. } = fx();
        let t = u(a, u(b, u(a, u(b, Term::constant(c)))));
        let p = find_good_partition(&t, &sig);
        assert_eq!(covered_pairs(&t, &p, &sig), 2);
        let t = Term::app(f, vec![Term::constant(c), Term::constant(c)]);
        let p = find_good_partition(&t, &sig);
        assert!(p.gamma1.is_empty() && p.gamma2.is_empty());
    }

    #[test]
    fn decompress_errors_and_identity() {
        let Fx { mut sig, a, c, .. } = fx();
        let log = CompressionLog::new(&sig);
        let t = u(a, Term::constant(c));
        assert_eq!(decompress(&log, &t, &sig).unwrap(), t);
        let p = sig.fresh_letter(1, Origin::FreshPair).unwrap();
        assert!(matches!(decompress(&log, &u(p, Term::constant(c)), &sig), Err(Error::UnknownLetter(_))));
    }

    #[test]
    fn log_text_format() {
        let Fx { mut sig, a, b, c, f, k, .. } = fx();
        let mut log = CompressionLog::new(&sig);
        chain_comp(&[a].into(), &u(a, u(a, u(a, Term::constant(c)))), &mut sig, &mut log).unwrap();
        pair_comp(&Partition::new([a], [b]), &u(a, u(b, Term::constant(c))), &mut sig, &mut log).unwrap();
        leaf_comp(&[f].into(), &[c, k].into(), &Term::app(f, vec![Term::constant(c), Term::constant(k)]), &mut sig, &mut log)
            .unwrap();
        assert_eq!(log.to_text(&sig), "CHAIN a 3 -> c$0\nPAIR a b -> p$1\nLEAF f [1:c,2:k] -> l$2\n");
    }

    #[test]
    fn equation_flat_roundtrip() {
        let Fx { f, a, c, k, .. } = fx();
        let mut vt = VarTable::new();
        let x = vt.add_cvar("X").unwrap();
        let lhs = Term::app(f, vec![Term::cvar(x, Term::constant(c)), u(a, Term::constant(k))]);
        let rhs = Term::pow(a, 3, Term::constant(c));
        let flat = Flat::from_equation(&lhs, &rhs);
        assert_eq!(flat.to_equation(), (lhs, rhs));
    }
}
