//! Exhaustive enumeration oracles. Every exactness claim in this crate is
//! checked against these at small n; the guards are hard errors because a
//! silently truncated oracle would weaken every downstream test.

use crate::chart::{sequence_score, ScoreTables};
use crate::corpus::{is_projective, ParseTree};
use crate::error::{Error, Result};
use crate::transition::{Config, SystemKind, Transition};

pub const SEQUENCE_GUARD: usize = 10;
pub const TREE_GUARD: usize = 8;

/// All complete transition sequences for a length-n sentence, by
/// depth-first expansion over the legal transitions. Branches that dead-end
/// (arc-eager stranding) simply contribute nothing.
pub fn enumerate_sequences(system: SystemKind, n: usize) -> Result<Vec<Vec<Transition>>> {
    if n > SEQUENCE_GUARD {
        return Err(Error::EnumerationGuard(n, SEQUENCE_GUARD));
    }
    if n == 0 {
        return Err(Error::invalid_input("enumeration needs n >= 1"));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    expand(&Config::initial(n), system, &mut prefix, &mut out);
    Ok(out)
}

fn expand(
    config: &Config,
    system: SystemKind,
    prefix: &mut Vec<Transition>,
    out: &mut Vec<Vec<Transition>>,
) {
    if config.is_terminal() {
        out.push(prefix.clone());
        return;
    }
    for t in config.legal(system) {
        let next = config.apply(t, system).expect("legal transition applies");
        prefix.push(t);
        expand(&next, system, prefix, out);
        prefix.pop();
    }
}

/// All head arrays that satisfy the tree invariants and projectivity.
/// Crossing arcs are pruned during construction; candidates that survive
/// are still validated in full.
pub fn enumerate_projective_trees(n: usize) -> Result<Vec<ParseTree>> {
    if n > TREE_GUARD {
        return Err(Error::EnumerationGuard(n, TREE_GUARD));
    }
    if n == 0 {
        return Err(Error::invalid_input("enumeration needs n >= 1"));
    }
    let mut out = Vec::new();
    let mut heads = vec![0usize; n];
    fill(&mut heads, 0, n, &mut out);
    Ok(out)
}

fn fill(heads: &mut Vec<usize>, pos: usize, n: usize, out: &mut Vec<ParseTree>) {
    if pos == n {
        if let Ok(tree) = ParseTree::new(heads.clone()) {
            if is_projective(&tree) {
                out.push(tree);
            }
        }
        return;
    }
    let m = pos + 1;
    'next_head: for h in 0..=n {
        if h == m {
            continue;
        }
        let (lo, hi) = (h.min(m), h.max(m));
        for (prev, &ph) in heads[..pos].iter().enumerate() {
            let pm = prev + 1;
            let (plo, phi) = (ph.min(pm), ph.max(pm));
            if (lo < plo && plo < hi && hi < phi) || (plo < lo && lo < phi && phi < hi) {
                continue 'next_head;
            }
        }
        heads[pos] = h;
        fill(heads, pos + 1, n, out);
    }
}

/// Reference maximizer: scores every complete sequence, optionally adding
/// the mis-attachment count against `gold`. Ties keep the first sequence
/// in enumeration order.
pub fn brute_best(
    tables: &ScoreTables,
    gold: Option<&ParseTree>,
) -> Result<(Vec<Transition>, f64)> {
    let sequences = enumerate_sequences(tables.system(), tables.n())?;
    brute_best_over(&sequences, tables, gold)
}

/// Same as [`brute_best`] but over a pre-enumerated sequence set, so
/// sweeps with many table draws enumerate only once.
pub fn brute_best_over(
    sequences: &[Vec<Transition>],
    tables: &ScoreTables,
    gold: Option<&ParseTree>,
) -> Result<(Vec<Transition>, f64)> {
    let system = tables.system();
    let n = tables.n();
    let mut best: Option<(usize, f64)> = None;
    for (idx, seq) in sequences.iter().enumerate() {
        let mut score = sequence_score(tables, seq)?;
        if let Some(g) = gold {
            let tree = crate::transition::sequence_to_tree(seq, n, system)?;
            score += (1..=n).filter(|&m| tree.head(m) != g.head(m)).count() as f64;
        }
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((idx, score));
        }
    }
    let (idx, score) = best.ok_or_else(|| Error::invalid_input("no complete sequences"))?;
    Ok((sequences[idx].clone(), score))
}

/// Pre-enumerated sequences with their per-step feature pairs and derived
/// trees, so a sweep over many table draws can score by lookup instead of
/// replaying configurations.
pub struct SequenceBank {
    system: SystemKind,
    n: usize,
    sequences: Vec<Vec<Transition>>,
    features: Vec<Vec<(Transition, usize, usize)>>,
    trees: Vec<ParseTree>,
}

impl SequenceBank {
    pub fn new(system: SystemKind, n: usize) -> Result<Self> {
        let sequences = enumerate_sequences(system, n)?;
        let mut features = Vec::with_capacity(sequences.len());
        let mut trees = Vec::with_capacity(sequences.len());
        for seq in &sequences {
            let mut config = Config::initial(n);
            let mut feats = Vec::with_capacity(seq.len());
            for &t in seq {
                if let Some(s0) = config.s0() {
                    feats.push((t, s0, config.front()));
                }
                config = config.apply(t, system).expect("enumerated sequence replays");
            }
            features.push(feats);
            trees.push(config.to_tree()?);
        }
        Ok(SequenceBank { system, n, sequences, features, trees })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> &[Vec<Transition>] {
        &self.sequences
    }

    pub fn trees(&self) -> &[ParseTree] {
        &self.trees
    }

    pub fn score(&self, idx: usize, tables: &ScoreTables) -> f64 {
        self.features[idx].iter().map(|&(t, a, b)| tables.get(t, a, b)).sum()
    }

    /// Best (index, score) under the tables, optionally cost-augmented.
    pub fn best(&self, tables: &ScoreTables, gold: Option<&ParseTree>) -> Result<(usize, f64)> {
        if tables.system() != self.system || tables.n() != self.n {
            return Err(Error::invalid_input("tables do not match this sequence bank"));
        }
        let mut best: Option<(usize, f64)> = None;
        for idx in 0..self.sequences.len() {
            let mut score = self.score(idx, tables);
            if let Some(g) = gold {
                let tree = &self.trees[idx];
                score += (1..=self.n).filter(|&m| tree.head(m) != g.head(m)).count() as f64;
            }
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((idx, score));
            }
        }
        best.ok_or_else(|| Error::invalid_input("no complete sequences"))
    }
}
