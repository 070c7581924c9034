//! Edge-factored projective decoding and the constructive reductions that
//! embed it (and the arc-hybrid model) inside the arc-eager score space.

use crate::chart::ScoreTables;
use crate::corpus::ParseTree;
use crate::error::{Error, Result};
use crate::transition::{SystemKind, Transition};

/// Pairwise edge scores `get(h, m)` for heads `0..=n` and modifiers
/// `1..=n`; the diagonal and column 0 are never consulted.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores {
    n: usize,
    g: Vec<f64>,
}

impl EdgeScores {
    pub fn zeros(n: usize) -> Self {
        EdgeScores { n, g: vec![0.0; (n + 1) * (n + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, modifier: usize) -> f64 {
        self.g[head * (self.n + 1) + modifier]
    }

    pub fn set(&mut self, head: usize, modifier: usize, value: f64) {
        self.g[head * (self.n + 1) + modifier] = value;
    }

    pub fn random<R: rand::Rng>(n: usize, rng: &mut R, lo: f64, hi: f64) -> Self {
        let mut g = EdgeScores::zeros(n);
        for h in 0..=n {
            for m in 1..=n {
                if h != m {
                    g.set(h, m, rng.random_range(lo..hi));
                }
            }
        }
        g
    }

    /// Sum of edge scores of a tree.
    pub fn tree_score(&self, tree: &ParseTree) -> f64 {
        tree.arcs().map(|(h, m)| self.get(h, m)).sum()
    }

    fn check_finite(&self) -> Result<()> {
        for h in 0..=self.n {
            for m in 1..=self.n {
                if h != m && !self.get(h, m).is_finite() {
                    return Err(Error::NonFinite(format!("edge score ({h}, {m})")));
                }
            }
        }
        Ok(())
    }
}

/// First-order projective decoding over complete (triangle) and incomplete
/// (trapezoid) spans: returns the projective tree maximizing the sum of
/// edge scores, in O(n^3) time and O(n^2) space. ROOT at index 0 takes
/// right dependents only.
pub fn eisner_decode(scores: &EdgeScores) -> Result<(ParseTree, f64)> {
    decode(scores, None)
}

/// Eisner decoding of `score + 1(head mismatch)` per edge; the returned
/// score includes the augmentation.
pub fn eisner_decode_cost_augmented(
    scores: &EdgeScores,
    gold: &ParseTree,
) -> Result<(ParseTree, f64)> {
    if gold.len() != scores.n() {
        return Err(Error::LengthMismatch(format!(
            "gold tree of length {} vs edge scores for n = {}",
            gold.len(),
            scores.n()
        )));
    }
    decode(scores, Some(gold))
}

fn decode(scores: &EdgeScores, gold: Option<&ParseTree>) -> Result<(ParseTree, f64)> {
    let n = scores.n();
    if n < 1 {
        return Err(Error::invalid_input("decoding needs n >= 1"));
    }
    scores.check_finite()?;

    let edge = |h: usize, m: usize| -> f64 {
        let mut s = scores.get(h, m);
        if let Some(g) = gold {
            if g.head(m) != h {
                s += 1.0;
            }
        }
        s
    };

    let w = n + 1;
    let idx = |i: usize, j: usize| i * w + j;
    let neg = f64::NEG_INFINITY;
    // complete spans headed at the left/right end, incomplete spans with
    // a right/left arc over the whole span
    let mut c_right = vec![neg; w * w];
    let mut c_left = vec![neg; w * w];
    let mut i_right = vec![neg; w * w];
    let mut i_left = vec![neg; w * w];
    let mut bc_right = vec![0u32; w * w];
    let mut bc_left = vec![0u32; w * w];
    let mut bi_right = vec![0u32; w * w];
    let mut bi_left = vec![0u32; w * w];
    for i in 0..=n {
        c_right[idx(i, i)] = 0.0;
        c_left[idx(i, i)] = 0.0;
    }

    for width in 1..=n {
        for i in 0..=n - width {
            let j = i + width;
            // incomplete items: right-reduce / left-reduce of Fig-style
            // triangle pairs meeting at the split
            let mut best_core = neg;
            let mut best_k = 0u32;
            for k in i..j {
                let s = c_right[idx(i, k)] + c_left[idx(k + 1, j)];
                if s > best_core {
                    best_core = s;
                    best_k = k as u32;
                }
            }
            i_right[idx(i, j)] = best_core + edge(i, j);
            bi_right[idx(i, j)] = best_k;
            if i >= 1 {
                i_left[idx(i, j)] = best_core + edge(j, i);
                bi_left[idx(i, j)] = best_k;
            }
            // complete items: attach a finished dependent span
            let mut best = neg;
            let mut bk = 0u32;
            for k in i + 1..=j {
                let s = i_right[idx(i, k)] + c_right[idx(k, j)];
                if s > best {
                    best = s;
                    bk = k as u32;
                }
            }
            c_right[idx(i, j)] = best;
            bc_right[idx(i, j)] = bk;
            let mut best = neg;
            let mut bk = 0u32;
            for k in i..j {
                let s = c_left[idx(i, k)] + i_left[idx(k, j)];
                if s > best {
                    best = s;
                    bk = k as u32;
                }
            }
            c_left[idx(i, j)] = best;
            bc_left[idx(i, j)] = bk;
        }
    }

    let goal = c_right[idx(0, n)];
    debug_assert!(goal.is_finite());

    let mut heads = vec![0usize; n];
    #[derive(Clone, Copy)]
    enum Item {
        CRight(usize, usize),
        CLeft(usize, usize),
        IRight(usize, usize),
        ILeft(usize, usize),
    }
    let mut agenda = vec![Item::CRight(0, n)];
    while let Some(item) = agenda.pop() {
        match item {
            Item::CRight(i, j) => {
                if i == j {
                    continue;
                }
                let k = bc_right[idx(i, j)] as usize;
                agenda.push(Item::IRight(i, k));
                agenda.push(Item::CRight(k, j));
            }
            Item::CLeft(i, j) => {
                if i == j {
                    continue;
                }
                let k = bc_left[idx(i, j)] as usize;
                agenda.push(Item::CLeft(i, k));
                agenda.push(Item::ILeft(k, j));
            }
            Item::IRight(i, j) => {
                heads[j - 1] = i;
                let k = bi_right[idx(i, j)] as usize;
                agenda.push(Item::CRight(i, k));
                agenda.push(Item::CLeft(k + 1, j));
            }
            Item::ILeft(i, j) => {
                heads[i - 1] = j;
                let k = bi_left[idx(i, j)] as usize;
                agenda.push(Item::CRight(i, k));
                agenda.push(Item::CLeft(k + 1, j));
            }
        }
    }
    Ok((ParseTree::new(heads)?, goal))
}

/// Arc-eager tables emulating an edge-factored model: shifts and reduces
/// are free, a left arc (j, i) is paid at the left-reduce as G[j][i], and
/// a right arc (k, i) at the right-attach as G[k][i].
pub fn lemma1_reduction(scores: &EdgeScores) -> ScoreTables {
    let n = scores.n();
    let mut tables = ScoreTables::zeros(SystemKind::ArcEager, n);
    for i in 1..=n {
        for j in 0..=n {
            if i == j {
                continue;
            }
            // S_ra[j][i] = G[j][i]: the attach that creates arc (j, i)
            tables.set(Transition::RightAttach, j, i, scores.get(j, i));
            if j >= 1 {
                // S_lr[i][j] = G[j][i]: left-reduce taken at features (i, j)
                tables.set(Transition::LeftReduce, i, j, scores.get(j, i));
            }
        }
    }
    tables
}

/// Arc-eager tables with the same optimal (and per-tree) scores as an
/// arc-hybrid table set: constrain S'_sh = S'_ra = S_sh, keep S'_lr =
/// S_lr, and pay the hybrid right-reduce at the eager reduce.
pub fn lemma2_reduction(hybrid: &ScoreTables) -> Result<ScoreTables> {
    if hybrid.system() != SystemKind::ArcHybrid {
        return Err(Error::UnsupportedSystem {
            system: hybrid.system(),
            msg: "lemma2_reduction starts from arc-hybrid tables".into(),
        });
    }
    let n = hybrid.n();
    let w = n + 2;
    let mut eager = ScoreTables::zeros(SystemKind::ArcEager, n);
    for a in 0..w {
        for b in 0..w {
            let sh = hybrid.get(Transition::Shift, a, b);
            eager.set(Transition::Shift, a, b, sh);
            eager.set(Transition::RightAttach, a, b, sh);
            eager.set(Transition::LeftReduce, a, b, hybrid.get(Transition::LeftReduce, a, b));
            eager.set(Transition::Reduce, a, b, hybrid.get(Transition::RightReduce, a, b));
        }
    }
    Ok(eager)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{decode_eager, decode_hybrid};
    use rand::SeedableRng;

    #[test]
    fn zero_scores_decode_to_some_tree() {
        let g = EdgeScores::zeros(2);
        let (tree, score) = eisner_decode(&g).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(tree.len(), 2);
    }

    #[test]
    fn weights_pick_the_chain() {
        let mut g = EdgeScores::zeros(2);
        g.set(0, 2, 1.0);
        g.set(2, 1, 1.0);
        let (tree, score) = eisner_decode(&g).unwrap();
        assert_eq!(tree.heads(), [2, 0]);
        assert_eq!(score, 2.0);
    }

    #[test]
    fn multi_root_attachments_allowed() {
        let mut g = EdgeScores::zeros(2);
        g.set(0, 1, 5.0);
        g.set(0, 2, 5.0);
        let (tree, score) = eisner_decode(&g).unwrap();
        assert_eq!(tree.heads(), [0, 0]);
        assert_eq!(score, 10.0);
    }

    #[test]
    fn rejects_empty() {
        assert!(eisner_decode(&EdgeScores::zeros(0)).is_err());
    }

    #[test]
    fn lemma1_zero_maps_to_zero() {
        let tables = lemma1_reduction(&EdgeScores::zeros(3));
        let hybrid_zero = ScoreTables::zeros(SystemKind::ArcEager, 3);
        assert_eq!(tables, hybrid_zero);
    }

    #[test]
    fn lemma1_consulted_entries() {
        let mut g = EdgeScores::zeros(2);
        g.set(0, 1, 7.0);
        g.set(2, 1, 2.5);
        let t = lemma1_reduction(&g);
        assert_eq!(t.get(Transition::RightAttach, 0, 1), 7.0);
        // left arcs land at S_lr[modifier][head]
        assert_eq!(t.get(Transition::LeftReduce, 1, 2), 2.5);
        assert_eq!(t.get(Transition::LeftReduce, 1, 0), 0.0);
        assert_eq!(t.get(Transition::Shift, 0, 1), 0.0);
        assert_eq!(t.get(Transition::Reduce, 1, 2), 0.0);
    }

    #[test]
    fn lemma2_small_example() {
        let mut hybrid = ScoreTables::zeros(SystemKind::ArcHybrid, 2);
        hybrid.set(Transition::LeftReduce, 1, 2, 5.0);
        let eager = lemma2_reduction(&hybrid).unwrap();
        let h = decode_hybrid(&hybrid).unwrap();
        let e = decode_eager(&eager).unwrap();
        assert!((h.score - e.score).abs() < 1e-12);
        assert_eq!(h.tree, e.tree);
        assert_eq!(h.score, 5.0);
    }

    #[test]
    fn eisner_cost_augmented_prefers_wrong_arcs() {
        let g = EdgeScores::zeros(3);
        let gold = ParseTree::new(vec![0, 1, 2]).unwrap();
        let (tree, score) = eisner_decode_cost_augmented(&g, &gold).unwrap();
        let cost = (1..=3).filter(|&m| tree.head(m) != gold.head(m)).count();
        assert_eq!(score, cost as f64);
        assert_eq!(score, 3.0);
    }

    #[test]
    fn eisner_ties_brute_force_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            let trees = crate::bruteforce::enumerate_projective_trees(n).unwrap();
            for _ in 0..10 {
                let g = EdgeScores::random(n, &mut rng, -1.0, 1.0);
                let (tree, score) = eisner_decode(&g).unwrap();
                let best = trees
                    .iter()
                    .map(|t| g.tree_score(t))
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((score - best).abs() < 1e-9, "n={n}");
                assert!((g.tree_score(&tree) - score).abs() < 1e-9);
            }
        }
    }
}
