//! Treebank data model: tokens, sentences, parse trees, vocabularies, and
//! attachment-score evaluation with punctuation exclusion.

mod conll;
mod vocab;

pub use conll::{read_conll, read_conll_with, write_conll, POS_COLUMN_DEFAULT};
pub use vocab::{SentenceIds, Vocabulary};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A single word of a sentence. Positions 0 (ROOT) and n+1 (end-of-sentence
/// marker) are addressable by index but never stored as tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub pos: String,
    /// Gold head in `0..=n`, 0 meaning ROOT; `None` when unannotated.
    pub gold_head: Option<usize>,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>, gold_head: Option<usize>) -> Result<Self> {
        let form = form.into();
        let pos = pos.into();
        if form.is_empty() {
            return Err(Error::invalid_input("token form must be non-empty"));
        }
        if pos.is_empty() {
            return Err(Error::invalid_input("token POS must be non-empty"));
        }
        Ok(Token { form, pos, gold_head })
    }

    pub fn is_punct(&self, rule: PunctRule) -> bool {
        rule.excludes(&self.pos)
    }
}

/// Convention used to exclude punctuation from evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PunctRule {
    /// English PTB fine tags: `` '' : , .
    Ptb,
    /// Chinese treebank: PU.
    Ctb,
}

impl PunctRule {
    pub fn excludes(self, pos: &str) -> bool {
        match self {
            PunctRule::Ptb => matches!(pos, "``" | "''" | ":" | "," | "."),
            PunctRule::Ctb => pos == "PU",
        }
    }
}

impl std::str::FromStr for PunctRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ptb" => Ok(PunctRule::Ptb),
            "ctb" => Ok(PunctRule::Ctb),
            other => Err(Error::invalid_input(format!("unknown punctuation rule `{other}`"))),
        }
    }
}

/// Tokens at positions `1..=n`. Position 0 denotes ROOT and position `n+1`
/// the end-of-sentence marker; both are virtual.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid_input("a sentence needs at least one token"));
        }
        Ok(Sentence { tokens })
    }

    /// Number of real tokens, excluding ROOT and the end marker.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Token at 1-based position `i`.
    pub fn token(&self, i: usize) -> &Token {
        &self.tokens[i - 1]
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn is_fully_annotated(&self) -> bool {
        self.tokens.iter().all(|t| t.gold_head.is_some())
    }

    /// Gold heads as a [`ParseTree`]; errors when annotation is missing or
    /// does not form a tree.
    pub fn gold_tree(&self) -> Result<ParseTree> {
        let heads = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.gold_head
                    .ok_or_else(|| Error::invalid_input(format!("token {} has no gold head", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        ParseTree::new(heads)
    }

    /// Raw gold heads without tree validation (evaluation does not require
    /// the annotation to be cycle-free).
    pub fn gold_heads(&self) -> Result<Vec<usize>> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                t.gold_head
                    .ok_or_else(|| Error::invalid_input(format!("token {} has no gold head", i + 1)))
            })
            .collect()
    }
}

/// An unlabeled dependency tree over `n` tokens: `head(m)` for `m` in
/// `1..=n`, with 0 standing for ROOT.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    heads: Vec<usize>,
}

impl ParseTree {
    /// Validates the single-head and acyclicity invariants.
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        let n = heads.len();
        if n == 0 {
            return Err(Error::InvalidTree("empty head array".into()));
        }
        for (i, &h) in heads.iter().enumerate() {
            let m = i + 1;
            if h > n {
                return Err(Error::InvalidTree(format!("head {h} of token {m} out of range 0..={n}")));
            }
            if h == m {
                return Err(Error::InvalidTree(format!("token {m} is its own head")));
            }
        }
        // Walking up from any node must reach ROOT within n steps.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = heads[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidTree(format!("cycle reachable from token {start}")));
                }
            }
        }
        Ok(ParseTree { heads })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Head of 1-based token `m`.
    pub fn head(&self, m: usize) -> usize {
        self.heads[m - 1]
    }

    /// Heads indexed by `token - 1`.
    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads.iter().enumerate().map(|(i, &h)| (h, i + 1))
    }

    fn is_descendant_of(&self, node: usize, ancestor: usize) -> bool {
        let mut cur = node;
        loop {
            if cur == ancestor {
                return true;
            }
            if cur == 0 {
                return false;
            }
            cur = self.heads[cur - 1];
        }
    }
}

/// True iff the tree can be drawn above the sentence (ROOT at position 0)
/// without crossing arcs: for every arc (h, m), each token strictly between
/// h and m descends from h.
pub fn is_projective(tree: &ParseTree) -> bool {
    for (h, m) in tree.arcs() {
        let (lo, hi) = (h.min(m), h.max(m));
        for k in lo + 1..hi {
            if !tree.is_descendant_of(k, h) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub uas: f64,
    pub uem: f64,
    /// Non-punctuation tokens counted.
    pub tokens: usize,
    pub correct: usize,
    pub sentences: usize,
    pub exact: usize,
}

/// Unlabeled attachment score and exact-match rate, with punctuation
/// excluded under `rule`. Gold sentences must be fully annotated.
pub fn evaluate(pred: &[ParseTree], gold: &[Sentence], rule: PunctRule) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted trees vs {} gold sentences",
            pred.len(),
            gold.len()
        )));
    }
    let mut tokens = 0usize;
    let mut correct = 0usize;
    let mut exact = 0usize;
    for (tree, sent) in pred.iter().zip(gold) {
        if tree.len() != sent.len() {
            return Err(Error::LengthMismatch(format!(
                "tree of length {} vs sentence of length {}",
                tree.len(),
                sent.len()
            )));
        }
        let gold_heads = sent.gold_heads()?;
        let mut all = true;
        for m in 1..=sent.len() {
            if sent.token(m).is_punct(rule) {
                continue;
            }
            tokens += 1;
            if tree.head(m) == gold_heads[m - 1] {
                correct += 1;
            } else {
                all = false;
            }
        }
        if all {
            exact += 1;
        }
    }
    let uas = if tokens == 0 { 1.0 } else { correct as f64 / tokens as f64 };
    Ok(EvalReport {
        uas,
        uem: exact as f64 / gold.len().max(1) as f64,
        tokens,
        correct,
        sentences: gold.len(),
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(tags: &[(&str, &str, usize)]) -> Sentence {
        Sentence::new(
            tags.iter()
                .map(|(f, p, h)| Token::new(*f, *p, Some(*h)).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn tree_validation() {
        assert!(ParseTree::new(vec![2, 0]).is_ok());
        assert!(ParseTree::new(vec![]).is_err());
        assert!(ParseTree::new(vec![1]).is_err()); // self head
        assert!(ParseTree::new(vec![3, 0]).is_err()); // out of range
        assert!(ParseTree::new(vec![2, 1, 0]).is_err()); // 1-2 cycle
    }

    #[test]
    fn projectivity_examples() {
        assert!(is_projective(&ParseTree::new(vec![0, 1]).unwrap()));
        assert!(is_projective(&ParseTree::new(vec![2, 4, 2, 0]).unwrap()));
        assert!(!is_projective(&ParseTree::new(vec![3, 0, 2]).unwrap()));
    }

    /// Brute-force pairwise crossing check; with ROOT at position 0 this is
    /// equivalent to the descendant-interval definition.
    fn crosses(tree: &ParseTree) -> bool {
        let arcs: Vec<(usize, usize)> = tree.arcs().collect();
        for (i, &(h1, m1)) in arcs.iter().enumerate() {
            let (a1, b1) = (h1.min(m1), h1.max(m1));
            for &(h2, m2) in &arcs[i + 1..] {
                let (a2, b2) = (h2.min(m2), h2.max(m2));
                if (a1 < a2 && a2 < b1 && b1 < b2) || (a2 < a1 && a1 < b2 && b2 < b1) {
                    return true;
                }
            }
        }
        false
    }

    fn all_trees(n: usize) -> Vec<ParseTree> {
        let mut out = Vec::new();
        let mut heads = vec![0usize; n];
        fn rec(heads: &mut Vec<usize>, pos: usize, n: usize, out: &mut Vec<ParseTree>) {
            if pos == n {
                if let Ok(t) = ParseTree::new(heads.clone()) {
                    out.push(t);
                }
                return;
            }
            for h in 0..=n {
                if h == pos + 1 {
                    continue;
                }
                heads[pos] = h;
                rec(heads, pos + 1, n, out);
            }
        }
        rec(&mut heads, 0, n, &mut out);
        out
    }

    #[test]
    fn projectivity_matches_crossing_check_exhaustively() {
        for n in 1..=7 {
            for tree in all_trees(n) {
                assert_eq!(
                    is_projective(&tree),
                    !crosses(&tree),
                    "disagreement on heads {:?}",
                    tree.heads()
                );
            }
        }
    }

    #[test]
    fn evaluate_identity() {
        let s = sent(&[("a", "DT", 2), ("b", "NN", 0)]);
        let t = ParseTree::new(vec![2, 0]).unwrap();
        let r = evaluate(&[t], std::slice::from_ref(&s), PunctRule::Ptb).unwrap();
        assert_eq!((r.uas, r.uem), (1.0, 1.0));
    }

    #[test]
    fn evaluate_total_mismatch() {
        let s = sent(&[("a", "DT", 2), ("b", "NN", 0)]);
        let t = ParseTree::new(vec![0, 1]).unwrap();
        let r = evaluate(&[t], std::slice::from_ref(&s), PunctRule::Ptb).unwrap();
        assert_eq!((r.uas, r.uem), (0.0, 0.0));
    }

    #[test]
    fn evaluate_excludes_punctuation() {
        // token 3 is punctuation and mismatched; tokens 1-2 match
        let s = sent(&[("a", "DT", 2), ("b", "NN", 0), (".", ".", 2)]);
        let t = ParseTree::new(vec![2, 0, 1]).unwrap();
        let r = evaluate(&[t], std::slice::from_ref(&s), PunctRule::Ptb).unwrap();
        assert_eq!((r.uas, r.uem), (1.0, 1.0));
        assert_eq!(r.tokens, 2);
        // under the CTB rule "." is a real token and the mismatch counts
        let r = evaluate(&[ParseTree::new(vec![2, 0, 1]).unwrap()], &[s], PunctRule::Ctb).unwrap();
        assert!(r.uas < 1.0);
    }

    #[test]
    fn evaluate_length_mismatch() {
        let s = sent(&[("a", "DT", 0)]);
        assert!(evaluate(&[], &[s], PunctRule::Ptb).is_err());
    }
}
