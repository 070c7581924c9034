//! Reparsing ensemble: every model votes with its own tree and the vote
//! matrix is decoded projectively.

use super::Parser;
use crate::corpus::{ParseTree, Sentence};
use crate::error::{Error, Result};
use crate::graph::{eisner_decode, EdgeScores};

/// Each parser decodes independently; the final tree maximizes the total
/// number of agreeing arcs, found by Eisner decoding over the vote counts.
pub fn ensemble_parse(parsers: &[Parser], sentence: &Sentence) -> Result<ParseTree> {
    if parsers.is_empty() {
        return Err(Error::invalid_input("ensemble needs at least one model"));
    }
    let n = sentence.len();
    let mut votes = EdgeScores::zeros(n);
    for parser in parsers {
        let tree = parser.parse(sentence)?;
        for (h, m) in tree.arcs() {
            votes.set(h, m, votes.get(h, m) + 1.0);
        }
    }
    Ok(eisner_decode(&votes)?.0)
}

/// Vote matrix over predicted trees (exposed for tests and the CLI).
pub fn vote_matrix(trees: &[ParseTree], n: usize) -> Result<EdgeScores> {
    let mut votes = EdgeScores::zeros(n);
    for tree in trees {
        if tree.len() != n {
            return Err(Error::LengthMismatch(format!(
                "tree of length {} in an ensemble over n = {n}",
                tree.len()
            )));
        }
        for (h, m) in tree.arcs() {
            votes.set(h, m, votes.get(h, m) + 1.0);
        }
    }
    Ok(votes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_votes_score_m_times_n() {
        let tree = ParseTree::new(vec![2, 0, 2]).unwrap();
        let trees = vec![tree.clone(), tree.clone(), tree.clone()];
        let votes = vote_matrix(&trees, 3).unwrap();
        let (decoded, score) = eisner_decode(&votes).unwrap();
        assert_eq!(decoded, tree);
        assert_eq!(score, 9.0); // m * n votes
    }

    #[test]
    fn majority_tree_wins() {
        let a = ParseTree::new(vec![2, 0, 2]).unwrap();
        let b = ParseTree::new(vec![0, 1, 2]).unwrap();
        let votes = vote_matrix(&[a.clone(), a.clone(), b], 3).unwrap();
        let (decoded, _) = eisner_decode(&votes).unwrap();
        assert_eq!(decoded, a);
    }

    #[test]
    fn duplicate_votes_keep_the_argmax() {
        let a = ParseTree::new(vec![2, 0, 2]).unwrap();
        let b = ParseTree::new(vec![0, 1, 0]).unwrap();
        let single = vote_matrix(&[a.clone(), b.clone()], 3).unwrap();
        let doubled = vote_matrix(&[a.clone(), b.clone(), a, b], 3).unwrap();
        assert_eq!(eisner_decode(&single).unwrap().0, eisner_decode(&doubled).unwrap().0);
    }
}
