//! Arc-hybrid tabular decoder.
//!
//! Items [i, j] over 0 <= i < j <= n+1, axiom [0, 1], goal [0, n+1].
//! Combination [i, m] + [m, j] => [i, j] pays the shift of w_m taken at
//! features (i, m) plus the reduce taken at (m, j):
//!   right arc (i, m): S_sh[i][m] + S_rr[m][j]
//!   left arc (j, m):  S_sh[i][m] + S_lr[m][j], only while j <= n.

use super::{finish_decode, mismatch, BackPointer, DecodeResult, Rule, ScoreTables};
use crate::corpus::ParseTree;
use crate::error::{Error, Result};
use crate::transition::{SystemKind, Transition};

pub fn decode_hybrid(tables: &ScoreTables) -> Result<DecodeResult> {
    decode(tables, None)
}

pub(crate) fn decode(tables: &ScoreTables, gold: Option<&ParseTree>) -> Result<DecodeResult> {
    if tables.system() != SystemKind::ArcHybrid {
        return Err(Error::UnsupportedSystem {
            system: tables.system(),
            msg: "decode_hybrid needs arc-hybrid tables".into(),
        });
    }
    let n = tables.n();
    if n < 1 {
        return Err(Error::invalid_input("decoding needs n >= 1"));
    }
    tables.check_finite()?;

    let w = n + 2;
    let sh = tables.mat(Transition::Shift);
    let rr = tables.mat(Transition::RightReduce);
    let lr = tables.mat(Transition::LeftReduce);
    let gold_heads: Option<&[usize]> = gold.map(|g| g.heads());

    let mut best = vec![f64::NEG_INFINITY; w * w];
    let mut bp = vec![BackPointer::NONE; w * w];
    for j in 0..=n {
        best[j * w + j + 1] = 0.0;
    }

    for width in 2..=n + 1 {
        for i in 0..=(n + 1 - width) {
            let j = i + width;
            let mut cell = f64::NEG_INFINITY;
            let mut cell_bp = BackPointer::NONE;
            for m in i + 1..j {
                let left = best[i * w + m];
                if left == f64::NEG_INFINITY {
                    continue;
                }
                let right = best[m * w + j];
                if right == f64::NEG_INFINITY {
                    continue;
                }
                let base = left + right + sh[i * w + m];
                // left arc (j, m), buffer token required
                if j <= n {
                    let mut s = base + lr[m * w + j];
                    if let Some(g) = gold_heads {
                        s += mismatch(g[m - 1], j);
                    }
                    if s > cell {
                        cell = s;
                        cell_bp = BackPointer { rule: Rule::Left, split: m as u32 };
                    }
                }
                // right arc (i, m)
                let mut s = base + rr[m * w + j];
                if let Some(g) = gold_heads {
                    s += mismatch(g[m - 1], i);
                }
                if s > cell {
                    cell = s;
                    cell_bp = BackPointer { rule: Rule::Right, split: m as u32 };
                }
            }
            best[i * w + j] = cell;
            bp[i * w + j] = cell_bp;
        }
    }

    let goal = best[n + 1]; // cell [0, n+1]
    debug_assert!(goal.is_finite());
    let mut sequence = vec![Transition::Shift];
    let mut arcs = Vec::with_capacity(n);
    unfold(&bp, w, 0, n + 1, &mut sequence, &mut arcs);
    finish_decode(n, SystemKind::ArcHybrid, goal, sequence, arcs)
}

fn unfold(
    bp: &[BackPointer],
    w: usize,
    i: usize,
    j: usize,
    sequence: &mut Vec<Transition>,
    arcs: &mut Vec<(usize, usize)>,
) {
    if j == i + 1 {
        return;
    }
    let p = bp[i * w + j];
    let m = p.split as usize;
    unfold(bp, w, i, m, sequence, arcs);
    sequence.push(Transition::Shift);
    unfold(bp, w, m, j, sequence, arcs);
    match p.rule {
        Rule::Right => {
            arcs.push((i, m));
            sequence.push(Transition::RightReduce);
        }
        Rule::Left => {
            arcs.push((j, m));
            sequence.push(Transition::LeftReduce);
        }
        Rule::None => unreachable!("underivable item on the best path"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::sequence_score;

    #[test]
    fn zero_tables_give_valid_zero_score_parse() {
        let tables = ScoreTables::zeros(SystemKind::ArcHybrid, 2);
        let result = decode_hybrid(&tables).unwrap();
        assert_eq!(result.score, 0.0);
        assert_eq!(sequence_score(&tables, &result.sequence).unwrap(), 0.0);
        assert_eq!(result.tree.len(), 2);
    }

    #[test]
    fn single_weight_drives_the_tree() {
        let mut tables = ScoreTables::zeros(SystemKind::ArcHybrid, 2);
        tables.set(Transition::LeftReduce, 1, 2, 5.0);
        let result = decode_hybrid(&tables).unwrap();
        assert_eq!(result.tree.heads(), [2, 0]);
        assert_eq!(result.score, 5.0);
    }

    #[test]
    fn rejects_empty_sentence_and_wrong_system() {
        assert!(decode_hybrid(&ScoreTables::zeros(SystemKind::ArcHybrid, 0)).is_err());
        assert!(decode_hybrid(&ScoreTables::zeros(SystemKind::ArcEager, 2)).is_err());
    }

    #[test]
    fn chart_size_is_quadratic() {
        // dense chart allocates exactly (n+2)^2 cells
        let n = 7;
        let tables = ScoreTables::zeros(SystemKind::ArcHybrid, n);
        assert_eq!(tables.width() * tables.width(), (n + 2) * (n + 2));
    }
}
