//! Arc-eager tabular decoder.
//!
//! Items [i^b, j] with b flagging whether w_i has been attached. Axiom
//! [0^0, 1], goal [0^0, n+1]. Combination [i^b, m] + [m^c, j] => [i^b, j]:
//!   c = 0: w_m was shifted and is popped by a left-reduce;
//!          left arc (j, m): S_sh[i][m] + S_lr[m][j], only while j <= n.
//!   c = 1: w_m was right-attached (arc (i, m)) and is popped by reduce:
//!          S_ra[i][m] + S_re[m][j].

use super::{finish_decode, mismatch, BackPointer, DecodeResult, Rule, ScoreTables};
use crate::corpus::ParseTree;
use crate::error::{Error, Result};
use crate::transition::{SystemKind, Transition};

pub fn decode_eager(tables: &ScoreTables) -> Result<DecodeResult> {
    decode(tables, None)
}

pub(crate) fn decode(tables: &ScoreTables, gold: Option<&ParseTree>) -> Result<DecodeResult> {
    if tables.system() != SystemKind::ArcEager {
        return Err(Error::UnsupportedSystem {
            system: tables.system(),
            msg: "decode_eager needs arc-eager tables".into(),
        });
    }
    let n = tables.n();
    if n < 1 {
        return Err(Error::invalid_input("decoding needs n >= 1"));
    }
    tables.check_finite()?;

    let w = n + 2;
    let sh = tables.mat(Transition::Shift);
    let ra = tables.mat(Transition::RightAttach);
    let lr = tables.mat(Transition::LeftReduce);
    let re = tables.mat(Transition::Reduce);
    let gold_heads: Option<&[usize]> = gold.map(|g| g.heads());

    // two charts, indexed by the attachment flag of the left endpoint
    let mut best = [vec![f64::NEG_INFINITY; w * w], vec![f64::NEG_INFINITY; w * w]];
    let mut bp = [vec![BackPointer::NONE; w * w], vec![BackPointer::NONE; w * w]];
    best[0][1] = 0.0; // axiom [0^0, 1]
    for j in 1..=n {
        best[0][j * w + j + 1] = 0.0; // shifted w_j
        best[1][j * w + j + 1] = 0.0; // right-attached w_j
    }

    for width in 2..=n + 1 {
        for i in 0..=(n + 1 - width) {
            let j = i + width;
            for b in 0..2 {
                let mut cell = f64::NEG_INFINITY;
                let mut cell_bp = BackPointer::NONE;
                for m in i + 1..j {
                    let left = best[b][i * w + m];
                    if left == f64::NEG_INFINITY {
                        continue;
                    }
                    // left-reduce over [m^0, j]: arc (j, m)
                    if j <= n {
                        let inner = best[0][m * w + j];
                        if inner != f64::NEG_INFINITY {
                            let mut s = left + inner + sh[i * w + m] + lr[m * w + j];
                            if let Some(g) = gold_heads {
                                s += mismatch(g[m - 1], j);
                            }
                            if s > cell {
                                cell = s;
                                cell_bp = BackPointer { rule: Rule::Left, split: m as u32 };
                            }
                        }
                    }
                    // reduce over [m^1, j]: arc (i, m), scored here
                    let inner = best[1][m * w + j];
                    if inner != f64::NEG_INFINITY {
                        let mut s = left + inner + ra[i * w + m] + re[m * w + j];
                        if let Some(g) = gold_heads {
                            s += mismatch(g[m - 1], i);
                        }
                        if s > cell {
                            cell = s;
                            cell_bp = BackPointer { rule: Rule::Right, split: m as u32 };
                        }
                    }
                }
                best[b][i * w + j] = cell;
                bp[b][i * w + j] = cell_bp;
            }
        }
    }

    let goal = best[0][n + 1]; // cell [0^0, n+1]
    debug_assert!(goal.is_finite());
    let mut sequence = vec![Transition::Shift];
    let mut arcs = Vec::with_capacity(n);
    unfold(&bp, w, 0, 0, n + 1, &mut sequence, &mut arcs);
    finish_decode(n, SystemKind::ArcEager, goal, sequence, arcs)
}

fn unfold(
    bp: &[Vec<BackPointer>; 2],
    w: usize,
    b: usize,
    i: usize,
    j: usize,
    sequence: &mut Vec<Transition>,
    arcs: &mut Vec<(usize, usize)>,
) {
    if j == i + 1 {
        return;
    }
    let p = bp[b][i * w + j];
    let m = p.split as usize;
    unfold(bp, w, b, i, m, sequence, arcs);
    match p.rule {
        Rule::Left => {
            sequence.push(Transition::Shift);
            unfold(bp, w, 0, m, j, sequence, arcs);
            arcs.push((j, m));
            sequence.push(Transition::LeftReduce);
        }
        Rule::Right => {
            arcs.push((i, m));
            sequence.push(Transition::RightAttach);
            unfold(bp, w, 1, m, j, sequence, arcs);
            sequence.push(Transition::Reduce);
        }
        Rule::None => unreachable!("underivable item on the best path"),
    }
}
