//! Tabular exact decoding for arc-hybrid and arc-eager.
//!
//! Items assert computations between stack/buffer feature pairs: `[i, j]`
//! (arc-hybrid) or `[i^b, j]` (arc-eager, `b` flagging whether `w_i` has
//! been attached). Shift and right-attach carry score 0 up front; each
//! reduce rule pays for the push that opened its inner item and for the
//! reduce itself, so a full derivation sums exactly the per-transition
//! scores of the corresponding sequence.

mod eager;
mod hybrid;

pub use eager::decode_eager;
pub use hybrid::decode_hybrid;

use crate::corpus::ParseTree;
use crate::error::{Error, Result};
use crate::transition::{replay, Config, SystemKind, Transition};

/// Per-transition score matrices of shape (n+2) x (n+2):
/// `get(t, a, b)` is the score of taking `t` in a configuration whose
/// minimal features are `s0 = w_a`, `b0 = w_b` (index n+1 is the
/// end-of-sentence marker).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTables {
    system: SystemKind,
    n: usize,
    mats: Vec<Vec<f64>>,
}

impl ScoreTables {
    pub fn zeros(system: SystemKind, n: usize) -> Self {
        let w = n + 2;
        ScoreTables {
            system,
            n,
            mats: vec![vec![0.0; w * w]; system.transitions().len()],
        }
    }

    pub fn system(&self) -> SystemKind {
        self.system
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.n + 2
    }

    pub fn get(&self, t: Transition, a: usize, b: usize) -> f64 {
        let idx = self.system.transition_index(t).expect("transition not in system");
        self.mats[idx][a * self.width() + b]
    }

    pub fn set(&mut self, t: Transition, a: usize, b: usize, value: f64) {
        let w = self.width();
        let idx = self.system.transition_index(t).expect("transition not in system");
        self.mats[idx][a * w + b] = value;
    }

    pub fn mat(&self, t: Transition) -> &[f64] {
        let idx = self.system.transition_index(t).expect("transition not in system");
        &self.mats[idx]
    }

    pub fn random<R: rand::Rng>(system: SystemKind, n: usize, rng: &mut R, lo: f64, hi: f64) -> Self {
        let mut tables = ScoreTables::zeros(system, n);
        for mat in &mut tables.mats {
            for v in mat.iter_mut() {
                *v = rng.random_range(lo..hi);
            }
        }
        tables
    }

    pub fn check_finite(&self) -> Result<()> {
        for (idx, mat) in self.mats.iter().enumerate() {
            if mat.iter().any(|v| !v.is_finite()) {
                let t = self.system.transitions()[idx];
                return Err(Error::NonFinite(format!("score table for `{t}`")));
            }
        }
        Ok(())
    }
}

/// An exactly decoded parse: the maximizing transition sequence, the tree
/// it derives, and its total score (including the cost term for
/// cost-augmented decoding).
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub tree: ParseTree,
    pub sequence: Vec<Transition>,
    pub score: f64,
}

/// Maximizes `F(t) + cost(gold, t)` where the cost is the number of
/// mis-attached tokens; the indicator rides on whichever rule carries the
/// arc's score, so the decomposition of the plain decoder is unchanged.
pub fn decode_cost_augmented(tables: &ScoreTables, gold: &ParseTree) -> Result<DecodeResult> {
    if gold.len() != tables.n() {
        return Err(Error::LengthMismatch(format!(
            "gold tree of length {} vs tables for n = {}",
            gold.len(),
            tables.n()
        )));
    }
    match tables.system() {
        SystemKind::ArcHybrid => hybrid::decode(tables, Some(gold)),
        SystemKind::ArcEager => eager::decode(tables, Some(gold)),
        system => Err(Error::UnsupportedSystem {
            system,
            msg: "exact decoding covers arc-hybrid and arc-eager".into(),
        }),
    }
}

/// Exact decoding dispatched on the table set's system.
pub fn decode(tables: &ScoreTables) -> Result<DecodeResult> {
    match tables.system() {
        SystemKind::ArcHybrid => decode_hybrid(tables),
        SystemKind::ArcEager => decode_eager(tables),
        system => Err(Error::UnsupportedSystem {
            system,
            msg: "exact decoding covers arc-hybrid and arc-eager".into(),
        }),
    }
}

/// Sum of per-transition scores along a complete sequence. A transition
/// taken with an empty stack (only ROOT's shift) contributes 0; the buffer
/// feature may be the end marker at index n+1.
pub fn sequence_score(tables: &ScoreTables, sequence: &[Transition]) -> Result<f64> {
    let system = tables.system();
    let mut config = Config::initial(tables.n());
    let mut total = 0.0;
    for (step, &t) in sequence.iter().enumerate() {
        if let Some(s0) = config.s0() {
            total += tables.get(t, s0, config.front());
        }
        config = config
            .apply(t, system)
            .map_err(|e| Error::BadSequence { step, msg: e.to_string() })?;
    }
    if !config.is_terminal() {
        return Err(Error::BadSequence {
            step: sequence.len(),
            msg: "sequence does not reach a terminal configuration".into(),
        });
    }
    Ok(total)
}

/// Greedy left-to-right decoding under the same table scores: at each
/// configuration take the best-scoring transition that keeps termination
/// reachable.
pub fn greedy_decode(tables: &ScoreTables) -> Result<DecodeResult> {
    let system = tables.system();
    let n = tables.n();
    if n < 1 {
        return Err(Error::invalid_input("greedy decoding needs n >= 1"));
    }
    tables.check_finite()?;
    let mut config = Config::initial(n);
    let mut sequence = Vec::with_capacity(2 * n + 1);
    let mut score = 0.0;
    while !config.is_terminal() {
        let candidates = config.viable(system);
        let t = match config.s0() {
            None => Transition::Shift,
            Some(s0) => {
                let mut best: Option<(Transition, f64)> = None;
                for &t in &candidates {
                    let s = tables.get(t, s0, config.front());
                    if best.map_or(true, |(_, bs)| s > bs) {
                        best = Some((t, s));
                    }
                }
                let (t, s) = best.ok_or_else(|| Error::BadSequence {
                    step: sequence.len(),
                    msg: "no viable transition".into(),
                })?;
                score += s;
                t
            }
        };
        config = config.apply(t, system)?;
        sequence.push(t);
    }
    Ok(DecodeResult {
        tree: config.to_tree()?,
        sequence,
        score,
    })
}

/// Shared by the two decoders: turn collected arcs into a tree and check
/// the recovered sequence against the chart score.
pub(crate) fn finish_decode(
    n: usize,
    system: SystemKind,
    score: f64,
    sequence: Vec<Transition>,
    arcs: Vec<(usize, usize)>,
) -> Result<DecodeResult> {
    let mut heads = vec![0usize; n];
    let mut seen = vec![false; n + 1];
    for (h, m) in arcs {
        debug_assert!(!seen[m]);
        seen[m] = true;
        heads[m - 1] = h;
    }
    debug_assert!(seen[1..].iter().all(|&s| s));
    let tree = ParseTree::new(heads)?;
    debug_assert!(replay(&sequence, n, system).map(|c| c.is_terminal()).unwrap_or(false));
    Ok(DecodeResult { tree, sequence, score })
}

/// Compact backpointer: which reduce rule built an item and at which split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    None,
    Right, // arc (left index, split)
    Left,  // arc (right index, split)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BackPointer {
    pub rule: Rule,
    pub split: u32,
}

impl BackPointer {
    pub const NONE: BackPointer = BackPointer { rule: Rule::None, split: 0 };
}

pub(crate) fn mismatch(gold_head: usize, head: usize) -> f64 {
    if gold_head != head {
        1.0
    } else {
        0.0
    }
}
