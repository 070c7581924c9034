//! Central finite-difference checks of the analytic gradients, at 64-bit
//! precision. The loss is a fixed random linear combination of the scorer
//! outputs, so every parameter group participates.

use rand::Rng;

use super::{
    biaffine_backward, biaffine_edge_scores, encode, encoder_backward, score_tables,
    score_tables_backward, score_transitions, score_transitions_backward, substream, Dims,
    FeatureSet, Gradients, ModelMeta, ScoreModel, ScorerKind,
};
use crate::corpus::SentenceIds;
use crate::error::Result;
use crate::transition::SystemKind;

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub coords_checked: usize,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-8);
    (a - b).abs() / denom
}

fn random_ids<R: Rng>(rng: &mut R, n: usize, n_words: usize, n_pos: usize) -> SentenceIds {
    let mut word_ids = vec![1]; // ROOT
    let mut pos_ids = vec![0];
    for _ in 0..n {
        word_ids.push(rng.random_range(3..n_words));
        pos_ids.push(rng.random_range(3..n_pos));
    }
    word_ids.push(2); // end marker
    pos_ids.push(1);
    SentenceIds { word_ids, pos_ids }
}

/// Loss used for the table path: sum of fixed random weights over every
/// table entry.
struct TableLoss {
    weights: Vec<f64>, // t * positions^2
    n_out: usize,
    positions: usize,
}

impl TableLoss {
    fn new<R: Rng>(rng: &mut R, n_out: usize, positions: usize) -> Self {
        TableLoss {
            weights: (0..n_out * positions * positions)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            n_out,
            positions,
        }
    }

    fn touched(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.weights.len());
        for t in 0..self.n_out {
            for a in 0..self.positions {
                for b in 0..self.positions {
                    out.push((t, a, b, self.weights[(t * self.positions + a) * self.positions + b]));
                }
            }
        }
        out
    }

    fn eval(&self, tables: &crate::chart::ScoreTables, system: SystemKind) -> f64 {
        let mut total = 0.0;
        for (t_idx, &t) in system.transitions().iter().enumerate() {
            for a in 0..self.positions {
                for b in 0..self.positions {
                    total += self.weights[(t_idx * self.positions + a) * self.positions + b]
                        * tables.get(t, a, b);
                }
            }
        }
        total
    }
}

/// Checks embeddings -> bi-LSTM -> MLP through the batched score tables.
pub fn check_transition_tables(
    dims: Dims,
    system: SystemKind,
    n: usize,
    seed: u64,
    coords_per_tensor: usize,
) -> Result<GradCheckReport> {
    let meta = ModelMeta {
        scorer: ScorerKind::TransitionMlp { system, features: FeatureSet::S0B0 },
        dims,
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
    };
    let n_words = 9;
    let n_pos = 6;
    let mut rng = substream(seed, 77);
    let ids = random_ids(&mut rng, n, n_words, n_pos);
    let model: ScoreModel<f64> = ScoreModel::new_random(meta, n_words, n_pos, seed);
    let enc = encode(&model, &ids, false, 0)?;
    let loss = TableLoss::new(&mut rng, system.transitions().len(), enc.positions());

    let (tables, cache) = score_tables(&model, &enc)?;
    let _ = loss.eval(&tables, system);
    let mut grads = Gradients::zeros_like(&model);
    let mut d_out = vec![0.0f64; enc.positions() * enc.out_dim()];
    score_tables_backward(&model, &enc, &cache, &loss.touched(), &mut grads, &mut d_out)?;
    encoder_backward(&model, &enc, &d_out, &mut grads);

    let eval = |m: &ScoreModel<f64>| -> Result<f64> {
        let enc = encode(m, &ids, false, 0)?;
        let (tables, _) = score_tables(m, &enc)?;
        Ok(loss.eval(&tables, system))
    };
    fd_sweep(model, grads, coords_per_tensor, seed ^ 0xA5A5, eval)
}

/// Checks embeddings -> bi-LSTM -> biaffine through the edge scores.
pub fn check_biaffine(dims: Dims, n: usize, seed: u64, coords_per_tensor: usize) -> Result<GradCheckReport> {
    let meta = ModelMeta {
        scorer: ScorerKind::BiaffineEdge,
        dims,
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
    };
    let n_words = 9;
    let n_pos = 6;
    let mut rng = substream(seed, 78);
    let ids = random_ids(&mut rng, n, n_words, n_pos);
    let model: ScoreModel<f64> = ScoreModel::new_random(meta, n_words, n_pos, seed);
    let weights: Vec<f64> = (0..(n + 1) * (n + 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w2 = weights.clone();
    let eval_edges = move |g: &crate::graph::EdgeScores| -> f64 {
        let mut total = 0.0;
        for h in 0..=n {
            for m in 1..=n {
                if h != m {
                    total += w2[h * (n + 1) + m] * g.get(h, m);
                }
            }
        }
        total
    };

    let enc = encode(&model, &ids, false, 0)?;
    let mut touched = Vec::new();
    for h in 0..=n {
        for m in 1..=n {
            if h != m {
                touched.push((h, m, weights[h * (n + 1) + m]));
            }
        }
    }
    let (_, cache) = biaffine_edge_scores(&model, &enc)?;
    let mut grads = Gradients::zeros_like(&model);
    let mut d_out = vec![0.0f64; enc.positions() * enc.out_dim()];
    biaffine_backward(&model, &enc, &cache, &touched, &mut grads, &mut d_out)?;
    encoder_backward(&model, &enc, &d_out, &mut grads);

    let eval = move |m: &ScoreModel<f64>| -> Result<f64> {
        let enc = encode(m, &ids, false, 0)?;
        let (scores, _) = biaffine_edge_scores(m, &enc)?;
        Ok(eval_edges(&scores))
    };
    fd_sweep(model, grads, coords_per_tensor, seed ^ 0x5A5A, eval)
}

/// Checks the per-configuration scorer including the null-vector path.
pub fn check_transition_slots(
    dims: Dims,
    system: SystemKind,
    n: usize,
    seed: u64,
    coords_per_tensor: usize,
) -> Result<GradCheckReport> {
    let meta = ModelMeta {
        scorer: ScorerKind::TransitionMlp { system, features: FeatureSet::S2S1S0B0 },
        dims,
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
    };
    let n_words = 9;
    let n_pos = 6;
    let mut rng = substream(seed, 79);
    let ids = random_ids(&mut rng, n, n_words, n_pos);
    let model: ScoreModel<f64> = ScoreModel::new_random(meta, n_words, n_pos, seed);
    let slots = vec![None, None, Some(1), Some(2)];
    let weights: Vec<f64> =
        (0..system.transitions().len()).map(|_| rng.random_range(-1.0..1.0)).collect();

    let enc = encode(&model, &ids, false, 0)?;
    let (_, cache) = score_transitions(&model, &enc, &slots)?;
    let mut grads = Gradients::zeros_like(&model);
    let mut d_out = vec![0.0f64; enc.positions() * enc.out_dim()];
    let d_scores: Vec<f64> = weights.clone();
    score_transitions_backward(&model, &enc, &cache, &d_scores, &mut grads, &mut d_out)?;
    encoder_backward(&model, &enc, &d_out, &mut grads);

    let slots2 = slots.clone();
    let eval = move |m: &ScoreModel<f64>| -> Result<f64> {
        let enc = encode(m, &ids, false, 0)?;
        let (scores, _) = score_transitions(m, &enc, &slots2)?;
        Ok(scores.iter().zip(&weights).map(|(s, w)| s * w).sum())
    };
    fd_sweep(model, grads, coords_per_tensor, seed ^ 0x3C3C, eval)
}

/// Central differences on sampled coordinates of every tensor.
fn fd_sweep<E>(
    mut model: ScoreModel<f64>,
    grads: Gradients<f64>,
    coords_per_tensor: usize,
    seed: u64,
    eval: E,
) -> Result<GradCheckReport>
where
    E: Fn(&ScoreModel<f64>) -> Result<f64>,
{
    let mut rng = substream(seed, 80);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_tensor: String::new(),
        coords_checked: 0,
    };
    let tensors: Vec<(String, std::ops::Range<usize>)> = model
        .layout()
        .tensors()
        .iter()
        .map(|t| (t.name.clone(), t.range()))
        .collect();
    for (name, range) in tensors {
        let len = range.end - range.start;
        for _ in 0..coords_per_tensor.min(len) {
            let k = range.start + rng.random_range(0..len);
            let orig = model.data()[k];
            model.data_mut()[k] = orig + FD_STEP;
            let plus = eval(&model)?;
            model.data_mut()[k] = orig - FD_STEP;
            let minus = eval(&model)?;
            model.data_mut()[k] = orig;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let err = rel_err(grads.data[k], fd);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_tensor = name.clone();
            }
        }
    }
    Ok(report)
}
