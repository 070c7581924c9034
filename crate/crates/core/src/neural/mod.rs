//! Feature encoder and scorers: word/POS embeddings into a 2-layer
//! bi-LSTM, with an MLP over selected positional vectors for transition
//! scoring and a biaffine form for edge scoring. Forward passes cache what
//! reverse mode needs; gradients are exact and accumulate by summation.
//!
//! Parameters live in one flat arena with a named-tensor layout, which
//! keeps the optimizer, checkpointing, and finite-difference checks
//! trivially generic.

pub mod math;

mod biaffine;
mod checkpoint;
pub mod gradcheck;
mod lstm;
mod scorer;

pub use biaffine::{biaffine_backward, biaffine_edge_scores, BiaffineCache};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use lstm::{encode, encoder_backward, EncodedSentence};
pub use scorer::{
    resolve_slots, score_tables, score_tables_backward, score_transitions,
    score_transitions_backward, ScorerStep, TablesCache,
};

use math::Real;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::transition::SystemKind;

/// Named RNG substreams; all randomness flows from one seed.
pub mod streams {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const EXPLORE: u64 = 4;
    pub const DATA: u64 = 5;
}

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stack/buffer positions consulted by the transition scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    B0,
    S0B0,
    S1S0B0,
    S2S1S0B0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    S2,
    S1,
    S0,
    B0,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::S2 => "s2",
            Slot::S1 => "s1",
            Slot::S0 => "s0",
            Slot::B0 => "b0",
        }
    }
}

impl FeatureSet {
    pub fn from_positions(k: usize) -> Result<Self> {
        match k {
            1 => Ok(FeatureSet::B0),
            2 => Ok(FeatureSet::S0B0),
            3 => Ok(FeatureSet::S1S0B0),
            4 => Ok(FeatureSet::S2S1S0B0),
            other => Err(Error::invalid_input(format!("feature sets have 1..=4 positions, got {other}"))),
        }
    }

    pub fn n_slots(self) -> usize {
        self.slots().len()
    }

    pub fn slots(self) -> &'static [Slot] {
        match self {
            FeatureSet::B0 => &[Slot::B0],
            FeatureSet::S0B0 => &[Slot::S0, Slot::B0],
            FeatureSet::S1S0B0 => &[Slot::S1, Slot::S0, Slot::B0],
            FeatureSet::S2S1S0B0 => &[Slot::S2, Slot::S1, Slot::S0, Slot::B0],
        }
    }
}

/// What sits on top of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScorerKind {
    TransitionMlp { system: SystemKind, features: FeatureSet },
    BiaffineEdge,
}

/// Greedy versus exact decoding; recorded in checkpoints so parsing always
/// uses the decoder the model was trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainMode {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub mlp_hidden: usize,
    pub biaffine_dim: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims {
            word_dim: 100,
            pos_dim: 28,
            lstm_hidden: 256,
            lstm_layers: 2,
            mlp_hidden: 256,
            biaffine_dim: 256,
        }
    }
}

impl Dims {
    /// Small dimensions for fast tests.
    pub fn tiny() -> Self {
        Dims {
            word_dim: 6,
            pos_dim: 3,
            lstm_hidden: 5,
            lstm_layers: 2,
            mlp_hidden: 7,
            biaffine_dim: 4,
        }
    }

    pub fn out_dim(&self) -> usize {
        2 * self.lstm_hidden
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub scorer: ScorerKind,
    pub dims: Dims,
    pub lstm_dropout: f64,
    pub mlp_dropout: f64,
}

impl ModelMeta {
    pub fn n_outputs(&self) -> usize {
        match self.scorer {
            ScorerKind::TransitionMlp { system, .. } => system.transitions().len(),
            ScorerKind::BiaffineEdge => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LstmCellIx {
    pub wx: usize,
    pub wh: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct MlpIx {
    pub w1_first: usize, // n_slots consecutive tensors
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub null: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BiaffineIx {
    pub head_w: usize,
    pub head_b: usize,
    pub mod_w: usize,
    pub mod_b: usize,
    pub u: usize,
    pub head_u: usize,
    pub mod_v: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    tensors: Vec<Tensor>,
    pub(crate) word_emb: usize,
    pub(crate) pos_emb: usize,
    pub(crate) lstm: Vec<[LstmCellIx; 2]>,
    pub(crate) mlp: Option<MlpIx>,
    pub(crate) biaffine: Option<BiaffineIx>,
    total: usize,
}

impl Layout {
    fn build(meta: &ModelMeta, n_words: usize, n_pos: usize) -> Layout {
        let d = &meta.dims;
        let mut tensors = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: String, rows: usize, cols: usize| -> usize {
            tensors.push(Tensor { name, offset, rows, cols });
            offset += rows * cols;
            tensors.len() - 1
        };

        let word_emb = push("word_emb".into(), n_words, d.word_dim);
        let pos_emb = push("pos_emb".into(), n_pos, d.pos_dim);

        let mut lstm = Vec::new();
        let mut in_dim = d.word_dim + d.pos_dim;
        for layer in 0..d.lstm_layers {
            let mut cells = [LstmCellIx { wx: 0, wh: 0, b: 0 }; 2];
            for (di, dir) in ["f", "b"].iter().enumerate() {
                let wx = push(format!("lstm{layer}{dir}_wx"), 4 * d.lstm_hidden, in_dim);
                let wh = push(format!("lstm{layer}{dir}_wh"), 4 * d.lstm_hidden, d.lstm_hidden);
                let b = push(format!("lstm{layer}{dir}_b"), 4 * d.lstm_hidden, 1);
                cells[di] = LstmCellIx { wx, wh, b };
            }
            lstm.push(cells);
            in_dim = 2 * d.lstm_hidden;
        }
        let out_dim = 2 * d.lstm_hidden;

        let mut mlp = None;
        let mut biaffine = None;
        match meta.scorer {
            ScorerKind::TransitionMlp { system, features } => {
                let n_out = system.transitions().len();
                let mut w1_first = 0;
                for (k, slot) in features.slots().iter().enumerate() {
                    let ix = push(format!("mlp_w1_{}", slot.name()), d.mlp_hidden, out_dim);
                    if k == 0 {
                        w1_first = ix;
                    }
                }
                let b1 = push("mlp_b1".into(), d.mlp_hidden, 1);
                let w2 = push("mlp_w2".into(), n_out, d.mlp_hidden);
                let b2 = push("mlp_b2".into(), n_out, 1);
                let null = push("null_vec".into(), 1, out_dim);
                mlp = Some(MlpIx { w1_first, b1, w2, b2, null });
            }
            ScorerKind::BiaffineEdge => {
                let head_w = push("ba_head_w".into(), d.biaffine_dim, out_dim);
                let head_b = push("ba_head_b".into(), d.biaffine_dim, 1);
                let mod_w = push("ba_mod_w".into(), d.biaffine_dim, out_dim);
                let mod_b = push("ba_mod_b".into(), d.biaffine_dim, 1);
                let u = push("ba_u".into(), d.biaffine_dim, d.biaffine_dim);
                let head_u = push("ba_head_u".into(), d.biaffine_dim, 1);
                let mod_v = push("ba_mod_v".into(), d.biaffine_dim, 1);
                let bias = push("ba_bias".into(), 1, 1);
                biaffine = Some(BiaffineIx { head_w, head_b, mod_w, mod_b, u, head_u, mod_v, bias });
            }
        }

        Layout {
            tensors,
            word_emb,
            pos_emb,
            lstm,
            mlp,
            biaffine,
            total: offset,
        }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn tensor_named(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

/// All learned parameters of one parser, in a flat arena.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel<F: Real> {
    meta: ModelMeta,
    n_words: usize,
    n_pos: usize,
    layout: Layout,
    data: Vec<F>,
}

impl<F: Real> ScoreModel<F> {
    pub fn zeros(meta: ModelMeta, n_words: usize, n_pos: usize) -> Self {
        let layout = Layout::build(&meta, n_words, n_pos);
        let data = vec![F::zero(); layout.total()];
        ScoreModel { meta, n_words, n_pos, layout, data }
    }

    /// Matrices get Glorot-uniform initialization, biases start at zero
    /// (forget gates at +1), and word embeddings start near zero so
    /// pretrained vectors can overwrite them.
    pub fn new_random(meta: ModelMeta, n_words: usize, n_pos: usize, seed: u64) -> Self {
        let mut model = Self::zeros(meta, n_words, n_pos);
        let mut rng = substream(seed, streams::INIT);
        let hidden = model.meta.dims.lstm_hidden;
        for ti in 0..model.layout.tensors.len() {
            let t = model.layout.tensors[ti].clone();
            let is_bias = t.cols == 1 && t.rows > 1 || t.name == "ba_bias";
            if t.name == "word_emb" {
                for v in &mut model.data[t.range()] {
                    *v = F::from_f64(rng.random_range(-0.01..0.01));
                }
            } else if t.name.ends_with("_b") && t.name.starts_with("lstm") {
                // zero, then +1 on the forget-gate block
                let off = t.offset;
                for k in hidden..2 * hidden {
                    model.data[off + k] = F::one();
                }
            } else if is_bias {
                // already zero
            } else {
                let bound = (6.0 / (t.rows + t.cols) as f64).sqrt();
                for v in &mut model.data[t.range()] {
                    *v = F::from_f64(rng.random_range(-bound..bound));
                }
            }
        }
        model
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn out_dim(&self) -> usize {
        self.meta.dims.out_dim()
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub(crate) fn t(&self, ix: usize) -> &[F] {
        let t = &self.layout.tensors[ix];
        &self.data[t.range()]
    }

    pub(crate) fn t_mut(&mut self, ix: usize) -> &mut [F] {
        let r = self.layout.tensors[ix].range();
        &mut self.data[r]
    }

    pub fn tensor_slice(&self, name: &str) -> Option<&[F]> {
        self.layout.tensor_named(name).map(|t| &self.data[t.range()])
    }

    pub fn check_finite(&self) -> Result<()> {
        for t in &self.layout.tensors {
            if self.data[t.range()].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("parameter tensor {}", t.name)));
            }
        }
        Ok(())
    }

    /// Same parameters at a different precision.
    pub fn cast<G: Real>(&self) -> ScoreModel<G> {
        ScoreModel {
            meta: self.meta.clone(),
            n_words: self.n_words,
            n_pos: self.n_pos,
            layout: self.layout.clone(),
            data: self.data.iter().map(|v| G::from_f64(v.into_f64())).collect(),
        }
    }
}

/// Gradient arena matching a model's layout; accumulation is summation.
#[derive(Debug, Clone)]
pub struct Gradients<F: Real> {
    pub data: Vec<F>,
}

impl<F: Real> Gradients<F> {
    pub fn zeros_like(model: &ScoreModel<F>) -> Self {
        Gradients { data: vec![F::zero(); model.layout.total()] }
    }

    pub fn add(&mut self, other: &Gradients<F>) {
        math::add_assign(&mut self.data, &other.data);
    }

    pub fn scale(&mut self, factor: F) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.data.iter().map(|v| v.into_f64() * v.into_f64()).sum::<f64>().sqrt()
    }

    pub(crate) fn t_mut(&mut self, layout: &Layout, ix: usize) -> &mut [F] {
        let r = layout.tensors[ix].range();
        &mut self.data[r]
    }

    /// Simultaneous mutable views of one LSTM cell's three tensors, which
    /// are consecutive in the arena by construction.
    pub(crate) fn lstm_mut(
        &mut self,
        layout: &Layout,
        cell: LstmCellIx,
    ) -> (&mut [F], &mut [F], &mut [F]) {
        let rwx = layout.tensors[cell.wx].range();
        let rwh = layout.tensors[cell.wh].range();
        let rb = layout.tensors[cell.b].range();
        debug_assert!(rwx.end == rwh.start && rwh.end == rb.start);
        let (rest, b) = self.data[rwx.start..rb.end].split_at_mut(rwh.end - rwx.start);
        let (wx, wh) = rest.split_at_mut(rwx.end - rwx.start);
        (wx, wh, b)
    }
}

/// Overwrites embedding rows for words found in a whitespace-delimited
/// text file (`word v1 .. vd` per line); returns how many vocabulary rows
/// were initialized. Matching is case-sensitive and exact.
pub fn load_pretrained_embeddings<F: Real, R: std::io::BufRead>(
    reader: R,
    vocab: &Vocabulary,
    model: &mut ScoreModel<F>,
) -> Result<usize> {
    let dim = model.meta.dims.word_dim;
    let emb_ix = model.layout.word_emb;
    let mut matched = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts
            .next()
            .ok_or_else(|| Error::parse(idx + 1, "empty embedding row"))?;
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::parse(idx + 1, format!("bad float `{p}`"))))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                idx + 1,
                format!("embedding dimension {} does not match model dimension {dim}", values.len()),
            ));
        }
        if let Some(id) = vocab.word_id_exact(word) {
            let table = model.t_mut(emb_ix);
            for (k, v) in values.into_iter().enumerate() {
                table[id * dim + k] = F::from_f64(v);
            }
            matched += 1;
        }
    }
    Ok(matched)
}
