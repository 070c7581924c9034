//! Training loops (local and global), model selection on development UAS,
//! parsing with trained models, and vote-based ensembling.

mod adam;
mod ensemble;
mod loss;

pub use adam::{adam_update, AdamHyper, AdamState};
pub use ensemble::{ensemble_parse, vote_matrix};
pub use loss::{global_loss, global_loss_edge, greedy_parse, local_train_step};

use std::time::Instant;

use rand::seq::SliceRandom;

use crate::corpus::{evaluate, is_projective, ParseTree, PunctRule, Sentence, SentenceIds, Vocabulary};
use crate::error::{Error, Result};
use crate::graph::eisner_decode;
use crate::neural::{
    biaffine_edge_scores, encode, load_checkpoint, save_checkpoint, score_tables, substream,
    streams, Checkpoint, Dims, FeatureSet, Gradients, ModelMeta, ScoreModel, ScorerKind,
    TrainMode,
};
use crate::par::{fixed_chunks, map_batch, map_chunks};
use crate::transition::SystemKind;

/// Number of gradient chunks per minibatch; fixed (not tied to the worker
/// count) so reductions sum in the same order on any machine.
const GRAD_CHUNKS: usize = 8;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub scorer: ScorerKind,
    pub mode: TrainMode,
    pub epochs: usize,
    pub minibatch_tokens: usize,
    pub adam: AdamHyper,
    pub lstm_dropout: f64,
    pub mlp_dropout: f64,
    pub seed: u64,
    pub punct: PunctRule,
    pub dims: Dims,
    pub clip_norm: f64,
    pub exploration_prob: f64,
    /// Stop once development UAS reaches this value (the target counts as
    /// reached "within `epochs`").
    pub stop_at_dev_uas: Option<f64>,
    /// Text embedding file used to initialize matching word rows.
    pub pretrained_embeddings: Option<std::path::PathBuf>,
}

impl TrainConfig {
    pub fn new(scorer: ScorerKind, mode: TrainMode) -> Self {
        TrainConfig {
            scorer,
            mode,
            epochs: 20,
            minibatch_tokens: 1000,
            adam: AdamHyper::default(),
            lstm_dropout: 0.0,
            mlp_dropout: 0.0,
            seed: 1,
            punct: PunctRule::Ptb,
            dims: Dims::default(),
            clip_norm: 5.0,
            exploration_prob: 0.1,
            stop_at_dev_uas: None,
            pretrained_embeddings: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.scorer, self.mode) {
            (ScorerKind::BiaffineEdge, TrainMode::Global) => Ok(()),
            (ScorerKind::BiaffineEdge, TrainMode::Local) => Err(Error::invalid_input(
                "the edge-factored model is trained globally",
            )),
            (ScorerKind::TransitionMlp { system, features }, TrainMode::Global) => {
                if system == SystemKind::ArcStandard {
                    return Err(Error::UnsupportedSystem {
                        system,
                        msg: "no exact decoder; arc-standard trains locally".into(),
                    });
                }
                if features != FeatureSet::S0B0 {
                    return Err(Error::invalid_input(
                        "global training requires the {s0, b0} feature set",
                    ));
                }
                Ok(())
            }
            (ScorerKind::TransitionMlp { .. }, TrainMode::Local) => Ok(()),
        }
    }

    fn meta(&self) -> ModelMeta {
        ModelMeta {
            scorer: self.scorer,
            dims: self.dims,
            lstm_dropout: self.lstm_dropout,
            mlp_dropout: self.mlp_dropout,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_uas: f64,
    pub dev_uem: f64,
    pub wall_secs: f64,
}

impl std::fmt::Display for EpochMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "epoch={} train_loss={:.6} dev_uas={:.6} dev_uem={:.6} wall_s={:.3}",
            self.epoch, self.train_loss, self.dev_uas, self.dev_uem, self.wall_secs
        )
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub parser: Parser,
    pub metrics: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_dev_uas: f64,
    pub skipped_non_projective: usize,
}

struct Example {
    ids: SentenceIds,
    gold: ParseTree,
}

/// Trains a model, evaluating development UAS after every epoch with the
/// decoder matching the training mode, and returns the best-dev parser.
pub fn train(train_set: &[Sentence], dev_set: &[Sentence], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid_input("empty training set"));
    }
    let vocab = Vocabulary::from_sentences(train_set);
    let mut examples = Vec::with_capacity(train_set.len());
    let mut skipped = 0usize;
    for sent in train_set {
        if !sent.is_fully_annotated() {
            return Err(Error::invalid_input("training sentence without gold heads"));
        }
        match sent.gold_tree() {
            Ok(gold) if is_projective(&gold) => {
                examples.push(Example { ids: vocab.numericalize(sent), gold })
            }
            _ => skipped += 1,
        }
    }
    if examples.is_empty() {
        return Err(Error::invalid_input("no projective training sentences"));
    }

    let mut model =
        ScoreModel::<f32>::new_random(cfg.meta(), vocab.n_words(), vocab.n_pos(), cfg.seed);
    if let Some(path) = &cfg.pretrained_embeddings {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        crate::neural::load_pretrained_embeddings(reader, &vocab, &mut model)?;
    }
    let mut adam_state = AdamState::new(&model);
    let mut shuffle_rng = substream(cfg.seed, streams::SHUFFLE);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut metrics = Vec::new();
    let mut best: Option<(usize, f64, Vec<f32>)> = None;

    for epoch in 1..=cfg.epochs {
        let t0 = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut cursor = 0usize;
        while cursor < order.len() {
            let mut end = cursor;
            let mut tokens = 0usize;
            while end < order.len() && tokens < cfg.minibatch_tokens {
                tokens += examples[order[end]].ids.n();
                end += 1;
            }
            let batch: Vec<(usize, &Example)> = order[cursor..end]
                .iter()
                .enumerate()
                .map(|(k, &ix)| (cursor + k, &examples[ix]))
                .collect();
            let (batch_loss, grads) = minibatch_gradients(&model, &batch, cfg, epoch as u64)?;
            let mut grads = grads;
            let norm = grads.global_norm();
            if norm > cfg.clip_norm {
                grads.scale((cfg.clip_norm / norm) as f32);
            }
            adam_update(&mut model, &grads, &mut adam_state, &cfg.adam)?;
            epoch_loss += batch_loss;
            cursor = end;
        }

        let parser = Parser {
            model: model.clone(),
            vocab: vocab.clone(),
            mode: cfg.mode,
            seed: cfg.seed,
        };
        let trees = parser.parse_batch(dev_set)?;
        let report = evaluate(&trees, dev_set, cfg.punct)?;
        let row = EpochMetrics {
            epoch,
            train_loss: epoch_loss,
            dev_uas: report.uas,
            dev_uem: report.uem,
            wall_secs: t0.elapsed().as_secs_f64(),
        };
        metrics.push(row);
        if best.as_ref().map_or(true, |(_, uas, _)| report.uas > *uas) {
            best = Some((epoch, report.uas, model.data().to_vec()));
        }
        if let Some(target) = cfg.stop_at_dev_uas {
            if report.uas >= target {
                break;
            }
        }
    }

    let (best_epoch, best_dev_uas, best_data) = best.expect("at least one epoch ran");
    model.data_mut().copy_from_slice(&best_data);
    Ok(TrainOutcome {
        parser: Parser { model, vocab, mode: cfg.mode, seed: cfg.seed },
        metrics,
        best_epoch,
        best_dev_uas,
        skipped_non_projective: skipped,
    })
}

/// Per-sentence losses and gradients for one minibatch, computed over a
/// fixed number of contiguous chunks and reduced in chunk order, so the
/// result does not depend on scheduling.
fn minibatch_gradients(
    model: &ScoreModel<f32>,
    batch: &[(usize, &Example)],
    cfg: &TrainConfig,
    epoch: u64,
) -> Result<(f64, Gradients<f32>)> {
    let chunks = fixed_chunks(batch, GRAD_CHUNKS);
    let results: Vec<Result<(f64, Gradients<f32>)>> = map_chunks(chunks, |chunk| {
        let mut grads = Gradients::zeros_like(model);
        let mut loss = 0.0;
        for &(position, example) in chunk {
            let sentence_seed = mix_seed(cfg.seed, epoch, position as u64);
            loss += sentence_loss(model, example, cfg, sentence_seed, &mut grads)?;
        }
        Ok((loss, grads))
    });
    let mut total_loss = 0.0;
    let mut total = Gradients::zeros_like(model);
    for r in results {
        let (loss, grads) = r?;
        total_loss += loss;
        total.add(&grads);
    }
    Ok((total_loss, total))
}

fn sentence_loss(
    model: &ScoreModel<f32>,
    example: &Example,
    cfg: &TrainConfig,
    sentence_seed: u64,
    grads: &mut Gradients<f32>,
) -> Result<f64> {
    let dropout = cfg.lstm_dropout > 0.0 || cfg.mlp_dropout > 0.0;
    match (cfg.scorer, cfg.mode) {
        (ScorerKind::BiaffineEdge, _) => global_loss_edge(
            model,
            &example.ids,
            &example.gold,
            dropout.then_some(sentence_seed),
            Some(grads),
        ),
        (ScorerKind::TransitionMlp { system, .. }, TrainMode::Global) => global_loss(
            model,
            &example.ids,
            &example.gold,
            system,
            dropout.then_some(sentence_seed),
            Some(grads),
        ),
        (ScorerKind::TransitionMlp { system, features }, TrainMode::Local) => local_train_step(
            model,
            &example.ids,
            &example.gold,
            system,
            features,
            cfg.exploration_prob,
            sentence_seed,
            dropout,
            grads,
        ),
    }
}

fn mix_seed(seed: u64, epoch: u64, position: u64) -> u64 {
    // splitmix-style finalizer over (seed, epoch, position)
    let mut z = seed ^ epoch.rotate_left(32) ^ position.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A trained model plus its vocabulary; parses with the decoder recorded
/// at training time.
#[derive(Debug, Clone)]
pub struct Parser {
    pub model: ScoreModel<f32>,
    pub vocab: Vocabulary,
    pub mode: TrainMode,
    pub seed: u64,
}

impl Parser {
    pub fn parse(&self, sentence: &Sentence) -> Result<ParseTree> {
        let ids = self.vocab.numericalize(sentence);
        let enc = encode(&self.model, &ids, false, 0)?;
        match (self.model.meta().scorer, self.mode) {
            (ScorerKind::BiaffineEdge, _) => {
                let (scores, _) = biaffine_edge_scores(&self.model, &enc)?;
                Ok(eisner_decode(&scores)?.0)
            }
            (ScorerKind::TransitionMlp { .. }, TrainMode::Global) => {
                let (tables, _) = score_tables(&self.model, &enc)?;
                Ok(crate::chart::decode(&tables)?.tree)
            }
            (ScorerKind::TransitionMlp { system, features }, TrainMode::Local) => {
                greedy_parse(&self.model, &enc, system, features)
            }
        }
    }

    /// Parses many sentences; output order equals input order.
    pub fn parse_batch(&self, sentences: &[Sentence]) -> Result<Vec<ParseTree>> {
        map_batch(sentences, |s| self.parse(s)).into_iter().collect()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        save_checkpoint(path, &self.model, &self.vocab, self.mode, self.seed)
    }

    pub fn load(path: &std::path::Path) -> Result<Parser> {
        let Checkpoint { model, vocab, mode, seed } = load_checkpoint(path)?;
        Ok(Parser { model, vocab, mode, seed })
    }
}
