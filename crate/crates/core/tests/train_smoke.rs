//! Training smoke tests on tiny data: losses behave, a single sentence is
//! overfit quickly, runs are deterministic, and non-projective gold is
//! skipped with a count.

use exparse::bruteforce::SequenceBank;
use exparse::corpus::{PunctRule, Sentence, Token, Vocabulary};
use exparse::neural::{Dims, FeatureSet, Gradients, ModelMeta, ScoreModel, ScorerKind, TrainMode};
use exparse::train::{
    adam_update, global_loss, global_loss_edge, local_train_step, train, AdamHyper, AdamState,
    TrainConfig,
};
use exparse::transition::SystemKind;

fn tiny_meta(system: SystemKind, features: FeatureSet) -> ModelMeta {
    ModelMeta {
        scorer: ScorerKind::TransitionMlp { system, features },
        dims: Dims::tiny(),
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
    }
}

fn toy_sentences(count: usize, seed: u64) -> Vec<Sentence> {
    exparse::toy::generate(count, seed)
}

#[test]
fn global_loss_upper_bounds_decode_cost() {
    // with zero output weights the loss equals the maximum achievable
    // mis-attachment count, and the structured hinge is a cost upper bound
    let sents = toy_sentences(6, 2);
    for system in [SystemKind::ArcHybrid, SystemKind::ArcEager] {
        for sent in &sents {
            let n = sent.len().min(6);
            let truncated = Sentence::new(sent.tokens()[..n].to_vec());
            let sent = match truncated {
                Ok(s) if s.gold_tree().is_ok() => s,
                _ => continue,
            };
            let gold = match sent.gold_tree() {
                Ok(g) if exparse::corpus::is_projective(&g) => g,
                _ => continue,
            };
            let vocab = Vocabulary::from_sentences(std::slice::from_ref(&sent));
            let meta = tiny_meta(system, FeatureSet::S0B0);
            let mut model: ScoreModel<f64> =
                ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 3);
            // zero the output layer: all table entries become 0
            let w2 = model.layout().tensor_named("mlp_w2").unwrap().range();
            model.data_mut()[w2].fill(0.0);
            let b2 = model.layout().tensor_named("mlp_b2").unwrap().range();
            model.data_mut()[b2].fill(0.0);

            let ids = vocab.numericalize(&sent);
            let loss = global_loss(&model, &ids, &gold, system, None, None).unwrap();
            let bank = SequenceBank::new(system, gold.len()).unwrap();
            let max_cost = (0..bank.len())
                .map(|i| {
                    let t = &bank.trees()[i];
                    (1..=gold.len()).filter(|&m| t.head(m) != gold.head(m)).count()
                })
                .max()
                .unwrap() as f64;
            assert!((loss - max_cost).abs() < 1e-9, "{system}: loss {loss} vs {max_cost}");
        }
    }
}

#[test]
fn margin_satisfied_gives_zero_loss_and_zero_gradient() {
    let sents = toy_sentences(1, 5);
    let sent = &sents[0];
    let gold = sent.gold_tree().unwrap();
    let vocab = Vocabulary::from_sentences(std::slice::from_ref(sent));
    let system = SystemKind::ArcEager;
    let meta = tiny_meta(system, FeatureSet::S0B0);
    let mut model: ScoreModel<f64> = ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 7);
    let ids = vocab.numericalize(sent);

    // train on this one sentence until the margin is satisfied
    let mut state = AdamState::new(&model);
    let hyper = AdamHyper { step_size: 0.02, ..AdamHyper::default() };
    let mut final_loss = f64::INFINITY;
    for _ in 0..200 {
        let mut grads = Gradients::zeros_like(&model);
        let loss = global_loss(&model, &ids, &gold, system, None, Some(&mut grads)).unwrap();
        final_loss = loss;
        if loss == 0.0 {
            break;
        }
        adam_update(&mut model, &grads, &mut state, &hyper).unwrap();
    }
    assert_eq!(final_loss, 0.0, "margin should be satisfiable on one sentence");
    let mut grads = Gradients::zeros_like(&model);
    let loss = global_loss(&model, &ids, &gold, system, None, Some(&mut grads)).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.data.iter().all(|&g| g == 0.0), "zero loss must give zero gradient");
}

#[test]
fn zero_loss_means_margin_over_every_sequence() {
    // when the global loss is 0, F(gold) >= F(t) + cost(gold, t) for every
    // complete sequence t, checked by enumeration
    let sent = Sentence::new(vec![
        Token::new("the", "DT", Some(2)).unwrap(),
        Token::new("cat", "NN", Some(3)).unwrap(),
        Token::new("ran", "VB", Some(0)).unwrap(),
        Token::new(".", ".", Some(3)).unwrap(),
    ])
    .unwrap();
    let gold = sent.gold_tree().unwrap();
    let vocab = Vocabulary::from_sentences(std::slice::from_ref(&sent));
    for system in [SystemKind::ArcHybrid, SystemKind::ArcEager] {
        let meta = tiny_meta(system, FeatureSet::S0B0);
        let mut model: ScoreModel<f64> =
            ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 23);
        let ids = vocab.numericalize(&sent);
        let mut state = AdamState::new(&model);
        let hyper = AdamHyper { step_size: 0.02, ..AdamHyper::default() };
        let mut loss = f64::INFINITY;
        for _ in 0..300 {
            let mut grads = Gradients::zeros_like(&model);
            loss = global_loss(&model, &ids, &gold, system, None, Some(&mut grads)).unwrap();
            if loss == 0.0 {
                break;
            }
            adam_update(&mut model, &grads, &mut state, &hyper).unwrap();
        }
        assert_eq!(loss, 0.0, "{system}");

        let enc = exparse::neural::encode(&model, &ids, false, 0).unwrap();
        let (tables, _) = exparse::neural::score_tables(&model, &enc).unwrap();
        let gold_seq = exparse::transition::static_oracle(&gold, system).unwrap();
        let gold_score = exparse::chart::sequence_score(&tables, &gold_seq).unwrap();
        let bank = SequenceBank::new(system, gold.len()).unwrap();
        for idx in 0..bank.len() {
            let f_t = bank.score(idx, &tables);
            let tree = &bank.trees()[idx];
            let cost = (1..=gold.len()).filter(|&m| tree.head(m) != gold.head(m)).count() as f64;
            assert!(
                gold_score + 1e-9 >= f_t + cost,
                "{system}: sequence {idx} violates the margin ({gold_score} < {f_t} + {cost})"
            );
        }
    }
}

#[test]
fn hinge_upper_bounds_decode_cost() {
    // for random models, loss >= cost(gold, unaugmented-decode tree)
    let sents = toy_sentences(10, 29);
    for system in [SystemKind::ArcHybrid, SystemKind::ArcEager] {
        for (k, sent) in sents.iter().enumerate() {
            let n = sent.len().min(6);
            let sent = match Sentence::new(sent.tokens()[..n].to_vec()) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let gold = match sent.gold_tree() {
                Ok(g) if exparse::corpus::is_projective(&g) => g,
                _ => continue,
            };
            let vocab = Vocabulary::from_sentences(std::slice::from_ref(&sent));
            let meta = tiny_meta(system, FeatureSet::S0B0);
            let model: ScoreModel<f64> =
                ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 31 + k as u64);
            let ids = vocab.numericalize(&sent);
            let loss = global_loss(&model, &ids, &gold, system, None, None).unwrap();
            assert!(loss >= -1e-12, "{system}: loss must be non-negative");

            let enc = exparse::neural::encode(&model, &ids, false, 0).unwrap();
            let (tables, _) = exparse::neural::score_tables(&model, &enc).unwrap();
            let decoded = match system {
                SystemKind::ArcHybrid => exparse::chart::decode_hybrid(&tables).unwrap(),
                _ => exparse::chart::decode_eager(&tables).unwrap(),
            };
            let cost =
                (1..=gold.len()).filter(|&m| decoded.tree.head(m) != gold.head(m)).count() as f64;
            assert!(
                loss + 1e-9 >= cost,
                "{system} sentence {k}: hinge {loss} below decode cost {cost}"
            );
        }
    }
}

#[test]
fn local_step_overfits_a_single_sentence() {
    let sents = toy_sentences(1, 8);
    let sent = &sents[0];
    let gold = sent.gold_tree().unwrap();
    let vocab = Vocabulary::from_sentences(std::slice::from_ref(sent));
    for system in [SystemKind::ArcStandard, SystemKind::ArcHybrid, SystemKind::ArcEager] {
        let features =
            if system == SystemKind::ArcStandard { FeatureSet::S1S0B0 } else { FeatureSet::S0B0 };
        let meta = tiny_meta(system, features);
        let mut model: ScoreModel<f64> =
            ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 11);
        let ids = vocab.numericalize(sent);
        let mut state = AdamState::new(&model);
        let hyper = AdamHyper { step_size: 0.05, ..AdamHyper::default() };
        let mut last = f64::INFINITY;
        for step in 0..50 {
            let mut grads = Gradients::zeros_like(&model);
            let loss =
                local_train_step(&model, &ids, &gold, system, features, 0.1, step, false, &mut grads)
                    .unwrap();
            last = loss;
            if loss == 0.0 {
                break;
            }
            adam_update(&mut model, &grads, &mut state, &hyper).unwrap();
        }
        assert_eq!(last, 0.0, "{system}: local loss should reach 0 within 50 steps");
    }
}

#[test]
fn edge_factored_loss_decreases() {
    let sents = toy_sentences(1, 13);
    let sent = &sents[0];
    let gold = sent.gold_tree().unwrap();
    let vocab = Vocabulary::from_sentences(std::slice::from_ref(sent));
    let meta = ModelMeta {
        scorer: ScorerKind::BiaffineEdge,
        dims: Dims::tiny(),
        lstm_dropout: 0.0,
        mlp_dropout: 0.0,
    };
    let mut model: ScoreModel<f64> = ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), 17);
    let ids = vocab.numericalize(sent);
    let mut state = AdamState::new(&model);
    let hyper = AdamHyper { step_size: 0.05, ..AdamHyper::default() };
    let first = global_loss_edge(&model, &ids, &gold, None, None).unwrap();
    let mut last = first;
    for _ in 0..100 {
        let mut grads = Gradients::zeros_like(&model);
        last = global_loss_edge(&model, &ids, &gold, None, Some(&mut grads)).unwrap();
        if last == 0.0 {
            break;
        }
        adam_update(&mut model, &grads, &mut state, &hyper).unwrap();
    }
    assert_eq!(last, 0.0, "edge-factored loss should reach 0 (started at {first})");
}

fn fast_config(scorer: ScorerKind, mode: TrainMode) -> TrainConfig {
    let mut cfg = TrainConfig::new(scorer, mode);
    cfg.dims = Dims::tiny();
    cfg.epochs = 25;
    cfg.minibatch_tokens = 50; // tiny corpus, keep several updates per epoch
    cfg.adam = AdamHyper { step_size: 0.02, ..AdamHyper::default() };
    cfg.punct = PunctRule::Ptb;
    cfg.seed = 5;
    cfg
}

#[test]
fn train_loop_overfits_and_is_deterministic() {
    let data = toy_sentences(30, 21);
    let cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    let out1 = train(&data, &data, &cfg).unwrap();
    assert_eq!(out1.metrics.len(), cfg.epochs, "one metrics row per epoch");
    assert!(
        out1.best_dev_uas >= 0.95,
        "tiny-dims global model should fit 30 sentences, got {}",
        out1.best_dev_uas
    );
    let out2 = train(&data, &data, &cfg).unwrap();
    let strip = |m: &exparse::train::EpochMetrics| (m.epoch, m.train_loss, m.dev_uas, m.dev_uem);
    assert_eq!(
        out1.metrics.iter().map(strip).collect::<Vec<_>>(),
        out2.metrics.iter().map(strip).collect::<Vec<_>>(),
        "fixed seed must reproduce the metric trajectory"
    );
}

#[test]
fn one_sentence_corpus_reaches_full_uas() {
    let data = toy_sentences(1, 77);
    let mut cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcEager, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    cfg.epochs = 20;
    let out = train(&data, &data, &cfg).unwrap();
    assert_eq!(out.best_dev_uas, 1.0, "single sentence should be overfit within 20 epochs");
}

#[test]
fn global_training_improves_all_three_model_types() {
    let data = toy_sentences(40, 57);
    let dev = toy_sentences(15, 58);
    for scorer in [
        ScorerKind::TransitionMlp { system: SystemKind::ArcEager, features: FeatureSet::S0B0 },
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S0B0 },
        ScorerKind::BiaffineEdge,
    ] {
        let cfg = fast_config(scorer, TrainMode::Global);
        let out = train(&data, &dev, &cfg).unwrap();
        let first = out.metrics.first().unwrap().dev_uas;
        assert!(
            out.best_dev_uas > first,
            "{scorer:?}: best {} should strictly improve on epoch-one {}",
            out.best_dev_uas,
            first
        );
    }
}

#[test]
fn dropout_training_runs_and_is_deterministic() {
    let data = toy_sentences(12, 61);
    let mut cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    cfg.epochs = 2;
    cfg.lstm_dropout = 0.2;
    cfg.mlp_dropout = 0.4;
    let a = train(&data, &data[..4], &cfg).unwrap();
    let b = train(&data, &data[..4], &cfg).unwrap();
    assert_eq!(a.parser.model.data(), b.parser.model.data());
    for m in &a.metrics {
        assert!(m.train_loss.is_finite());
    }
}

#[test]
fn train_rejects_bad_configs_and_counts_skips() {
    let mut data = toy_sentences(8, 3);
    // a non-projective gold sentence: arcs (3,1) and (0,2) cross
    let bad = Sentence::new(vec![
        Token::new("a", "NN", Some(3)).unwrap(),
        Token::new("b", "VB", Some(0)).unwrap(),
        Token::new("c", "NN", Some(2)).unwrap(),
    ])
    .unwrap();
    assert!(!exparse::corpus::is_projective(&bad.gold_tree().unwrap()));
    data.push(bad);

    let cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    let mut cfg_short = cfg.clone();
    cfg_short.epochs = 1;
    let out = train(&data, &data[..2], &cfg_short).unwrap();
    assert_eq!(out.skipped_non_projective, 1);

    // invalid combinations
    let bad_cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcStandard, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    assert!(train(&data, &data, &bad_cfg).is_err());
    let bad_cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S1S0B0 },
        TrainMode::Global,
    );
    assert!(train(&data, &data, &bad_cfg).is_err());
    let bad_cfg = fast_config(ScorerKind::BiaffineEdge, TrainMode::Local);
    assert!(train(&data, &data, &bad_cfg).is_err());
    assert!(train(&[], &data, &cfg).is_err(), "empty training set is an error");
}

#[test]
fn ensemble_single_model_is_identity_and_majority_wins() {
    use exparse::train::ensemble_parse;
    let data = toy_sentences(20, 31);
    let cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcEager, features: FeatureSet::S0B0 },
        TrainMode::Global,
    );
    let mut cfg = cfg;
    cfg.epochs = 4;
    let out = train(&data, &data[..5], &cfg).unwrap();
    let parser = out.parser;
    for sent in &data[..5] {
        let own = parser.parse(sent).unwrap();
        let ens = ensemble_parse(std::slice::from_ref(&parser), sent).unwrap();
        assert_eq!(own, ens, "singleton ensemble must reproduce the model's own tree");
    }
    assert!(ensemble_parse(&[], &data[0]).is_err());
}

#[test]
fn checkpoint_round_trip_preserves_parses() {
    let data = toy_sentences(12, 41);
    let mut cfg = fast_config(
        ScorerKind::TransitionMlp { system: SystemKind::ArcHybrid, features: FeatureSet::S0B0 },
        TrainMode::Local,
    );
    cfg.epochs = 2;
    let out = train(&data, &data[..4], &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("parser.ckpt");
    out.parser.save(&path).unwrap();
    let loaded = exparse::train::Parser::load(&path).unwrap();
    for sent in &data[..4] {
        assert_eq!(out.parser.parse(sent).unwrap(), loaded.parse(sent).unwrap());
    }
}
