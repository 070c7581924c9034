//! Structured-hinge losses: the global loss runs cost-augmented exact
//! decoding against the canonical gold sequence; the local loss rolls out
//! greedily under a dynamic oracle.

use std::collections::HashMap;

use rand::Rng;

use crate::chart::{decode_cost_augmented, sequence_score};
use crate::corpus::ParseTree;
use crate::error::{Error, Result};
use crate::graph::eisner_decode_cost_augmented;
use crate::neural::math::Real;
use crate::neural::{
    biaffine_backward, biaffine_edge_scores, encode, encoder_backward, resolve_slots,
    score_tables, score_tables_backward, score_transitions, score_transitions_backward,
    substream, streams, EncodedSentence, FeatureSet, Gradients, ScoreModel,
};
use crate::transition::{
    dynamic_oracle_cost, static_oracle, Config, SystemKind, Transition,
};

/// max_t (F(t) + cost(gold, t)) - F(gold sequence), clamped at zero.
/// When positive and `grads` is given, the subgradient (difference of the
/// two sequences' table occupancies pushed through the network) is added.
pub fn global_loss<F: Real>(
    model: &ScoreModel<F>,
    ids: &crate::corpus::SentenceIds,
    gold: &ParseTree,
    system: SystemKind,
    dropout_seed: Option<u64>,
    mut grads: Option<&mut Gradients<F>>,
) -> Result<f64> {
    let enc = encode(model, ids, dropout_seed.is_some(), dropout_seed.unwrap_or(0))?;
    let (tables, cache) = score_tables(model, &enc)?;
    let augmented = decode_cost_augmented(&tables, gold)?;
    let gold_sequence = static_oracle(gold, system)?;
    let gold_score = sequence_score(&tables, &gold_sequence)?;
    let loss = (augmented.score - gold_score).max(0.0);
    if loss > 0.0 {
        if let Some(grads) = grads.as_deref_mut() {
            let mut touched: HashMap<(usize, usize, usize), f64> = HashMap::new();
            accumulate_occupancy(&augmented.sequence, system, ids.n(), 1.0, &mut touched)?;
            accumulate_occupancy(&gold_sequence, system, ids.n(), -1.0, &mut touched)?;
            // fixed accumulation order keeps training bit-deterministic
            let mut entries: Vec<(usize, usize, usize, f64)> = touched
                .into_iter()
                .filter(|&(_, w)| w != 0.0)
                .map(|((t, a, b), w)| (t, a, b, w))
                .collect();
            entries.sort_unstable_by_key(|&(t, a, b, _)| (t, a, b));
            let mut d_out = vec![F::zero(); enc.positions() * enc.out_dim()];
            score_tables_backward(model, &enc, &cache, &entries, grads, &mut d_out)?;
            encoder_backward(model, &enc, &d_out, grads);
        }
    }
    Ok(loss)
}

fn accumulate_occupancy(
    sequence: &[Transition],
    system: SystemKind,
    n: usize,
    weight: f64,
    touched: &mut HashMap<(usize, usize, usize), f64>,
) -> Result<()> {
    let mut config = Config::initial(n);
    for (step, &t) in sequence.iter().enumerate() {
        if let Some(s0) = config.s0() {
            let t_idx = system
                .transition_index(t)
                .ok_or_else(|| Error::invalid_input("transition outside the system"))?;
            *touched.entry((t_idx, s0, config.front())).or_insert(0.0) += weight;
        }
        config = config
            .apply(t, system)
            .map_err(|e| Error::BadSequence { step, msg: e.to_string() })?;
    }
    Ok(())
}

/// Edge-factored counterpart: cost-augmented Eisner against the gold tree.
pub fn global_loss_edge<F: Real>(
    model: &ScoreModel<F>,
    ids: &crate::corpus::SentenceIds,
    gold: &ParseTree,
    dropout_seed: Option<u64>,
    mut grads: Option<&mut Gradients<F>>,
) -> Result<f64> {
    let enc = encode(model, ids, dropout_seed.is_some(), dropout_seed.unwrap_or(0))?;
    let (scores, cache) = biaffine_edge_scores(model, &enc)?;
    let (aug_tree, aug_score) = eisner_decode_cost_augmented(&scores, gold)?;
    let gold_score = scores.tree_score(gold);
    let loss = (aug_score - gold_score).max(0.0);
    if loss > 0.0 {
        if let Some(grads) = grads.as_deref_mut() {
            let mut touched: HashMap<(usize, usize), f64> = HashMap::new();
            for (h, m) in aug_tree.arcs() {
                *touched.entry((h, m)).or_insert(0.0) += 1.0;
            }
            for (h, m) in gold.arcs() {
                *touched.entry((h, m)).or_insert(0.0) -= 1.0;
            }
            let mut entries: Vec<(usize, usize, f64)> = touched
                .into_iter()
                .filter(|&(_, w)| w != 0.0)
                .map(|((h, m), w)| (h, m, w))
                .collect();
            entries.sort_unstable_by_key(|&(h, m, _)| (h, m));
            let mut d_out = vec![F::zero(); enc.positions() * enc.out_dim()];
            biaffine_backward(model, &enc, &cache, &entries, grads, &mut d_out)?;
            encoder_backward(model, &enc, &d_out, grads);
        }
    }
    Ok(loss)
}

/// Greedy rollout with per-configuration hinge loss. Arc-hybrid and
/// arc-eager use the dynamic oracle and may explore; arc-standard follows
/// its static-oracle path.
#[allow(clippy::too_many_arguments)]
pub fn local_train_step<F: Real>(
    model: &ScoreModel<F>,
    ids: &crate::corpus::SentenceIds,
    gold: &ParseTree,
    system: SystemKind,
    features: FeatureSet,
    exploration_prob: f64,
    sentence_seed: u64,
    dropout: bool,
    grads: &mut Gradients<F>,
) -> Result<f64> {
    let enc = encode(model, ids, dropout, sentence_seed)?;
    let n = ids.n();
    let static_path = if system == SystemKind::ArcStandard {
        Some(static_oracle(gold, system)?)
    } else {
        None
    };
    let mut explore_rng = substream(sentence_seed, streams::EXPLORE);

    let mut d_out = vec![F::zero(); enc.positions() * enc.out_dim()];
    let mut config = Config::initial(n);
    let mut total_loss = 0.0;
    let mut step_idx = 0usize;
    while !config.is_terminal() {
        let viable = config.viable(system);
        if viable.is_empty() {
            return Err(Error::BadSequence {
                step: step_idx,
                msg: "rollout reached a dead configuration".into(),
            });
        }
        let follow = if viable.len() == 1 {
            viable[0]
        } else {
            let costs: Vec<usize> = match &static_path {
                Some(path) => viable.iter().map(|&t| usize::from(t != path[step_idx])).collect(),
                None => viable
                    .iter()
                    .map(|&t| dynamic_oracle_cost(&config, t, gold, system))
                    .collect::<Result<_>>()?,
            };
            let slots = resolve_slots(&config, features);
            let (scores, cache) = score_transitions(model, &enc, &slots)?;
            let score_of = |t: Transition| scores[system.transition_index(t).unwrap()].into_f64();

            // the hinge separates the cheapest transitions from the rest;
            // the minimum is 0 except on the rare arc-eager configurations
            // where two gold arcs are each reachable but not jointly
            let min_cost = *costs.iter().min().expect("non-empty candidates");
            let mut best_min: Option<(Transition, f64)> = None;
            let mut best_worse: Option<(Transition, f64)> = None;
            for (&t, &c) in viable.iter().zip(&costs) {
                let s = score_of(t);
                let slot = if c == min_cost { &mut best_min } else { &mut best_worse };
                if slot.is_none() || slot.is_some_and(|(_, bs)| s > bs) {
                    *slot = Some((t, s));
                }
            }
            let (min_t, min_s) = best_min.expect("minimum exists");

            if let Some((worse_t, worse_s)) = best_worse {
                let hinge = 1.0 + worse_s - min_s;
                if hinge > 0.0 {
                    total_loss += hinge;
                    let mut d_scores = vec![F::zero(); scores.len()];
                    d_scores[system.transition_index(worse_t).unwrap()] = F::one();
                    d_scores[system.transition_index(min_t).unwrap()] = -F::one();
                    score_transitions_backward(model, &enc, &cache, &d_scores, grads, &mut d_out)?;
                }
            }

            match &static_path {
                Some(path) => path[step_idx],
                None => {
                    // follow the model when it is right, otherwise explore
                    let predicted = viable
                        .iter()
                        .copied()
                        .max_by(|&a, &b| {
                            score_of(a)
                                .partial_cmp(&score_of(b))
                                .unwrap_or(std::cmp::Ordering::Equal)
                                .then_with(|| {
                                    // stable preference for earlier inventory order
                                    system
                                        .transition_index(b)
                                        .cmp(&system.transition_index(a))
                                })
                        })
                        .unwrap();
                    let cost = costs[viable.iter().position(|&t| t == predicted).unwrap()];
                    if cost == min_cost || explore_rng.random_range(0.0..1.0) < exploration_prob {
                        predicted
                    } else {
                        min_t
                    }
                }
            }
        };
        config = config.apply(follow, system)?;
        step_idx += 1;
    }
    encoder_backward(model, &enc, &d_out, grads);
    Ok(total_loss)
}

/// Greedy parse with the transition scorer (no oracle, no loss).
pub fn greedy_parse<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    system: SystemKind,
    features: FeatureSet,
) -> Result<ParseTree> {
    let n = enc.n();
    let mut config = Config::initial(n);
    while !config.is_terminal() {
        let viable = config.viable(system);
        let next = match viable.len() {
            0 => {
                return Err(Error::BadSequence {
                    step: 0,
                    msg: "greedy parse reached a dead configuration".into(),
                })
            }
            1 => viable[0],
            _ => {
                let slots = resolve_slots(&config, features);
                let (scores, _) = score_transitions(model, enc, &slots)?;
                let mut best = viable[0];
                let mut best_s = f64::NEG_INFINITY;
                for &t in &viable {
                    let s = scores[system.transition_index(t).unwrap()].into_f64();
                    if s > best_s {
                        best_s = s;
                        best = t;
                    }
                }
                best
            }
        };
        config = config.apply(next, system)?;
    }
    config.to_tree()
}
