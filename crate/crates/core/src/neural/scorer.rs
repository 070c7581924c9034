//! MLP transition scorer over concatenated positional vectors.
//!
//! The input weight is stored as one block per feature slot, so the score
//! of a configuration is `W2 tanh(sum_k W1_k v_k + b1) + b2`. The batched
//! table builder reuses exactly this formula with per-position partial
//! products, which keeps it bit-identical to per-pair scoring.

use super::math::{self, Real};
use super::{EncodedSentence, FeatureSet, Gradients, ScoreModel, ScorerKind, Slot};
use crate::chart::ScoreTables;
use crate::error::{Error, Result};
use crate::transition::Config;

/// Forward cache for one scored configuration.
#[derive(Debug, Clone)]
pub struct ScorerStep<F> {
    slots: Vec<Option<usize>>,
    hidden: Vec<F>, // post-tanh, pre-mask
}

/// Positions consulted by `features` in `config`: stack slots map to
/// `None` when absent (scored with the learned null vector); the buffer
/// slot is always present, possibly the end marker.
pub fn resolve_slots(config: &Config, features: FeatureSet) -> Vec<Option<usize>> {
    let stack = config.stack();
    features
        .slots()
        .iter()
        .map(|slot| match slot {
            Slot::B0 => Some(config.front()),
            Slot::S0 => stack.len().checked_sub(1).map(|i| stack[i]),
            Slot::S1 => stack.len().checked_sub(2).map(|i| stack[i]),
            Slot::S2 => stack.len().checked_sub(3).map(|i| stack[i]),
        })
        .collect()
}

fn mlp_parts<F: Real>(model: &ScoreModel<F>) -> Result<(super::MlpIx, usize, FeatureSet)> {
    match (model.layout().mlp, model.meta().scorer) {
        (Some(ix), ScorerKind::TransitionMlp { system, features }) => {
            Ok((ix, system.transitions().len(), features))
        }
        _ => Err(Error::invalid_input("model has no transition scorer")),
    }
}

/// One real-valued score per transition type of the active system.
pub fn score_transitions<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    slots: &[Option<usize>],
) -> Result<(Vec<F>, ScorerStep<F>)> {
    let (ix, n_out, features) = mlp_parts(model)?;
    if slots.len() != features.n_slots() {
        return Err(Error::invalid_input(format!(
            "expected {} feature slots, got {}",
            features.n_slots(),
            slots.len()
        )));
    }
    let dims = model.meta().dims;
    let out_dim = model.out_dim();
    let mut pre = vec![F::zero(); dims.mlp_hidden];
    for (k, slot) in slots.iter().enumerate() {
        let v: &[F] = match slot {
            Some(pos) => enc.output(*pos),
            None => model.t(ix.null),
        };
        math::matvec_add(model.t(ix.w1_first + k), dims.mlp_hidden, out_dim, v, &mut pre);
    }
    math::add_assign(&mut pre, model.t(ix.b1));
    let hidden: Vec<F> = pre.iter().map(|v| v.tanh()).collect();
    let scores = output_layer(model, ix, n_out, &hidden, enc.mlp_mask.as_deref());
    Ok((scores, ScorerStep { slots: slots.to_vec(), hidden }))
}

fn output_layer<F: Real>(
    model: &ScoreModel<F>,
    ix: super::MlpIx,
    n_out: usize,
    hidden: &[F],
    mask: Option<&[F]>,
) -> Vec<F> {
    let dims = model.meta().dims;
    let mut buf;
    let h: &[F] = if let Some(m) = mask {
        buf = hidden.to_vec();
        for (v, k) in buf.iter_mut().zip(m) {
            *v *= *k;
        }
        &buf
    } else {
        hidden
    };
    let mut scores = vec![F::zero(); n_out];
    math::matvec(model.t(ix.w2), n_out, dims.mlp_hidden, h, &mut scores);
    math::add_assign(&mut scores, model.t(ix.b2));
    scores
}

/// Backward through one scored configuration. `d_out` accumulates the
/// gradient w.r.t. the encoder outputs (positions x out_dim).
pub fn score_transitions_backward<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    step: &ScorerStep<F>,
    d_scores: &[F],
    grads: &mut Gradients<F>,
    d_out: &mut [F],
) -> Result<()> {
    let (ix, n_out, _features) = mlp_parts(model)?;
    if d_scores.len() != n_out {
        return Err(Error::invalid_input("gradient arity mismatch"));
    }
    let dims = model.meta().dims;
    let out_dim = model.out_dim();

    // output layer
    let mask = enc.mlp_mask.as_deref();
    let mut masked;
    let h_used: &[F] = if let Some(m) = mask {
        masked = step.hidden.clone();
        for (v, k) in masked.iter_mut().zip(m) {
            *v *= *k;
        }
        &masked
    } else {
        &step.hidden
    };
    math::outer_add(grads.t_mut(model.layout(), ix.w2), d_scores, h_used);
    math::add_assign(grads.t_mut(model.layout(), ix.b2), d_scores);
    let mut dh = vec![F::zero(); dims.mlp_hidden];
    math::matvec_t_add(model.t(ix.w2), n_out, dims.mlp_hidden, d_scores, &mut dh);
    if let Some(m) = mask {
        for (v, k) in dh.iter_mut().zip(m) {
            *v *= *k;
        }
    }
    // tanh
    let mut dpre = dh;
    for (d, h) in dpre.iter_mut().zip(&step.hidden) {
        *d *= F::one() - *h * *h;
    }
    math::add_assign(grads.t_mut(model.layout(), ix.b1), &dpre);
    for (k, slot) in step.slots.iter().enumerate() {
        let v: &[F] = match slot {
            Some(pos) => enc.output(*pos),
            None => model.t(ix.null),
        };
        math::outer_add(grads.t_mut(model.layout(), ix.w1_first + k), &dpre, v);
        match slot {
            Some(pos) => math::matvec_t_add(
                model.t(ix.w1_first + k),
                dims.mlp_hidden,
                out_dim,
                &dpre,
                &mut d_out[pos * out_dim..(pos + 1) * out_dim],
            ),
            None => math::matvec_t_add(
                model.t(ix.w1_first + k),
                dims.mlp_hidden,
                out_dim,
                &dpre,
                grads.t_mut(model.layout(), ix.null),
            ),
        }
    }
    Ok(())
}

/// Per-position partial products for the batched table builder.
#[derive(Debug, Clone)]
pub struct TablesCache<F> {
    u: Vec<F>, // (n+2) x mlp_hidden, W1_s0 projections
    v: Vec<F>, // (n+2) x mlp_hidden, W1_b0 projections
}

/// Scores every feature pair (a, b) in (0..n+2)^2, one table per
/// transition type. Requires the minimal feature set {s0, b0}.
pub fn score_tables<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
) -> Result<(ScoreTables, TablesCache<F>)> {
    let (ix, n_out, features) = mlp_parts(model)?;
    if features != FeatureSet::S0B0 {
        return Err(Error::invalid_input(
            "dynamic-programming decoding requires the {s0, b0} feature set",
        ));
    }
    let system = match model.meta().scorer {
        ScorerKind::TransitionMlp { system, .. } => system,
        _ => unreachable!(),
    };
    let dims = model.meta().dims;
    let out_dim = model.out_dim();
    let positions = enc.positions();
    let hid = dims.mlp_hidden;

    let mut u = vec![F::zero(); positions * hid];
    let mut v = vec![F::zero(); positions * hid];
    for pos in 0..positions {
        math::matvec(
            model.t(ix.w1_first),
            hid,
            out_dim,
            enc.output(pos),
            &mut u[pos * hid..(pos + 1) * hid],
        );
        math::matvec(
            model.t(ix.w1_first + 1),
            hid,
            out_dim,
            enc.output(pos),
            &mut v[pos * hid..(pos + 1) * hid],
        );
    }

    let b1 = model.t(ix.b1);
    let mut tables = ScoreTables::zeros(system, enc.n());
    let mut hidden = vec![F::zero(); hid];
    for a in 0..positions {
        let ua = &u[a * hid..(a + 1) * hid];
        for b in 0..positions {
            let vb = &v[b * hid..(b + 1) * hid];
            for k in 0..hid {
                // same association as the per-pair path: (W1_s0 v_a +
                // W1_b0 v_b) + b1, because matvec_add accumulates onto the
                // first product there
                hidden[k] = (ua[k] + vb[k] + b1[k]).tanh();
            }
            let scores = output_layer(model, ix, n_out, &hidden, enc.mlp_mask.as_deref());
            for (t_idx, &t) in system.transitions().iter().enumerate() {
                tables.set(t, a, b, scores[t_idx].into_f64());
            }
        }
    }
    Ok((tables, TablesCache { u, v }))
}

/// Gradient entry on a score table: transition index, feature pair, and
/// the weight the loss puts on that entry.
pub type TouchedEntry = (usize, usize, usize, f64);

/// Backward through the batched tables for a sparse set of entries.
pub fn score_tables_backward<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    cache: &TablesCache<F>,
    touched: &[TouchedEntry],
    grads: &mut Gradients<F>,
    d_out: &mut [F],
) -> Result<()> {
    let (ix, n_out, _features) = mlp_parts(model)?;
    let dims = model.meta().dims;
    let hid = dims.mlp_hidden;
    let out_dim = model.out_dim();
    let positions = enc.positions();
    let b1 = model.t(ix.b1);
    let mask = enc.mlp_mask.as_deref();

    let mut du = vec![F::zero(); positions * hid];
    let mut dv = vec![F::zero(); positions * hid];
    let mut hidden = vec![F::zero(); hid];
    let mut d_scores = vec![F::zero(); n_out];
    for &(t_idx, a, b, weight) in touched {
        if weight == 0.0 {
            continue;
        }
        let ua = &cache.u[a * hid..(a + 1) * hid];
        let vb = &cache.v[b * hid..(b + 1) * hid];
        for k in 0..hid {
            hidden[k] = (ua[k] + vb[k] + b1[k]).tanh();
        }
        for s in d_scores.iter_mut() {
            *s = F::zero();
        }
        d_scores[t_idx] = F::from_f64(weight);

        let mut masked;
        let h_used: &[F] = if let Some(m) = mask {
            masked = hidden.clone();
            for (hv, k) in masked.iter_mut().zip(m) {
                *hv *= *k;
            }
            &masked
        } else {
            &hidden
        };
        math::outer_add(grads.t_mut(model.layout(), ix.w2), &d_scores, h_used);
        math::add_assign(grads.t_mut(model.layout(), ix.b2), &d_scores);

        let w2_row = &model.t(ix.w2)[t_idx * hid..(t_idx + 1) * hid];
        let wf = F::from_f64(weight);
        let db1 = grads.t_mut(model.layout(), ix.b1);
        for k in 0..hid {
            let mut dh = wf * w2_row[k];
            if let Some(m) = mask {
                dh *= m[k];
            }
            let dpre = dh * (F::one() - hidden[k] * hidden[k]);
            db1[k] += dpre;
            du[a * hid + k] += dpre;
            dv[b * hid + k] += dpre;
        }
    }

    // fold position-wise projection gradients into the slot weights and
    // the encoder outputs
    for pos in 0..positions {
        let dua = &du[pos * hid..(pos + 1) * hid];
        if dua.iter().any(|v| *v != F::zero()) {
            math::outer_add(grads.t_mut(model.layout(), ix.w1_first), dua, enc.output(pos));
            math::matvec_t_add(
                model.t(ix.w1_first),
                hid,
                out_dim,
                dua,
                &mut d_out[pos * out_dim..(pos + 1) * out_dim],
            );
        }
        let dvb = &dv[pos * hid..(pos + 1) * hid];
        if dvb.iter().any(|v| *v != F::zero()) {
            math::outer_add(grads.t_mut(model.layout(), ix.w1_first + 1), dvb, enc.output(pos));
            math::matvec_t_add(
                model.t(ix.w1_first + 1),
                hid,
                out_dim,
                dvb,
                &mut d_out[pos * out_dim..(pos + 1) * out_dim],
            );
        }
    }
    Ok(())
}
