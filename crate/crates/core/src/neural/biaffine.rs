//! Biaffine edge scoring: affine head/modifier projections of the encoder
//! outputs combined as head' U mod + u.head + v.mod + bias.

use super::math::{self, Real};
use super::{EncodedSentence, Gradients, ScoreModel, ScorerKind};
use crate::error::{Error, Result};
use crate::graph::EdgeScores;

#[derive(Debug, Clone)]
pub struct BiaffineCache<F> {
    head: Vec<F>,  // (n+1) x p
    modp: Vec<F>,  // (n+1) x p
    u_mod: Vec<F>, // (n+1) x p, U . mod_m
}

fn biaffine_ix<F: Real>(model: &ScoreModel<F>) -> Result<super::BiaffineIx> {
    match (model.layout().biaffine, model.meta().scorer) {
        (Some(ix), ScorerKind::BiaffineEdge) => Ok(ix),
        _ => Err(Error::invalid_input("model has no biaffine edge scorer")),
    }
}

/// Edge scores over heads 0..=n and modifiers 1..=n (the end marker takes
/// no part). Generally not symmetric.
pub fn biaffine_edge_scores<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
) -> Result<(EdgeScores, BiaffineCache<F>)> {
    let ix = biaffine_ix(model)?;
    let p = model.meta().dims.biaffine_dim;
    let out_dim = model.out_dim();
    let n = enc.n();

    let mut head = vec![F::zero(); (n + 1) * p];
    let mut modp = vec![F::zero(); (n + 1) * p];
    let mut u_mod = vec![F::zero(); (n + 1) * p];
    for pos in 0..=n {
        let h = &mut head[pos * p..(pos + 1) * p];
        math::matvec(model.t(ix.head_w), p, out_dim, enc.output(pos), h);
        math::add_assign(h, model.t(ix.head_b));
        let m = &mut modp[pos * p..(pos + 1) * p];
        math::matvec(model.t(ix.mod_w), p, out_dim, enc.output(pos), m);
        math::add_assign(m, model.t(ix.mod_b));
    }
    for pos in 0..=n {
        math::matvec(
            model.t(ix.u),
            p,
            p,
            &modp[pos * p..(pos + 1) * p],
            &mut u_mod[pos * p..(pos + 1) * p],
        );
    }

    let bias = model.t(ix.bias)[0];
    let u_vec = model.t(ix.head_u);
    let v_vec = model.t(ix.mod_v);
    let mut scores = EdgeScores::zeros(n);
    for h in 0..=n {
        let hv = &head[h * p..(h + 1) * p];
        let hu = math::dot(u_vec, hv);
        for m in 1..=n {
            if h == m {
                continue;
            }
            let s = math::dot(hv, &u_mod[m * p..(m + 1) * p])
                + hu
                + math::dot(v_vec, &modp[m * p..(m + 1) * p])
                + bias;
            scores.set(h, m, s.into_f64());
        }
    }
    Ok((scores, BiaffineCache { head, modp, u_mod }))
}

/// Touched edge-score entries: (head, modifier, weight).
pub type TouchedEdge = (usize, usize, f64);

pub fn biaffine_backward<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    cache: &BiaffineCache<F>,
    touched: &[TouchedEdge],
    grads: &mut Gradients<F>,
    d_out: &mut [F],
) -> Result<()> {
    let ix = biaffine_ix(model)?;
    let p = model.meta().dims.biaffine_dim;
    let out_dim = model.out_dim();
    let n = enc.n();

    let mut d_head = vec![F::zero(); (n + 1) * p];
    let mut d_mod = vec![F::zero(); (n + 1) * p];
    for &(h, m, weight) in touched {
        if weight == 0.0 {
            continue;
        }
        let wf = F::from_f64(weight);
        let hv = &cache.head[h * p..(h + 1) * p];
        let mv = &cache.modp[m * p..(m + 1) * p];
        // d/d head_h = U mod_m + u, d/d mod_m = U^T head_h + v
        math::axpy(wf, &cache.u_mod[m * p..(m + 1) * p], &mut d_head[h * p..(h + 1) * p]);
        math::axpy(wf, model.t(ix.head_u), &mut d_head[h * p..(h + 1) * p]);
        math::matvec_t_add(
            model.t(ix.u),
            p,
            p,
            &scaled(hv, wf),
            &mut d_mod[m * p..(m + 1) * p],
        );
        math::axpy(wf, model.t(ix.mod_v), &mut d_mod[m * p..(m + 1) * p]);
        math::outer_add(grads.t_mut(model.layout(), ix.u), &scaled(hv, wf), mv);
        math::axpy(wf, hv, grads.t_mut(model.layout(), ix.head_u));
        math::axpy(wf, mv, grads.t_mut(model.layout(), ix.mod_v));
        grads.t_mut(model.layout(), ix.bias)[0] += wf;
    }

    for pos in 0..=n {
        let dh = &d_head[pos * p..(pos + 1) * p];
        if dh.iter().any(|v| *v != F::zero()) {
            math::outer_add(grads.t_mut(model.layout(), ix.head_w), dh, enc.output(pos));
            math::add_assign(grads.t_mut(model.layout(), ix.head_b), dh);
            math::matvec_t_add(
                model.t(ix.head_w),
                p,
                out_dim,
                dh,
                &mut d_out[pos * out_dim..(pos + 1) * out_dim],
            );
        }
        let dm = &d_mod[pos * p..(pos + 1) * p];
        if dm.iter().any(|v| *v != F::zero()) {
            math::outer_add(grads.t_mut(model.layout(), ix.mod_w), dm, enc.output(pos));
            math::add_assign(grads.t_mut(model.layout(), ix.mod_b), dm);
            math::matvec_t_add(
                model.t(ix.mod_w),
                p,
                out_dim,
                dm,
                &mut d_out[pos * out_dim..(pos + 1) * out_dim],
            );
        }
    }
    Ok(())
}

fn scaled<F: Real>(v: &[F], s: F) -> Vec<F> {
    v.iter().map(|&x| x * s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token, Vocabulary};
    use crate::neural::{encode, Dims, ModelMeta};

    fn setup(seed: u64) -> (ScoreModel<f64>, EncodedSentence<f64>) {
        let sent = Sentence::new(vec![
            Token::new("a", "X", None).unwrap(),
            Token::new("b", "Y", None).unwrap(),
        ])
        .unwrap();
        let vocab = Vocabulary::from_sentences(std::slice::from_ref(&sent));
        let meta = ModelMeta {
            scorer: ScorerKind::BiaffineEdge,
            dims: Dims::tiny(),
            lstm_dropout: 0.0,
            mlp_dropout: 0.0,
        };
        let model = ScoreModel::new_random(meta, vocab.n_words(), vocab.n_pos(), seed);
        let ids = vocab.numericalize(&sent);
        let enc = encode(&model, &ids, false, 0).unwrap();
        (model, enc)
    }

    #[test]
    fn zero_parameters_zero_scores() {
        let (model, _) = setup(9);
        let zero: ScoreModel<f64> =
            ScoreModel::zeros(model.meta().clone(), model.n_words(), model.n_pos());
        let sent = Sentence::new(vec![
            Token::new("a", "X", None).unwrap(),
            Token::new("b", "Y", None).unwrap(),
        ])
        .unwrap();
        let vocab = Vocabulary::from_sentences(std::slice::from_ref(&sent));
        let enc = encode(&zero, &vocab.numericalize(&sent), false, 0).unwrap();
        let (g, _) = biaffine_edge_scores(&zero, &enc).unwrap();
        for h in 0..=2 {
            for m in 1..=2 {
                if h != m {
                    assert_eq!(g.get(h, m), 0.0);
                }
            }
        }
    }

    #[test]
    fn direction_sensitive() {
        let (model, enc) = setup(21);
        let (g, _) = biaffine_edge_scores(&model, &enc).unwrap();
        assert_ne!(g.get(1, 2), g.get(2, 1));
    }
}
