//! Stacked bi-directional LSTM encoder. Position 0 carries the ROOT
//! embedding and position n+1 the end-of-sentence marker, so downstream
//! scorers can consult either virtual position.
//!
//! Dropout is variational: one input mask and one recurrent mask per
//! layer and direction, tied across time steps, with inverted scaling.

use rand::Rng;

use super::math::{self, Real};
use super::{streams, substream, Gradients, ScoreModel};
use crate::corpus::SentenceIds;
use crate::error::{Error, Result};

/// Per-direction activation cache, indexed by iteration step (the
/// backward direction iterates the sentence reversed).
#[derive(Debug, Clone)]
struct DirCache<F> {
    gi: Vec<F>,
    gf: Vec<F>,
    gg: Vec<F>,
    go: Vec<F>,
    c: Vec<F>,
    tanh_c: Vec<F>,
    h: Vec<F>,
}

impl<F: Real> DirCache<F> {
    fn new(steps: usize, hidden: usize) -> Self {
        let z = vec![F::zero(); steps * hidden];
        DirCache {
            gi: z.clone(),
            gf: z.clone(),
            gg: z.clone(),
            go: z.clone(),
            c: z.clone(),
            tanh_c: z.clone(),
            h: z,
        }
    }
}

#[derive(Debug, Clone)]
struct LstmMasks<F> {
    x: Vec<F>,
    h: Vec<F>,
}

/// Encoded sentence: one `out_dim` vector per position 0..=n+1, plus the
/// caches the backward pass needs.
#[derive(Debug, Clone)]
pub struct EncodedSentence<F: Real> {
    n: usize,
    out_dim: usize,
    outputs: Vec<F>,
    layer_inputs: Vec<Vec<F>>,
    dirs: Vec<DirCache<F>>,
    lstm_masks: Option<Vec<LstmMasks<F>>>,
    pub(crate) mlp_mask: Option<Vec<F>>,
    word_ids: Vec<usize>,
    pos_ids: Vec<usize>,
}

impl<F: Real> EncodedSentence<F> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn positions(&self) -> usize {
        self.n + 2
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn output(&self, pos: usize) -> &[F] {
        &self.outputs[pos * self.out_dim..(pos + 1) * self.out_dim]
    }

    pub fn outputs(&self) -> &[F] {
        &self.outputs
    }
}

/// Runs the embedding lookup and the stacked bi-LSTM.
pub fn encode<F: Real>(
    model: &ScoreModel<F>,
    ids: &SentenceIds,
    dropout_on: bool,
    seed: u64,
) -> Result<EncodedSentence<F>> {
    let dims = model.meta().dims;
    let steps = ids.word_ids.len();
    if steps != ids.pos_ids.len() || steps < 3 {
        return Err(Error::invalid_input("sentence ids must cover ROOT, tokens, and the end marker"));
    }
    for &w in &ids.word_ids {
        if w >= model.n_words() {
            return Err(Error::invalid_input(format!("word id {w} outside the embedding table")));
        }
    }
    for &p in &ids.pos_ids {
        if p >= model.n_pos() {
            return Err(Error::invalid_input(format!("POS id {p} outside the embedding table")));
        }
    }
    let n = steps - 2;
    let hidden = dims.lstm_hidden;
    let in0 = dims.word_dim + dims.pos_dim;

    // position-wise embedding concatenation
    let word_emb = model.t(model.layout().word_emb);
    let pos_emb = model.t(model.layout().pos_emb);
    let mut inputs0 = vec![F::zero(); steps * in0];
    for pos in 0..steps {
        let w = ids.word_ids[pos];
        let p = ids.pos_ids[pos];
        let row = &mut inputs0[pos * in0..(pos + 1) * in0];
        row[..dims.word_dim].copy_from_slice(&word_emb[w * dims.word_dim..(w + 1) * dims.word_dim]);
        row[dims.word_dim..].copy_from_slice(&pos_emb[p * dims.pos_dim..(p + 1) * dims.pos_dim]);
    }

    let lstm_dropout = if dropout_on { model.meta().lstm_dropout } else { 0.0 };
    let mlp_dropout = if dropout_on { model.meta().mlp_dropout } else { 0.0 };
    let mut rng = substream(seed, streams::DROPOUT);
    let lstm_masks = if lstm_dropout > 0.0 {
        let mut masks = Vec::new();
        let mut in_dim = in0;
        for _layer in 0..dims.lstm_layers {
            for _dir in 0..2 {
                masks.push(LstmMasks {
                    x: sample_mask(&mut rng, in_dim, lstm_dropout),
                    h: sample_mask(&mut rng, hidden, lstm_dropout),
                });
            }
            in_dim = 2 * hidden;
        }
        Some(masks)
    } else {
        None
    };
    let mlp_mask = if mlp_dropout > 0.0 {
        Some(sample_mask(&mut rng, dims.mlp_hidden, mlp_dropout))
    } else {
        None
    };

    let mut layer_inputs = vec![inputs0];
    let mut dirs = Vec::with_capacity(dims.lstm_layers * 2);
    for layer in 0..dims.lstm_layers {
        let in_dim = if layer == 0 { in0 } else { 2 * hidden };
        let input = &layer_inputs[layer];
        let mut layer_out = vec![F::zero(); steps * 2 * hidden];
        for dir in 0..2 {
            let cell = model.layout().lstm[layer][dir];
            let mask = lstm_masks.as_ref().map(|m| &m[layer * 2 + dir]);
            let cache = run_direction(
                model.t(cell.wx),
                model.t(cell.wh),
                model.t(cell.b),
                input,
                steps,
                in_dim,
                hidden,
                dir == 1,
                mask,
            );
            // concat [fwd, bwd] per position
            for pos in 0..steps {
                let step = if dir == 1 { steps - 1 - pos } else { pos };
                let src = &cache.h[step * hidden..(step + 1) * hidden];
                let dst = &mut layer_out
                    [pos * 2 * hidden + dir * hidden..pos * 2 * hidden + (dir + 1) * hidden];
                dst.copy_from_slice(src);
            }
            dirs.push(cache);
        }
        layer_inputs.push(layer_out);
    }

    let outputs = layer_inputs.last().unwrap().clone();
    Ok(EncodedSentence {
        n,
        out_dim: 2 * hidden,
        outputs,
        layer_inputs,
        dirs,
        lstm_masks,
        mlp_mask,
        word_ids: ids.word_ids.clone(),
        pos_ids: ids.pos_ids.clone(),
    })
}

fn sample_mask<F: Real, R: Rng>(rng: &mut R, dim: usize, rate: f64) -> Vec<F> {
    let keep = 1.0 - rate;
    let scale = F::from_f64(1.0 / keep);
    (0..dim)
        .map(|_| if rng.random_range(0.0..1.0) < keep { scale } else { F::zero() })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_direction<F: Real>(
    wx: &[F],
    wh: &[F],
    bias: &[F],
    input: &[F],
    steps: usize,
    in_dim: usize,
    hidden: usize,
    reverse: bool,
    mask: Option<&LstmMasks<F>>,
) -> DirCache<F> {
    let mut cache = DirCache::new(steps, hidden);
    let mut h_prev = vec![F::zero(); hidden];
    let mut c_prev = vec![F::zero(); hidden];
    let mut x_buf = vec![F::zero(); in_dim];
    let mut h_buf = vec![F::zero(); hidden];
    let mut pre = vec![F::zero(); 4 * hidden];
    for step in 0..steps {
        let pos = if reverse { steps - 1 - step } else { step };
        let x = &input[pos * in_dim..(pos + 1) * in_dim];
        let (x_used, h_used): (&[F], &[F]) = if let Some(m) = mask {
            for (b, (&v, &k)) in x_buf.iter_mut().zip(x.iter().zip(&m.x)) {
                *b = v * k;
            }
            for (b, (&v, &k)) in h_buf.iter_mut().zip(h_prev.iter().zip(&m.h)) {
                *b = v * k;
            }
            (&x_buf, &h_buf)
        } else {
            (x, &h_prev)
        };
        math::matvec(wx, 4 * hidden, in_dim, x_used, &mut pre);
        math::matvec_add(wh, 4 * hidden, hidden, h_used, &mut pre);
        math::add_assign(&mut pre, bias);

        let row = step * hidden;
        for k in 0..hidden {
            let i = math::sigmoid(pre[k]);
            let f = math::sigmoid(pre[hidden + k]);
            let g = pre[2 * hidden + k].tanh();
            let o = math::sigmoid(pre[3 * hidden + k]);
            let c = f * c_prev[k] + i * g;
            let tc = c.tanh();
            cache.gi[row + k] = i;
            cache.gf[row + k] = f;
            cache.gg[row + k] = g;
            cache.go[row + k] = o;
            cache.c[row + k] = c;
            cache.tanh_c[row + k] = tc;
            cache.h[row + k] = o * tc;
        }
        c_prev.copy_from_slice(&cache.c[row..row + hidden]);
        h_prev.copy_from_slice(&cache.h[row..row + hidden]);
    }
    cache
}

/// Propagates `d_outputs` (gradient w.r.t. the encoder outputs, positions
/// x out_dim) back through the stack into parameter gradients, including
/// the touched embedding rows. Gradients add onto whatever `grads` holds.
pub fn encoder_backward<F: Real>(
    model: &ScoreModel<F>,
    enc: &EncodedSentence<F>,
    d_outputs: &[F],
    grads: &mut Gradients<F>,
) {
    let dims = model.meta().dims;
    let hidden = dims.lstm_hidden;
    let steps = enc.positions();
    assert_eq!(d_outputs.len(), steps * 2 * hidden);

    let mut d_layer = d_outputs.to_vec();
    for layer in (0..dims.lstm_layers).rev() {
        let in_dim = if layer == 0 { dims.word_dim + dims.pos_dim } else { 2 * hidden };
        let input = &enc.layer_inputs[layer];
        let mut d_input = vec![F::zero(); steps * in_dim];
        for dir in 0..2 {
            let cell = model.layout().lstm[layer][dir];
            let mask = enc.lstm_masks.as_ref().map(|m| &m[layer * 2 + dir]);
            let (dwx, dwh, db) = grads.lstm_mut(model.layout(), cell);
            backward_direction(
                model.t(cell.wx),
                model.t(cell.wh),
                &enc.dirs[layer * 2 + dir],
                input,
                steps,
                in_dim,
                hidden,
                dir == 1,
                mask,
                &d_layer,
                dir * hidden,
                dwx,
                dwh,
                db,
                &mut d_input,
            );
        }
        d_layer = d_input;
    }

    // embedding gradients from the layer-0 input gradient
    let dw = dims.word_dim;
    let dp = dims.pos_dim;
    let word_ix = model.layout().word_emb;
    let pos_ix = model.layout().pos_emb;
    for pos in 0..steps {
        let row = &d_layer[pos * (dw + dp)..(pos + 1) * (dw + dp)];
        let w = enc.word_ids[pos];
        let p = enc.pos_ids[pos];
        math::add_assign(
            &mut grads.t_mut(model.layout(), word_ix)[w * dw..(w + 1) * dw],
            &row[..dw],
        );
        math::add_assign(
            &mut grads.t_mut(model.layout(), pos_ix)[p * dp..(p + 1) * dp],
            &row[dw..],
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn backward_direction<F: Real>(
    wx: &[F],
    wh: &[F],
    cache: &DirCache<F>,
    input: &[F],
    steps: usize,
    in_dim: usize,
    hidden: usize,
    reverse: bool,
    mask: Option<&LstmMasks<F>>,
    d_layer: &[F],
    out_offset: usize,
    dwx: &mut [F],
    dwh: &mut [F],
    db: &mut [F],
    d_input: &mut [F],
) {
    let out_dim = 2 * hidden;
    let mut dh_carry = vec![F::zero(); hidden];
    let mut dc_carry = vec![F::zero(); hidden];
    let mut dpre = vec![F::zero(); 4 * hidden];
    let mut x_buf = vec![F::zero(); in_dim];
    let mut h_buf = vec![F::zero(); hidden];
    let mut dx_buf = vec![F::zero(); in_dim];
    let mut dh_prev = vec![F::zero(); hidden];

    for step in (0..steps).rev() {
        let pos = if reverse { steps - 1 - step } else { step };
        let row = step * hidden;
        // incoming gradient at this position's output slice, plus the carry
        let dout = &d_layer[pos * out_dim + out_offset..pos * out_dim + out_offset + hidden];
        for k in 0..hidden {
            let dh = dout[k] + dh_carry[k];
            let o = cache.go[row + k];
            let tc = cache.tanh_c[row + k];
            let d_o = dh * tc;
            let dc = dh * o * (F::one() - tc * tc) + dc_carry[k];
            let i = cache.gi[row + k];
            let f = cache.gf[row + k];
            let g = cache.gg[row + k];
            let c_prev = if step > 0 { cache.c[row - hidden + k] } else { F::zero() };
            let d_i = dc * g;
            let d_f = dc * c_prev;
            let d_g = dc * i;
            dc_carry[k] = dc * f;
            dpre[k] = d_i * i * (F::one() - i);
            dpre[hidden + k] = d_f * f * (F::one() - f);
            dpre[2 * hidden + k] = d_g * (F::one() - g * g);
            dpre[3 * hidden + k] = d_o * o * (F::one() - o);
        }
        math::add_assign(db, &dpre);

        // inputs as the forward pass saw them (dropout applied)
        let x = &input[pos * in_dim..(pos + 1) * in_dim];
        let h_prev_raw: Option<&[F]> = if step > 0 { Some(&cache.h[row - hidden..row]) } else { None };
        let x_used: &[F] = if let Some(m) = mask {
            for (b, (&v, &k)) in x_buf.iter_mut().zip(x.iter().zip(&m.x)) {
                *b = v * k;
            }
            &x_buf
        } else {
            x
        };
        math::outer_add(dwx, &dpre, x_used);
        if let Some(hp) = h_prev_raw {
            let h_used: &[F] = if let Some(m) = mask {
                for (b, (&v, &k)) in h_buf.iter_mut().zip(hp.iter().zip(&m.h)) {
                    *b = v * k;
                }
                &h_buf
            } else {
                hp
            };
            math::outer_add(dwh, &dpre, h_used);
        }

        dx_buf.iter_mut().for_each(|v| *v = F::zero());
        math::matvec_t_add(wx, 4 * hidden, in_dim, &dpre, &mut dx_buf);
        if let Some(m) = mask {
            for (dx, k) in dx_buf.iter_mut().zip(&m.x) {
                *dx *= *k;
            }
        }
        math::add_assign(&mut d_input[pos * in_dim..(pos + 1) * in_dim], &dx_buf);

        dh_prev.iter_mut().for_each(|v| *v = F::zero());
        math::matvec_t_add(wh, 4 * hidden, hidden, &dpre, &mut dh_prev);
        if let Some(m) = mask {
            for (dh, k) in dh_prev.iter_mut().zip(&m.h) {
                *dh *= *k;
            }
        }
        dh_carry.copy_from_slice(&dh_prev);
    }
}
