//! Adam with bias correction over the flat parameter arena.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::math::Real;
use crate::neural::{Gradients, ScoreModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { step_size: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators; shapes mirror the parameters.
#[derive(Debug, Clone)]
pub struct AdamState<F> {
    m: Vec<F>,
    v: Vec<F>,
    step: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(model: &ScoreModel<F>) -> Self {
        AdamState {
            m: vec![F::zero(); model.data().len()],
            v: vec![F::zero(); model.data().len()],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected update. Non-finite gradients fail fast.
pub fn adam_update<F: Real>(
    model: &mut ScoreModel<F>,
    grads: &Gradients<F>,
    state: &mut AdamState<F>,
    hyper: &AdamHyper,
) -> Result<()> {
    if grads.data.len() != model.data().len() {
        return Err(Error::invalid_input("gradient arena does not match the model"));
    }
    if grads.data.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.step += 1;
    let t = state.step;
    let b1 = F::from_f64(hyper.beta1);
    let b2 = F::from_f64(hyper.beta2);
    let one = F::one();
    let corr1 = F::from_f64(1.0 - hyper.beta1.powi(t as i32));
    let corr2 = F::from_f64(1.0 - hyper.beta2.powi(t as i32));
    let lr = F::from_f64(hyper.step_size);
    let eps = F::from_f64(hyper.epsilon);
    let params = model.data_mut();
    for k in 0..params.len() {
        let g = grads.data[k];
        state.m[k] = b1 * state.m[k] + (one - b1) * g;
        state.v[k] = b2 * state.v[k] + (one - b2) * g * g;
        let mhat = state.m[k] / corr1;
        let vhat = state.v[k] / corr2;
        params[k] = params[k] - lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}
