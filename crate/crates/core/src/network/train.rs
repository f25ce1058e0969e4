use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{backward, forward, softmax_cross_entropy, NetworkError, Params, Real};
use crate::geometry::Action;
use crate::renderer::PatchStack;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    /// Multiplicative learning-rate decay applied every `decay_every` steps.
    pub decay: f64,
    pub decay_every: u64,
    pub total_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            lr: 1e-4,
            decay: 0.95,
            decay_every: 1000,
            total_steps: 25_000,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Step-decayed learning rate.
pub fn lr_at(cfg: &TrainConfig, step: u64) -> f64 {
    cfg.lr * cfg.decay.powi((step / cfg.decay_every.max(1)) as i32)
}

/// Adam moment estimates.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    pub fn update(&mut self, params: &mut [T], grad: &[T], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let c2 = 1.0 - cfg.beta2.powi(self.t as i32);
        let step = T::of(lr * c2.sqrt() / c1);
        let eps = T::of(cfg.eps * c2.sqrt());
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            params[i] = params[i] - step * self.m[i] / (self.v[i].sqrt() + eps);
        }
    }
}

/// Mean loss and gradient over a labelled batch.
pub fn batch_gradient<T: Real>(
    params: &Params<T>,
    batch: &[(PatchStack, Action)],
) -> Result<(f64, Vec<T>), NetworkError> {
    if batch.is_empty() {
        return Err(NetworkError::EmptyBatch);
    }
    let per_sample: Vec<(f64, Vec<T>)> = batch
        .par_iter()
        .map(|(stack, label)| {
            let f = forward(params, &stack.data, stack.side)?;
            let (loss, dlogits) = softmax_cross_entropy(&f.logits, label.index());
            let mut g = vec![T::zero(); params.len()];
            backward(params, &f, &dlogits, &mut g);
            Ok((loss.to_f64().unwrap_or(f64::NAN), g))
        })
        .collect::<Result<_, NetworkError>>()?;
    // sequential reduction keeps the result independent of thread count
    let scale = T::of(1.0 / batch.len() as f64);
    let mut grad = vec![T::zero(); params.len()];
    let mut loss = 0.0;
    for (l, g) in per_sample {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b * scale;
        }
    }
    Ok((loss / batch.len() as f64, grad))
}

/// One optimizer step at global step index `step`; returns the batch loss
/// measured before the update.
pub fn train_step<T: Real>(
    params: &mut Params<T>,
    opt: &mut Adam<T>,
    batch: &[(PatchStack, Action)],
    cfg: &TrainConfig,
    step: u64,
) -> Result<f64, NetworkError> {
    let (loss, grad) = batch_gradient(params, batch)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(NetworkError::NonFiniteLoss { step, loss });
    }
    opt.update(&mut params.data, &grad, lr_at(cfg, step), cfg);
    if let Some(i) = params.data.iter().position(|v| !v.is_finite()) {
        let (name, index) = params.locate(i);
        return Err(NetworkError::NonFiniteParam { step, name, index });
    }
    Ok(loss)
}
