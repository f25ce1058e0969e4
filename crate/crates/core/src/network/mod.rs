//! Convolutional action policy: strided conv blocks, an attention-weighted
//! pooling head and two fully connected layers producing 13 logits.

mod checkpoint;
mod forward;
mod real;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use forward::{backward, conv_out_side, forward, softmax_cross_entropy, Cache, Forward};
pub use real::Real;
pub use train::{lr_at, train_step, Adam, TrainConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Action;
use crate::policy::{Observation, Policy, PolicyError};
use crate::renderer::{PatchStack, STACK_CHANNELS};

pub const KERNEL: usize = 3;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("input shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: u64, loss: f64 },
    #[error("non-finite parameter {name}[{index}] after step {step}")]
    NonFiniteParam { step: u64, name: String, index: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Layer widths. Every conv block is 3×3, stride 2, padding 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub in_channels: usize,
    pub conv_channels: Vec<usize>,
    pub hidden: usize,
    pub outputs: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            in_channels: STACK_CHANNELS,
            conv_channels: vec![16, 32, 64, 64, 128],
            hidden: 64,
            outputs: Action::COUNT,
        }
    }
}

/// Negative-side slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.1;

/// Added to every input value before the first layer.
pub const INPUT_SHIFT: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn layout(arch: &ArchConfig) -> Vec<TensorSpec> {
    let mut specs = Vec::new();
    let mut offset = 0;
    let mut push = |name: String, shape: Vec<usize>| {
        let len: usize = shape.iter().product();
        specs.push(TensorSpec {
            name,
            shape,
            offset,
        });
        offset += len;
    };
    let mut cin = arch.in_channels;
    for (i, &c) in arch.conv_channels.iter().enumerate() {
        push(format!("conv{i}.weight"), vec![c, cin, KERNEL, KERNEL]);
        push(format!("conv{i}.bias"), vec![c]);
        cin = c;
    }
    push("attention.weight".into(), vec![1, cin]);
    push("attention.bias".into(), vec![1]);
    push("fc1.weight".into(), vec![arch.hidden, cin]);
    push("fc1.bias".into(), vec![arch.hidden]);
    push("fc2.weight".into(), vec![arch.outputs, arch.hidden]);
    push("fc2.bias".into(), vec![arch.outputs]);
    specs
}

/// All weights in one flat buffer, sliced by [`TensorSpec`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub arch: ArchConfig,
    pub specs: Vec<TensorSpec>,
    pub data: Vec<T>,
}

impl<T: Real> Params<T> {
    pub fn zeros(arch: ArchConfig) -> Self {
        let specs = layout(&arch);
        let n = specs.last().map_or(0, |s| s.offset + s.len());
        Self {
            arch,
            specs,
            data: vec![T::zero(); n],
        }
    }

    /// Fan-in scaled uniform weights, zero biases, zero final layer.
    pub fn init(arch: ArchConfig, rng: &mut impl Rng) -> Self {
        let mut p = Self::init_full(arch, rng);
        let last = p.specs.len() - 2;
        p.tensor_mut(last).fill(T::zero());
        p
    }

    /// Like [`Params::init`] but with a random final layer too.
    pub fn init_full(arch: ArchConfig, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(arch);
        for i in 0..p.specs.len() {
            let spec = &p.specs[i];
            if spec.name.ends_with(".bias") {
                continue;
            }
            let fan_in: usize = spec.shape[1..].iter().product();
            let bound = (3.0 / fan_in as f64).sqrt() * 2f64.sqrt();
            for v in p.tensor_mut(i) {
                *v = T::of(rng.random_range(-bound..bound));
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn tensor(&self, i: usize) -> &[T] {
        let s = &self.specs[i];
        &self.data[s.offset..s.offset + s.len()]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [T] {
        let (o, l) = (self.specs[i].offset, self.specs[i].len());
        &mut self.data[o..o + l]
    }

    /// Name and local index of flat parameter `i`.
    pub fn locate(&self, i: usize) -> (String, usize) {
        let s = self
            .specs
            .iter()
            .rev()
            .find(|s| s.offset <= i)
            .expect("index within parameters");
        (s.name.clone(), i - s.offset)
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        Params {
            arch: self.arch.clone(),
            specs: self.specs.clone(),
            data: self.data.iter().map(|v| U::of(v.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Index of the largest logit, lowest index on ties.
pub fn argmax_logits<T: Real>(logits: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in logits.iter().enumerate() {
        if *v > logits[best] {
            best = i;
        }
    }
    best
}

pub fn decide_network<T: Real>(params: &Params<T>, stack: &PatchStack) -> Result<Action, NetworkError> {
    let f = forward(params, &stack.data, stack.side)?;
    Ok(Action::ALL[argmax_logits(&f.logits)])
}

/// Network wrapped as a [`Policy`].
#[derive(Debug, Clone)]
pub struct NetworkPolicy {
    pub params: Params<f32>,
}

impl NetworkPolicy {
    pub fn new(params: Params<f32>) -> Self {
        Self { params }
    }
}

impl Policy for NetworkPolicy {
    fn scores(&self, obs: &Observation) -> Result<[f64; 13], PolicyError> {
        let stack = obs.stack.ok_or(PolicyError::MissingObservation)?;
        let f = forward(&self.params, &stack.data, stack.side)
            .map_err(|e| PolicyError::Decision(e.to_string()))?;
        let mut out = [0.0; 13];
        for (o, l) in out.iter_mut().zip(&f.logits) {
            *o = *l as f64;
        }
        Ok(out)
    }

    fn decide(&self, obs: &Observation) -> Result<Action, PolicyError> {
        let stack = obs.stack.ok_or(PolicyError::MissingObservation)?;
        decide_network(&self.params, stack).map_err(|e| PolicyError::Decision(e.to_string()))
    }
}
