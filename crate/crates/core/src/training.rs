//! Network training on generated samples through a replay pool.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{DatagenError, SampleStream};
use crate::geometry::Action;
use crate::network::{train_step, Adam, NetworkError, Params, Real, TrainConfig};
use crate::renderer::PatchStack;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid training setup: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    /// Samples held at once.
    pub capacity: usize,
    /// Fresh samples replacing the oldest ones before every step.
    pub refresh: usize,
    /// Seed of the batch draws.
    pub seed: u64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 2048,
            refresh: 8,
            seed: 0,
        }
    }
}

/// Fixed-capacity ring of labelled samples.
pub struct ReplayPool {
    items: Vec<(PatchStack, Action)>,
    next: usize,
    rng: ChaCha8Rng,
}

impl ReplayPool {
    pub fn new(items: Vec<(PatchStack, Action)>, seed: u64) -> Self {
        Self {
            items,
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Overwrites the oldest entries.
    pub fn push(&mut self, fresh: Vec<(PatchStack, Action)>) {
        for s in fresh {
            self.items[self.next] = s;
            self.next = (self.next + 1) % self.items.len();
        }
    }

    /// `n` distinct samples drawn uniformly, cloned.
    pub fn batch(&mut self, n: usize) -> Vec<(PatchStack, Action)> {
        let n = n.min(self.items.len());
        sample(&mut self.rng, self.items.len(), n)
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: u64,
    /// Mean batch loss over each block of `log_every` steps.
    pub losses: Vec<f64>,
    pub samples_generated: u64,
}

/// Trains `params` for `cfg.total_steps` steps on `stream`, filling the
/// replay pool first. `on_block` gets the step count and mean loss of every
/// `log_every` steps.
pub fn train_on_stream<T: Real>(
    params: &mut Params<T>,
    stream: &mut SampleStream,
    cfg: &TrainConfig,
    replay: &ReplayConfig,
    log_every: u64,
    on_block: impl FnMut(u64, f64),
) -> Result<TrainLog, TrainError> {
    if replay.capacity < cfg.batch_size {
        return Err(TrainError::InvalidConfig("replay capacity must be at least the batch size".into()));
    }
    let start = stream.next;
    let initial = stream.batch(replay.capacity)?;
    let mut refill = |n: usize| stream.batch(n).map_err(TrainError::from);
    let mut log = train_with(params, initial, Some(&mut refill), cfg, replay, log_every, on_block)?;
    log.samples_generated = stream.next - start;
    Ok(log)
}

pub type Refill<'a> = &'a mut dyn FnMut(usize) -> Result<Vec<(PatchStack, Action)>, TrainError>;

/// Trains on `initial`; with `refill`, `replay.refresh` fresh samples
/// replace the oldest ones before every step.
pub fn train_with<T: Real>(
    params: &mut Params<T>,
    initial: Vec<(PatchStack, Action)>,
    mut refill: Option<Refill>,
    cfg: &TrainConfig,
    replay: &ReplayConfig,
    log_every: u64,
    mut on_block: impl FnMut(u64, f64),
) -> Result<TrainLog, TrainError> {
    if cfg.batch_size == 0 || initial.is_empty() {
        return Err(TrainError::InvalidConfig("batch size and sample count must be positive".into()));
    }
    let mut generated = initial.len() as u64;
    let mut pool = ReplayPool::new(initial, replay.seed);
    let mut opt = Adam::new(params.len());
    let log_every = log_every.max(1);
    let mut losses = Vec::new();
    let mut acc = 0.0;
    for step in 0..cfg.total_steps {
        if let Some(f) = refill.as_mut() {
            if replay.refresh > 0 {
                pool.push(f(replay.refresh)?);
                generated += replay.refresh as u64;
            }
        }
        let batch = pool.batch(cfg.batch_size);
        acc += train_step(params, &mut opt, &batch, cfg, step)?;
        if (step + 1) % log_every == 0 {
            let mean = acc / log_every as f64;
            losses.push(mean);
            on_block(step + 1, mean);
            acc = 0.0;
        }
    }
    Ok(TrainLog {
        steps: cfg.total_steps,
        losses,
        samples_generated: generated,
    })
}
