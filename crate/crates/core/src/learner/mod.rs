//! Per-agent function approximation and training.
//!
//! Each agent owns a Q-network, a target copy, an Adam state and a replay
//! buffer. Training regresses `Q(o_t, a_t)` onto the Munchausen target
//! computed with the target network; the acting policy is the softmax of
//! the online network's Q-values at temperature `τ_q`.

mod adam;
mod obs;
mod policy;
mod qnet;
mod replay;

use ndarray::Array2;
use rand::Rng;
use thiserror::Error;

pub use adam::Adam;
pub use obs::{encode_observation, Observation};
pub use policy::{
    munchausen_target, munchausen_target_from_q, policy_from_q, sample_action, scaled_log_policy,
    soft_max_value, SoftQConstants,
};
pub use qnet::{Dense, QParams};
pub use replay::{ReplayBuffer, Transition};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("network expects inputs of width {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// A batch with duplicate draws merged: each distinct transition appears
/// once, weighted by its share of the draws.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub inputs: Array2<f64>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Minibatch {
    /// Gathers buffer entries `indices` (with repeats) against precomputed
    /// per-transition targets. The weighted loss equals the plain mean over
    /// the `indices.len()` draws.
    pub fn gather(buffer: &ReplayBuffer, targets: &[f64], indices: &[usize]) -> Self {
        let transitions = buffer.transitions();
        let mut counts = vec![0usize; transitions.len()];
        for &i in indices {
            counts[i] += 1;
        }
        let picked: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
        let width = transitions.first().map_or(0, |t| t.obs.as_slice().len());
        let mut inputs = Array2::zeros((picked.len(), width));
        for (row, &i) in picked.iter().enumerate() {
            inputs
                .row_mut(row)
                .as_slice_mut()
                .unwrap()
                .copy_from_slice(transitions[i].obs.as_slice());
        }
        let draws = indices.len() as f64;
        Self {
            inputs,
            actions: picked
                .iter()
                .map(|&i| transitions[i].action.index())
                .collect(),
            targets: picked.iter().map(|&i| targets[i]).collect(),
            weights: picked.iter().map(|&i| counts[i] as f64 / draws).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Munchausen targets for every transition in the buffer under `target`.
pub fn buffer_targets(
    target: &QParams,
    buffer: &ReplayBuffer,
    c: &SoftQConstants,
) -> Result<Vec<f64>, LearnerError> {
    let transitions = buffer.transitions();
    if transitions.is_empty() {
        return Ok(Vec::new());
    }
    let width = target.input_width();
    let rows = transitions.len();
    let mut inputs = Array2::zeros((2 * rows, width));
    for (i, t) in transitions.iter().enumerate() {
        inputs
            .row_mut(i)
            .as_slice_mut()
            .unwrap()
            .copy_from_slice(t.obs.as_slice());
        inputs
            .row_mut(rows + i)
            .as_slice_mut()
            .unwrap()
            .copy_from_slice(t.next_obs.as_slice());
    }
    let q = target.forward_batch(inputs.view())?;
    Ok(transitions
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let q_obs = q.row(i);
            let q_next = q.row(rows + i);
            munchausen_target_from_q(
                t.reward,
                q_obs.as_slice().unwrap(),
                t.action.index(),
                q_next.as_slice().unwrap(),
                c,
            )
        })
        .collect())
}

/// One Adam step on the batch's mean squared TD error; the targets are
/// constants. Returns the loss before the update.
pub fn train_step(
    params: &mut QParams,
    opt: &mut Adam,
    batch: &Minibatch,
) -> Result<f64, LearnerError> {
    let (loss, grads) = params.loss_and_grad(
        batch.inputs.view(),
        &batch.actions,
        &batch.targets,
        &batch.weights,
    )?;
    opt.apply(params, &grads);
    Ok(loss)
}

pub fn sync_target(params: &QParams) -> QParams {
    params.clone()
}

/// Loop constants for one round of training on a full buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSchedule {
    pub steps: usize,
    pub batch_size: usize,
    /// Target sync period: sync after step `l` whenever `l % sync_every == 0`.
    pub sync_every: usize,
    pub constants: SoftQConstants,
}

impl TrainSchedule {
    /// Steps after which the target network is refreshed.
    pub fn sync_steps(&self) -> Vec<usize> {
        (0..self.steps)
            .filter(|l| l % self.sync_every == 0)
            .collect()
    }
}

/// Everything one learning agent owns.
#[derive(Debug, Clone)]
pub struct AgentLearner {
    pub online: QParams,
    pub target: QParams,
    pub opt: Adam,
    pub buffer: ReplayBuffer,
}

impl AgentLearner {
    pub fn new(online: QParams, learning_rate: f64, buffer_capacity: usize) -> Self {
        Self {
            target: sync_target(&online),
            opt: Adam::new(&online, learning_rate),
            buffer: ReplayBuffer::new(buffer_capacity),
            online,
        }
    }

    /// Replaces the Q-network with an adopted one; the target follows it so
    /// the next training round bootstraps from the adopted network.
    pub fn adopt(&mut self, params: &QParams) {
        self.online.clone_from(params);
        self.target.clone_from(params);
    }

    /// Runs the schedule's training steps on the current buffer and returns
    /// the mean pre-update loss (zero when the buffer is empty).
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        schedule: &TrainSchedule,
        rng: &mut R,
    ) -> Result<f64, LearnerError> {
        if self.buffer.is_empty() || schedule.steps == 0 {
            return Ok(0.0);
        }
        let mut targets: Option<Vec<f64>> = None;
        let mut total = 0.0;
        for l in 0..schedule.steps {
            if targets.is_none() {
                targets = Some(buffer_targets(
                    &self.target,
                    &self.buffer,
                    &schedule.constants,
                )?);
            }
            let indices = self.buffer.sample_indices(schedule.batch_size, rng);
            let batch = Minibatch::gather(&self.buffer, targets.as_ref().unwrap(), &indices);
            total += train_step(&mut self.online, &mut self.opt, &batch)?;
            if l % schedule.sync_every == 0 {
                self.target = sync_target(&self.online);
                targets = None;
            }
        }
        Ok(total / schedule.steps as f64)
    }
}
