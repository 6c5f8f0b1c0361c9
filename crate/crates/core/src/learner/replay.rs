use rand::Rng;

use super::obs::Observation;
use crate::env::Action;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    /// The agent's reward signal for this step (normalised, in `[0, 1]`).
    pub reward: f64,
    pub next_obs: Observation,
}

/// Bounded transition store, emptied at the start of every outer iteration.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    transitions: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            transitions: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    /// Appends a transition, evicting the oldest one when full.
    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.transitions.len() == self.capacity {
            self.transitions.remove(0);
        }
        self.transitions.push(t);
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Indices of a batch drawn uniformly with replacement. The buffer holds
    /// `M` transitions and batches can be larger than `M`, so drawing without
    /// replacement is not generally possible.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Vec<usize> {
        if self.is_empty() {
            return Vec::new();
        }
        (0..batch_size)
            .map(|_| rng.random_range(0..self.transitions.len()))
            .collect()
    }
}
