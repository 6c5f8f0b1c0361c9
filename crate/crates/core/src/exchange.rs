//! Policy evaluation, broadcast and softmax adoption among neighbours.
//!
//! After each training round, networked agents score their new policies by
//! the discounted sum of their own rewards over a few live steps. They then
//! run synchronous adoption rounds: every agent broadcasts `(σ, Q-params)`,
//! samples one packet from itself and its neighbours with probability
//! proportional to `exp(σ/τ_comm)`, and takes one more live step.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::learner::QParams;
use crate::netgraph::CommGraph;
use crate::system::{sample_actions, LiveSystem, SystemError};

/// A policy as broadcast: its evaluation score and its Q-network.
#[derive(Debug, Clone)]
pub struct PolicyPacket {
    pub sigma: f64,
    pub params: Arc<QParams>,
}

/// One agent's choice in one adoption round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdoptionRecord {
    pub round: usize,
    pub agent_id: usize,
    pub adopted_from: usize,
    pub sigma: f64,
}

/// Temperature of the adoption softmax over outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauCommSchedule {
    /// Rises linearly from `start` at `k = 0` to `end` at `k = K − 1`.
    Linear {
        start: f64,
        end: f64,
    },
    Fixed(f64),
}

impl Default for TauCommSchedule {
    fn default() -> Self {
        TauCommSchedule::Linear {
            start: 0.001,
            end: 1.0,
        }
    }
}

impl TauCommSchedule {
    pub fn at(&self, k: usize, iterations: usize) -> f64 {
        match *self {
            TauCommSchedule::Fixed(tau) => tau,
            TauCommSchedule::Linear { start, .. } if iterations <= 1 => start,
            TauCommSchedule::Linear { start, end } => {
                start + (end - start) * k as f64 / (iterations - 1) as f64
            }
        }
    }
}

/// `exp(σ_j/τ) / Σ_x exp(σ_x/τ)` over the candidates, shifted by the max.
pub fn adoption_probabilities(sigmas: &[f64], tau: f64) -> Vec<f64> {
    let max = sigmas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = sigmas.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Candidates of agent `i`: itself and its neighbours, in index order.
pub fn candidates(graph: &CommGraph, i: usize) -> Vec<usize> {
    let mut j: Vec<usize> = graph.neighbours(i).to_vec();
    let pos = j.partition_point(|&x| x < i);
    j.insert(pos, i);
    j
}

/// One synchronous adoption round. All agents sample against the packets
/// held at the start of the round; agent `i` draws from `rngs[i]`.
/// Returns the new packets and, per agent, whose packet it adopted.
pub fn adoption_round(
    packets: &[PolicyPacket],
    graph: &CommGraph,
    tau: f64,
    rngs: &mut [ChaCha8Rng],
) -> (Vec<PolicyPacket>, Vec<usize>) {
    let choices: Vec<usize> = (0..packets.len())
        .map(|i| {
            let j = candidates(graph, i);
            if j.len() == 1 {
                return i;
            }
            let sigmas: Vec<f64> = j.iter().map(|&x| packets[x].sigma).collect();
            j[draw(&adoption_probabilities(&sigmas, tau), &mut rngs[i])]
        })
        .collect();
    let adopted = choices.iter().map(|&c| packets[c].clone()).collect();
    (adopted, choices)
}

/// Runs `steps` live steps with the given acting networks and returns each
/// agent's discounted sum of its own normalised rewards. Nothing is stored
/// for training.
pub fn evaluate_policies(
    system: &mut LiveSystem,
    policies: &[Arc<QParams>],
    steps: usize,
    gamma: f64,
    tau_q: f64,
    rngs: &mut [ChaCha8Rng],
) -> Result<Vec<f64>, SystemError> {
    let mut sigma = vec![0.0; system.population()];
    let mut discount = 1.0;
    for _ in 0..steps {
        let actions = sample_actions(&system.observations(), policies, tau_q, rngs)?;
        let rewards = system.rewards(&actions)?;
        for (s, r) in sigma.iter_mut().zip(&rewards) {
            *s += discount * r;
        }
        system.advance(&actions)?;
        discount *= gamma;
    }
    Ok(sigma)
}

/// `rounds` iterations of {adoption round on the current graph; one live
/// step with the resulting policies}. Zero rounds leaves everything as is.
pub fn run_exchange(
    system: &mut LiveSystem,
    mut packets: Vec<PolicyPacket>,
    rounds: usize,
    tau_comm: f64,
    tau_q: f64,
    rngs: &mut [ChaCha8Rng],
    trace: &mut dyn FnMut(AdoptionRecord),
) -> Result<Vec<PolicyPacket>, SystemError> {
    for round in 0..rounds {
        let (adopted, choices) = adoption_round(&packets, system.comm(), tau_comm, rngs);
        for (agent_id, (&from, p)) in choices.iter().zip(&adopted).enumerate() {
            trace(AdoptionRecord {
                round,
                agent_id,
                adopted_from: from,
                sigma: p.sigma,
            });
        }
        packets = adopted;
        let policies: Vec<Arc<QParams>> = packets.iter().map(|p| p.params.clone()).collect();
        let actions = sample_actions(&system.observations(), &policies, tau_q, rngs)?;
        system.rewards(&actions)?;
        system.advance(&actions)?;
    }
    Ok(packets)
}
