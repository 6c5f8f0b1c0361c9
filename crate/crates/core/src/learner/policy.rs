//! Softmax policies over Q-values and the Munchausen regression target.
//!
//! The Munchausen target folds the mirror-descent sum of past Q-functions
//! into a single network: the TD target carries a clipped bonus
//! `τ ln π'(a_t|o_t)` for the action actually taken, and a soft
//! (entropy-regularised) value of the next observation, both under the
//! target network's policy `π' = softmax(Q'/τ)`.

use rand::Rng;

use super::qnet::QParams;
use super::replay::Transition;
use super::LearnerError;

/// Learning constants of the regularised Q-update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftQConstants {
    pub tau_q: f64,
    pub gamma: f64,
    /// Lower clip for the log-policy bonus; must be negative.
    pub clip: f64,
}

/// `τ · logsumexp(q/τ)`, computed around the maximum.
pub fn soft_max_value(q: &[f64], tau: f64) -> f64 {
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = q.iter().map(|v| ((v - max) / tau).exp()).sum();
    max + tau * sum.ln()
}

/// `softmax(q/τ)` with max-subtraction.
pub fn policy_from_q(q: &[f64], tau: f64) -> Vec<f64> {
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = q.iter().map(|v| ((v - max) / tau).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// `τ ln softmax(q/τ)(a) = q(a) − τ·logsumexp(q/τ)`.
pub fn scaled_log_policy(q: &[f64], action: usize, tau: f64) -> f64 {
    q[action] - soft_max_value(q, tau)
}

pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` marginally below one.
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Munchausen target from target-network Q-values at `o_t` and `o_{t+1}`.
///
/// The soft value `Σ_a π(a)(q(a) − τ ln π(a))` equals `τ·logsumexp(q/τ)`
/// exactly, which is what is evaluated here.
pub fn munchausen_target_from_q(
    reward: f64,
    q_obs: &[f64],
    action: usize,
    q_next: &[f64],
    c: &SoftQConstants,
) -> f64 {
    let bonus = scaled_log_policy(q_obs, action, c.tau_q).clamp(c.clip, 0.0);
    reward + bonus + c.gamma * soft_max_value(q_next, c.tau_q)
}

pub fn munchausen_target(
    t: &Transition,
    target_params: &QParams,
    c: &SoftQConstants,
) -> Result<f64, LearnerError> {
    let q_obs = target_params.forward(t.obs.as_slice())?;
    let q_next = target_params.forward(t.next_obs.as_slice())?;
    Ok(munchausen_target_from_q(
        t.reward,
        &q_obs,
        t.action.index(),
        &q_next,
        c,
    ))
}
