//! The outer learning loop and the three architectures.
//!
//! Every outer iteration `k` empties the replay buffers, collects `M` live
//! transitions per agent, runs `L` training steps per learning agent, and
//! then propagates policies:
//!
//! * **Networked**: evaluate the new policies for `E` live steps, then run
//!   `C_p` adoption rounds over the time-varying communication graph.
//! * **Central agent**: agent 0 is the only learner; it sees the true mean
//!   field and the true average reward, and pushes its network to everyone
//!   (each push to a follower fails with the link failure probability).
//! * **Independent**: no links at all; agents learn from their own rewards.
//!
//! The clock never resets: collection, evaluation and exchange steps all
//! advance the same live system.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Game, GameKind, GridSpec};
use crate::estimation::estimate_average_reward;
use crate::exchange::{
    evaluate_policies, run_exchange, AdoptionRecord, PolicyPacket, TauCommSchedule,
};
use crate::learner::{
    AgentLearner, Observation, QParams, SoftQConstants, TrainSchedule, Transition,
};
use crate::netgraph::RadiusPolicy;
use crate::system::{
    agent_streams, sample_actions, stream, LiveSystem, MeanFieldView, SystemError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Networked,
    CentralAgent,
    Independent,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::Networked,
        Architecture::CentralAgent,
        Architecture::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Networked => "networked",
            Architecture::CentralAgent => "central_agent",
            Architecture::Independent => "independent",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "networked" | "net" => Ok(Architecture::Networked),
            "central_agent" | "central" => Ok(Architecture::CentralAgent),
            "independent" | "ind" => Ok(Architecture::Independent),
            _ => Err(ConfigError(format!(
                "unknown architecture '{s}' (expected networked, central_agent or independent)"
            ))),
        }
    }
}

/// Learning agents under an architecture.
pub fn which_learners(arch: Architecture, n: usize) -> Vec<usize> {
    match arch {
        Architecture::CentralAgent => vec![0],
        _ => (0..n).collect(),
    }
}

/// Switches that replace an agent's estimates with oracles, zeros or its
/// own reward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablations {
    /// Observations carry zeros instead of a mean field.
    pub population_independent_obs: bool,
    /// Observations carry the true empirical mean field.
    pub oracle_mean_field: bool,
    /// Agents learn from their own reward only.
    pub individual_reward_only: bool,
    /// Agents learn from the true population-average reward.
    pub oracle_average_reward: bool,
}

/// Reward an agent stores in its transition.
pub fn resolve_reward_signal(
    arch: Architecture,
    ablations: &Ablations,
    own: f64,
    estimated: f64,
    oracle: f64,
) -> f64 {
    if ablations.individual_reward_only {
        own
    } else if ablations.oracle_average_reward {
        oracle
    } else {
        match arch {
            Architecture::CentralAgent => oracle,
            Architecture::Networked | Architecture::Independent => estimated,
        }
    }
}

pub fn mean_field_view(arch: Architecture, ablations: &Ablations) -> MeanFieldView {
    if ablations.population_independent_obs {
        MeanFieldView::Hidden
    } else if ablations.oracle_mean_field || arch == Architecture::CentralAgent {
        MeanFieldView::True
    } else {
        MeanFieldView::Estimated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

/// Every knob of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub height: usize,
    pub width: usize,
    pub population: usize,
    pub game: GameKind,
    pub architecture: Architecture,
    /// Communication radius as a fraction of the grid's maximum distance.
    pub comm_radius: f64,
    /// Visibility radius; defaults to the communication radius.
    pub vis_radius: Option<f64>,
    pub link_failure_prob: f64,
    /// Outer iterations `K`.
    pub iterations: usize,
    /// Collection steps per iteration `M` (also the buffer size).
    pub collect_steps: usize,
    /// Training steps per iteration `L`.
    pub train_steps: usize,
    /// Evaluation steps `E`.
    pub eval_steps: usize,
    /// Policy adoption rounds `C_p`.
    pub policy_rounds: usize,
    /// Reward gossip rounds `C_r`.
    pub reward_rounds: usize,
    /// Mean-field gossip rounds `C_e`.
    pub mean_field_rounds: usize,
    pub gamma: f64,
    pub tau_q: f64,
    pub batch_size: usize,
    pub clip: f64,
    /// Target sync period `ν`; defaults to `L − 1` (at least 1).
    pub target_sync: Option<usize>,
    pub learning_rate: f64,
    pub hidden_width: usize,
    pub tau_comm: TauCommSchedule,
    pub ablations: Ablations,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            height: 20,
            width: 20,
            population: 500,
            game: GameKind::Cluster,
            architecture: Architecture::Networked,
            comm_radius: 1.0,
            vis_radius: None,
            link_failure_prob: 0.0,
            iterations: 150,
            collect_steps: 20,
            train_steps: 20,
            eval_steps: 20,
            policy_rounds: 1,
            reward_rounds: 1,
            mean_field_rounds: 1,
            gamma: 0.9,
            tau_q: 0.03,
            batch_size: 32,
            clip: -1.0,
            target_sync: None,
            learning_rate: 0.01,
            hidden_width: 256,
            tau_comm: TauCommSchedule::default(),
            ablations: Ablations::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    /// Reduced scale for quick experiments: 10×10 grid, 50 agents, 50 iterations.
    pub fn desk() -> Self {
        Self {
            height: 10,
            width: 10,
            population: 50,
            iterations: 50,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            height: self.height,
            width: self.width,
        }
    }

    pub fn sync_every(&self) -> usize {
        self.target_sync
            .unwrap_or(self.train_steps.saturating_sub(1))
            .max(1)
    }

    pub fn radius_policy(&self) -> RadiusPolicy {
        match self.architecture {
            Architecture::Independent => RadiusPolicy::disconnected(),
            _ => RadiusPolicy {
                comm_radius_frac: Some(self.comm_radius),
                vis_radius_frac: Some(self.vis_radius.unwrap_or(self.comm_radius)),
                link_failure_prob: self.link_failure_prob,
            },
        }
    }

    pub fn constants(&self) -> SoftQConstants {
        SoftQConstants {
            tau_q: self.tau_q,
            gamma: self.gamma,
            clip: self.clip,
        }
    }

    pub fn schedule(&self) -> TrainSchedule {
        TrainSchedule {
            steps: self.train_steps,
            batch_size: self.batch_size,
            sync_every: self.sync_every(),
            constants: self.constants(),
        }
    }

    pub fn network_widths(&self) -> Vec<usize> {
        vec![
            Observation::width_for(self.grid()),
            self.hidden_width,
            self.hidden_width,
            crate::env::Action::COUNT,
        ]
    }

    /// Steps the clock advances per outer iteration.
    pub fn steps_per_iteration(&self) -> u64 {
        let exchange = match self.architecture {
            Architecture::Networked => self.eval_steps + self.policy_rounds,
            _ => 0,
        };
        (self.collect_steps + exchange) as u64
    }

    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if self.height == 0 || self.width == 0 {
            return fail(format!(
                "grid must be at least 1x1, got {}x{}",
                self.height, self.width
            ));
        }
        if self.population == 0 {
            return fail("population must be at least 1".into());
        }
        if self.iterations == 0 {
            return fail("iterations (K) must be at least 1".into());
        }
        if self.collect_steps == 0 {
            return fail("collect steps (M) must be at least 1".into());
        }
        if self.architecture == Architecture::Networked && self.eval_steps == 0 {
            return fail("evaluation steps (E) must be at least 1 for networked agents".into());
        }
        if self.reward_rounds == 0 {
            return fail("reward gossip rounds (C_r) must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1".into());
        }
        if self.target_sync == Some(0) {
            return fail("target sync period must be at least 1".into());
        }
        if self.hidden_width == 0 {
            return fail("hidden width must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.tau_q > 0.0) {
            return fail(format!("tau_q must be positive, got {}", self.tau_q));
        }
        if !(self.clip < 0.0) {
            return fail(format!("clip must be negative, got {}", self.clip));
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        match self.tau_comm {
            TauCommSchedule::Fixed(t) if !(t > 0.0) => {
                return fail(format!("fixed tau_comm must be positive, got {t}"))
            }
            TauCommSchedule::Linear { start, end } if !(start > 0.0 && end >= start) => {
                return fail(format!(
                    "tau_comm schedule needs 0 < start <= end, got {start}..{end}"
                ))
            }
            _ => {}
        }
        let radius = RadiusPolicy {
            comm_radius_frac: Some(self.comm_radius),
            vis_radius_frac: Some(self.vis_radius.unwrap_or(self.comm_radius)),
            link_failure_prob: self.link_failure_prob,
        };
        radius.validate().map_err(ConfigError)?;
        let a = &self.ablations;
        if a.individual_reward_only && a.oracle_average_reward {
            return fail(
                "individual_reward_only and oracle_average_reward cannot both be set".into(),
            );
        }
        if a.population_independent_obs && a.oracle_mean_field {
            return fail(
                "population_independent_obs and oracle_mean_field cannot both be set".into(),
            );
        }
        Ok(())
    }
}

/// Measurement for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub k: usize,
    /// Clock value at the end of the iteration.
    pub t: u64,
    /// `Σ_{m<M} γ^m · mean_i r^i` over the iteration's collection steps,
    /// with true individual rewards.
    pub v_pop_hat: f64,
    pub wall_ms: f64,
}

/// Hooks into a run, for checkpoints and protocol traces.
pub trait TrainingObserver {
    fn on_iteration(&mut self, _row: &MetricsRow, _policies: &[Arc<QParams>]) {}
    fn on_adoption(&mut self, _k: usize, _record: &AdoptionRecord) {}
}

impl TrainingObserver for () {}

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("at t={t}: {source}")]
    Runtime {
        t: u64,
        #[source]
        source: SystemError,
    },
}

pub struct TrainingOutcome {
    pub metrics: Vec<MetricsRow>,
    /// Acting network of every agent after the last iteration.
    pub policies: Vec<Arc<QParams>>,
    pub final_t: u64,
}

pub fn run_training(config: &ExperimentConfig) -> Result<TrainingOutcome, TrainingError> {
    run_training_observed(config, &mut ())
}

pub fn run_training_observed(
    config: &ExperimentConfig,
    observer: &mut dyn TrainingObserver,
) -> Result<TrainingOutcome, TrainingError> {
    config.validate()?;
    let mut run = Run::new(config)?;
    let mut metrics = Vec::with_capacity(config.iterations);
    let started = Instant::now();
    for k in 0..config.iterations {
        let v_pop_hat = run
            .iteration(k, observer)
            .map_err(|source| TrainingError::Runtime {
                t: run.system.clock().t(),
                source,
            })?;
        let row = MetricsRow {
            k,
            t: run.system.clock().t(),
            v_pop_hat,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        observer.on_iteration(&row, &run.policies);
        metrics.push(row);
    }
    Ok(TrainingOutcome {
        metrics,
        final_t: run.system.clock().t(),
        policies: run.policies,
    })
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    system: LiveSystem,
    /// Learner state, parallel to `learner_ids`.
    learners: Vec<AgentLearner>,
    learner_ids: Vec<usize>,
    /// Network each agent acts with.
    policies: Vec<Arc<QParams>>,
    rngs: Vec<ChaCha8Rng>,
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self, TrainingError> {
        let n = config.population;
        let grid = config.grid();
        let view = mean_field_view(config.architecture, &config.ablations);
        let system = LiveSystem::new(
            grid,
            Game::new(config.game, grid),
            n,
            config.radius_policy(),
            config.mean_field_rounds,
            view,
            stream(config.seed, 0),
        )
        .map_err(|source| TrainingError::Runtime { t: 0, source })?;
        let mut rngs = agent_streams(config.seed, n);
        let widths = config.network_widths();
        let learner_ids = which_learners(config.architecture, n);
        let mut policies: Vec<Arc<QParams>> = rngs
            .iter_mut()
            .map(|rng| Arc::new(QParams::init(&widths, rng)))
            .collect();
        if config.architecture == Architecture::CentralAgent {
            // Everyone starts from the central agent's network.
            let central = policies[0].clone();
            policies.iter_mut().for_each(|p| *p = central.clone());
        }
        let learners = learner_ids
            .iter()
            .map(|&i| {
                AgentLearner::new(
                    (*policies[i]).clone(),
                    config.learning_rate,
                    config.collect_steps,
                )
            })
            .collect();
        Ok(Self {
            config,
            system,
            learners,
            learner_ids,
            policies,
            rngs,
        })
    }

    fn iteration(
        &mut self,
        k: usize,
        observer: &mut dyn TrainingObserver,
    ) -> Result<f64, SystemError> {
        let v_pop_hat = self.collect()?;
        self.train()?;
        match self.config.architecture {
            Architecture::Networked => self.exchange(k, observer)?,
            Architecture::CentralAgent => self.push_central(),
            Architecture::Independent => {}
        }
        Ok(v_pop_hat)
    }

    /// Empties the buffers and fills them with `M` fresh transitions.
    fn collect(&mut self) -> Result<f64, SystemError> {
        let cfg = self.config;
        let n = cfg.population;
        for learner in &mut self.learners {
            learner.buffer.clear();
        }
        let mut v_pop_hat = 0.0;
        let mut discount = 1.0;
        let mut observations = self.system.observations();
        for _ in 0..cfg.collect_steps {
            let actions = sample_actions(&observations, &self.policies, cfg.tau_q, &mut self.rngs)?;
            let rewards = self.system.rewards(&actions)?;
            let oracle = rewards.iter().sum::<f64>() / n as f64;
            let estimated =
                estimate_average_reward(&rewards, self.system.comm(), cfg.reward_rounds);
            self.system.advance(&actions)?;
            let next = self.system.observations();
            for (learner, &i) in self.learners.iter_mut().zip(&self.learner_ids) {
                let reward = resolve_reward_signal(
                    cfg.architecture,
                    &cfg.ablations,
                    rewards[i],
                    estimated[i],
                    oracle,
                );
                learner.buffer.push(Transition {
                    obs: observations[i].clone(),
                    action: actions[i],
                    reward,
                    next_obs: next[i].clone(),
                });
            }
            v_pop_hat += discount * oracle;
            discount *= cfg.gamma;
            observations = next;
        }
        Ok(v_pop_hat)
    }

    fn train(&mut self) -> Result<(), SystemError> {
        let schedule = self.config.schedule();
        let rngs = &mut self.rngs;
        let ids = &self.learner_ids;
        // Pair each learner with its owner's stream.
        let mut owned: Vec<(&mut AgentLearner, &mut ChaCha8Rng)> = Vec::with_capacity(ids.len());
        let mut learner_iter = self.learners.iter_mut().zip(ids.iter()).peekable();
        for (i, rng) in rngs.iter_mut().enumerate() {
            if let Some((_, &id)) = learner_iter.peek() {
                if id == i {
                    let (learner, _) = learner_iter.next().unwrap();
                    owned.push((learner, rng));
                }
            }
        }
        owned
            .par_iter_mut()
            .map(|(learner, rng)| learner.train(&schedule, *rng).map(|_| ()))
            .collect::<Result<Vec<()>, _>>()?;
        for (learner, &i) in self.learners.iter().zip(ids) {
            self.policies[i] = Arc::new(learner.online.clone());
        }
        Ok(())
    }

    fn exchange(
        &mut self,
        k: usize,
        observer: &mut dyn TrainingObserver,
    ) -> Result<(), SystemError> {
        let cfg = self.config;
        let sigma = evaluate_policies(
            &mut self.system,
            &self.policies,
            cfg.eval_steps,
            cfg.gamma,
            cfg.tau_q,
            &mut self.rngs,
        )?;
        let packets: Vec<PolicyPacket> = sigma
            .into_iter()
            .zip(&self.policies)
            .map(|(sigma, params)| PolicyPacket {
                sigma,
                params: params.clone(),
            })
            .collect();
        let tau_comm = cfg.tau_comm.at(k, cfg.iterations);
        let held = run_exchange(
            &mut self.system,
            packets,
            cfg.policy_rounds,
            tau_comm,
            cfg.tau_q,
            &mut self.rngs,
            &mut |record| observer.on_adoption(k, &record),
        )?;
        for (i, packet) in held.into_iter().enumerate() {
            if !Arc::ptr_eq(&packet.params, &self.policies[i]) {
                self.learners[i].adopt(&packet.params);
                self.policies[i] = packet.params;
            }
        }
        Ok(())
    }

    /// Copies the central network to every follower whose link survives.
    fn push_central(&mut self) {
        let central = self.policies[0].clone();
        let fail = self.config.link_failure_prob;
        for (policy, rng) in self.policies.iter_mut().zip(&mut self.rngs).skip(1) {
            if fail > 0.0 && rng.random::<f64>() < fail {
                continue;
            }
            *policy = central.clone();
        }
    }
}
