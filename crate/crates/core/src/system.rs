//! The live, non-episodic population: positions, the global clock, the
//! per-step graphs and each agent's view of the mean field.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::{
    empirical_mean_field, transition, uniform_positions, Action, AgentState, EnvError, Game,
    GridSpec, MeanField,
};
use crate::estimation::{estimate_mean_field, EstimationError};
use crate::learner::{
    encode_observation, policy_from_q, sample_action, LearnerError, Observation, QParams,
};
use crate::netgraph::{build_comm_graph, build_vis_graph, CommGraph, RadiusPolicy, VisGraph};

/// Global step counter; never reset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimClock {
    t: u64,
}

impl SimClock {
    pub fn t(&self) -> u64 {
        self.t
    }

    fn tick(&mut self) {
        self.t += 1;
    }
}

/// Which mean field an agent's observation carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanFieldView {
    /// The agent's own gossip estimate.
    Estimated,
    /// The true empirical mean field.
    True,
    /// A block of zeros.
    Hidden,
}

#[derive(Debug, thiserror::Error)]
pub enum SystemError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

/// Named random streams derived from one experiment seed. Stream 0 drives
/// the environment (placement and link failures); stream `1 + i` belongs to
/// agent `i`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn agent_streams(seed: u64, n: usize) -> Vec<ChaCha8Rng> {
    (0..n as u64).map(|i| stream(seed, 1 + i)).collect()
}

/// Population state advanced one step at a time.
pub struct LiveSystem {
    grid: GridSpec,
    game: Game,
    radius: RadiusPolicy,
    mf_rounds: usize,
    view: MeanFieldView,
    positions: Vec<AgentState>,
    clock: SimClock,
    vis: VisGraph,
    comm: CommGraph,
    true_mf: MeanField,
    estimates: Vec<MeanField>,
    env_rng: ChaCha8Rng,
}

impl LiveSystem {
    /// Places `n` agents uniformly at random and builds the graphs and
    /// estimates for `t = 0`.
    pub fn new(
        grid: GridSpec,
        game: Game,
        n: usize,
        radius: RadiusPolicy,
        mf_rounds: usize,
        view: MeanFieldView,
        mut env_rng: ChaCha8Rng,
    ) -> Result<Self, SystemError> {
        let positions = uniform_positions(n, grid, &mut env_rng);
        Self::with_positions(grid, game, positions, radius, mf_rounds, view, env_rng)
    }

    pub fn with_positions(
        grid: GridSpec,
        game: Game,
        positions: Vec<AgentState>,
        radius: RadiusPolicy,
        mf_rounds: usize,
        view: MeanFieldView,
        env_rng: ChaCha8Rng,
    ) -> Result<Self, SystemError> {
        let n = positions.len();
        let mut system = Self {
            grid,
            game,
            radius,
            mf_rounds,
            view,
            vis: build_vis_graph(&radius, grid),
            comm: CommGraph::empty(n),
            true_mf: MeanField::uniform(grid.num_states()),
            estimates: Vec::new(),
            positions,
            clock: SimClock::default(),
            env_rng,
        };
        system.refresh()?;
        Ok(system)
    }

    fn refresh(&mut self) -> Result<(), SystemError> {
        self.true_mf = empirical_mean_field(&self.positions, self.grid);
        self.comm = build_comm_graph(&self.positions, &self.radius, self.grid, &mut self.env_rng);
        self.estimates = match self.view {
            MeanFieldView::Estimated => estimate_mean_field(
                &self.positions,
                self.grid,
                &self.vis,
                &self.comm,
                self.mf_rounds,
            )?,
            _ => Vec::new(),
        };
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn population(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[AgentState] {
        &self.positions
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    /// Communication graph at the current step.
    pub fn comm(&self) -> &CommGraph {
        &self.comm
    }

    pub fn vis(&self) -> &VisGraph {
        &self.vis
    }

    pub fn true_mean_field(&self) -> &MeanField {
        &self.true_mf
    }

    /// Agent `i`'s gossip estimate (only kept under [`MeanFieldView::Estimated`]).
    pub fn estimate(&self, i: usize) -> Option<&MeanField> {
        self.estimates.get(i)
    }

    pub fn observation(&self, i: usize) -> Observation {
        let mf = match self.view {
            MeanFieldView::Estimated => Some(&self.estimates[i]),
            MeanFieldView::True => Some(&self.true_mf),
            MeanFieldView::Hidden => None,
        };
        encode_observation(self.positions[i], mf, self.grid)
    }

    pub fn observations(&self) -> Vec<Observation> {
        (0..self.population())
            .map(|i| self.observation(i))
            .collect()
    }

    /// Normalised rewards for `actions` at the current step, computed with
    /// the true empirical mean field.
    pub fn rewards(&self, actions: &[Action]) -> Result<Vec<f64>, SystemError> {
        let n = self.population();
        self.positions
            .iter()
            .zip(actions)
            .map(|(&s, &a)| Ok(self.game.reward(s, a, &self.true_mf, self.grid, n)?))
            .collect()
    }

    /// Moves every agent, advances the clock and rebuilds graphs and
    /// estimates for the new step.
    pub fn advance(&mut self, actions: &[Action]) -> Result<(), SystemError> {
        for (s, &a) in self.positions.iter_mut().zip(actions) {
            *s = transition(*s, a, self.grid);
        }
        self.clock.tick();
        self.refresh()
    }
}

/// Samples every agent's action from `softmax(Q/τ_q)` of its acting
/// network. Agent `i` draws from `rngs[i]`.
pub fn sample_actions(
    observations: &[Observation],
    policies: &[Arc<QParams>],
    tau_q: f64,
    rngs: &mut [ChaCha8Rng],
) -> Result<Vec<Action>, SystemError> {
    observations
        .par_iter()
        .zip(policies)
        .zip(rngs.par_iter_mut())
        .map(|((obs, params), rng)| {
            let q = params.forward(obs.as_slice())?;
            let probs = policy_from_q(&q, tau_q);
            Ok(Action::from_index(sample_action(&probs, rng)))
        })
        .collect()
}
