//! Grid-world environment: geometry, deterministic dynamics, the swarm games
//! and the empirical mean field.
//!
//! Agents move on a 4-connected grid with five actions; moves off the grid
//! leave the agent in place. Distances are Manhattan. The mean field enters
//! only through the rewards, never through the dynamics.

mod game;
mod grid;

use thiserror::Error;

pub use game::{Game, GameKind, RewardRange};
pub use grid::{
    empirical_mean_field, occupancy, transition, uniform_positions, Action, AgentState, GridSpec,
    MeanField,
};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("grid must be at least 1x1, got {height}x{width}")]
    InvalidGrid { height: usize, width: usize },
    #[error("mean field has no mass at occupied cell {state:?}; field and positions disagree")]
    EmptyMass { state: AgentState },
    #[error("raw {game} reward {raw} outside its range [{min}, {max}]")]
    RewardOutOfRange {
        game: GameKind,
        raw: f64,
        min: f64,
        max: f64,
    },
    #[error("unknown game '{0}' (expected one of cluster, target_selection, disperse, target_coverage, beach_bar, shape_formation)")]
    UnknownGame(String),
}
