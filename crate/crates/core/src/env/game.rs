//! The six swarm games and their reward normalisation.
//!
//! Two coordination games (`Cluster`, `TargetSelection`) and four
//! anti-coordination games (`Disperse`, `TargetCoverage`, `BeachBar`,
//! `ShapeFormation`). Raw rewards compose a handful of gates, each of which
//! replaces its argument by the penalty `-1` when its condition fails:
//!
//! * `targ`: the agent stands on one of the game's targets,
//! * `coord`: some other agent shares its cell,
//! * `stationary`: the agent chose `Stay`,
//! * `ring`: the agent is exactly `ring_radius` from the ring centre.
//!
//! Normalisation is affine per game, using the analytic extremes of the raw
//! formula for a population of `n` agents on the given grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{Action, AgentState, GridSpec, MeanField};
use super::EnvError;

const PENALTY: f64 = -1.0;
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Cluster,
    TargetSelection,
    Disperse,
    TargetCoverage,
    BeachBar,
    ShapeFormation,
}

impl GameKind {
    pub const ALL: [GameKind; 6] = [
        GameKind::Cluster,
        GameKind::TargetSelection,
        GameKind::Disperse,
        GameKind::TargetCoverage,
        GameKind::BeachBar,
        GameKind::ShapeFormation,
    ];

    pub fn is_coordination(self) -> bool {
        matches!(self, GameKind::Cluster | GameKind::TargetSelection)
    }

    pub fn name(self) -> &'static str {
        match self {
            GameKind::Cluster => "cluster",
            GameKind::TargetSelection => "target_selection",
            GameKind::Disperse => "disperse",
            GameKind::TargetCoverage => "target_coverage",
            GameKind::BeachBar => "beach_bar",
            GameKind::ShapeFormation => "shape_formation",
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        GameKind::ALL
            .into_iter()
            .find(|g| g.name() == key)
            .ok_or_else(|| EnvError::UnknownGame(s.to_string()))
    }
}

/// A game instance: its kind plus the cells that anchor its reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    pub kind: GameKind,
    /// Corner targets, the bar cell, or the ring centre depending on `kind`.
    pub targets: Vec<AgentState>,
    pub ring_radius: usize,
}

/// Closed interval of attainable raw rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRange {
    pub min: f64,
    pub max: f64,
}

impl Game {
    pub const RING_RADIUS: usize = 3;

    pub fn new(kind: GameKind, grid: GridSpec) -> Self {
        let targets = match kind {
            GameKind::TargetSelection | GameKind::TargetCoverage => grid.corners(),
            GameKind::BeachBar | GameKind::ShapeFormation => vec![grid.centre()],
            GameKind::Cluster | GameKind::Disperse => Vec::new(),
        };
        Self {
            kind,
            targets,
            ring_radius: Self::RING_RADIUS,
        }
    }

    fn on_target(&self, s: AgentState) -> bool {
        self.targets.contains(&s)
    }

    /// Unnormalised reward of an agent at `s` taking `a` under the true
    /// empirical mean field `mf` of `n` agents.
    pub fn raw_reward(
        &self,
        s: AgentState,
        a: Action,
        mf: &MeanField,
        grid: GridSpec,
        n: usize,
    ) -> Result<f64, EnvError> {
        let mass = mf.mass(grid.index(s));
        if mass <= 0.0 {
            return Err(EnvError::EmptyMass { state: s });
        }
        let gate = |ok: bool, x: f64| if ok { x } else { PENALTY };
        let stationary = a.is_stationary();
        let reward = match self.kind {
            GameKind::Cluster => mass.ln(),
            GameKind::TargetSelection => {
                // Shared cell means strictly more than this agent's own 1/N.
                let shared = mass * n as f64 > 1.0 + RANGE_SLACK;
                gate(self.on_target(s), gate(shared, mass))
            }
            GameKind::Disperse => gate(stationary, -mass.ln()),
            GameKind::TargetCoverage => gate(stationary, gate(self.on_target(s), -mass.ln())),
            GameKind::BeachBar => {
                let bar = self.targets[0];
                let closeness = grid.max_dist() as f64 - grid.dist(s, bar) as f64;
                gate(stationary, closeness - mass.ln())
            }
            GameKind::ShapeFormation => {
                let on_ring = grid.dist(s, self.targets[0]) == self.ring_radius;
                gate(stationary, gate(on_ring, -mass.ln()))
            }
        };
        Ok(reward)
    }

    pub fn reward_range(&self, grid: GridSpec, n: usize) -> RewardRange {
        let log_n = (n as f64).ln();
        let (min, max) = match self.kind {
            GameKind::Cluster => (-log_n, 0.0),
            GameKind::TargetSelection => (PENALTY, 1.0),
            GameKind::Disperse | GameKind::TargetCoverage | GameKind::ShapeFormation => {
                (PENALTY, log_n)
            }
            GameKind::BeachBar => (PENALTY, grid.max_dist() as f64 + log_n),
        };
        RewardRange { min, max }
    }

    /// Affine map of a raw reward onto `[0, 1]`.
    pub fn normalize_reward(&self, raw: f64, grid: GridSpec, n: usize) -> Result<f64, EnvError> {
        let RewardRange { min, max } = self.reward_range(grid, n);
        if !(raw >= min - RANGE_SLACK && raw <= max + RANGE_SLACK) {
            return Err(EnvError::RewardOutOfRange {
                game: self.kind,
                raw,
                min,
                max,
            });
        }
        if max <= min {
            // A single-agent Cluster game has a degenerate range.
            return Ok(1.0);
        }
        Ok(((raw - min) / (max - min)).clamp(0.0, 1.0))
    }

    pub fn reward(
        &self,
        s: AgentState,
        a: Action,
        mf: &MeanField,
        grid: GridSpec,
        n: usize,
    ) -> Result<f64, EnvError> {
        let raw = self.raw_reward(s, a, mf, grid, n)?;
        self.normalize_reward(raw, grid, n)
    }
}
