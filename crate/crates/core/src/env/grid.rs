//! Grid geometry, agent positions, actions and the empirical mean field.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvError;

/// Rectangular grid of `height × width` cells with Manhattan distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub height: usize,
    pub width: usize,
}

impl GridSpec {
    pub fn new(height: usize, width: usize) -> Result<Self, EnvError> {
        if height == 0 || width == 0 {
            return Err(EnvError::InvalidGrid { height, width });
        }
        Ok(Self { height, width })
    }

    pub fn num_states(&self) -> usize {
        self.height * self.width
    }

    /// Distance between opposite corners, the largest pairwise cell distance.
    pub fn max_dist(&self) -> usize {
        (self.height - 1) + (self.width - 1)
    }

    /// Manhattan distance between two cells.
    pub fn dist(&self, a: AgentState, b: AgentState) -> usize {
        a.row.abs_diff(b.row) + a.col.abs_diff(b.col)
    }

    /// Distance between two flat (row-major) state indices.
    pub fn dist_index(&self, a: usize, b: usize) -> usize {
        self.dist(self.state(a), self.state(b))
    }

    pub fn contains(&self, s: AgentState) -> bool {
        s.row < self.height && s.col < self.width
    }

    /// Row-major index of a cell.
    pub fn index(&self, s: AgentState) -> usize {
        debug_assert!(self.contains(s));
        s.row * self.width + s.col
    }

    pub fn state(&self, index: usize) -> AgentState {
        debug_assert!(index < self.num_states());
        AgentState {
            row: index / self.width,
            col: index % self.width,
        }
    }

    /// The cell `(⌊H/2⌋, ⌊W/2⌋)`.
    pub fn centre(&self) -> AgentState {
        AgentState {
            row: self.height / 2,
            col: self.width / 2,
        }
    }

    /// The four corner cells (deduplicated on degenerate grids).
    pub fn corners(&self) -> Vec<AgentState> {
        let (h, w) = (self.height - 1, self.width - 1);
        let mut corners = vec![
            AgentState::new(0, 0),
            AgentState::new(0, w),
            AgentState::new(h, 0),
            AgentState::new(h, w),
        ];
        corners.dedup();
        corners.sort();
        corners.dedup();
        corners
    }
}

/// Cell occupied by an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub row: usize,
    pub col: usize,
}

impl AgentState {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }

    pub fn is_stationary(self) -> bool {
        self == Action::Stay
    }
}

/// Deterministic move; steps off the boundary leave the agent where it is.
pub fn transition(s: AgentState, a: Action, grid: GridSpec) -> AgentState {
    match a {
        Action::Up if s.row > 0 => AgentState::new(s.row - 1, s.col),
        Action::Down if s.row + 1 < grid.height => AgentState::new(s.row + 1, s.col),
        Action::Left if s.col > 0 => AgentState::new(s.row, s.col - 1),
        Action::Right if s.col + 1 < grid.width => AgentState::new(s.row, s.col + 1),
        _ => s,
    }
}

/// Independent uniform placement of `n` agents over all cells.
pub fn uniform_positions<R: Rng + ?Sized>(
    n: usize,
    grid: GridSpec,
    rng: &mut R,
) -> Vec<AgentState> {
    (0..n)
        .map(|_| grid.state(rng.random_range(0..grid.num_states())))
        .collect()
}

/// Distribution over grid cells, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    probs: Vec<f64>,
}

impl MeanField {
    pub fn from_probs(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            probs: vec![1.0 / num_states as f64; num_states],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass(&self, state_index: usize) -> f64 {
        self.probs[state_index]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Occupancy counts per cell.
pub fn occupancy(states: &[AgentState], grid: GridSpec) -> Vec<u32> {
    let mut counts = vec![0u32; grid.num_states()];
    for &s in states {
        counts[grid.index(s)] += 1;
    }
    counts
}

/// Fraction of the population in each cell.
pub fn empirical_mean_field(states: &[AgentState], grid: GridSpec) -> MeanField {
    let n = states.len() as f64;
    let probs = occupancy(states, grid)
        .into_iter()
        .map(|c| c as f64 / n)
        .collect();
    MeanField { probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g20() -> GridSpec {
        GridSpec::new(20, 20).unwrap()
    }

    #[test]
    fn moves_clamp_at_boundary() {
        assert_eq!(
            transition(AgentState::new(0, 0), Action::Up, g20()),
            AgentState::new(0, 0)
        );
        assert_eq!(
            transition(AgentState::new(0, 0), Action::Left, g20()),
            AgentState::new(0, 0)
        );
        assert_eq!(
            transition(AgentState::new(19, 19), Action::Down, g20()),
            AgentState::new(19, 19)
        );
        assert_eq!(
            transition(AgentState::new(19, 19), Action::Right, g20()),
            AgentState::new(19, 19)
        );
    }

    #[test]
    fn moves_displace_one_cell() {
        let s = AgentState::new(5, 5);
        assert_eq!(transition(s, Action::Stay, g20()), s);
        assert_eq!(transition(s, Action::Right, g20()), AgentState::new(5, 6));
        assert_eq!(transition(s, Action::Left, g20()), AgentState::new(5, 4));
        assert_eq!(transition(s, Action::Up, g20()), AgentState::new(4, 5));
        assert_eq!(transition(s, Action::Down, g20()), AgentState::new(6, 5));
    }

    #[test]
    fn only_stay_is_stationary() {
        let stationary: Vec<_> = Action::ALL.iter().filter(|a| a.is_stationary()).collect();
        assert_eq!(stationary, vec![&Action::Stay]);
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), *a);
        }
    }

    #[test]
    fn max_dist_is_corner_to_corner() {
        let g = g20();
        assert_eq!(g.max_dist(), 38);
        assert_eq!(
            g.dist(AgentState::new(0, 0), AgentState::new(19, 19)),
            g.max_dist()
        );
        let g = GridSpec::new(1, 1).unwrap();
        assert_eq!(g.max_dist(), 0);
        assert!(GridSpec::new(0, 3).is_err());
    }

    #[test]
    fn corners_and_centre() {
        let g = GridSpec::new(10, 10).unwrap();
        assert_eq!(g.centre(), AgentState::new(5, 5));
        assert_eq!(g.corners().len(), 4);
        assert_eq!(GridSpec::new(1, 1).unwrap().corners().len(), 1);
    }

    #[test]
    fn mean_field_small_cases() {
        let g = GridSpec::new(2, 2).unwrap();
        let mf = empirical_mean_field(&[AgentState::new(0, 0); 4], g);
        assert_eq!(mf.probs(), &[1.0, 0.0, 0.0, 0.0]);
        let mf = empirical_mean_field(&[AgentState::new(0, 0), AgentState::new(1, 1)], g);
        assert_eq!(mf.probs(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn mean_field_entries_are_multiples_of_one_over_n() {
        let g = g20();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut states = uniform_positions(500, g, &mut rng);
        // Force a placement with at most two per cell: 100 cells twice, 300 once.
        for (i, s) in states.iter_mut().enumerate() {
            *s = g.state(i % 400);
        }
        let mf = empirical_mean_field(&states, g);
        // Count-and-divide oracle.
        for (idx, &p) in mf.probs().iter().enumerate() {
            let count = states.iter().filter(|&&s| g.index(s) == idx).count();
            assert_eq!(p, count as f64 / 500.0);
            assert!(p == 1.0 / 500.0 || p == 2.0 / 500.0);
        }
        assert!((mf.total() - 1.0).abs() < 1e-12);
    }
}
