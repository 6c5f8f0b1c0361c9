//! Radius-based communication and visibility graphs.
//!
//! The communication graph links agents within a broadcast radius of each
//! other and is rebuilt every environment step from the current positions,
//! optionally dropping each link with a fixed failure probability. The
//! visibility graph links grid cells within the visibility radius; it is
//! always reflexive and depends only on the grid.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{AgentState, GridSpec};

const RADIUS_SLACK: f64 = 1e-9;

/// Broadcast radii as fractions of the grid's maximum distance, plus link
/// failure probability. A radius of `None` means no links at all, which is
/// different from a radius of zero (co-located agents still connect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusPolicy {
    pub comm_radius_frac: Option<f64>,
    pub vis_radius_frac: Option<f64>,
    pub link_failure_prob: f64,
}

impl RadiusPolicy {
    pub fn new(comm_radius_frac: f64, vis_radius_frac: f64, link_failure_prob: f64) -> Self {
        Self {
            comm_radius_frac: Some(comm_radius_frac),
            vis_radius_frac: Some(vis_radius_frac),
            link_failure_prob,
        }
    }

    /// No communication links and no visibility beyond an agent's own cell.
    pub fn disconnected() -> Self {
        Self {
            comm_radius_frac: None,
            vis_radius_frac: None,
            link_failure_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, frac) in [
            ("comm radius", self.comm_radius_frac),
            ("vis radius", self.vis_radius_frac),
        ] {
            if let Some(f) = frac {
                if !(0.0..=1.0).contains(&f) {
                    return Err(format!("{name} fraction must lie in [0, 1], got {f}"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.link_failure_prob) {
            return Err(format!(
                "link failure probability must lie in [0, 1], got {}",
                self.link_failure_prob
            ));
        }
        Ok(())
    }
}

fn within(dist: usize, frac: Option<f64>, grid: GridSpec) -> bool {
    match frac {
        Some(f) => dist as f64 <= f * grid.max_dist() as f64 + RADIUS_SLACK,
        None => false,
    }
}

/// Undirected, irreflexive graph over agent indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    neighbours: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            neighbours: vec![Vec::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        Self {
            neighbours: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
        }
    }

    /// Builds a graph from an edge list; self-loops and duplicates are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut neighbours = vec![Vec::new(); n];
        for &(a, b) in edges {
            assert!(
                a < n && b < n,
                "edge ({a}, {b}) out of range for {n} agents"
            );
            if a != b {
                neighbours[a].push(b);
                neighbours[b].push(a);
            }
        }
        for list in &mut neighbours {
            list.sort_unstable();
            list.dedup();
        }
        Self { neighbours }
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbours.is_empty()
    }

    /// Neighbours of `i` in increasing index order.
    pub fn neighbours(&self, i: usize) -> &[usize] {
        &self.neighbours[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbours[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbours.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Hop distances from `source`; `None` for unreachable agents.
    pub fn hops_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.neighbours[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest shortest-path length, or `None` if the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for source in 0..self.len() {
            for d in self.hops_from(source) {
                best = best.max(d?);
            }
        }
        Some(best)
    }
}

/// Links agents within the communication radius, then drops each surviving
/// unordered pair independently with the policy's failure probability.
pub fn build_comm_graph<R: Rng + ?Sized>(
    positions: &[AgentState],
    policy: &RadiusPolicy,
    grid: GridSpec,
    rng: &mut R,
) -> CommGraph {
    let n = positions.len();
    let mut neighbours = vec![Vec::new(); n];
    if policy.comm_radius_frac.is_none() {
        return CommGraph { neighbours };
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !within(
                grid.dist(positions[i], positions[j]),
                policy.comm_radius_frac,
                grid,
            ) {
                continue;
            }
            if policy.link_failure_prob > 0.0 && rng.random::<f64>() < policy.link_failure_prob {
                continue;
            }
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
    }
    // Pushes happen in increasing order of the partner index, so lists are sorted.
    CommGraph { neighbours }
}

/// Reflexive, symmetric graph over grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisGraph {
    visible: Vec<Vec<usize>>,
}

impl VisGraph {
    pub fn num_states(&self) -> usize {
        self.visible.len()
    }

    /// States visible from `state` (including itself), increasing order.
    pub fn visible_from(&self, state: usize) -> &[usize] {
        &self.visible[state]
    }

    pub fn is_complete(&self) -> bool {
        let n = self.num_states();
        self.visible.iter().all(|v| v.len() == n)
    }
}

pub fn build_vis_graph(policy: &RadiusPolicy, grid: GridSpec) -> VisGraph {
    let n = grid.num_states();
    let visible = (0..n)
        .map(|m| {
            (0..n)
                .filter(|&s| s == m || within(grid.dist_index(m, s), policy.vis_radius_frac, grid))
                .collect()
        })
        .collect();
    VisGraph { visible }
}
