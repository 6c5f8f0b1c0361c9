//! Decentralised gossip estimators for the global average reward and the
//! global empirical mean field.
//!
//! Both run a fixed number of synchronous rounds over one communication graph
//! snapshot: every agent broadcasts what it holds at the start of the round,
//! then merges what its neighbours broadcast. Merges are order independent
//! (set unions keyed by agent id, and exact visibility counts), so agents can
//! be processed in any order.

use thiserror::Error;

use crate::env::{occupancy, AgentState, GridSpec, MeanField};
use crate::netgraph::{CommGraph, VisGraph};

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("agents disagree on the count of state {state}: {first} vs {second}")]
    InconsistentCount {
        state: usize,
        first: u32,
        second: u32,
    },
    #[error("agent {agent} counted {counted} agents but the population is {n}")]
    Overcount {
        agent: usize,
        counted: u64,
        n: usize,
    },
}

/// One agent's reward tagged with its unique id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardPacket {
    pub agent_id: usize,
    pub reward: f64,
}

/// Set of reward packets held by one agent, keyed by agent id.
///
/// Packets are immutable once broadcast, so the set stores only the ids it
/// has seen; the reward carried by packet `id` is looked up in the round's
/// broadcast table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardSet {
    words: Vec<u64>,
}

impl RewardSet {
    pub fn singleton(agent_id: usize, n: usize) -> Self {
        let mut set = Self {
            words: vec![0; n.div_ceil(64)],
        };
        set.words[agent_id / 64] |= 1 << (agent_id % 64);
        set
    }

    pub fn contains(&self, agent_id: usize) -> bool {
        self.words[agent_id / 64] & (1 << (agent_id % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn union_with(&mut self, other: &RewardSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn is_superset(&self, other: &RewardSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == *b)
    }

    /// Ids in increasing order.
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits & (1 << b) != 0)
                .map(move |b| w * 64 + b)
        })
    }

    pub fn packets<'a>(&'a self, rewards: &'a [f64]) -> impl Iterator<Item = RewardPacket> + 'a {
        self.ids().map(|agent_id| RewardPacket {
            agent_id,
            reward: rewards[agent_id],
        })
    }

    /// Mean reward over the held packets, summed in id order.
    pub fn mean(&self, rewards: &[f64]) -> f64 {
        let (sum, count) = self
            .packets(rewards)
            .fold((0.0, 0usize), |(s, c), p| (s + p.reward, c + 1));
        sum / count as f64
    }
}

/// Reward sets held by each agent after `rounds` gossip rounds.
pub fn gossip_reward_sets(graph: &CommGraph, rounds: usize) -> Vec<RewardSet> {
    let n = graph.len();
    let mut sets: Vec<RewardSet> = (0..n).map(|i| RewardSet::singleton(i, n)).collect();
    for _ in 0..rounds {
        let broadcast = sets.clone();
        let mut changed = false;
        for (i, set) in sets.iter_mut().enumerate() {
            for &j in graph.neighbours(i) {
                set.union_with(&broadcast[j]);
            }
            changed |= *set != broadcast[i];
        }
        if !changed {
            break;
        }
    }
    sets
}

/// Each agent's estimate of the population-average reward: the mean over
/// the packets collected from its `rounds`-hop neighbourhood.
pub fn estimate_average_reward(rewards: &[f64], graph: &CommGraph, rounds: usize) -> Vec<f64> {
    assert_eq!(rewards.len(), graph.len(), "one reward per agent");
    gossip_reward_sets(graph, rounds)
        .iter()
        .map(|set| set.mean(rewards))
        .collect()
}

/// Per-round reward-set sizes as CSV (`round,agent_id,set_size`), for
/// tracing the protocol.
pub fn reward_gossip_trace_csv(graph: &CommGraph, rounds: usize) -> String {
    let mut out = String::from("round,agent_id,set_size\n");
    for round in 0..=rounds {
        for (i, set) in gossip_reward_sets(graph, round).iter().enumerate() {
            out.push_str(&format!("{round},{i},{}\n", set.len()));
        }
    }
    out
}

/// Per-state counts known to one agent; `None` marks a state it has no
/// count for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    pub counts: Vec<Option<u32>>,
}

impl CountVector {
    pub fn unknown(num_states: usize) -> Self {
        Self {
            counts: vec![None; num_states],
        }
    }

    /// Exact counts for every state visible from `own_state`.
    pub fn from_visibility(own_state: usize, vis: &VisGraph, occupancy: &[u32]) -> Self {
        let mut v = Self::unknown(vis.num_states());
        for &s in vis.visible_from(own_state) {
            v.counts[s] = Some(occupancy[s]);
        }
        v
    }

    pub fn is_complete(&self) -> bool {
        self.counts.iter().all(Option::is_some)
    }

    pub fn known_states(&self) -> usize {
        self.counts.iter().filter(|c| c.is_some()).count()
    }

    /// Fills unknown entries from `other`; known entries must agree.
    pub fn merge(&mut self, other: &CountVector) -> Result<(), EstimationError> {
        for (state, (mine, theirs)) in self.counts.iter_mut().zip(&other.counts).enumerate() {
            match (*mine, *theirs) {
                (_, None) => {}
                (None, Some(c)) => *mine = Some(c),
                (Some(a), Some(b)) if a != b => {
                    return Err(EstimationError::InconsistentCount {
                        state,
                        first: a,
                        second: b,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Known counts divided by `n`; uncounted agents spread evenly over the
    /// unknown states.
    pub fn to_mean_field(&self, n: usize, agent: usize) -> Result<MeanField, EstimationError> {
        let counted: u64 = self.counts.iter().flatten().map(|&c| c as u64).sum();
        if counted > n as u64 {
            return Err(EstimationError::Overcount { agent, counted, n });
        }
        let unseen = self.counts.len() - self.known_states();
        let nf = n as f64;
        let fill = if unseen > 0 {
            (n as u64 - counted) as f64 / (nf * unseen as f64)
        } else {
            0.0
        };
        let probs = self
            .counts
            .iter()
            .map(|c| match c {
                Some(c) => *c as f64 / nf,
                None => fill,
            })
            .collect();
        Ok(MeanField::from_probs(probs))
    }
}

/// Count vectors held by each agent after `rounds` rounds of exchange.
pub fn gossip_count_vectors(
    positions: &[AgentState],
    grid: GridSpec,
    vis: &VisGraph,
    comm: &CommGraph,
    rounds: usize,
) -> Result<Vec<CountVector>, EstimationError> {
    let occ = occupancy(positions, grid);
    let mut vectors: Vec<CountVector> = positions
        .iter()
        .map(|&s| CountVector::from_visibility(grid.index(s), vis, &occ))
        .collect();
    for _ in 0..rounds {
        let broadcast = vectors.clone();
        for (i, v) in vectors.iter_mut().enumerate() {
            for &j in comm.neighbours(i) {
                if v.is_complete() {
                    break;
                }
                v.merge(&broadcast[j])?;
            }
        }
    }
    Ok(vectors)
}

/// Each agent's estimate of the global empirical mean field.
pub fn estimate_mean_field(
    positions: &[AgentState],
    grid: GridSpec,
    vis: &VisGraph,
    comm: &CommGraph,
    rounds: usize,
) -> Result<Vec<MeanField>, EstimationError> {
    let n = positions.len();
    gossip_count_vectors(positions, grid, vis, comm, rounds)?
        .iter()
        .enumerate()
        .map(|(i, v)| v.to_mean_field(n, i))
        .collect()
}
