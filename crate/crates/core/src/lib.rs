//! Online learning of cooperative mean-field control by a finite population
//! of agents on a grid, from a single non-episodic run of the system.
//!
//! Three architectures share one simulator: networked agents that estimate
//! global quantities and exchange policies over a radius-based time-varying
//! graph, a central agent that learns alone and pushes its policy to
//! everyone, and fully independent learners.

pub mod env;
pub mod estimation;
pub mod exchange;
pub mod learner;
pub mod netgraph;
pub mod orchestrator;
pub mod system;
