use crate::env::{AgentState, GridSpec, MeanField};

/// Network input: one-hot row, one-hot column, then a flattened mean field
/// (or zeros when agents are denied the population's distribution).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
    height: usize,
    width: usize,
}

impl Observation {
    pub fn width_for(grid: GridSpec) -> usize {
        grid.height + grid.width + grid.num_states()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row_onehot(&self) -> &[f64] {
        &self.values[..self.height]
    }

    pub fn col_onehot(&self) -> &[f64] {
        &self.values[self.height..self.height + self.width]
    }

    pub fn mf_part(&self) -> &[f64] {
        &self.values[self.height + self.width..]
    }
}

/// Encodes an agent's cell and, if given, a mean field; `None` yields a zero
/// mean-field block.
pub fn encode_observation(s: AgentState, mf: Option<&MeanField>, grid: GridSpec) -> Observation {
    let mut values = vec![0.0; Observation::width_for(grid)];
    values[s.row] = 1.0;
    values[grid.height + s.col] = 1.0;
    if let Some(mf) = mf {
        debug_assert_eq!(mf.len(), grid.num_states());
        values[grid.height + grid.width..].copy_from_slice(mf.probs());
    }
    Observation {
        values,
        height: grid.height,
        width: grid.width,
    }
}
