//! Fully connected Q-network with rectified hidden layers and a linear
//! readout, trained by hand-written backpropagation.

use std::io::{self, BufRead, Write};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::LearnerError;

/// One affine layer; `weights` is `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

/// Parameters of a Q-network, or a gradient with the same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct QParams {
    pub layers: Vec<Dense>,
}

impl QParams {
    /// Uniform initialisation in `±1/√fan_in` for weights and biases.
    pub fn init<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        assert!(
            widths.len() >= 2,
            "a network needs at least an input and output width"
        );
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut layer = Dense::zeros(w[0], w[1]);
                layer
                    .weights
                    .mapv_inplace(|_| rng.random_range(-bound..bound));
                layer.bias.mapv_inplace(|_| rng.random_range(-bound..bound));
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(widths: &[usize]) -> Self {
        Self {
            layers: widths
                .windows(2)
                .map(|w| Dense::zeros(w[0], w[1]))
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.widths())
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut widths = vec![self.layers[0].fan_in()];
        widths.extend(self.layers.iter().map(Dense::fan_out));
        widths
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Every parameter tensor as a flat slice, in layer order (weights then bias).
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| {
            [
                l.weights.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| {
            [
                l.weights.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }

    fn check_input(&self, width: usize) -> Result<(), LearnerError> {
        if width != self.input_width() {
            return Err(LearnerError::ShapeMismatch {
                expected: self.input_width(),
                got: width,
            });
        }
        Ok(())
    }

    /// Q-values for one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, LearnerError> {
        self.check_input(input.len())?;
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.to_vec();
            for (xi, row) in x.iter().zip(layer.weights.rows()) {
                if *xi == 0.0 {
                    continue;
                }
                for (zj, wij) in z.iter_mut().zip(row) {
                    *zj += xi * wij;
                }
            }
            if li < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            x = z;
        }
        Ok(x)
    }

    /// Q-values for a batch of inputs, one per row.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>, LearnerError> {
        Ok(self.forward_cached(inputs)?.pop().unwrap())
    }

    /// Post-activation outputs of every layer (the last is the linear readout).
    fn forward_cached(
        &self,
        inputs: ArrayView2<'_, f64>,
    ) -> Result<Vec<Array2<f64>>, LearnerError> {
        self.check_input(inputs.ncols())?;
        let last = self.layers.len() - 1;
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let x = if li == 0 { inputs } else { acts[li - 1].view() };
            let mut z = Array2::zeros((x.nrows(), layer.fan_out()));
            z.assign(&layer.bias.broadcast((x.nrows(), layer.fan_out())).unwrap());
            general_mat_mul(1.0, &x, &layer.weights, 1.0, &mut z);
            if li < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Weighted squared TD error `Σ_r w_r (Q(x_r, a_r) − T_r)²` and its
    /// gradient with respect to every parameter.
    pub fn loss_and_grad(
        &self,
        inputs: ArrayView2<'_, f64>,
        actions: &[usize],
        targets: &[f64],
        weights: &[f64],
    ) -> Result<(f64, QParams), LearnerError> {
        let rows = inputs.nrows();
        assert!(actions.len() == rows && targets.len() == rows && weights.len() == rows);
        let acts = self.forward_cached(inputs)?;
        let q = acts.last().unwrap();

        let mut loss = 0.0;
        let mut delta = Array2::<f64>::zeros(q.raw_dim());
        for r in 0..rows {
            let err = q[[r, actions[r]]] - targets[r];
            loss += weights[r] * err * err;
            delta[[r, actions[r]]] = 2.0 * weights[r] * err;
        }

        let mut grads = self.zeros_like();
        for li in (0..self.layers.len()).rev() {
            let x = if li == 0 { inputs } else { acts[li - 1].view() };
            let g = &mut grads.layers[li];
            general_mat_mul(1.0, &x.t(), &delta, 0.0, &mut g.weights);
            g.bias = delta.sum_axis(Axis(0));
            if li > 0 {
                let mut upstream = Array2::zeros((rows, self.layers[li].fan_in()));
                general_mat_mul(
                    1.0,
                    &delta,
                    &self.layers[li].weights.t(),
                    0.0,
                    &mut upstream,
                );
                // Rectifier derivative: pass gradient only where the unit fired.
                ndarray::Zip::from(&mut upstream)
                    .and(&acts[li - 1])
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    });
                delta = upstream;
            }
        }
        Ok((loss, grads))
    }

    /// Text dump: a shape header per layer followed by one value per line
    /// at 17 significant digits, which round-trips bit-exactly.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "qparams {}", self.layers.len())?;
        for layer in &self.layers {
            writeln!(out, "layer {} {}", layer.fan_in(), layer.fan_out())?;
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                writeln!(out, "{v:.16e}")?;
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self, LearnerError> {
        let mut lines = input.lines();
        let mut next = || -> Result<String, LearnerError> {
            lines
                .next()
                .ok_or_else(|| LearnerError::Checkpoint("unexpected end of file".into()))?
                .map_err(|e| LearnerError::Checkpoint(e.to_string()))
        };
        let header = next()?;
        let count: usize = header
            .strip_prefix("qparams ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| LearnerError::Checkpoint(format!("bad header '{header}'")))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let shape = next()?;
            let dims: Vec<usize> = shape
                .strip_prefix("layer ")
                .map(|s| {
                    s.split_whitespace()
                        .filter_map(|d| d.parse().ok())
                        .collect()
                })
                .unwrap_or_default();
            if dims.len() != 2 {
                return Err(LearnerError::Checkpoint(format!(
                    "bad layer header '{shape}'"
                )));
            }
            let mut layer = Dense::zeros(dims[0], dims[1]);
            for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                let line = next()?;
                *v = line
                    .trim()
                    .parse()
                    .map_err(|_| LearnerError::Checkpoint(format!("bad value '{line}'")))?;
            }
            layers.push(layer);
        }
        Ok(Self { layers })
    }
}
