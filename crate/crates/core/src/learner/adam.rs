use super::qnet::QParams;

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: QParams,
    second: QParams,
}

impl Adam {
    pub fn new(params: &QParams, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn apply(&mut self, params: &mut QParams, grads: &QParams) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let correction1 = 1.0 - b1.powi(self.step as i32);
        let correction2 = 1.0 - b2.powi(self.step as i32);
        let step_size = self.learning_rate / correction1;
        let tensors = params
            .tensors_mut()
            .zip(grads.tensors())
            .zip(self.first.tensors_mut().zip(self.second.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= step_size * m[i] / ((v[i] / correction2).sqrt() + eps);
            }
        }
    }
}
