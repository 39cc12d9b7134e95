//! AdamW with decoupled weight decay, plus global gradient-norm clipping.

/// AdamW optimizer state for a fixed set of parameter tensors.
///
/// Weight decay is decoupled: each step first shrinks the weight by
/// `lr * weight_decay * w`, then applies the bias-corrected Adam update.
#[derive(Debug, Clone)]
pub struct AdamWState {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamWState {
    /// `param_sizes` fixes the number and length of the tensors that every
    /// subsequent [`step`](Self::step) call must supply, in the same order.
    pub fn new(param_sizes: &[usize], lr: f64, weight_decay: f64) -> Self {
        AdamWState {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update in place. Panics if the tensor layout differs from
    /// the one given at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len(), "parameter tensor count");
        assert_eq!(grads.len(), self.m.len(), "gradient tensor count");
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (ti, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(p.len(), self.m[ti].len(), "tensor {ti} length");
            assert_eq!(g.len(), self.m[ti].len(), "gradient {ti} length");
            let m = &mut self.m[ti];
            let v = &mut self.v[ti];
            for i in 0..p.len() {
                p[i] -= self.lr * self.weight_decay * p[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Scale all gradients so their concatenated L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm
}
