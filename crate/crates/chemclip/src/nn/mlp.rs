//! Feed-forward stack: affine -> rectifier -> inverted dropout per hidden
//! layer, final layer affine only. Backward is exact reverse mode.

use super::{Matrix, NnError};
use crate::rng::SplitMix64;

/// One affine layer. Weights are stored input-major (in_dim x out_dim) so a
/// batch forward is `x @ w` and sparse inputs skip work.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Linear {
    pub fn in_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub dropout: f64,
}

impl Mlp {
    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Linear::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::out_dim)
    }

    /// Layer dimension chain, e.g. [2048, 512, 256].
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.in_dim()];
        dims.extend(self.layers.iter().map(Linear::out_dim));
        dims
    }

    /// Affine-rectifier-dropout forward pass. With `training` off, dropout
    /// is skipped entirely and the rng is never touched.
    pub fn forward(
        &self,
        input: &Matrix,
        training: bool,
        rng: &mut SplitMix64,
    ) -> Result<(Matrix, ForwardCache), NnError> {
        if input.cols() != self.in_dim() {
            return Err(NnError::DimensionMismatch {
                context: "mlp forward input",
                expected: self.in_dim(),
                got: input.cols(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut grad_masks = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut h = x.matmul(&layer.w);
            for r in 0..h.rows() {
                let row = h.row_mut(r);
                for (v, b) in row.iter_mut().zip(&layer.b) {
                    *v += b;
                }
            }
            inputs.push(x);
            if li == last {
                grad_masks.push(None);
                x = h;
            } else {
                // Combined rectifier/dropout mask: equals d(output)/d(pre-act)
                // entry-wise, and output = pre-act * mask.
                let keep = 1.0 - self.dropout;
                let mut mask = Matrix::zeros(h.rows(), h.cols());
                for i in 0..h.rows() {
                    let h_row = h.row(i);
                    let m_row = mask.row_mut(i);
                    for j in 0..h_row.len() {
                        let relu_open = h_row[j] > 0.0;
                        let scale = if training && self.dropout > 0.0 {
                            // Inverted dropout: kept units scaled by 1/keep.
                            if rng.chance(keep) {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        } else {
                            1.0
                        };
                        m_row[j] = if relu_open { scale } else { 0.0 };
                    }
                }
                let mut out = h;
                for (v, m) in out.data_mut().iter_mut().zip(mask.data()) {
                    *v *= m;
                }
                grad_masks.push(Some(mask));
                x = out;
            }
        }
        Ok((
            x,
            ForwardCache {
                inputs,
                grad_masks,
            },
        ))
    }

    /// Reverse-mode gradients for one forward pass. Returns per-layer
    /// parameter gradients (same order as `layers`) and the gradient with
    /// respect to the forward input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &Matrix,
    ) -> Result<(Vec<LinearGrads>, Matrix), NnError> {
        let (grads, dx) = self.backward_impl(cache, upstream, true)?;
        Ok((grads, dx.expect("input gradient requested")))
    }

    /// Like [`Mlp::backward`] but without the gradient with respect to the
    /// forward input. Skipping that last product matters: against a wide
    /// sparse input layer it is the single largest dense matmul of a
    /// training step, and optimizers never use it.
    pub fn backward_params(
        &self,
        cache: &ForwardCache,
        upstream: &Matrix,
    ) -> Result<Vec<LinearGrads>, NnError> {
        Ok(self.backward_impl(cache, upstream, false)?.0)
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        upstream: &Matrix,
        input_grad: bool,
    ) -> Result<(Vec<LinearGrads>, Option<Matrix>), NnError> {
        if upstream.cols() != self.out_dim() {
            return Err(NnError::DimensionMismatch {
                context: "mlp backward upstream",
                expected: self.out_dim(),
                got: upstream.cols(),
            });
        }
        let mut grads: Vec<LinearGrads> = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        let mut dx = None;
        for li in (0..self.layers.len()).rev() {
            // Through the rectifier/dropout of hidden layers: multiply by the
            // cached mask (it is exactly d out/d pre-act).
            if let Some(mask) = &cache.grad_masks[li] {
                for (gv, m) in g.data_mut().iter_mut().zip(mask.data()) {
                    *gv *= m;
                }
            }
            let x = &cache.inputs[li];
            let dw = x.matmul_tn(&g);
            let mut db = vec![0.0; self.layers[li].out_dim()];
            for r in 0..g.rows() {
                for (acc, &v) in db.iter_mut().zip(g.row(r)) {
                    *acc += v;
                }
            }
            // Input gradient feeds the next (earlier) layer; at the first
            // layer it is only needed when the caller asked for it.
            if li > 0 {
                g = g.matmul_nt(&self.layers[li].w);
            } else if input_grad {
                dx = Some(g.matmul_nt(&self.layers[li].w));
            }
            grads.push(LinearGrads { dw, db });
        }
        grads.reverse();
        Ok((grads, dx))
    }
}

/// Per-layer inputs and combined rectifier/dropout masks retained for
/// backward.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Matrix>,
    grad_masks: Vec<Option<Matrix>>,
}

/// Gradients for one affine layer.
#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub dw: Matrix,
    pub db: Vec<f64>,
}

/// Divide each row by max(its L2 norm, 1e-12). All-zero rows stay zero.
pub fn l2_normalize_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = norm.max(1e-12);
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    out
}

/// Exact Jacobian-vector product for [`l2_normalize_rows`]:
/// dx = (g - y (g . y)) / ||x||, with zero rows contributing zero gradient.
pub fn l2_normalize_rows_backward(input: &Matrix, upstream: &Matrix) -> Matrix {
    assert_eq!(input.rows(), upstream.rows());
    assert_eq!(input.cols(), upstream.cols());
    let mut out = Matrix::zeros(input.rows(), input.cols());
    for r in 0..input.rows() {
        let x = input.row(r);
        let g = upstream.row(r);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue; // documented degenerate case: zero row, zero gradient
        }
        let y: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let g_dot_y: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
        let o = out.row_mut(r);
        for j in 0..x.len() {
            o[j] = (g[j] - y[j] * g_dot_y) / norm;
        }
    }
    out
}

/// Glorot-uniform initialization: weights in ±sqrt(6/(fan_in+fan_out)),
/// biases zero, drawn from a splitmix64 stream.
pub fn init_mlp(dims: &[usize], dropout: f64, seed: u64) -> Mlp {
    assert!(dims.len() >= 2, "need at least input and output dims");
    let mut rng = SplitMix64::new(seed);
    let layers = dims
        .windows(2)
        .map(|io| {
            let (fan_in, fan_out) = (io[0], io[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform(-bound, bound))
                .collect();
            Linear {
                w: Matrix::from_vec(fan_in, fan_out, data),
                b: vec![0.0; fan_out],
            }
        })
        .collect();
    Mlp { layers, dropout }
}
