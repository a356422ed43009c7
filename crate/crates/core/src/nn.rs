//! Minimal feedforward networks with manual backpropagation.
//!
//! Parameters live in one flat `Vec<f64>` per network (row-major weight
//! matrices followed by biases, layer by layer), which keeps the
//! optimizer, gradient clipping, checkpointing and finite-difference
//! checks trivial. Hidden layers use ReLU; outputs are linear.

use serde::{Deserialize, Serialize};

use crate::error::{GdplError, Result};
use crate::rng::Rng;
use rand::Rng as _;

/// Fully connected network; `sizes` = [input, hidden..., output].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Cached activations from a forward pass, needed for backprop.
pub struct Activations {
    /// Pre-activation values per layer (post-activation is relu of this
    /// for hidden layers, identity for the last).
    pre: Vec<Vec<f64>>,
    /// Post-activation values per layer.
    post: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("at least one layer")
    }
}

impl Mlp {
    /// Xavier-uniform initialized network.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Mlp> {
        if sizes.len() < 2 || sizes.iter().any(|s| *s == 0) {
            return Err(GdplError::Validation(format!(
                "network sizes must list >= 2 positive dims, got {sizes:?}"
            )));
        }
        let mut params = Vec::with_capacity(param_count(sizes));
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for _ in 0..n_in * n_out {
                params.push(rng.gen_range(-limit..limit));
            }
            params.extend(std::iter::repeat(0.0).take(n_out));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().expect("sizes nonempty")
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.sizes)
    }

    /// (weight offset, bias offset) of layer `l` in the flat vector.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for k in 0..l {
            off += self.sizes[k] * self.sizes[k + 1] + self.sizes[k + 1];
        }
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    /// Plain forward pass.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = self.forward_cached(x);
        acts.post.pop().expect("at least one layer")
    }

    /// Forward pass keeping everything backprop needs.
    pub fn forward_cached(&self, x: &[f64]) -> Activations {
        assert_eq!(x.len(), self.n_in(), "input dim mismatch");
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            let z = {
                let input: &[f64] = if l == 0 { x } else { &post[l - 1] };
                let mut z = vec![0.0; n_out];
                for j in 0..n_out {
                    let row = &self.params[w_off + j * n_in..w_off + (j + 1) * n_in];
                    let mut acc = self.params[b_off + j];
                    for (wi, xi) in row.iter().zip(input.iter()) {
                        acc += wi * xi;
                    }
                    z[j] = acc;
                }
                z
            };
            let a = if l + 1 == self.n_layers() {
                z.clone()
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            pre.push(z);
            post.push(a);
        }
        Activations { pre, post }
    }

    /// Backpropagate `d_out` (dL/d output) through the cached pass,
    /// accumulating parameter gradients into `grads` (same layout as
    /// `params`) and returning dL/d input.
    pub fn backprop(
        &self,
        x: &[f64],
        acts: &Activations,
        d_out: &[f64],
        grads: &mut [f64],
    ) -> Vec<f64> {
        assert_eq!(grads.len(), self.params.len(), "gradient layout mismatch");
        assert_eq!(d_out.len(), self.n_out(), "output grad dim mismatch");
        let mut delta = d_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            let input: &[f64] = if l == 0 { x } else { &acts.post[l - 1] };
            // Hidden layers: gate the incoming delta by ReLU'.
            if l + 1 != self.n_layers() {
                for (d, z) in delta.iter_mut().zip(acts.pre[l].iter()) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            for j in 0..n_out {
                let dj = delta[j];
                if dj != 0.0 {
                    let row = &mut grads[w_off + j * n_in..w_off + (j + 1) * n_in];
                    for (g, xi) in row.iter_mut().zip(input.iter()) {
                        *g += dj * xi;
                    }
                }
                grads[b_off + j] += dj;
            }
            if l > 0 {
                let mut prev = vec![0.0; n_in];
                for j in 0..n_out {
                    let dj = delta[j];
                    if dj != 0.0 {
                        let row = &self.params[w_off + j * n_in..w_off + (j + 1) * n_in];
                        for (p, wi) in prev.iter_mut().zip(row.iter()) {
                            *p += dj * wi;
                        }
                    }
                }
                delta = prev;
            } else {
                let mut dx = vec![0.0; n_in];
                for j in 0..n_out {
                    let dj = delta[j];
                    if dj != 0.0 {
                        let row = &self.params[w_off + j * n_in..w_off + (j + 1) * n_in];
                        for (p, wi) in dx.iter_mut().zip(row.iter()) {
                            *p += dj * wi;
                        }
                    }
                }
                return dx;
            }
        }
        unreachable!("loop returns at layer 0")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}

/// Adam with bias correction and optional decoupled L2 on the gradient.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64, n_params: usize) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "optimizer/params mismatch");
        assert_eq!(params.len(), grads.len(), "grads/params mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i] + self.weight_decay * params[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Scale `grads` down to `max_norm` if their global L2 norm exceeds it;
/// returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Numerically stable ln(1 + e^z).
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
