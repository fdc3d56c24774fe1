//! The surrogate network: a feed-forward stack with tanh hidden layers and
//! identity residual skips between the equal-width hidden layers, plus
//! hand-rolled reverse-mode differentiation.
//!
//! Layout for depth d:
//!
//! ```text
//! h_0 = tanh(W_0 x + b_0)                      (input_dim -> width)
//! h_k = tanh(W_k h_{k-1} + b_k) + h_{k-1}      (k = 1 .. d-1, width -> width)
//! y   = W_out h_{d-1} + b_out                  (width -> output_dim)
//! ```
//!
//! The network stores per-feature normalization for inputs and targets.
//! Inputs are fed already normalized; outputs are denormalized before they
//! leave the network.

use super::matmul::{matmul_nn, matmul_nt, matmul_tn};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(input_dim: usize, output_dim: usize) -> Self {
        Normalization {
            input_mean: vec![0.0; input_dim],
            input_scale: vec![1.0; input_dim],
            target_mean: vec![0.0; output_dim],
            target_scale: vec![1.0; output_dim],
        }
    }

    pub fn normalize_input(&self, raw: &[f64], out: &mut [f64]) {
        for ((o, &x), (&m, &s)) in out
            .iter_mut()
            .zip(raw)
            .zip(self.input_mean.iter().zip(&self.input_scale))
        {
            *o = (x - m) / s;
        }
    }

    pub fn denormalize_target(&self, normed: &[f64], out: &mut [f64]) {
        for ((o, &y), (&m, &s)) in out
            .iter_mut()
            .zip(normed)
            .zip(self.target_mean.iter().zip(&self.target_scale))
        {
            *o = y * s + m;
        }
    }

    pub fn normalize_target(&self, raw: &[f64], out: &mut [f64]) {
        for ((o, &y), (&m, &s)) in out
            .iter_mut()
            .zip(raw)
            .zip(self.target_mean.iter().zip(&self.target_scale))
        {
            *o = (y - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Row-major (out_dim x in_dim).
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Dense {
    fn xavier(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Dense {
            w,
            b: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    /// y[batch x out] = x[batch x in] * W^T + b
    fn forward_batch(&self, x: &[f64], y: &mut [f64], batch: usize) {
        matmul_nt(x, &self.w, y, batch, self.out_dim, self.in_dim);
        for row in y.chunks_exact_mut(self.out_dim) {
            for (v, &bi) in row.iter_mut().zip(&self.b) {
                *v += bi;
            }
        }
    }
}

/// Gradients for every parameter, aligned with the layer order
/// `hidden[0..depth], out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &SurrogateNetwork) -> Self {
        let mut layers: Vec<(Vec<f64>, Vec<f64>)> = net
            .hidden
            .iter()
            .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
            .collect();
        layers.push((vec![0.0; net.out.w.len()], vec![0.0; net.out.b.len()]));
        Gradients { layers }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            for v in w.iter_mut() {
                *v *= factor;
            }
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
    }
}

/// Reusable forward/backward buffers for a fixed batch size.
pub struct Scratch {
    batch: usize,
    /// tanh outputs a_k, one buffer per hidden layer (batch x width).
    acts: Vec<Vec<f64>>,
    /// Skip-accumulated hidden states h_k (batch x width).
    hiddens: Vec<Vec<f64>>,
    /// Normalized-space network output (batch x output_dim).
    pub out: Vec<f64>,
    /// Work buffers for backprop (batch x width).
    dh: Vec<f64>,
    dz: Vec<f64>,
}

impl Scratch {
    pub fn new(net: &SurrogateNetwork, batch: usize) -> Self {
        Scratch {
            batch,
            acts: (0..net.depth).map(|_| vec![0.0; batch * net.width]).collect(),
            hiddens: (0..net.depth).map(|_| vec![0.0; batch * net.width]).collect(),
            out: vec![0.0; batch * net.output_dim],
            dh: vec![0.0; batch * net.width],
            dz: vec![0.0; batch * net.width],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateNetwork {
    pub input_dim: usize,
    pub output_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub(crate) hidden: Vec<Dense>,
    pub(crate) out: Dense,
    pub(crate) norm: Normalization,
    pub(crate) trained: bool,
}

impl SurrogateNetwork {
    /// Fresh network with Xavier-uniform weights, zero biases, and identity
    /// normalization. `output_dim` must be even (outputs are 2D vectors).
    pub fn new(input_dim: usize, output_dim: usize, depth: usize, width: usize, seed: u64) -> Self {
        assert!(depth >= 1, "depth must be at least 1");
        assert!(width >= 1 && input_dim >= 1);
        assert!(output_dim >= 2 && output_dim % 2 == 0, "output is 2D vectors");
        let mut rng = crate::seed::rng(seed, "surrogate-init");
        let mut hidden = Vec::with_capacity(depth);
        hidden.push(Dense::xavier(input_dim, width, &mut rng));
        for _ in 1..depth {
            hidden.push(Dense::xavier(width, width, &mut rng));
        }
        let out = Dense::xavier(width, output_dim, &mut rng);
        SurrogateNetwork {
            input_dim,
            output_dim,
            depth,
            width,
            hidden,
            out,
            norm: Normalization::identity(input_dim, output_dim),
            trained: false,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub(crate) fn set_normalization(&mut self, norm: Normalization) {
        assert_eq!(norm.input_mean.len(), self.input_dim);
        assert_eq!(norm.target_mean.len(), self.output_dim);
        self.norm = norm;
    }

    pub(crate) fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn n_params(&self) -> usize {
        self.hidden
            .iter()
            .map(|l| l.w.len() + l.b.len())
            .sum::<usize>()
            + self.out.w.len()
            + self.out.b.len()
    }

    /// Core pass on normalized inputs; leaves the normalized-space output in
    /// `scratch.out`.
    pub(crate) fn forward_core(&self, x_norm: &[f64], scratch: &mut Scratch) {
        let batch = scratch.batch;
        assert_eq!(x_norm.len(), batch * self.input_dim);
        for k in 0..self.depth {
            // Split so the previous hidden buffer can be read while the
            // current one is written.
            let (prev_h, rest_h) = scratch.hiddens.split_at_mut(k);
            let h_k = &mut rest_h[0];
            let a_k = &mut scratch.acts[k];
            let input: &[f64] = if k == 0 { x_norm } else { &prev_h[k - 1] };
            self.hidden[k].forward_batch(input, a_k, batch);
            for v in a_k.iter_mut() {
                *v = v.tanh();
            }
            if k == 0 {
                h_k.copy_from_slice(a_k);
            } else {
                for ((h, &a), &hp) in h_k.iter_mut().zip(a_k.iter()).zip(prev_h[k - 1].iter()) {
                    *h = a + hp;
                }
            }
        }
        self.out
            .forward_batch(&scratch.hiddens[self.depth - 1], &mut scratch.out, batch);
    }

    /// Deterministic forward pass. Takes an already normalized input of
    /// length `input_dim`, returns the denormalized prediction.
    pub fn forward(&self, input_normalized: &[f64]) -> Result<Vec<f64>> {
        if input_normalized.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: input_normalized.len(),
            });
        }
        let mut scratch = Scratch::new(self, 1);
        self.forward_core(input_normalized, &mut scratch);
        let mut out = vec![0.0; self.output_dim];
        self.norm.denormalize_target(&scratch.out, &mut out);
        Ok(out)
    }

    /// Backpropagate `d_out` (gradient of a loss with respect to the
    /// normalized-space output) through the network, accumulating parameter
    /// gradients for the whole batch into `grads`.
    /// `forward_core` must have been called with the same `x_norm`/`scratch`.
    pub(crate) fn backward_core(
        &self,
        x_norm: &[f64],
        scratch: &mut Scratch,
        d_out: &[f64],
        grads: &mut Gradients,
    ) {
        let batch = scratch.batch;
        assert_eq!(d_out.len(), batch * self.output_dim);
        let last = self.depth - 1;

        // Output layer.
        {
            let (gw, gb) = &mut grads.layers[self.depth];
            matmul_tn(
                d_out,
                &scratch.hiddens[last],
                gw,
                self.output_dim,
                self.width,
                batch,
            );
            bias_grad(d_out, gb, batch, self.output_dim);
        }
        // dh_last = d_out * W_out
        matmul_nn(
            d_out,
            &self.out.w,
            &mut scratch.dh[..batch * self.width],
            batch,
            self.width,
            self.output_dim,
        );

        for k in (0..self.depth).rev() {
            // dz_k = dh_k o tanh'(a_k); tanh' = 1 - a^2.
            for ((dz, &dh), &a) in scratch
                .dz
                .iter_mut()
                .zip(scratch.dh.iter())
                .zip(scratch.acts[k].iter())
            {
                *dz = dh * (1.0 - a * a);
            }
            let input: &[f64] = if k == 0 { x_norm } else { &scratch.hiddens[k - 1] };
            let in_dim = self.hidden[k].in_dim;
            {
                let (gw, gb) = &mut grads.layers[k];
                matmul_tn(&scratch.dz, input, gw, self.width, in_dim, batch);
                bias_grad(&scratch.dz, gb, batch, self.width);
            }
            if k > 0 {
                // dh_{k-1} = dz_k * W_k + dh_k (identity skip).
                let mut dprev = vec![0.0; batch * in_dim];
                matmul_nn(&scratch.dz, &self.hidden[k].w, &mut dprev, batch, in_dim, self.width);
                for (dp, &dh) in dprev.iter_mut().zip(scratch.dh.iter()) {
                    *dp += dh;
                }
                scratch.dh[..batch * in_dim].copy_from_slice(&dprev);
            }
        }
    }
}

fn bias_grad(d: &[f64], gb: &mut [f64], batch: usize, dim: usize) {
    gb.fill(0.0);
    for row in d.chunks_exact(dim).take(batch) {
        for (g, &v) in gb.iter_mut().zip(row) {
            *g += v;
        }
    }
}

/// Versioned JSON weights container.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub format_version: u32,
    pub input_dim: usize,
    pub output_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub normalization: Normalization,
    /// Row-major weight matrices and biases: hidden layers first, output last.
    pub layers: Vec<LayerWeights>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerWeights {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

impl WeightsFile {
    pub fn from_network(net: &SurrogateNetwork) -> Self {
        let mut layers: Vec<LayerWeights> = net
            .hidden
            .iter()
            .map(|l| LayerWeights {
                w: l.w.clone(),
                b: l.b.clone(),
            })
            .collect();
        layers.push(LayerWeights {
            w: net.out.w.clone(),
            b: net.out.b.clone(),
        });
        WeightsFile {
            format_version: WEIGHTS_FORMAT_VERSION,
            input_dim: net.input_dim,
            output_dim: net.output_dim,
            depth: net.depth,
            width: net.width,
            normalization: net.norm.clone(),
            layers,
        }
    }

    /// Rebuild a trained network. Dimension and version checks are strict.
    pub fn into_network(self) -> Result<SurrogateNetwork> {
        if self.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::WeightsVersion {
                expected: WEIGHTS_FORMAT_VERSION,
                got: self.format_version,
            });
        }
        if self.layers.len() != self.depth + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.depth + 1,
                got: self.layers.len(),
            });
        }
        let mut net = SurrogateNetwork::new(self.input_dim, self.output_dim, self.depth, self.width, 0);
        for (k, lw) in self.layers.into_iter().enumerate() {
            let target = if k < net.depth {
                &mut net.hidden[k]
            } else {
                &mut net.out
            };
            if lw.w.len() != target.w.len() || lw.b.len() != target.b.len() {
                return Err(Error::DimensionMismatch {
                    expected: target.w.len(),
                    got: lw.w.len(),
                });
            }
            target.w = lw.w;
            target.b = lw.b;
        }
        net.set_normalization(self.normalization);
        net.mark_trained();
        Ok(net)
    }
}
