//! Mini-batch SGD with momentum for the surrogate.
//!
//! The reported loss is always the combined raw-force loss from
//! [`super::loss`]. The update direction uses the standardized residual for
//! the squared-error term (training on raw forces stalls: the
//! nondimensional force magnitudes are tiny) plus the raw-space cosine
//! gradient; both arrive at the output layer through the target scale.

use super::data::ForceDataset;
use super::net::{Gradients, Scratch, SurrogateNetwork};
use super::{loss, loss_grad_pred, LossWeights};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub w_mse: f64,
    pub w_cos: f64,
    pub depth: usize,
    pub width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 64,
            epochs: 10,
            seed: 42,
            w_mse: 1.0,
            w_cos: 1.0,
            depth: 3,
            width: 256,
        }
    }
}

impl TrainConfig {
    pub fn weights(&self) -> LossWeights {
        LossWeights {
            w_mse: self.w_mse,
            w_cos: self.w_cos,
        }
    }

    fn validate(&self) -> Result<()> {
        assert!(self.learning_rate >= 0.0 && self.learning_rate.is_finite());
        assert!((0.0..1.0).contains(&self.momentum));
        assert!(self.batch_size >= 1);
        assert!(self.w_mse >= 0.0 && self.w_cos >= 0.0);
        assert!(self.depth >= 1 && self.width >= 1);
        Ok(())
    }
}

/// One row of the loss-curve export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Weighted squared-error part of the held-out loss.
    pub mse_part: f64,
    /// Weighted cosine part of the held-out loss.
    pub cos_part: f64,
}

/// Train in place; returns the per-epoch loss curves. Deterministic for a
/// fixed config and dataset. Fails if either split is empty or the running
/// train loss exceeds ten times its initial value.
pub fn train(
    net: &mut SurrogateNetwork,
    data: &ForceDataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    cfg.validate()?;
    if data.train_indices().is_empty() {
        return Err(Error::EmptySplit { which: "train" });
    }
    if data.test_indices().is_empty() {
        return Err(Error::EmptySplit { which: "test" });
    }
    assert_eq!(data.input_dim(), net.input_dim);
    assert_eq!(data.target_dim(), net.output_dim);

    net.set_normalization(data.normalization().clone());

    let weights = cfg.weights();
    let bs = cfg.batch_size;
    let in_dim = net.input_dim;
    let out_dim = net.output_dim;

    let mut scratch = Scratch::new(net, bs);
    let mut grads = Gradients::zeros_like(net);
    let mut velocity = Gradients::zeros_like(net);
    let mut x_norm = vec![0.0f64; bs * in_dim];
    let mut y_raw = vec![0.0f64; bs * out_dim];
    let mut y_norm = vec![0.0f64; bs * out_dim];
    let mut pred_raw = vec![0.0f64; bs * out_dim];
    let mut d_out = vec![0.0f64; bs * out_dim];
    let mut g_raw = vec![0.0f64; out_dim];

    let mut order: Vec<usize> = data.train_indices().to_vec();
    let mut shuffle_rng = crate::seed::rng(cfg.seed, "train-shuffle");

    let mut curves = Vec::with_capacity(cfg.epochs);
    let mut initial_loss: Option<f64> = None;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;

        for batch in order.chunks(bs) {
            let b = batch.len();
            fill_batch(net, data, batch, &mut x_norm, &mut y_raw, &mut y_norm);
            let (xs, ys_raw, ys_norm) = (
                &x_norm[..b * in_dim],
                &y_raw[..b * out_dim],
                &y_norm[..b * out_dim],
            );

            // A scratch sized for a full batch also serves a short final
            // batch; forward_core only touches the first b rows.
            let mut batch_scratch;
            let sc = if b == bs {
                &mut scratch
            } else {
                batch_scratch = Scratch::new(net, b);
                &mut batch_scratch
            };
            net.forward_core(xs, sc);

            // Reported loss and update direction, per sample.
            for i in 0..b {
                let out_n = &sc.out[i * out_dim..(i + 1) * out_dim];
                let pr = &mut pred_raw[i * out_dim..(i + 1) * out_dim];
                net.normalization().denormalize_target(out_n, pr);
                let target = &ys_raw[i * out_dim..(i + 1) * out_dim];
                loss_sum += loss(pr, target, &weights).total;

                // Cosine part in raw space, chained through the target scale.
                let cos_only = LossWeights {
                    w_mse: 0.0,
                    w_cos: weights.w_cos,
                };
                loss_grad_pred(pr, target, &cos_only, &mut g_raw);
                let d = &mut d_out[i * out_dim..(i + 1) * out_dim];
                let scale = &net.normalization().target_scale;
                for j in 0..out_dim {
                    let mse_term =
                        2.0 * weights.w_mse * (out_n[j] - ys_norm[i * out_dim + j]) / out_dim as f64;
                    d[j] = mse_term + g_raw[j] * scale[j];
                }
            }

            net.backward_core(xs, sc, &d_out[..b * out_dim], &mut grads);
            grads.scale(1.0 / b as f64);

            if cfg.learning_rate > 0.0 {
                apply_momentum_sgd(net, &grads, &mut velocity, cfg.learning_rate, cfg.momentum);
            }
        }

        let train_loss = loss_sum / order.len() as f64;
        let initial = *initial_loss.get_or_insert(train_loss);
        if train_loss > 10.0 * initial {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: train_loss,
                initial,
            });
        }

        let (test_loss, mse_part, cos_part) = evaluate(net, data, data.test_indices(), &weights);
        curves.push(EpochStats {
            epoch,
            train_loss,
            test_loss,
            mse_part,
            cos_part,
        });
    }

    net.mark_trained();
    Ok(curves)
}

fn fill_batch(
    net: &SurrogateNetwork,
    data: &ForceDataset,
    batch: &[usize],
    x_norm: &mut [f64],
    y_raw: &mut [f64],
    y_norm: &mut [f64],
) {
    let in_dim = net.input_dim;
    let out_dim = net.output_dim;
    let norm = net.normalization();
    let mut x_row = vec![0.0f64; in_dim];
    for (row, &idx) in batch.iter().enumerate() {
        for (x, &v) in x_row.iter_mut().zip(data.input_row(idx)) {
            *x = v as f64;
        }
        norm.normalize_input(&x_row, &mut x_norm[row * in_dim..(row + 1) * in_dim]);
        let yr = &mut y_raw[row * out_dim..(row + 1) * out_dim];
        for (y, &v) in yr.iter_mut().zip(data.target_row(idx)) {
            *y = v as f64;
        }
        norm.normalize_target(
            &y_raw[row * out_dim..(row + 1) * out_dim].to_vec(),
            &mut y_norm[row * out_dim..(row + 1) * out_dim],
        );
    }
}

fn apply_momentum_sgd(
    net: &mut SurrogateNetwork,
    grads: &Gradients,
    velocity: &mut Gradients,
    lr: f64,
    momentum: f64,
) {
    for (k, (gw, gb)) in grads.layers.iter().enumerate() {
        let (vw, vb) = &mut velocity.layers[k];
        let layer = if k < net.depth {
            &mut net.hidden[k]
        } else {
            &mut net.out
        };
        for ((w, v), g) in layer.w.iter_mut().zip(vw.iter_mut()).zip(gw) {
            *v = momentum * *v - lr * g;
            *w += *v;
        }
        for ((b, v), g) in layer.b.iter_mut().zip(vb.iter_mut()).zip(gb) {
            *v = momentum * *v - lr * g;
            *b += *v;
        }
    }
}

/// Average combined loss (and its weighted parts) over a sample index set.
pub fn evaluate(
    net: &SurrogateNetwork,
    data: &ForceDataset,
    indices: &[usize],
    weights: &LossWeights,
) -> (f64, f64, f64) {
    if indices.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let in_dim = net.input_dim;
    let out_dim = net.output_dim;
    let bs = 64.min(indices.len());
    let mut x_norm = vec![0.0f64; bs * in_dim];
    let mut y_raw = vec![0.0f64; bs * out_dim];
    let mut y_norm = vec![0.0f64; bs * out_dim];
    let mut pred = vec![0.0f64; out_dim];
    let (mut total, mut mse, mut cos) = (0.0, 0.0, 0.0);
    for batch in indices.chunks(bs) {
        let b = batch.len();
        fill_batch(net, data, batch, &mut x_norm, &mut y_raw, &mut y_norm);
        let mut sc = Scratch::new(net, b);
        net.forward_core(&x_norm[..b * in_dim], &mut sc);
        for i in 0..b {
            net.normalization()
                .denormalize_target(&sc.out[i * out_dim..(i + 1) * out_dim], &mut pred);
            let breakdown = loss(&pred, &y_raw[i * out_dim..(i + 1) * out_dim], weights);
            total += breakdown.total;
            mse += breakdown.mse;
            cos += breakdown.cosine;
        }
    }
    let n = indices.len() as f64;
    (total / n, mse / n, cos / n)
}
