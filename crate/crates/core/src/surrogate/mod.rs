//! Learned force model: a residual feed-forward network mapping the
//! COM-centered outline history (current plus the past three timesteps) to
//! the per-point surface force field, trained on drag-oracle rollouts of a
//! gait parameter sweep.

mod data;
mod matmul;
mod net;
mod train;

pub use data::{generate_dataset, mean_predictor_loss, EpisodeLength, ForceDataset, GaitProvenance};
pub use net::{Gradients, Normalization, SurrogateNetwork, WeightsFile, WEIGHTS_FORMAT_VERSION};
pub use train::{evaluate, train, EpochStats, TrainConfig};

use crate::error::{Error, Result};
use crate::kinematics::{Outline, SurfaceForces, SwimmerState, HISTORY_LEN};

/// Outlines stacked into one network input: current plus three past.
pub const STACKED_OUTLINES: usize = HISTORY_LEN + 1;

/// Flat input dimension for a given outline point count.
pub fn stack_input_dim(n_points: usize) -> usize {
    STACKED_OUTLINES * 2 * n_points
}

/// Targets shorter than this are excluded from the cosine term: their
/// direction is undefined.
pub const EPS_DIR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w_mse: f64,
    pub w_cos: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_mse: 1.0,
            w_cos: 1.0,
        }
    }
}

/// Weighted parts of the combined loss; `total = mse + cosine`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub cosine: f64,
}

/// Combined loss on raw force vectors:
/// `w_mse * MSE + w_cos * mean_i(1 - cos(pred_i, target_i))`,
/// where the MSE is over all components and the cosine mean runs over the
/// 2D points whose target magnitude is at least [`EPS_DIR`].
pub fn loss(pred: &[f64], target: &[f64], w: &LossWeights) -> LossBreakdown {
    assert_eq!(pred.len(), target.len());
    assert_eq!(pred.len() % 2, 0);
    let dim = pred.len();

    let mut sq = 0.0;
    for (p, t) in pred.iter().zip(target) {
        let d = p - t;
        sq += d * d;
    }
    let mse = w.w_mse * sq / dim as f64;

    let mut cos_sum = 0.0;
    let mut included = 0usize;
    for i in 0..dim / 2 {
        let (tx, ty) = (target[2 * i], target[2 * i + 1]);
        let tn = tx.hypot(ty);
        if tn < EPS_DIR {
            continue;
        }
        let (px, py) = (pred[2 * i], pred[2 * i + 1]);
        let pn = px.hypot(py).max(1e-12);
        cos_sum += 1.0 - (px * tx + py * ty) / (pn * tn);
        included += 1;
    }
    let cosine = if included > 0 {
        w.w_cos * cos_sum / included as f64
    } else {
        0.0
    };

    LossBreakdown {
        total: mse + cosine,
        mse,
        cosine,
    }
}

/// Gradient of [`loss`] with respect to the prediction, written into `out`.
/// Returns the same breakdown as [`loss`].
pub fn loss_grad_pred(
    pred: &[f64],
    target: &[f64],
    w: &LossWeights,
    out: &mut [f64],
) -> LossBreakdown {
    assert_eq!(pred.len(), target.len());
    assert_eq!(out.len(), pred.len());
    let dim = pred.len();

    let mut sq = 0.0;
    for ((o, &p), &t) in out.iter_mut().zip(pred).zip(target) {
        let d = p - t;
        sq += d * d;
        *o = 2.0 * w.w_mse * d / dim as f64;
    }
    let mse = w.w_mse * sq / dim as f64;

    // Count the included pairs first: the cosine mean divides by it.
    let included = (0..dim / 2)
        .filter(|&i| target[2 * i].hypot(target[2 * i + 1]) >= EPS_DIR)
        .count();
    let mut cos_sum = 0.0;
    if included > 0 {
        let inv = w.w_cos / included as f64;
        for i in 0..dim / 2 {
            let (tx, ty) = (target[2 * i], target[2 * i + 1]);
            let tn = tx.hypot(ty);
            if tn < EPS_DIR {
                continue;
            }
            let (px, py) = (pred[2 * i], pred[2 * i + 1]);
            let pn = px.hypot(py).max(1e-12);
            let dot = px * tx + py * ty;
            cos_sum += 1.0 - dot / (pn * tn);
            // d(1 - cos)/dp = -( t / (|p||t|) - (p.t) p / (|p|^3 |t|) )
            let inv_pt = 1.0 / (pn * tn);
            let coef = dot / (pn * pn * pn * tn);
            out[2 * i] += inv * (coef * px - tx * inv_pt);
            out[2 * i + 1] += inv * (coef * py - ty * inv_pt);
        }
    }
    let cosine = if included > 0 {
        w.w_cos * cos_sum / included as f64
    } else {
        0.0
    };
    LossBreakdown {
        total: mse + cosine,
        mse,
        cosine,
    }
}

/// Exact reverse-mode gradient of the composite loss with respect to every
/// network parameter, for one (normalized input, raw target) pair.
pub fn backward(
    net: &SurrogateNetwork,
    input_normalized: &[f64],
    target: &[f64],
    w: &LossWeights,
) -> Result<Gradients> {
    if input_normalized.len() != net.input_dim {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim,
            got: input_normalized.len(),
        });
    }
    if target.len() != net.output_dim {
        return Err(Error::DimensionMismatch {
            expected: net.output_dim,
            got: target.len(),
        });
    }
    let mut scratch = net::Scratch::new(net, 1);
    net.forward_core(input_normalized, &mut scratch);
    let mut pred = vec![0.0; net.output_dim];
    net.normalization()
        .denormalize_target(&scratch.out, &mut pred);

    let mut g_pred = vec![0.0; net.output_dim];
    loss_grad_pred(&pred, target, w, &mut g_pred);
    // Chain through denormalization: y = y_norm * scale + mean.
    let scale = &net.normalization().target_scale;
    let d_out: Vec<f64> = g_pred.iter().zip(scale).map(|(g, s)| g * s).collect();

    let mut grads = Gradients::zeros_like(net);
    net.backward_core(input_normalized, &mut scratch, &d_out, &mut grads);
    Ok(grads)
}

/// [`crate::hydro::ForceModel`] adapter around a trained network. The
/// outline history is padded by repeating the oldest available outline
/// (the current one at episode start).
pub struct SurrogateForceModel {
    net: SurrogateNetwork,
    n_points: usize,
}

impl SurrogateForceModel {
    pub fn new(net: SurrogateNetwork) -> Result<Self> {
        if !net.is_trained() {
            return Err(Error::SurrogateUntrained);
        }
        if net.input_dim % (2 * STACKED_OUTLINES) != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * STACKED_OUTLINES,
                got: net.input_dim,
            });
        }
        let n_points = net.input_dim / (2 * STACKED_OUTLINES);
        if net.output_dim != 2 * n_points {
            return Err(Error::DimensionMismatch {
                expected: 2 * n_points,
                got: net.output_dim,
            });
        }
        Ok(SurrogateForceModel { net, n_points })
    }

    pub fn network(&self) -> &SurrogateNetwork {
        &self.net
    }
}

impl crate::hydro::ForceModel for SurrogateForceModel {
    fn forces(
        &self,
        current: &Outline,
        history: &[Outline],
        _dt: f64,
        _state: &SwimmerState,
    ) -> Result<SurfaceForces> {
        if current.len() != self.n_points {
            return Err(Error::OutlineLengthMismatch {
                expected: self.n_points,
                got: current.len(),
            });
        }
        let mut raw = Vec::with_capacity(self.net.input_dim);
        for back in 0..STACKED_OUTLINES {
            let outline = if back == 0 {
                current
            } else {
                history
                    .get(back - 1)
                    .or_else(|| history.last())
                    .unwrap_or(current)
            };
            if outline.len() != self.n_points {
                return Err(Error::OutlineLengthMismatch {
                    expected: self.n_points,
                    got: outline.len(),
                });
            }
            for p in outline.points() {
                raw.push(p.x);
                raw.push(p.y);
            }
        }
        let mut x_norm = vec![0.0; raw.len()];
        self.net.normalization().normalize_input(&raw, &mut x_norm);
        let pred = self.net.forward(&x_norm)?;
        let forces = pred
            .chunks_exact(2)
            .map(|c| crate::geom::Vec2::new(c[0], c[1]))
            .collect();
        Ok(SurfaceForces::new(forces))
    }

    fn history_needed(&self) -> usize {
        HISTORY_LEN
    }
}
