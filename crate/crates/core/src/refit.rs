//! Projecting an augmented motion back into gait parameter space.
//!
//! [`collect_targets`] records the joint angles actually executed during
//! the final full period of an episode; [`fit_params`] then finds the
//! parameter vector whose gait reproduces those angles by minimizing the
//! mean squared angle error, starting from the baseline parameters.
//!
//! The minimizer is Levenberg-Marquardt built solely on the analytic
//! first-order Jacobian from [`crate::gait::eval_theta_grad_p`]: damped
//! normal-equation steps, damping doubled whenever a step fails to reduce
//! the loss (the backtracking analog), so the accepted-loss sequence is
//! monotone. Plain gradient descent cannot identify this model: the sample
//! Gram matrix of the monomial amplitude/phase basis is Hilbert-like with
//! condition numbers around 1e7, which leaves near-flat parameter
//! directions unconverged after any practical iteration budget.

use crate::error::{Error, Result};
use crate::gait::{eval_theta, eval_theta_grad_p, ParamVector, PARAM_DIM};
use crate::kinematics::{BodyGeometry, Trajectory};
use serde::{Deserialize, Serialize};

/// One recorded target angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSample {
    /// Arc-length fraction of the joint.
    pub s: f64,
    /// Absolute episode time of the sample.
    pub t: f64,
    pub theta_star: f64,
}

/// Joint-angle targets over one gait period.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTargets {
    pub samples: Vec<AngleSample>,
    pub period: f64,
}

impl AngleTargets {
    /// Mean squared error of a parameter vector against the targets.
    pub fn mse(&self, p: &ParamVector) -> f64 {
        let sum: f64 = self
            .samples
            .iter()
            .map(|a| {
                let r = eval_theta(p, a.s, a.t).expect("joint fractions are valid") - a.theta_star;
                r * r
            })
            .sum();
        sum / self.samples.len() as f64
    }

    /// Rows of (s, t, theta_star) for CSV export.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.samples.iter().map(|a| (a.s, a.t, a.theta_star))
    }
}

/// Sample the executed joint angles at every joint and `time_samples`
/// uniformly spaced times within the final full baseline period of the
/// episode. Sample times snap to the trajectory's step grid.
pub fn collect_targets(
    trajectory: &Trajectory,
    geometry: &BodyGeometry,
    baseline: &ParamVector,
    time_samples: usize,
) -> Result<AngleTargets> {
    assert!(time_samples >= 1);
    let period = baseline.period();
    let dt = trajectory.dt;
    let n_steps = trajectory.n_steps();
    let t_end = n_steps as f64 * dt;
    let needed = (period / dt).ceil() as usize;
    if n_steps < needed {
        return Err(Error::EpisodeTooShort {
            needed,
            got: n_steps,
        });
    }

    let n_joints = geometry.n_joints();
    let mut samples = Vec::with_capacity(time_samples * n_joints);
    for m in 0..time_samples {
        let t_m = t_end - period + m as f64 * period / time_samples as f64;
        let idx = ((t_m / dt).round() as usize)
            .clamp(1, n_steps)
            .saturating_sub(1);
        let state = &trajectory.states[idx];
        for j in 0..n_joints {
            samples.push(AngleSample {
                s: (j + 1) as f64 / (n_joints + 1) as f64,
                t: state.time,
                theta_star: state.joint_angles[j],
            });
        }
    }
    Ok(AngleTargets { samples, period })
}

/// Fitting knobs. The loss and gradient stops are far below the spec'd
/// recovery accuracy on purpose: the flattest parameter directions carry
/// per-entry errors of sqrt(loss / lambda_min), so identification to 1e-3
/// needs the loss driven toward machine zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub max_iters: usize,
    pub loss_tol: f64,
    pub grad_tol: f64,
    pub initial_damping: f64,
    /// Time samples per period for target collection.
    pub time_samples: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 5000,
            loss_tol: 1e-24,
            grad_tol: 1e-14,
            initial_damping: 1e-3,
            time_samples: 50,
        }
    }
}

/// Result of a parameter fit.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: ParamVector,
    pub loss: f64,
    pub iterations: usize,
    /// Loss after every accepted step, starting with the initial loss.
    /// Non-increasing by construction.
    pub accepted_losses: Vec<f64>,
}

/// Fit gait parameters to the targets, initialized at `init`. Always
/// returns the best parameters seen.
pub fn fit_params(targets: &AngleTargets, init: &ParamVector, cfg: &FitConfig) -> Result<FitOutcome> {
    if targets.samples.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let n = targets.samples.len();
    let mut p = init.clone();
    let mut loss = targets.mse(&p);
    let mut accepted = vec![loss];
    let mut best = (loss, p.clone());
    let mut lambda = cfg.initial_damping;

    let mut jtj = [[0.0f64; PARAM_DIM]; PARAM_DIM];
    let mut jtr = [0.0f64; PARAM_DIM];

    let mut iterations = 0;
    'outer: for _ in 0..cfg.max_iters {
        if loss < cfg.loss_tol {
            break;
        }
        iterations += 1;

        // Normal equations of the linearized problem, scaled by 1/n.
        for row in jtj.iter_mut() {
            row.fill(0.0);
        }
        jtr.fill(0.0);
        for a in &targets.samples {
            let g = eval_theta_grad_p(&p, a.s, a.t).expect("valid sample");
            let r = eval_theta(&p, a.s, a.t).expect("valid sample") - a.theta_star;
            for i in 0..PARAM_DIM {
                jtr[i] += g[i] * r;
                for j in i..PARAM_DIM {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        for i in 0..PARAM_DIM {
            jtr[i] *= inv_n;
            for j in i..PARAM_DIM {
                jtj[i][j] *= inv_n;
                jtj[j][i] = jtj[i][j];
            }
        }

        // Scaled gradient stop: the loss gradient is 2 J'r / n.
        let gnorm: f64 = jtr.iter().map(|v| (2.0 * v) * (2.0 * v)).sum::<f64>().sqrt();
        if gnorm < cfg.grad_tol {
            break;
        }

        // Damped step, doubling the damping until the loss decreases.
        let mut moved = false;
        for _ in 0..64 {
            let mut a = jtj;
            for i in 0..PARAM_DIM {
                a[i][i] += lambda * jtj[i][i].max(1e-12);
            }
            let step = match cholesky_solve(&a, &jtr) {
                Some(s) => s,
                None => {
                    lambda *= 2.0;
                    continue;
                }
            };
            let mut flat = p.flatten();
            for i in 0..PARAM_DIM {
                flat[i] -= step[i];
            }
            let cand = match ParamVector::from_flat(&flat) {
                Ok(c) => c,
                Err(_) => {
                    lambda *= 2.0;
                    continue;
                }
            };
            let cand_loss = targets.mse(&cand);
            if cand_loss < loss {
                p = cand;
                loss = cand_loss;
                accepted.push(loss);
                if loss < best.0 {
                    best = (loss, p.clone());
                }
                lambda = (lambda / 3.0).max(1e-14);
                moved = true;
                break;
            }
            lambda *= 2.0;
            if lambda > 1e16 {
                break 'outer;
            }
        }
        if !moved {
            break;
        }
    }

    Ok(FitOutcome {
        params: best.1,
        loss: best.0,
        iterations,
        accepted_losses: accepted,
    })
}

/// Solve A x = b for symmetric positive-definite A via Cholesky.
fn cholesky_solve(a: &[[f64; PARAM_DIM]; PARAM_DIM], b: &[f64; PARAM_DIM]) -> Option<[f64; PARAM_DIM]> {
    let mut l = [[0.0f64; PARAM_DIM]; PARAM_DIM];
    for i in 0..PARAM_DIM {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Forward then back substitution.
    let mut y = [0.0f64; PARAM_DIM];
    for i in 0..PARAM_DIM {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0f64; PARAM_DIM];
    for i in (0..PARAM_DIM).rev() {
        let mut sum = y[i];
        for k in i + 1..PARAM_DIM {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}
