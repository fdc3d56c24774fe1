//! Augmentation-policy search and the outer baseline-update loop.

use super::{
    baseline_direction, episode_reward, AugmentationPolicy, Env, Phase, SearchConfig, TraceRow,
};
use crate::error::Result;
use crate::gait::ParamVector;
use crate::kinematics::RecordLevel;
use crate::refit::{collect_targets, fit_params, FitConfig};
use rand::Rng;
use rand_distr::StandardNormal;

/// Result of one policy search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub policy: AugmentationPolicy,
    pub best_return: f64,
    pub baseline_return: f64,
}

/// Population-based search over policy weights: symmetric Gaussian
/// perturbations around the current weights, combined into a
/// reward-weighted update. Returns the best policy evaluated anywhere
/// during the search (including the zero policy, so the result never
/// falls below the baseline return).
pub fn search_augmentation(
    baseline: &ParamVector,
    env: &Env,
    config: &SearchConfig,
    seed: u64,
) -> Result<SearchOutcome> {
    let n_joints = env.geometry.n_joints();
    let clean = env.rollout(baseline, None, RecordLevel::States)?;
    let direction = baseline_direction(&clean)?;
    let baseline_return = episode_reward(&clean, direction).1;

    let dim = AugmentationPolicy::zero(n_joints, config.epsilon).n_params();
    let mut weights = vec![0.0f64; dim];
    let mut best = (weights.clone(), baseline_return);
    let mut rng = crate::seed::rng(seed, "policy-search");

    let evaluate = |flat: &[f64]| -> Result<f64> {
        let policy = AugmentationPolicy::from_flat(flat, n_joints, config.epsilon);
        let mut total = 0.0;
        for _ in 0..config.episodes_per_eval.max(1) {
            let traj = env.rollout(baseline, Some(&policy), RecordLevel::States)?;
            total += episode_reward(&traj, direction).1;
        }
        Ok(total / config.episodes_per_eval.max(1) as f64)
    };

    for _ in 0..config.search_iters {
        let mut update = vec![0.0f64; dim];
        for _ in 0..config.population {
            let noise: Vec<f64> = (0..dim)
                .map(|_| config.perturb_scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let plus: Vec<f64> = weights.iter().zip(&noise).map(|(w, n)| w + n).collect();
            let minus: Vec<f64> = weights.iter().zip(&noise).map(|(w, n)| w - n).collect();
            let r_plus = evaluate(&plus)?;
            let r_minus = evaluate(&minus)?;
            if r_plus > best.1 {
                best = (plus, r_plus);
            }
            if r_minus > best.1 {
                best = (minus, r_minus);
            }
            let coef = r_plus - r_minus;
            for (u, n) in update.iter_mut().zip(&noise) {
                *u += coef * n;
            }
        }
        let scale = config.learning_rate
            / (config.population as f64 * config.perturb_scale * config.perturb_scale);
        for (w, u) in weights.iter_mut().zip(&update) {
            *w += scale * u;
        }
        let r = evaluate(&weights)?;
        if r > best.1 {
            best = (weights.clone(), r);
        }
    }

    Ok(SearchOutcome {
        policy: AugmentationPolicy::from_flat(&best.0, n_joints, config.epsilon),
        best_return: best.1,
        baseline_return,
    })
}

/// Full run record of the outer loop.
#[derive(Debug, Clone)]
pub struct BgpsOutcome {
    /// Baseline after each outer iteration, starting with the initial one,
    /// paired with its clean displacement. Non-decreasing displacements.
    pub history: Vec<(ParamVector, f64)>,
    pub trace: Vec<TraceRow>,
}

/// The outer loop: search for an augmentation that beats the baseline; if
/// found, record the augmented joint angles, refit parameters from the
/// baseline, re-evaluate them with a clean episode, and accept only a
/// strict improvement. An outer iteration that errors is recorded in the
/// trace and skipped.
pub fn bgps_loop(
    p0: &ParamVector,
    env: &Env,
    config: &SearchConfig,
    fit: &FitConfig,
) -> Result<BgpsOutcome> {
    let mut current = p0.clone();
    let mut current_disp = env.displacement(&current)?;
    let mut history = vec![(current.clone(), current_disp)];
    let mut trace = Vec::new();

    for outer in 0..config.outer_iters {
        let seed = crate::seed::substream(config.seed, "bgps-outer") ^ outer as u64;
        let step = bgps_outer_iteration(
            &current,
            current_disp,
            env,
            config,
            fit,
            seed,
            outer,
            &mut trace,
        );
        match step {
            Ok(Some((accepted, disp))) => {
                current = accepted;
                current_disp = disp;
            }
            Ok(None) => {}
            Err(e) => {
                trace.push(TraceRow {
                    iteration: outer,
                    phase: Phase::Error,
                    displacement: current_disp,
                    ret: f64::NAN,
                    refit_loss: None,
                    params: current.flatten(),
                });
                // Recorded and skipped; the baseline stands.
                let _ = e;
            }
        }
        history.push((current.clone(), current_disp));
    }

    Ok(BgpsOutcome { history, trace })
}

#[allow(clippy::too_many_arguments)]
fn bgps_outer_iteration(
    current: &ParamVector,
    current_disp: f64,
    env: &Env,
    config: &SearchConfig,
    fit: &FitConfig,
    seed: u64,
    outer: usize,
    trace: &mut Vec<TraceRow>,
) -> Result<Option<(ParamVector, f64)>> {
    let outcome = search_augmentation(current, env, config, seed)?;
    trace.push(TraceRow {
        iteration: outer,
        phase: Phase::Search,
        displacement: current_disp,
        ret: outcome.best_return,
        refit_loss: None,
        params: current.flatten(),
    });

    if outcome.best_return <= outcome.baseline_return + config.accept_margin {
        trace.push(TraceRow {
            iteration: outer,
            phase: Phase::Reject,
            displacement: current_disp,
            ret: outcome.best_return,
            refit_loss: None,
            params: current.flatten(),
        });
        return Ok(None);
    }

    // Record the augmented motion and project it back to parameters.
    let augmented = env.rollout(current, Some(&outcome.policy), RecordLevel::States)?;
    let targets = collect_targets(&augmented, env.geometry, current, fit.time_samples)?;
    let fitted = fit_params(&targets, current, fit)?;
    trace.push(TraceRow {
        iteration: outer,
        phase: Phase::Refit,
        displacement: current_disp,
        ret: outcome.best_return,
        refit_loss: Some(fitted.loss),
        params: fitted.params.flatten(),
    });

    // The refit parameters must prove themselves on a clean episode.
    let refit_disp = env.displacement(&fitted.params)?;
    if refit_disp > current_disp + config.accept_margin {
        trace.push(TraceRow {
            iteration: outer,
            phase: Phase::Accept,
            displacement: refit_disp,
            ret: refit_disp,
            refit_loss: Some(fitted.loss),
            params: fitted.params.flatten(),
        });
        Ok(Some((fitted.params, refit_disp)))
    } else {
        trace.push(TraceRow {
            iteration: outer,
            phase: Phase::Reject,
            displacement: current_disp,
            ret: refit_disp,
            refit_loss: Some(fitted.loss),
            params: current.flatten(),
        });
        Ok(None)
    }
}
