//! Coordinate hill climbing over the 12 gait parameters.

use super::{Phase, SearchConfig, TraceRow};
use crate::gait::{ParamVector, PARAM_DIM};

/// Move to the best strictly improving neighbor among steps of
/// `+-delta_k e_k` in every dimension (`delta_k` scales with the
/// parameter's magnitude, floored at 0.1), halving the step when no
/// neighbor improves. 2d objective evaluations per iteration.
///
/// The objective is treated as total; callers map failures to `-inf`.
/// Candidates that violate parameter validity (omega <= 0) are skipped.
pub fn hill_climb(
    p0: &ParamVector,
    objective: &mut dyn FnMut(&ParamVector) -> f64,
    config: &SearchConfig,
) -> (ParamVector, f64, Vec<TraceRow>) {
    let mut current = p0.clone();
    let mut value = objective(&current);
    let mut delta = config.hc_step;
    let mut trace = vec![TraceRow {
        iteration: 0,
        phase: Phase::Search,
        displacement: value,
        ret: value,
        refit_loss: None,
        params: current.flatten(),
    }];

    for iteration in 1..=config.hc_iters {
        if delta < 1e-5 {
            break;
        }
        let flat = current.flatten();
        let mut best: Option<(ParamVector, f64)> = None;
        for k in 0..PARAM_DIM {
            let step = delta * flat[k].abs().max(0.1);
            for sign in [1.0, -1.0] {
                let mut cand = flat;
                cand[k] += sign * step;
                let Ok(candidate) = ParamVector::from_flat(&cand) else {
                    continue;
                };
                let v = objective(&candidate);
                if v > value && best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                    best = Some((candidate, v));
                }
            }
        }
        match best {
            Some((candidate, v)) => {
                current = candidate;
                value = v;
                trace.push(TraceRow {
                    iteration,
                    phase: Phase::Accept,
                    displacement: value,
                    ret: v,
                    refit_loss: None,
                    params: current.flatten(),
                });
            }
            None => {
                delta *= 0.5;
                trace.push(TraceRow {
                    iteration,
                    phase: Phase::Reject,
                    displacement: value,
                    ret: value,
                    refit_loss: None,
                    params: current.flatten(),
                });
            }
        }
    }

    (current, value, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_peak(target: &[f64; PARAM_DIM]) -> impl FnMut(&ParamVector) -> f64 + '_ {
        move |p: &ParamVector| {
            -p.flatten()
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        }
    }

    #[test]
    fn converges_on_analytic_quadratic() {
        let p0 = ParamVector::default_gait();
        let mut target = p0.flatten();
        target[0] += 0.3;
        let mut objective = quadratic_peak(&target);
        let config = SearchConfig {
            hc_step: 0.2,
            hc_iters: 40,
            ..SearchConfig::default()
        };
        let (best, _, trace) = hill_climb(&p0, &mut objective, &config);
        let err = best
            .flatten()
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(
            err < 1e-3,
            "converged to {err:.2e} from target in {} iterations",
            trace.len()
        );
        assert!(trace.len() <= 41);
    }

    #[test]
    fn local_max_terminates_via_step_shrink() {
        let p0 = ParamVector::default_gait();
        let target = p0.flatten();
        let mut objective = quadratic_peak(&target);
        let config = SearchConfig {
            hc_step: 0.2,
            hc_iters: 100,
            ..SearchConfig::default()
        };
        let (best, _, trace) = hill_climb(&p0, &mut objective, &config);
        assert_eq!(best, p0, "already at the optimum");
        // Every move rejected; terminates once delta < 1e-5, well before
        // the iteration cap.
        assert!(trace.len() < 30);
        assert!(trace[1..].iter().all(|r| r.phase == Phase::Reject));
    }

    #[test]
    fn trace_is_non_decreasing_for_any_objective() {
        let mut rng = crate::seed::rng(84, "hc-prop");
        use rand::Rng;
        // A wiggly but deterministic objective.
        let mut objective = |p: &ParamVector| {
            p.flatten()
                .iter()
                .enumerate()
                .map(|(i, v)| (v * (i as f64 + 1.0)).sin())
                .sum::<f64>()
        };
        for _ in 0..5 {
            let mut flat = ParamVector::default_gait().flatten();
            for v in flat.iter_mut() {
                *v += rng.gen_range(-0.5..0.5);
            }
            flat[11] = flat[11].abs().max(0.5);
            let p0 = ParamVector::from_flat(&flat).unwrap();
            let config = SearchConfig {
                hc_step: 0.3,
                hc_iters: 25,
                ..SearchConfig::default()
            };
            let (_, _, trace) = hill_climb(&p0, &mut objective, &config);
            for w in trace.windows(2) {
                assert!(w[1].displacement >= w[0].displacement);
            }
        }
    }

    #[test]
    fn omega_never_driven_nonpositive() {
        // Objective that rewards shrinking omega; candidates with
        // omega <= 0 must be skipped, not constructed.
        let mut objective = |p: &ParamVector| -p.omega();
        let p0 = ParamVector::new([0.1; 6], [0.0; 5], 0.05).unwrap();
        let config = SearchConfig {
            hc_step: 0.5,
            hc_iters: 60,
            ..SearchConfig::default()
        };
        let (best, _, _) = hill_climb(&p0, &mut objective, &config);
        assert!(best.omega() > 0.0);
    }
}
