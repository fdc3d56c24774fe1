//! Property tests for the module invariants.

use proptest::prelude::*;
use swimopt_core::gait::{eval_theta, eval_theta_grad_p, ParamVector};
use swimopt_core::hydro::{DragCoefficients, ResistiveModel};
use swimopt_core::kinematics::{
    build_midline, build_outline, integrate_step, BodyGeometry, RecordLevel, SurfaceForces,
    SwimmerState,
};
use swimopt_core::optimize::{baseline_direction, episode_reward, Env};
use swimopt_core::surrogate::{loss, LossWeights};
use swimopt_core::Vec2;

fn param_strategy() -> impl Strategy<Value = ParamVector> {
    (
        prop::array::uniform6(-0.4f64..0.4),
        prop::array::uniform5(-3.0f64..3.0),
        0.5f64..4.0,
    )
        .prop_map(|(amp, phase, omega)| ParamVector::new(amp, phase, omega).unwrap())
}

proptest! {
    #[test]
    fn gait_is_periodic(p in param_strategy(), s in 0.0f64..1.0, t in -5.0f64..5.0) {
        let period = p.period();
        let a = eval_theta(&p, s, t).unwrap();
        let b = eval_theta(&p, s, t + period).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "theta({s},{t}) = {a} vs +T {b}");
    }

    #[test]
    fn gait_is_linear_in_amplitude(p in param_strategy(), s in 0.0f64..1.0,
                                   t in -5.0f64..5.0, c in -3.0f64..3.0) {
        let scaled = p.with_amp_scaled(c).unwrap();
        let a = eval_theta(&scaled, s, t).unwrap();
        let b = c * eval_theta(&p, s, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn gait_gradient_consistent(p in param_strategy(), s in 0.0f64..1.0, t in -5.0f64..5.0) {
        let g = eval_theta_grad_p(&p, s, t).unwrap();
        let flat = p.flatten();
        let h = 1e-6;
        for k in 0..12 {
            let mut plus = flat;
            let mut minus = flat;
            plus[k] += h;
            minus[k] -= h;
            let (Ok(pp), Ok(pm)) = (ParamVector::from_flat(&plus), ParamVector::from_flat(&minus))
            else {
                continue; // omega stepped out of range
            };
            let fd = (eval_theta(&pp, s, t).unwrap() - eval_theta(&pm, s, t).unwrap()) / (2.0 * h);
            let scale = g[k].abs().max(fd.abs()).max(1e-4);
            prop_assert!((g[k] - fd).abs() / scale < 1e-5);
        }
    }

    #[test]
    fn loss_is_nonnegative(pred in prop::collection::vec(-2.0f64..2.0, 8),
                           target in prop::collection::vec(-2.0f64..2.0, 8)) {
        let b = loss(&pred, &target, &LossWeights::default());
        prop_assert!(b.total >= -1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn outline_count_centroid_spacing(joints in prop::collection::vec(-0.4f64..0.4, 19)) {
        let geom = BodyGeometry::default();
        let outline = build_outline(&build_midline(&joints, &geom), &geom).unwrap();
        prop_assert_eq!(outline.len(), 400);

        // Area centroid at the origin.
        let pts = outline.points();
        let n = pts.len();
        let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let cr = p.cross(q);
            a2 += cr;
            cx += (p.x + q.x) * cr;
            cy += (p.y + q.y) * cr;
        }
        let centroid = Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2));
        prop_assert!(centroid.norm() < 1e-9);

        // Near-uniform consecutive spacing.
        let chords: Vec<f64> = (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).collect();
        let mean = chords.iter().sum::<f64>() / n as f64;
        let spread = chords.iter().fold(0.0f64, |m, &c| m.max((c - mean).abs())) / mean;
        prop_assert!(spread < 0.01, "chord spread {spread}");
    }

    #[test]
    fn momentum_identity(fx in prop::collection::vec(-1e-2f64..1e-2, 400),
                         fy in prop::collection::vec(-1e-2f64..1e-2, 400)) {
        let geom = BodyGeometry::default();
        let outline = build_outline(&build_midline(&vec![0.0; 19], &geom), &geom).unwrap();
        let forces = SurfaceForces::new(
            fx.iter().zip(&fy).map(|(&x, &y)| Vec2::new(x, y)).collect(),
        );
        let mut state = SwimmerState::at_rest(19);
        state.com_velocity = Vec2::new(0.05, -0.02);
        let dt = 0.004;
        let next = integrate_step(&state, &forces, &outline, &geom, dt);
        let dv = next.com_velocity - state.com_velocity;
        let net = forces.net();
        prop_assert!((dv.x / dt * geom.mass() - net.x).abs() <= 1e-12 * net.x.abs().max(1.0));
        prop_assert!((dv.y / dt * geom.mass() - net.y).abs() <= 1e-12 * net.y.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reward_sum_telescopes(amp_scale in 0.4f64..1.1, omega in 4.0f64..8.0) {
        let p = {
            let base = ParamVector::default_gait().with_amp_scaled(amp_scale).unwrap();
            ParamVector::new(*base.amp_coeffs(), *base.phase_coeffs(), omega).unwrap()
        };
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let env = Env {
            model: &model,
            geometry: &geom,
            steps_per_period: 60,
            periods: 1.0,
        };
        let traj = env.rollout(&p, None, RecordLevel::States).unwrap();
        let Ok(dir) = baseline_direction(&traj) else {
            return Ok(()); // degenerate-displacement gait
        };
        let (rewards, total) = episode_reward(&traj, dir);
        let direct = traj.net_displacement().dot(dir);
        prop_assert!((total - direct).abs() < 1e-12);
        prop_assert_eq!(rewards.len(), traj.n_steps());
    }

    #[test]
    fn episode_is_deterministic(amp_scale in 0.5f64..1.0) {
        let p = ParamVector::default_gait().with_amp_scaled(amp_scale).unwrap();
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let env = Env {
            model: &model,
            geometry: &geom,
            steps_per_period: 50,
            periods: 0.6,
        };
        let a = env.rollout(&p, None, RecordLevel::States).unwrap();
        let b = env.rollout(&p, None, RecordLevel::States).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert_eq!(sa, sb);
        }
    }
}
