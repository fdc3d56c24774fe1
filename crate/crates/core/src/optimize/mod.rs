//! Gait optimizers and their shared machinery: the observation fed to the
//! augmentation policy, the bounded policy itself, episode rewards, and the
//! evaluation environment.

mod hill_climb;
mod search;

pub use hill_climb::hill_climb;
pub use search::{bgps_loop, search_augmentation, BgpsOutcome, SearchOutcome};

use crate::error::{Error, Result};
use crate::gait::ParamVector;
use crate::geom::Vec2;
use crate::hydro::ForceModel;
use crate::kinematics::{BodyGeometry, RecordLevel, SwimmerState, Trajectory};
use serde::{Deserialize, Serialize};

/// Joints observed by the policy (1-based joints 3, 7, 10, 13, 17 of 19).
pub const OBS_JOINTS: [usize; 5] = [2, 6, 9, 12, 16];
/// Harmonics of the gait period in the time encoding.
pub const OBS_HARMONICS: usize = 3;
/// Six time-encoding values, five midline angles, heading, COM position,
/// COM velocity.
pub const OBS_DIM: usize = 2 * OBS_HARMONICS + OBS_JOINTS.len() + 1 + 2 + 2;

/// Fixed-size observation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub values: [f64; OBS_DIM],
}

/// Encode the state relative to the baseline gait's period. Time enters
/// through sine/cosine pairs at harmonics 1..3, so the encoding is exactly
/// periodic in the gait period.
pub fn make_observation(state: &SwimmerState, baseline: &ParamVector) -> Observation {
    let period = baseline.period();
    let tau = state.time.rem_euclid(period);
    let mut values = [0.0; OBS_DIM];
    let mut k = 0;
    for h in 1..=OBS_HARMONICS {
        let arg = std::f64::consts::TAU * h as f64 * tau / period;
        let (s, c) = arg.sin_cos();
        values[k] = s;
        values[k + 1] = c;
        k += 2;
    }
    for &j in &OBS_JOINTS {
        values[k] = state.joint_angles.get(j).copied().unwrap_or(0.0);
        k += 1;
    }
    values[k] = state.heading;
    values[k + 1] = state.com_position.x;
    values[k + 2] = state.com_position.y;
    values[k + 3] = state.com_velocity.x;
    values[k + 4] = state.com_velocity.y;
    Observation { values }
}

/// Affine map from observations to per-joint angle deltas, squashed to
/// ±epsilon through tanh so every emitted delta is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    /// Row-major (n_joints x OBS_DIM).
    weights: Vec<f64>,
    bias: Vec<f64>,
    epsilon: f64,
    n_joints: usize,
}

impl AugmentationPolicy {
    /// The zero policy: identity augmentation.
    pub fn zero(n_joints: usize, epsilon: f64) -> Self {
        assert!(epsilon >= 0.0);
        AugmentationPolicy {
            weights: vec![0.0; n_joints * OBS_DIM],
            bias: vec![0.0; n_joints],
            epsilon,
            n_joints,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_joints(&self) -> usize {
        self.n_joints
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.extend_from_slice(&self.bias);
        v
    }

    pub fn from_flat(flat: &[f64], n_joints: usize, epsilon: f64) -> Self {
        assert_eq!(flat.len(), n_joints * OBS_DIM + n_joints);
        AugmentationPolicy {
            weights: flat[..n_joints * OBS_DIM].to_vec(),
            bias: flat[n_joints * OBS_DIM..].to_vec(),
            epsilon,
            n_joints,
        }
    }

    /// Per-joint deltas; |delta_j| <= epsilon holds by construction.
    pub fn deltas(&self, obs: &Observation) -> Vec<f64> {
        (0..self.n_joints)
            .map(|j| {
                let row = &self.weights[j * OBS_DIM..(j + 1) * OBS_DIM];
                let raw: f64 = row
                    .iter()
                    .zip(&obs.values)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
                    + self.bias[j];
                let d = self.epsilon * raw.tanh();
                debug_assert!(d.abs() <= self.epsilon);
                d
            })
            .collect()
    }
}

/// Unit direction of an episode's net displacement. Degenerate when the
/// swimmer barely moved.
pub fn baseline_direction(trajectory: &Trajectory) -> Result<Vec2> {
    let net = trajectory.net_displacement();
    let magnitude = net.norm();
    net.normalized(1e-9)
        .ok_or(Error::DegenerateBaseline { magnitude })
}

/// Per-step rewards: COM displacement projected on the baseline direction.
/// The total telescopes to the net displacement along that direction.
pub fn episode_reward(trajectory: &Trajectory, baseline_direction: Vec2) -> (Vec<f64>, f64) {
    debug_assert!((baseline_direction.norm() - 1.0).abs() < 1e-9);
    let mut prev = trajectory.initial.com_position;
    let mut rewards = Vec::with_capacity(trajectory.n_steps());
    let mut total = 0.0;
    for state in &trajectory.states {
        let r = (state.com_position - prev).dot(baseline_direction);
        rewards.push(r);
        total += r;
        prev = state.com_position;
    }
    (rewards, total)
}

/// Search and optimizer knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Max augmentation per joint, radians.
    pub epsilon: f64,
    /// Symmetric perturbation pairs per generation.
    pub population: usize,
    /// Std-dev of weight perturbations.
    pub perturb_scale: f64,
    /// Generations of policy search per BGPS outer iteration.
    pub search_iters: usize,
    /// Episodes averaged per policy evaluation.
    pub episodes_per_eval: usize,
    /// Step size of the policy-search weight update.
    pub learning_rate: f64,
    /// Hill-climb relative step.
    pub hc_step: f64,
    /// Hill-climb iteration cap.
    pub hc_iters: usize,
    /// BGPS outer iterations.
    pub outer_iters: usize,
    /// Improvement required before an update is accepted, body lengths.
    pub accept_margin: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epsilon: 0.05,
            population: 8,
            perturb_scale: 0.3,
            search_iters: 5,
            episodes_per_eval: 1,
            learning_rate: 0.4,
            hc_step: 0.2,
            hc_iters: 40,
            outer_iters: 20,
            accept_margin: 1e-4,
            seed: 42,
        }
    }
}

/// Evaluation environment: a force model plus episode conventions. The
/// step size tracks each gait's own period so per-period sampling stays
/// uniform across frequencies.
pub struct Env<'a> {
    pub model: &'a dyn ForceModel,
    pub geometry: &'a BodyGeometry,
    pub steps_per_period: usize,
    pub periods: f64,
}

impl<'a> Env<'a> {
    pub fn new(model: &'a dyn ForceModel, geometry: &'a BodyGeometry) -> Self {
        Env {
            model,
            geometry,
            steps_per_period: 200,
            periods: 3.0,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.periods * self.steps_per_period as f64).round() as usize
    }

    /// Simulate `p`, optionally augmented by a policy observing the
    /// baseline `p`.
    pub fn rollout(
        &self,
        p: &ParamVector,
        policy: Option<&AugmentationPolicy>,
        record: RecordLevel,
    ) -> Result<Trajectory> {
        let dt = p.period() / self.steps_per_period as f64;
        let n_joints = self.geometry.n_joints();
        let mut driver = |state: &SwimmerState| {
            let mut angles = crate::gait::joint_angles(p, state.time, n_joints);
            if let Some(pol) = policy {
                let obs = make_observation(state, p);
                for (a, d) in angles.iter_mut().zip(pol.deltas(&obs)) {
                    *a += d;
                }
            }
            angles
        };
        crate::kinematics::step_episode(
            &mut driver,
            self.model,
            self.geometry,
            dt,
            self.n_steps(),
            record,
        )
    }

    /// Displacement magnitude of a clean, unaugmented episode.
    pub fn displacement(&self, p: &ParamVector) -> Result<f64> {
        Ok(self.rollout(p, None, RecordLevel::States)?.displacement())
    }
}

/// Phases an optimization trace row can be in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Search,
    Refit,
    Accept,
    Reject,
    Error,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Search => "search",
            Phase::Refit => "refit",
            Phase::Accept => "accept",
            Phase::Reject => "reject",
            Phase::Error => "error",
        }
    }
}

/// One row of the optimization trace shared by both optimizers.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub phase: Phase,
    /// Displacement of the current baseline.
    pub displacement: f64,
    /// Return (or objective value) examined in this row.
    pub ret: f64,
    pub refit_loss: Option<f64>,
    pub params: [f64; crate::gait::PARAM_DIM],
}
