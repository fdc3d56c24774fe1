//! Swimmer body: midline construction, surface outline, and rigid-body
//! integration of the center of mass under surface forces.
//!
//! Internal shape changes are kinematically prescribed: joint angles are
//! inputs supplied by the gait (plus an optional augmentation policy), never
//! dynamic states. Only the center-of-mass translation and the heading are
//! force-driven.

mod outline;

pub use outline::build_outline;

use crate::error::{Error, Result};
use crate::geom::{wrap_angle, Vec2};
use crate::hydro::ForceModel;

/// World-frame pose and rates plus the prescribed joint angles at one
/// time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SwimmerState {
    pub com_position: Vec2,
    /// Heading in radians, normalized to (-pi, pi].
    pub heading: f64,
    pub com_velocity: Vec2,
    pub angular_velocity: f64,
    pub joint_angles: Vec<f64>,
    pub time: f64,
}

impl SwimmerState {
    /// Resting state at the origin with all joints straight.
    pub fn at_rest(n_joints: usize) -> Self {
        SwimmerState {
            com_position: Vec2::ZERO,
            heading: 0.0,
            com_velocity: Vec2::ZERO,
            angular_velocity: 0.0,
            joint_angles: vec![0.0; n_joints],
            time: 0.0,
        }
    }
}

/// Closed swimmer boundary: COM-centered body-frame points in a fixed
/// traversal order (head, one side to the tail, the other side back).
#[derive(Debug, Clone, PartialEq)]
pub struct Outline {
    points: Vec<Vec2>,
}

impl Outline {
    /// Wrap a point list that is already COM-centered. The area-weighted
    /// centroid must sit within 1e-9 of the origin.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let c = outline::area_centroid(&points);
        if c.norm() > 1e-9 {
            return Err(Error::OutlineSelfIntersects { s: f64::NAN });
        }
        Ok(Outline { points })
    }

    pub(crate) fn from_centered(points: Vec<Vec2>) -> Self {
        Outline { points }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Perimeter of the boundary polygon.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| (self.points[(i + 1) % n] - self.points[i]).norm())
            .sum()
    }
}

/// Per-point 2D force vectors, index-aligned with an [`Outline`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceForces {
    forces: Vec<Vec2>,
}

impl SurfaceForces {
    pub fn new(forces: Vec<Vec2>) -> Self {
        debug_assert!(forces.iter().all(|f| f.is_finite()));
        SurfaceForces { forces }
    }

    pub fn forces(&self) -> &[Vec2] {
        &self.forces
    }

    pub fn len(&self) -> usize {
        self.forces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }

    pub fn net(&self) -> Vec2 {
        self.forces.iter().fold(Vec2::ZERO, |acc, &f| acc + f)
    }
}

/// Half-width of the body as a function of arc-length fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthProfile {
    /// w(s) = w_max * sqrt(1 - (2s - 1)^2); tapers to zero at both ends.
    HalfEllipse { w_max: f64 },
    /// Constant half-width; the flat end caps are closed by the resampler.
    Constant { w: f64 },
}

impl WidthProfile {
    pub fn half_width(&self, s: f64) -> f64 {
        match *self {
            WidthProfile::HalfEllipse { w_max } => {
                let u = 2.0 * s - 1.0;
                w_max * (1.0 - u * u).max(0.0).sqrt()
            }
            WidthProfile::Constant { w } => w,
        }
    }

    fn max_half_width(&self) -> f64 {
        match *self {
            WidthProfile::HalfEllipse { w_max } => w_max,
            WidthProfile::Constant { w } => w,
        }
    }
}

/// Fixed body shape and mass model: unit body length, uniform linear
/// density along the midline.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyGeometry {
    n_segments: usize,
    body_length: f64,
    width: WidthProfile,
    mass: f64,
    n_outline_points: usize,
    moment_of_inertia: f64,
}

impl BodyGeometry {
    pub fn new(
        n_segments: usize,
        width: WidthProfile,
        mass: f64,
        n_outline_points: usize,
    ) -> Result<Self> {
        assert!(n_segments >= 2, "need at least 2 segments (1 joint)");
        assert!(mass > 0.0 && mass.is_finite());
        assert!(n_outline_points >= 8);
        assert!(
            width.max_half_width() > 0.0,
            "width profile must be positive on (0, 1)"
        );
        let body_length = 1.0;
        let moment_of_inertia = straight_body_inertia(n_segments, body_length, mass);
        Ok(BodyGeometry {
            n_segments,
            body_length,
            width,
            mass,
            n_outline_points,
            moment_of_inertia,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn n_joints(&self) -> usize {
        self.n_segments - 1
    }

    pub fn body_length(&self) -> f64 {
        self.body_length
    }

    pub fn width(&self) -> &WidthProfile {
        &self.width
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn n_outline_points(&self) -> usize {
        self.n_outline_points
    }

    /// Moment of inertia of the straight body about its COM, held constant
    /// during an episode.
    pub fn moment_of_inertia(&self) -> f64 {
        self.moment_of_inertia
    }
}

impl Default for BodyGeometry {
    /// 20 segments (19 joints), half-ellipse width 0.05, unit mass,
    /// 400 outline points.
    fn default() -> Self {
        BodyGeometry::new(20, WidthProfile::HalfEllipse { w_max: 0.05 }, 1.0, 400)
            .expect("default geometry is valid")
    }
}

/// Sum of per-segment rod inertias plus parallel-axis terms for the
/// straight configuration; equals m L^2 / 12 up to rounding.
fn straight_body_inertia(n_segments: usize, length: f64, mass: f64) -> f64 {
    let n = n_segments as f64;
    let seg_len = length / n;
    let seg_mass = mass / n;
    let rod = seg_mass * seg_len * seg_len / 12.0;
    (0..n_segments)
        .map(|k| {
            let mid = (k as f64 + 0.5) * seg_len - 0.5 * length;
            rod + seg_mass * mid * mid
        })
        .sum()
}

/// Chain of equal-length segments in the body frame, translated so the
/// midline COM (uniform linear density) is at the origin. Returns the
/// n_segments + 1 node points. Segment k+1's direction is segment k's
/// rotated by joint_angles[k]; the first segment points along +x.
pub fn build_midline(joint_angles: &[f64], geometry: &BodyGeometry) -> Vec<Vec2> {
    assert_eq!(joint_angles.len(), geometry.n_joints());
    debug_assert!(joint_angles.iter().all(|a| a.is_finite()));
    let n = geometry.n_segments();
    let seg_len = geometry.body_length() / n as f64;

    let mut pts = Vec::with_capacity(n + 1);
    pts.push(Vec2::ZERO);
    let mut dir_angle = 0.0;
    for k in 0..n {
        if k > 0 {
            dir_angle += joint_angles[k - 1];
        }
        let last = *pts.last().unwrap();
        pts.push(last + seg_len * Vec2::from_angle(dir_angle));
    }

    let com = (0..n)
        .map(|k| (pts[k] + pts[k + 1]) * 0.5)
        .fold(Vec2::ZERO, |acc, m| acc + m)
        / n as f64;
    for p in &mut pts {
        *p = *p - com;
    }
    pts
}

/// Advance COM translation and rotation by one semi-implicit Euler step.
/// Forces are world-frame vectors applied at the outline points (body
/// frame, rotated by the heading). Joint angles and time are the caller's
/// responsibility.
pub fn integrate_step(
    state: &SwimmerState,
    forces: &SurfaceForces,
    outline: &Outline,
    geometry: &BodyGeometry,
    dt: f64,
) -> SwimmerState {
    assert!(dt > 0.0);
    assert_eq!(forces.len(), outline.len());

    let net_force = forces.net();
    let (sin_h, cos_h) = state.heading.sin_cos();
    let torque: f64 = outline
        .points()
        .iter()
        .zip(forces.forces())
        .map(|(&b, &f)| {
            let r = Vec2::new(cos_h * b.x - sin_h * b.y, sin_h * b.x + cos_h * b.y);
            r.cross(f)
        })
        .sum();

    let v = state.com_velocity + net_force * (dt / geometry.mass());
    let w = state.angular_velocity + torque * (dt / geometry.moment_of_inertia());

    SwimmerState {
        com_position: state.com_position + v * dt,
        heading: wrap_angle(state.heading + w * dt),
        com_velocity: v,
        angular_velocity: w,
        joint_angles: state.joint_angles.clone(),
        time: state.time,
    }
}

/// One simulated episode: per-step states, plus outlines and forces when
/// recorded in full detail.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: SwimmerState,
    /// State after each step; `states[k].time == (k + 1) * dt`.
    pub states: Vec<SwimmerState>,
    /// Outline and forces used for step k (at time k * dt), present when
    /// the episode was run with full detail.
    pub detail: Option<Vec<(Outline, SurfaceForces)>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len()
    }

    pub fn final_state(&self) -> &SwimmerState {
        self.states.last().unwrap_or(&self.initial)
    }

    /// Net COM translation over the episode.
    pub fn net_displacement(&self) -> Vec2 {
        self.final_state().com_position - self.initial.com_position
    }

    /// Magnitude of the net COM translation.
    pub fn displacement(&self) -> f64 {
        self.net_displacement().norm()
    }
}

/// How much per-step data an episode retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLevel {
    /// States only; cheapest, enough for rewards and refitting.
    States,
    /// States plus every outline and force field.
    Full,
}

/// Number of past outlines retained for the force model.
pub const HISTORY_LEN: usize = 3;

/// Run an episode. `joints_for` supplies the prescribed joint angles for
/// each step given the most recent state (the bootstrap call sees a
/// resting state at t = 0 with zero joints). The force model is queried
/// with the current outline and up to [`HISTORY_LEN`] past outlines,
/// most recent first.
pub fn step_episode(
    joints_for: &mut dyn FnMut(&SwimmerState) -> Vec<f64>,
    model: &dyn ForceModel,
    geometry: &BodyGeometry,
    dt: f64,
    n_steps: usize,
    record: RecordLevel,
) -> Result<Trajectory> {
    if n_steps < 1 {
        return Err(Error::EpisodeTooShort {
            needed: 1,
            got: n_steps,
        });
    }
    assert!(dt > 0.0 && dt.is_finite());

    let mut initial = SwimmerState::at_rest(geometry.n_joints());
    initial.joint_angles = joints_for(&initial);
    assert_eq!(initial.joint_angles.len(), geometry.n_joints());

    let mut states = Vec::with_capacity(n_steps);
    let mut detail = match record {
        RecordLevel::Full => Some(Vec::with_capacity(n_steps)),
        RecordLevel::States => None,
    };
    let mut history: Vec<Outline> = Vec::with_capacity(HISTORY_LEN);

    let mut current = initial.clone();
    for step in 0..n_steps {
        let abort = |e: Error| Error::EpisodeAborted {
            step,
            source: Box::new(e),
        };
        let outline = build_outline(
            &build_midline(&current.joint_angles, geometry),
            geometry,
        )
        .map_err(abort)?;
        let forces = model
            .forces(&outline, &history, dt, &current)
            .map_err(abort)?;

        let mut next = integrate_step(&current, &forces, &outline, geometry, dt);
        next.time = (step + 1) as f64 * dt;
        next.joint_angles = joints_for(&next);

        if let Some(d) = detail.as_mut() {
            d.push((outline.clone(), forces));
        }
        history.insert(0, outline);
        history.truncate(HISTORY_LEN);

        states.push(next.clone());
        current = next;
    }

    Ok(Trajectory {
        initial,
        states,
        detail,
        dt,
    })
}

/// Episode driven purely by a gait parameter vector.
pub fn gait_driver<'a>(
    p: &'a crate::gait::ParamVector,
    n_joints: usize,
) -> impl FnMut(&SwimmerState) -> Vec<f64> + 'a {
    move |state: &SwimmerState| crate::gait::joint_angles(p, state.time, n_joints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::ParamVector;
    use crate::hydro::{DragCoefficients, ResistiveModel};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn straight_midline_is_collinear_and_centered() {
        let geom = BodyGeometry::default();
        let pts = build_midline(&vec![0.0; 19], &geom);
        assert_eq!(pts.len(), 21);
        for (i, p) in pts.iter().enumerate() {
            assert_relative_eq!(p.x, i as f64 / 20.0 - 0.5, epsilon = 1e-15);
            assert_relative_eq!(p.y, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_segment_right_angle_geometry() {
        let geom = BodyGeometry::new(2, WidthProfile::HalfEllipse { w_max: 0.05 }, 1.0, 400)
            .unwrap();
        let pts = build_midline(&[std::f64::consts::FRAC_PI_2], &geom);
        // Uncentered chain: (0,0), (0.5,0), (0.5,0.5).
        // Segment midpoints (0.25,0) and (0.5,0.25); COM (0.375, 0.125).
        let com = Vec2::new(0.375, 0.125);
        let expect = [
            Vec2::ZERO - com,
            Vec2::new(0.5, 0.0) - com,
            Vec2::new(0.5, 0.5) - com,
        ];
        for (p, e) in pts.iter().zip(expect) {
            assert_relative_eq!(p.x, e.x, epsilon = 1e-15);
            assert_relative_eq!(p.y, e.y, epsilon = 1e-15);
        }
    }

    #[test]
    fn total_turning_telescopes() {
        let geom = BodyGeometry::default();
        let mut rng = crate::seed::rng(3, "turning");
        let joints: Vec<f64> = (0..19).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let pts = build_midline(&joints, &geom);
        let first = pts[1] - pts[0];
        let last = pts[20] - pts[19];
        let turn = last.y.atan2(last.x) - first.y.atan2(first.x);
        let total: f64 = joints.iter().sum();
        assert_relative_eq!(wrap_angle(turn), wrap_angle(total), epsilon = 1e-12);
    }

    #[test]
    fn integrate_zero_forces_keeps_velocity() {
        let geom = BodyGeometry::default();
        let outline = build_outline(&build_midline(&vec![0.0; 19], &geom), &geom).unwrap();
        let forces = SurfaceForces::new(vec![Vec2::ZERO; outline.len()]);
        let mut state = SwimmerState::at_rest(19);
        state.com_velocity = Vec2::new(0.3, -0.1);
        state.angular_velocity = 0.05;
        let dt = 0.01;
        let next = integrate_step(&state, &forces, &outline, &geom, dt);
        assert_eq!(next.com_velocity, state.com_velocity);
        assert_eq!(next.angular_velocity, state.angular_velocity);
        assert_relative_eq!(
            (next.com_position - state.com_position).x,
            state.com_velocity.x * dt,
            epsilon = 1e-16
        );
    }

    #[test]
    fn uniform_force_on_symmetric_outline_has_no_torque() {
        let geom = BodyGeometry::default();
        let outline = build_outline(&build_midline(&vec![0.0; 19], &geom), &geom).unwrap();
        let f = Vec2::new(0.002, 0.001);
        let n = outline.len();
        let forces = SurfaceForces::new(vec![f; n]);
        let state = SwimmerState::at_rest(19);
        let dt = 0.01;
        let next = integrate_step(&state, &forces, &outline, &geom, dt);
        assert!(
            next.angular_velocity.abs() * geom.moment_of_inertia() / dt < 1e-9,
            "torque {} too large",
            next.angular_velocity * geom.moment_of_inertia() / dt
        );
        let dv = next.com_velocity - state.com_velocity;
        assert_relative_eq!(dv.x, n as f64 * f.x * dt / geom.mass(), max_relative = 1e-12);
        assert_relative_eq!(dv.y, n as f64 * f.y * dt / geom.mass(), max_relative = 1e-12);
    }

    #[test]
    fn momentum_bookkeeping_identity() {
        let geom = BodyGeometry::default();
        let outline = build_outline(&build_midline(&vec![0.0; 19], &geom), &geom).unwrap();
        let mut rng = crate::seed::rng(4, "momentum");
        let forces = SurfaceForces::new(
            (0..outline.len())
                .map(|_| Vec2::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3)))
                .collect(),
        );
        let mut state = SwimmerState::at_rest(19);
        state.com_velocity = Vec2::new(0.02, 0.01);
        let dt = 0.005;
        let next = integrate_step(&state, &forces, &outline, &geom, dt);
        let dv = next.com_velocity - state.com_velocity;
        let net = forces.net();
        assert_relative_eq!(dv.x / dt * geom.mass(), net.x, max_relative = 1e-12);
        assert_relative_eq!(dv.y / dt * geom.mass(), net.y, max_relative = 1e-12);
    }

    #[test]
    fn zero_amplitude_gait_never_moves() {
        let p = ParamVector::new([0.0; 6], [0.0, -2.0, 0.0, 0.0, 0.0], 2.0).unwrap();
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let mut driver = gait_driver(&p, geom.n_joints());
        let traj =
            step_episode(&mut driver, &model, &geom, 0.01, 50, RecordLevel::Full).unwrap();
        assert_eq!(traj.displacement(), 0.0);
        assert_eq!(traj.final_state().com_velocity, Vec2::ZERO);
    }

    #[test]
    fn zero_steps_rejected() {
        let p = ParamVector::default_gait();
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let mut driver = gait_driver(&p, geom.n_joints());
        let err = step_episode(&mut driver, &model, &geom, 0.01, 0, RecordLevel::States);
        assert!(matches!(err, Err(Error::EpisodeTooShort { .. })));
    }

    #[test]
    fn default_gait_moves_and_repeats_bitwise() {
        let p = ParamVector::default_gait();
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let dt = p.period() / 200.0;
        let n_steps = 600; // three periods
        let run = || {
            let mut driver = gait_driver(&p, geom.n_joints());
            step_episode(&mut driver, &model, &geom, dt, n_steps, RecordLevel::States).unwrap()
        };
        let a = run();
        let b = run();
        assert!(a.displacement() > 0.0, "gait should produce net motion");
        assert_eq!(a.n_steps(), b.n_steps());
        for (sa, sb) in a.states.iter().zip(&b.states) {
            assert_eq!(sa, sb, "trajectories must be bitwise identical");
        }
    }

    #[test]
    fn frame_consistency_under_initial_rotation() {
        let p = ParamVector::default_gait();
        let geom = BodyGeometry::default();
        let model = ResistiveModel::new(DragCoefficients::default());
        let dt = p.period() / 200.0;
        let n = 120;

        let mut driver = gait_driver(&p, geom.n_joints());
        let base = step_episode(&mut driver, &model, &geom, dt, n, RecordLevel::States).unwrap();

        let alpha = 0.7;
        // Same episode but integrated from a rotated initial heading.
        let mut driver = gait_driver(&p, geom.n_joints());
        let mut initial = SwimmerState::at_rest(geom.n_joints());
        initial.heading = alpha;
        initial.joint_angles = driver(&initial);
        let mut history: Vec<Outline> = Vec::new();
        let mut current = initial;
        let mut rotated_states = Vec::new();
        for step in 0..n {
            let outline =
                build_outline(&build_midline(&current.joint_angles, &geom), &geom).unwrap();
            let forces = model.forces(&outline, &history, dt, &current).unwrap();
            let mut next = integrate_step(&current, &forces, &outline, &geom, dt);
            next.time = (step + 1) as f64 * dt;
            next.joint_angles = driver(&next);
            history.insert(0, outline);
            history.truncate(HISTORY_LEN);
            rotated_states.push(next.clone());
            current = next;
        }

        for (s, r) in base.states.iter().zip(&rotated_states) {
            let rotated = s.com_position.rotated(alpha);
            assert_relative_eq!(rotated.x, r.com_position.x, epsilon = 1e-9);
            assert_relative_eq!(rotated.y, r.com_position.y, epsilon = 1e-9);
            assert_relative_eq!(
                wrap_angle(s.heading + alpha),
                r.heading,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn straight_inertia_matches_rod_formula() {
        for n in [2, 5, 20, 50] {
            let i = straight_body_inertia(n, 1.0, 1.0);
            assert_relative_eq!(i, 1.0 / 12.0, max_relative = 1e-12);
        }
    }
}
