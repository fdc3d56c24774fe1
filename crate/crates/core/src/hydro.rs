//! Hydrodynamic force models.
//!
//! [`ForceModel`] is the single interface the simulator talks to: given the
//! current outline, up to three past outlines, and the rigid-body state, it
//! returns one force vector per outline point. Two implementations exist:
//! the deterministic resistive-drag oracle below, and the learned surrogate
//! in [`crate::surrogate`].

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kinematics::{Outline, SurfaceForces, SwimmerState};
use crate::surrogate::SurrogateNetwork;
use serde::{Deserialize, Serialize};

/// Behavioral contract shared by the oracle and the surrogate: pure given
/// inputs, output index-aligned with the current outline.
pub trait ForceModel: Sync {
    /// `history` holds past outlines, most recent first. Implementations
    /// declare how many they need via [`ForceModel::history_needed`]; when
    /// fewer are available (episode start) they must degrade gracefully.
    fn forces(
        &self,
        current: &Outline,
        history: &[Outline],
        dt: f64,
        state: &SwimmerState,
    ) -> Result<SurfaceForces>;

    /// Number of past outlines the model wants to see.
    fn history_needed(&self) -> usize;
}

/// Anisotropic drag coefficients per unit arc length. Normal drag must be
/// at least the tangential drag; the anisotropy is what lets an undulating
/// body generate net thrust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragCoefficients {
    pub c_tangent: f64,
    pub c_normal: f64,
}

impl DragCoefficients {
    pub fn new(c_tangent: f64, c_normal: f64) -> Self {
        assert!(c_tangent > 0.0, "c_tangent must be positive");
        assert!(
            c_normal >= c_tangent,
            "c_normal must be at least c_tangent"
        );
        DragCoefficients {
            c_tangent,
            c_normal,
        }
    }
}

impl Default for DragCoefficients {
    /// Classical slender-body ratio: normal drag twice the tangential.
    fn default() -> Self {
        DragCoefficients {
            c_tangent: 1.0,
            c_normal: 2.0,
        }
    }
}

/// Per-point world-frame velocities: COM translation, rotation, and the
/// body-frame deformation rate estimated by backward difference against
/// the previous outline. With no previous outline the deformation rate
/// is zero.
pub fn point_velocities(
    current: &Outline,
    previous: Option<&Outline>,
    dt: f64,
    state: &SwimmerState,
) -> Result<Vec<Vec2>> {
    if let Some(prev) = previous {
        if prev.len() != current.len() {
            return Err(Error::OutlineLengthMismatch {
                expected: current.len(),
                got: prev.len(),
            });
        }
    }
    let (sin_h, cos_h) = state.heading.sin_cos();
    let rot = |b: Vec2| Vec2::new(cos_h * b.x - sin_h * b.y, sin_h * b.x + cos_h * b.y);
    Ok(current
        .points()
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let r = rot(b);
            let deform = match previous {
                Some(prev) => rot((b - prev.points()[i]) / dt),
                None => Vec2::ZERO,
            };
            state.com_velocity + state.angular_velocity * r.perp() + deform
        })
        .collect())
}

/// Resistive-force drag oracle: each point feels drag opposing its own
/// velocity, decomposed along the local tangent and normal and weighted by
/// the local arc length.
#[derive(Debug, Clone)]
pub struct ResistiveModel {
    coeffs: DragCoefficients,
}

impl ResistiveModel {
    pub fn new(coeffs: DragCoefficients) -> Self {
        ResistiveModel { coeffs }
    }

    pub fn coeffs(&self) -> DragCoefficients {
        self.coeffs
    }
}

/// The drag law itself: local tangents from neighboring points, arc weight
/// from adjacent chord lengths.
pub fn resistive_forces(
    current: &Outline,
    previous: Option<&Outline>,
    dt: f64,
    coeffs: DragCoefficients,
    state: &SwimmerState,
) -> Result<SurfaceForces> {
    assert!(dt > 0.0);
    let velocities = point_velocities(current, previous, dt, state)?;
    let pts = current.points();
    let n = pts.len();
    let (sin_h, cos_h) = state.heading.sin_cos();
    let rot = |b: Vec2| Vec2::new(cos_h * b.x - sin_h * b.y, sin_h * b.x + cos_h * b.y);

    let mut forces = Vec::with_capacity(n);
    for i in 0..n {
        let prev = pts[(i + n - 1) % n];
        let next = pts[(i + 1) % n];
        let tangent_body = (next - prev)
            .normalized(1e-12)
            .expect("outline points are distinct");
        let tangent = rot(tangent_body);
        let normal = tangent.perp();
        let ds = 0.5 * ((next - pts[i]).norm() + (pts[i] - prev).norm());
        let u = velocities[i];
        let f = -(coeffs.c_tangent * u.dot(tangent) * tangent
            + coeffs.c_normal * u.dot(normal) * normal)
            * ds;
        forces.push(f);
    }
    Ok(SurfaceForces::new(forces))
}

impl ForceModel for ResistiveModel {
    fn forces(
        &self,
        current: &Outline,
        history: &[Outline],
        dt: f64,
        state: &SwimmerState,
    ) -> Result<SurfaceForces> {
        resistive_forces(current, history.first(), dt, self.coeffs, state)
    }

    fn history_needed(&self) -> usize {
        1
    }
}

/// Which force model to build.
pub enum ForceModelKind {
    Oracle(DragCoefficients),
    Surrogate(SurrogateNetwork),
}

/// Construct a boxed force model. A surrogate handle must already carry
/// trained weights.
pub fn make_force_model(kind: ForceModelKind) -> Result<Box<dyn ForceModel>> {
    match kind {
        ForceModelKind::Oracle(coeffs) => Ok(Box::new(ResistiveModel::new(coeffs))),
        ForceModelKind::Surrogate(net) => {
            if !net.is_trained() {
                return Err(Error::SurrogateUntrained);
            }
            Ok(Box::new(crate::surrogate::SurrogateForceModel::new(net)?))
        }
    }
}
