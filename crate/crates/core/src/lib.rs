//! Gait optimization toolkit for an articulated 2D swimmer.
//!
//! The swimmer is a chain of rigid segments whose joint angles follow a
//! 12-parameter sinusoidal gait. Surface forces come from a pluggable force
//! model: a deterministic resistive-drag oracle or a learned feed-forward
//! surrogate that maps outline history to per-point forces. On top of the
//! simulator sit two gait optimizers: coordinate hill climbing and a
//! baseline-guided search that augments the gait with bounded per-joint
//! deltas, refits parameters to the augmented motion, and accepts updates
//! only when a clean re-evaluation improves displacement.

pub mod error;
pub mod gait;
pub mod geom;
pub mod hydro;
pub mod kinematics;
pub mod optimize;
pub mod refit;
pub mod seed;
pub mod surrogate;

pub use error::{Error, Result};
pub use gait::ParamVector;
pub use geom::Vec2;
pub use hydro::{DragCoefficients, ForceModel};
pub use kinematics::{BodyGeometry, Outline, SurfaceForces, SwimmerState, Trajectory};
pub use optimize::{AugmentationPolicy, Observation, SearchConfig};
pub use surrogate::{ForceDataset, SurrogateNetwork, TrainConfig};
