//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gait parameter {index} is not finite (value {value})")]
    NonFiniteParam { index: usize, value: f64 },

    #[error("angular frequency must be strictly positive, got {value}")]
    NonPositiveOmega { value: f64 },

    #[error("arc-length fraction s must lie in [0, 1], got {s}")]
    ArcLengthOutOfRange { s: f64 },

    #[error("expected a flat vector of {expected} parameters, got {got}")]
    ParamLength { expected: usize, got: usize },

    #[error("outline offset self-intersects near s = {s:.4}; joint angles outside operating range")]
    OutlineSelfIntersects { s: f64 },

    #[error("outlines are not index-aligned: {expected} points vs {got}")]
    OutlineLengthMismatch { expected: usize, got: usize },

    #[error("episode needs at least {needed} steps, got {got}")]
    EpisodeTooShort { needed: usize, got: usize },

    #[error("input has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("surrogate network has no trained weights; train it or load a weights file")]
    SurrogateUntrained,

    #[error("training diverged at epoch {epoch}: loss {loss:.3e} exceeds 10x initial {initial:.3e}")]
    TrainingDiverged { epoch: usize, loss: f64, initial: f64 },

    #[error("dataset split is empty: {which}")]
    EmptySplit { which: &'static str },

    #[error("parameter sweep is empty")]
    EmptySweep,

    #[error("angle target set is empty")]
    EmptyTargets,

    #[error("sweep gait {index} is invalid: {source}")]
    SweepGait {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("episode aborted at step {step}: {source}")]
    EpisodeAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("baseline displacement {magnitude:.3e} is too small to define a direction")]
    DegenerateBaseline { magnitude: f64 },

    #[error("weights file has format version {got}, this build reads version {expected}")]
    WeightsVersion { expected: u32, got: u32 },
}
