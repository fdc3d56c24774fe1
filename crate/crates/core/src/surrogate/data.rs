//! Training data for the force surrogate: stacked outline histories mapped
//! to surface force fields, generated by simulating a parameter sweep
//! against the drag oracle.

use super::net::Normalization;
use super::stack_input_dim;
use crate::error::{Error, Result};
use crate::gait::ParamVector;
use crate::hydro::ForceModel;
use crate::kinematics::{gait_driver, step_episode, BodyGeometry, RecordLevel};
use rand::seq::SliceRandom;
use std::ops::Range;

/// Episode length for dataset generation, tied to each gait's own period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLength {
    pub periods: f64,
    pub steps_per_period: usize,
}

impl EpisodeLength {
    pub fn n_steps(&self) -> usize {
        (self.periods * self.steps_per_period as f64).round() as usize
    }
}

impl Default for EpisodeLength {
    fn default() -> Self {
        EpisodeLength {
            periods: 3.0,
            steps_per_period: 200,
        }
    }
}

/// Which gait a block of samples came from.
#[derive(Debug, Clone)]
pub struct GaitProvenance {
    pub params: ParamVector,
    pub samples: Range<usize>,
    pub held_out: bool,
    pub dt: f64,
}

/// Sample store. Inputs and targets live in flat f32 arrays (the sweep for
/// the full pipeline is a few hundred MB otherwise); all arithmetic happens
/// in f64 after conversion.
#[derive(Debug, Clone)]
pub struct ForceDataset {
    input_dim: usize,
    target_dim: usize,
    inputs: Vec<f32>,
    targets: Vec<f32>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    gaits: Vec<GaitProvenance>,
    norm: Normalization,
}

impl ForceDataset {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn input_row(&self, i: usize) -> &[f32] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target_row(&self, i: usize) -> &[f32] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn provenance(&self) -> &[GaitProvenance] {
        &self.gaits
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn raw_inputs(&self) -> &[f32] {
        &self.inputs
    }

    pub fn raw_targets(&self) -> &[f32] {
        &self.targets
    }

    /// Rebuild from raw parts (dataset file loading). Normalization is
    /// recomputed from the train split.
    pub fn from_parts(
        input_dim: usize,
        target_dim: usize,
        inputs: Vec<f32>,
        targets: Vec<f32>,
        gaits: Vec<GaitProvenance>,
    ) -> Result<Self> {
        assert_eq!(inputs.len() % input_dim, 0);
        assert_eq!(targets.len() % target_dim, 0);
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for g in &gaits {
            let bucket = if g.held_out { &mut test_idx } else { &mut train_idx };
            bucket.extend(g.samples.clone());
        }
        let norm = compute_normalization(&inputs, &targets, input_dim, target_dim, &train_idx);
        Ok(ForceDataset {
            input_dim,
            target_dim,
            inputs,
            targets,
            train_idx,
            test_idx,
            gaits,
            norm,
        })
    }

    /// Synthetic dataset for tests: the last `n_test` samples form the
    /// held-out split.
    pub fn from_samples(
        inputs: Vec<f64>,
        targets: Vec<f64>,
        input_dim: usize,
        target_dim: usize,
        n_test: usize,
    ) -> Self {
        assert_eq!(inputs.len() % input_dim, 0);
        let n = inputs.len() / input_dim;
        assert_eq!(targets.len(), n * target_dim);
        assert!(n_test <= n);
        let inputs: Vec<f32> = inputs.iter().map(|&v| v as f32).collect();
        let targets: Vec<f32> = targets.iter().map(|&v| v as f32).collect();
        let train_idx: Vec<usize> = (0..n - n_test).collect();
        let test_idx: Vec<usize> = (n - n_test..n).collect();
        let norm = compute_normalization(&inputs, &targets, input_dim, target_dim, &train_idx);
        ForceDataset {
            input_dim,
            target_dim,
            inputs,
            targets,
            train_idx,
            test_idx,
            gaits: Vec::new(),
            norm,
        }
    }
}

/// Simulate every gait in the sweep with the oracle and record
/// (stacked-outline, force) pairs from the fourth step onward, when three
/// past outlines exist. Whole gaits are held out: `len / 5` of them, chosen
/// by a seeded shuffle. Normalization comes from the training split only.
pub fn generate_dataset(
    sweep: &[ParamVector],
    geometry: &BodyGeometry,
    oracle: &dyn ForceModel,
    episode: EpisodeLength,
    seed: u64,
) -> Result<ForceDataset> {
    if sweep.is_empty() {
        return Err(Error::EmptySweep);
    }
    let n_points = geometry.n_outline_points();
    let input_dim = stack_input_dim(n_points);
    let target_dim = 2 * n_points;
    let n_steps = episode.n_steps();

    let n_test_gaits = sweep.len() / 5;
    let mut order: Vec<usize> = (0..sweep.len()).collect();
    let mut rng = crate::seed::rng(seed, "splits");
    order.shuffle(&mut rng);
    let held_out: std::collections::HashSet<usize> =
        order[sweep.len() - n_test_gaits..].iter().copied().collect();

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut gaits = Vec::with_capacity(sweep.len());

    for (index, p) in sweep.iter().enumerate() {
        let dt = p.period() / episode.steps_per_period as f64;
        let mut driver = gait_driver(p, geometry.n_joints());
        let traj = step_episode(&mut driver, oracle, geometry, dt, n_steps, RecordLevel::Full)
            .map_err(|e| Error::SweepGait {
                index,
                source: Box::new(e),
            })?;
        let detail = traj.detail.as_ref().expect("full record requested");

        let start = inputs.len() / input_dim;
        for k in 3..detail.len() {
            for back in 0..4 {
                for pt in detail[k - back].0.points() {
                    inputs.push(pt.x as f32);
                    inputs.push(pt.y as f32);
                }
            }
            for f in detail[k].1.forces() {
                targets.push(f.x as f32);
                targets.push(f.y as f32);
            }
        }
        gaits.push(GaitProvenance {
            params: p.clone(),
            samples: start..inputs.len() / input_dim,
            held_out: held_out.contains(&index),
            dt,
        });
    }

    ForceDataset::from_parts(input_dim, target_dim, inputs, targets, gaits)
}

fn compute_normalization(
    inputs: &[f32],
    targets: &[f32],
    input_dim: usize,
    target_dim: usize,
    train_idx: &[usize],
) -> Normalization {
    let n = train_idx.len().max(1) as f64;
    let stats = |data: &[f32], dim: usize| -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0f64; dim];
        for &i in train_idx {
            for (m, &v) in mean.iter_mut().zip(&data[i * dim..(i + 1) * dim]) {
                *m += v as f64;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0f64; dim];
        for &i in train_idx {
            for ((s, &v), &m) in var.iter_mut().zip(&data[i * dim..(i + 1) * dim]).zip(&mean) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        let scale = var
            .iter()
            .map(|&s| (s / n).max(1e-9).sqrt())
            .collect();
        (mean, scale)
    };
    let (input_mean, input_scale) = stats(inputs, input_dim);
    let (target_mean, target_scale) = stats(targets, target_dim);
    Normalization {
        input_mean,
        input_scale,
        target_mean,
        target_scale,
    }
}

/// Combined loss of the constant predictor that always answers the
/// training-split mean force field, evaluated on the held-out split. The
/// reference bar for "did the network learn anything".
pub fn mean_predictor_loss(data: &ForceDataset, weights: &super::LossWeights) -> f64 {
    let dim = data.target_dim();
    let mut mean = vec![0.0f64; dim];
    for &i in data.train_indices() {
        for (m, &v) in mean.iter_mut().zip(data.target_row(i)) {
            *m += v as f64;
        }
    }
    for m in &mut mean {
        *m /= data.train_indices().len().max(1) as f64;
    }
    let mut total = 0.0;
    for &i in data.test_indices() {
        let target: Vec<f64> = data.target_row(i).iter().map(|&v| v as f64).collect();
        total += super::loss(&mean, &target, weights).total;
    }
    total / data.test_indices().len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::{DragCoefficients, ResistiveModel};

    fn tiny_geometry() -> BodyGeometry {
        BodyGeometry::new(
            6,
            crate::kinematics::WidthProfile::HalfEllipse { w_max: 0.05 },
            1.0,
            40,
        )
        .unwrap()
    }

    #[test]
    fn single_gait_hundred_usable_steps() {
        let geom = tiny_geometry();
        let oracle = ResistiveModel::new(DragCoefficients::default());
        let sweep = vec![ParamVector::default_gait()];
        // 103 steps total; the first 3 lack history.
        let episode = EpisodeLength {
            periods: 1.03,
            steps_per_period: 100,
        };
        assert_eq!(episode.n_steps(), 103);
        let data = generate_dataset(&sweep, &geom, &oracle, episode, 1).unwrap();
        assert_eq!(data.n_samples(), 100);
        assert_eq!(data.train_indices().len(), 100);
        assert!(data.test_indices().is_empty(), "1/5 of one gait is zero");
        assert_eq!(data.input_dim(), 8 * 40);
        assert_eq!(data.target_dim(), 2 * 40);
    }

    #[test]
    fn fifty_gaits_hold_out_ten_whole_gaits() {
        let geom = tiny_geometry();
        let oracle = ResistiveModel::new(DragCoefficients::default());
        let base = ParamVector::default_gait();
        let sweep: Vec<ParamVector> = (0..50)
            .map(|i| base.with_amp_scaled(0.5 + 0.01 * i as f64).unwrap())
            .collect();
        let episode = EpisodeLength {
            periods: 0.2,
            steps_per_period: 50,
        }; // 10 steps -> 7 samples per gait
        let data = generate_dataset(&sweep, &geom, &oracle, episode, 9).unwrap();
        let held: Vec<_> = data.provenance().iter().filter(|g| g.held_out).collect();
        assert_eq!(held.len(), 10);
        assert_eq!(data.n_samples(), 50 * 7);
        assert_eq!(data.test_indices().len(), 10 * 7);
        assert_eq!(data.train_indices().len(), 40 * 7);
        // No sample index in both splits.
        let train: std::collections::HashSet<_> = data.train_indices().iter().collect();
        assert!(data.test_indices().iter().all(|i| !train.contains(i)));
    }

    #[test]
    fn zero_amplitude_gait_has_zero_targets() {
        let geom = tiny_geometry();
        let oracle = ResistiveModel::new(DragCoefficients::default());
        let zero = ParamVector::new([0.0; 6], [0.0, -2.0, 0.0, 0.0, 0.0], 2.0).unwrap();
        let sweep = vec![ParamVector::default_gait(), zero];
        let episode = EpisodeLength {
            periods: 0.3,
            steps_per_period: 50,
        };
        let data = generate_dataset(&sweep, &geom, &oracle, episode, 3).unwrap();
        let zero_gait = &data.provenance()[1];
        for i in zero_gait.samples.clone() {
            assert!(data.target_row(i).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn split_shuffle_depends_on_seed_only() {
        let geom = tiny_geometry();
        let oracle = ResistiveModel::new(DragCoefficients::default());
        let base = ParamVector::default_gait();
        let sweep: Vec<ParamVector> = (0..10)
            .map(|i| base.with_amp_scaled(0.8 + 0.02 * i as f64).unwrap())
            .collect();
        let episode = EpisodeLength {
            periods: 0.2,
            steps_per_period: 50,
        };
        let a = generate_dataset(&sweep, &geom, &oracle, episode, 5).unwrap();
        let b = generate_dataset(&sweep, &geom, &oracle, episode, 5).unwrap();
        let held = |d: &ForceDataset| -> Vec<bool> {
            d.provenance().iter().map(|g| g.held_out).collect()
        };
        assert_eq!(held(&a), held(&b));
        let c = generate_dataset(&sweep, &geom, &oracle, episode, 6).unwrap();
        assert_eq!(held(&c).iter().filter(|&&h| h).count(), 2);
    }

    #[test]
    fn empty_sweep_rejected() {
        let geom = tiny_geometry();
        let oracle = ResistiveModel::new(DragCoefficients::default());
        let err = generate_dataset(&[], &geom, &oracle, EpisodeLength::default(), 1);
        assert!(matches!(err, Err(Error::EmptySweep)));
    }
}
