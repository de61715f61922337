//! Synthetic training trajectories with known downstream accuracy.
//!
//! There are [`NUM_CLASSES`] global classes with orthogonal means `s` apart;
//! each image holds patches of three of them. In a fixed random rotation a
//! patch is
//!
//! ```text
//! y_j = (s/√2)·[j = class] + σ·c_j     for j < NUM_CLASSES
//! y_j = BULK_SCALE·c_j                 for NUM_CLASSES ≤ j < r
//! y_j = 0                              for j ≥ r
//! ```
//!
//! plus `noise_scale` isotropic jitter. Labels, coefficients `c` and jitter
//! are drawn once and reused at every checkpoint; only `(s, σ, r)` follow
//! the schedule.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DseError, Result};
use crate::rng;
use crate::tensor_io::{EmbeddingBatch, RepresentationMatrix};
use crate::theory_lab::nn_error_labels;

pub const NUM_CLASSES: usize = 8;
pub const CLASSES_PER_IMAGE: usize = 3;
const SEPARATION: f64 = 4.0;
const COLLAPSED_SEPARATION: f64 = 2.5;
const STD_TIGHT: f64 = 0.65;
const STD_LOOSE: f64 = 1.6;
const COLLAPSE_STD: f64 = 0.8;
/// Spread along directions that carry no class signal.
const BULK_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Classes spread out around fixed means, rank stays full.
    SeparabilityDecay,
    /// Nuisance directions are removed down to the class subspace while the
    /// class means drift somewhat closer.
    DimensionCollapse,
    /// Classes tighten and the rank grows.
    Improving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub num_checkpoints: usize,
    pub images: usize,
    pub patches: usize,
    pub dim: usize,
    pub schedule: Schedule,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            num_checkpoints: 10,
            images: 64,
            patches: 49,
            dim: 32,
            schedule: Schedule::Improving,
            noise_scale: 0.05,
            seed: 0,
        }
    }
}

/// Mixture parameters at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub separation: f64,
    pub class_std: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub batch: EmbeddingBatch,
    pub true_nn_accuracy: f64,
    pub stage: Stage,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_checkpoints < 2 {
            return Err(DseError::Config("a trajectory needs at least 2 checkpoints".into()));
        }
        if self.images == 0 || self.patches == 0 {
            return Err(DseError::Config("images and patches must be positive".into()));
        }
        if self.dim <= NUM_CLASSES {
            return Err(DseError::Config(format!("dim must exceed {NUM_CLASSES}")));
        }
        if !(self.noise_scale > 0.0) || !self.noise_scale.is_finite() {
            return Err(DseError::Config(format!("noise_scale must be positive, got {}", self.noise_scale)));
        }
        Ok(())
    }

    pub fn stage(&self, t: usize) -> Stage {
        let f = t as f64 / (self.num_checkpoints - 1) as f64;
        let d = self.dim as f64;
        let lerp = |a: f64, b: f64| a + (b - a) * f;
        let rank = |a: f64, b: f64| (lerp(a, b).round() as usize).clamp(NUM_CLASSES, self.dim);
        let (separation, class_std, rank) = match self.schedule {
            Schedule::SeparabilityDecay => (SEPARATION, lerp(STD_TIGHT, STD_LOOSE), self.dim),
            Schedule::DimensionCollapse => (
                lerp(SEPARATION, COLLAPSED_SEPARATION),
                COLLAPSE_STD,
                rank(d, NUM_CLASSES as f64),
            ),
            Schedule::Improving => (SEPARATION, lerp(STD_LOOSE, STD_TIGHT), rank(d / 2.0, d)),
        };
        Stage {
            separation,
            class_std,
            rank,
        }
    }
}

struct Base {
    rotation: DMatrix<f64>,
    labels: Vec<usize>,
    coeffs: Vec<f64>,
    jitter: Vec<f64>,
}

fn draw_base(spec: &TrajectorySpec) -> Base {
    let d = spec.dim;
    let n = spec.images * spec.patches;
    let mut r = rng::substream(spec.seed, &[0]);
    let rotation = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut r)).qr().q();
    let mut r = rng::substream(spec.seed, &[1]);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.images {
        let classes = sample(&mut r, NUM_CLASSES, CLASSES_PER_IMAGE).into_vec();
        labels.extend((0..spec.patches).map(|p| classes[p % CLASSES_PER_IMAGE]));
    }
    let mut r = rng::substream(spec.seed, &[2]);
    let coeffs = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    let mut r = rng::substream(spec.seed, &[3]);
    let jitter = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    Base {
        rotation,
        labels,
        coeffs,
        jitter,
    }
}

fn render(spec: &TrajectorySpec, base: &Base, t: usize) -> Result<Checkpoint> {
    let stage = spec.stage(t);
    let d = spec.dim;
    let n = spec.images * spec.patches;
    let weights: Vec<f64> = (0..d)
        .map(|j| match j {
            j if j >= stage.rank => 0.0,
            j if j < NUM_CLASSES => stage.class_std,
            _ => BULK_SCALE,
        })
        .collect();
    let mut data = vec![0.0; n * d];
    let mut y = vec![0.0; d];
    for (idx, z) in data.chunks_exact_mut(d).enumerate() {
        let c = &base.coeffs[idx * d..(idx + 1) * d];
        for j in 0..d {
            y[j] = weights[j] * c[j];
        }
        y[base.labels[idx]] += stage.separation / std::f64::consts::SQRT_2;
        for (row, out) in z.iter_mut().enumerate() {
            let rotated: f64 = (0..d).map(|j| base.rotation[(row, j)] * y[j]).sum();
            *out = rotated + spec.noise_scale * base.jitter[idx * d + row];
        }
    }
    let matrix = RepresentationMatrix::from_row_major(data.clone(), n, d)?;
    let accuracy = 1.0 - nn_error_labels(&matrix, &base.labels, NUM_CLASSES);
    Ok(Checkpoint {
        batch: EmbeddingBatch::new(data, spec.images, spec.patches, d, format!("ckpt_{t:04}"))?,
        true_nn_accuracy: accuracy,
        stage,
    })
}

/// Checkpoints `ckpt_0000, ckpt_0001, ...` in training order.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Vec<Checkpoint>> {
    spec.validate()?;
    let base = draw_base(spec);
    (0..spec.num_checkpoints)
        .into_par_iter()
        .map(|t| render(spec, &base, t))
        .collect()
}


#[cfg(test)]
mod pipeline {
    use super::*;
    use crate::correlation::kendall_tau;
    use crate::dse::{dse_components, dse_series, MetricConfig};
    use crate::selection::{select_top, DEFAULT_TOP_T, DEFAULT_WINDOW};

    fn scored(spec: &TrajectorySpec) -> (Vec<f64>, Vec<f64>) {
        let traj = generate_trajectory(spec).unwrap();
        let cfg = MetricConfig::default();
        let records = traj.iter().map(|c| dse_components(&c.batch, &cfg, spec.seed).unwrap()).collect();
        let series = dse_series(records, None).unwrap();
        (series.scores, traj.iter().map(|c| c.true_nn_accuracy).collect())
    }

    #[test]
    fn improving_scores_track_accuracy() {
        for seed in 0..3 {
            let (scores, acc) = scored(&TrajectorySpec { seed, ..Default::default() });
            let tau = kendall_tau(&scores, &acc).unwrap().tau;
            assert!(tau >= 0.8, "seed {seed}: tau {tau}");
        }
    }

    #[test]
    fn collapse_selection_near_best() {
        for seed in 0..3 {
            let spec = TrajectorySpec {
                schedule: Schedule::DimensionCollapse,
                seed,
                ..Default::default()
            };
            let (scores, acc) = scored(&spec);
            let pick = select_top(&scores, DEFAULT_WINDOW, DEFAULT_TOP_T).selected_indices[0];
            let best = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(best - acc[pick] <= 0.02, "seed {seed}: picked {pick} ({}) vs best {best}; {scores:?}", acc[pick]);
        }
    }
}
