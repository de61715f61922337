//! Class-separability statistics from a clustering: the estimated intra-class
//! radius `M_intra` and the nearest-foreign-centroid distance `M_inter`.
//!
//! Cluster centroids used here are always the means of the rows carrying the
//! label. A cluster left empty by degenerate data contributes 0 to both means.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, ClusterAssignment, KMeansParams};
use crate::error::{DseError, Result};
use crate::linalg::{center_rows, dist, singular_values};
use crate::rng;
use crate::tensor_io::{EmbeddingBatch, RepresentationMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityStats {
    pub m_intra: f64,
    pub m_inter: f64,
    pub per_cluster_radius: Vec<f64>,
    pub per_cluster_inter: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
}

impl SeparabilityStats {
    pub fn class_separability(&self) -> f64 {
        self.m_inter - self.m_intra
    }
}

/// One `(images per group, k)` pair of the grouping protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfig {
    pub images_per_group: usize,
    pub k: usize,
}

impl GroupConfig {
    pub const fn new(images_per_group: usize, k: usize) -> Self {
        Self { images_per_group, k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityConfig {
    pub groups: Vec<GroupConfig>,
    #[serde(default)]
    pub kmeans: KMeansParams,
}

impl Default for SeparabilityConfig {
    /// Single images clustered with k=3, and groups of 8 images with k=24.
    fn default() -> Self {
        Self {
            groups: vec![GroupConfig::new(1, 3), GroupConfig::new(8, 24)],
            kmeans: KMeansParams::default(),
        }
    }
}

/// Fallback when the batch has too few images for every configured group size.
pub const FALLBACK_GROUP: GroupConfig = GroupConfig::new(1, 3);

struct Members {
    by_cluster: Vec<Vec<usize>>,
}

fn members(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> Result<Members> {
    if assignment.labels.len() != matrix.rows() {
        return Err(DseError::Dimension(format!(
            "{} labels for {} rows",
            assignment.labels.len(),
            matrix.rows()
        )));
    }
    if assignment.dim != matrix.cols() {
        return Err(DseError::Dimension(format!(
            "centroid dim {} vs matrix dim {}",
            assignment.dim,
            matrix.cols()
        )));
    }
    let mut by_cluster = vec![Vec::new(); assignment.k];
    for (i, &l) in assignment.labels.iter().enumerate() {
        if l >= assignment.k {
            return Err(DseError::Dimension(format!("label {l} out of range for k={}", assignment.k)));
        }
        by_cluster[l].push(i);
    }
    Ok(Members { by_cluster })
}

/// Mean over clusters of `Σ σ_i(centered cluster) / √(n_j − 1)`; singleton
/// and empty clusters have radius 0.
pub fn intra_radius(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> Result<(f64, Vec<f64>)> {
    let members = members(matrix, assignment)?;
    let radii: Vec<f64> = members
        .by_cluster
        .iter()
        .map(|idx| cluster_radius(matrix, idx))
        .collect();
    Ok((mean(&radii), radii))
}

fn cluster_radius(matrix: &RepresentationMatrix, idx: &[usize]) -> f64 {
    let n = idx.len();
    if n < 2 {
        return 0.0;
    }
    let d = matrix.cols();
    let (centered, _) = center_rows(idx.iter().map(|&i| matrix.row(i)), d);
    let nuclear: f64 = singular_values(&centered, n, d).iter().sum();
    nuclear / ((n - 1) as f64).sqrt()
}

/// Mean over clusters of the average distance from each member to the
/// nearest other cluster's mean.
pub fn inter_distance(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> Result<(f64, Vec<f64>)> {
    if assignment.k < 2 {
        return Err(DseError::Cluster("inter-class distance needs k >= 2".into()));
    }
    let members = members(matrix, assignment)?;
    let centers = cluster_centers(matrix, assignment, &members);
    let d = matrix.cols();
    let k = assignment.k;
    let per_cluster: Vec<f64> = members
        .by_cluster
        .iter()
        .enumerate()
        .map(|(j, idx)| {
            if idx.is_empty() {
                return 0.0;
            }
            let total: f64 = idx
                .iter()
                .map(|&i| {
                    (0..k)
                        .filter(|&c| c != j)
                        .map(|c| dist(matrix.row(i), &centers[c * d..(c + 1) * d]))
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            total / idx.len() as f64
        })
        .collect();
    Ok((mean(&per_cluster), per_cluster))
}

/// Cluster means; empty clusters keep the assignment's centroid.
fn cluster_centers(matrix: &RepresentationMatrix, assignment: &ClusterAssignment, members: &Members) -> Vec<f64> {
    let d = matrix.cols();
    let mut centers = Vec::with_capacity(assignment.k * d);
    for (j, idx) in members.by_cluster.iter().enumerate() {
        if idx.is_empty() {
            centers.extend_from_slice(assignment.centroid(j));
        } else {
            let mut c = vec![0.0; d];
            for &i in idx {
                for (s, v) in c.iter_mut().zip(matrix.row(i)) {
                    *s += v;
                }
            }
            c.iter_mut().for_each(|s| *s /= idx.len() as f64);
            centers.extend(c);
        }
    }
    centers
}

pub fn separability_stats(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> Result<SeparabilityStats> {
    let (m_intra, per_cluster_radius) = intra_radius(matrix, assignment)?;
    let (m_inter, per_cluster_inter) = inter_distance(matrix, assignment)?;
    Ok(SeparabilityStats {
        m_intra,
        m_inter,
        per_cluster_radius,
        per_cluster_inter,
        cluster_sizes: assignment.cluster_sizes(),
    })
}

/// `M_inter − M_intra`, averaged over disjoint image groups and then over the
/// configured `(group size, k)` pairs.
pub fn class_separability(batch: &EmbeddingBatch, cfg: &SeparabilityConfig, seed: u64) -> Result<f64> {
    let groups = effective_groups(batch, cfg)?;
    let mut per_config = Vec::with_capacity(groups.len());
    for (ci, &g) in groups.iter().enumerate() {
        per_config.push(config_separability(batch, g, cfg.kmeans, rng::derive_seed(seed, &[ci as u64]))?);
    }
    Ok(mean(&per_config))
}

/// The configured groups usable on this batch, or the single-image fallback.
pub fn effective_groups(batch: &EmbeddingBatch, cfg: &SeparabilityConfig) -> Result<Vec<GroupConfig>> {
    if cfg.groups.is_empty() {
        return Err(DseError::Config("no separability groups configured".into()));
    }
    for g in &cfg.groups {
        if g.images_per_group == 0 || g.k < 2 {
            return Err(DseError::Config(format!(
                "group ({}, {}) needs at least one image and k >= 2",
                g.images_per_group, g.k
            )));
        }
    }
    let usable: Vec<GroupConfig> = cfg
        .groups
        .iter()
        .copied()
        .filter(|g| g.images_per_group <= batch.images())
        .collect();
    let usable = if usable.is_empty() {
        log::warn!(
            "{}: {} images is fewer than every configured group size; falling back to ({}, {})",
            batch.source_id(),
            batch.images(),
            FALLBACK_GROUP.images_per_group,
            FALLBACK_GROUP.k
        );
        vec![FALLBACK_GROUP]
    } else {
        if usable.len() < cfg.groups.len() {
            log::warn!(
                "{}: dropping group sizes larger than its {} images",
                batch.source_id(),
                batch.images()
            );
        }
        usable
    };
    for g in &usable {
        let points = g.images_per_group * batch.patches();
        if points < g.k {
            return Err(DseError::Config(format!(
                "group of {} images has {points} patches, fewer than k={}",
                g.images_per_group, g.k
            )));
        }
    }
    Ok(usable)
}

fn config_separability(batch: &EmbeddingBatch, group: GroupConfig, params: KMeansParams, seed: u64) -> Result<f64> {
    let count = batch.images() / group.images_per_group;
    let values = (0..count)
        .into_par_iter()
        .map(|gi| {
            let matrix = batch.image_range(gi * group.images_per_group, group.images_per_group)?;
            let assignment = kmeans(&matrix, group.k, rng::derive_seed(seed, &[gi as u64]), params)?;
            Ok(separability_stats(&matrix, &assignment)?.class_separability())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&values))
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}
