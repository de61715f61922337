//! Synthetic checks of the error analysis behind the metric.
//!
//! Classes are isotropic Gaussians `N(μ_j, R²I)`, which are R-sub-Gaussian,
//! so the nearest-class-mean error has closed-form references and the
//! margin bound can be checked against the observed error.
//!
//! * [`instance_margin_accuracy`]: with k-means pseudo-labels every point is
//!   closer to its own centroid than to any other, so the instance-wise
//!   accuracy estimate is always exactly 1.
//! * [`thm1_bound`]: `err ≤ δ + P(D_min − radius < C_δ)` with the estimated
//!   radius `Σσ_i(Z_c)/√(N_j − 1)`.
//! * [`dim_decay_experiment`]: error against dimension at fixed per-coordinate
//!   separation.
//! * [`k_sweep_experiment`]: the margin term recomputed under k-means
//!   pseudo-labels for several k.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, ClusterAssignment, KMeansParams};
use crate::error::{DseError, Result};
use crate::linalg::{dist, sq_dist};
use crate::rng;
use crate::separability::intra_radius;
use crate::tensor_io::RepresentationMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub num_classes: usize,
    pub dim: usize,
    /// One mean per class, each of length `dim`.
    pub means: Vec<Vec<f64>>,
    /// Isotropic per-coordinate standard deviation R.
    pub per_class_std: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, per_class_std: f64, samples_per_class: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            num_classes: means.len(),
            dim: means.first().map_or(0, Vec::len),
            means,
            per_class_std,
            samples_per_class,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Class means with every pair exactly `separation` apart: scaled basis
    /// vectors when `K ≤ d`, otherwise points on a line spaced `separation`
    /// apart (then only neighbours are at that distance).
    pub fn equidistant(
        num_classes: usize,
        dim: usize,
        separation: f64,
        per_class_std: f64,
        samples_per_class: usize,
        seed: u64,
    ) -> Result<Self> {
        let means = (0..num_classes)
            .map(|k| {
                let mut m = vec![0.0; dim];
                if num_classes <= dim {
                    m[k] = separation / std::f64::consts::SQRT_2;
                } else if dim > 0 {
                    m[0] = k as f64 * separation;
                }
                m
            })
            .collect();
        Self::new(means, per_class_std, samples_per_class, seed)
    }

    /// Class `k` centred at `k · s · (1, …, 1)`: neighbouring classes differ by
    /// `s` in every coordinate.
    pub fn diagonal(
        num_classes: usize,
        dim: usize,
        per_coordinate_separation: f64,
        per_class_std: f64,
        samples_per_class: usize,
        seed: u64,
    ) -> Result<Self> {
        let means = (0..num_classes)
            .map(|k| vec![k as f64 * per_coordinate_separation; dim])
            .collect();
        Self::new(means, per_class_std, samples_per_class, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(DseError::Config("mixture needs at least 2 classes".into()));
        }
        if self.dim == 0 || self.means.iter().any(|m| m.len() != self.dim) {
            return Err(DseError::Config("class means must share a positive dimension".into()));
        }
        if !(self.per_class_std > 0.0) || !self.per_class_std.is_finite() {
            return Err(DseError::Config(format!("per_class_std must be positive, got {}", self.per_class_std)));
        }
        if self.samples_per_class < 2 {
            return Err(DseError::Config("need at least 2 samples per class".into()));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DseError::Config("class means must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    /// Class-major: all of class 0, then class 1, ...
    pub points: RepresentationMatrix,
    pub labels: Vec<usize>,
    pub spec: MixtureSpec,
}

pub fn sample_mixture(spec: &MixtureSpec) -> Result<LabeledCloud> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed);
    let n = spec.samples_per_class;
    let mut data = Vec::with_capacity(spec.num_classes * n * spec.dim);
    let mut labels = Vec::with_capacity(spec.num_classes * n);
    for (class, mean) in spec.means.iter().enumerate() {
        for _ in 0..n {
            for &m in mean {
                let e: f64 = StandardNormal.sample(&mut rng);
                data.push(m + spec.per_class_std * e);
            }
            labels.push(class);
        }
    }
    Ok(LabeledCloud {
        points: RepresentationMatrix::from_row_major(data, labels.len(), spec.dim)?,
        labels,
        spec: spec.clone(),
    })
}

/// Row-major `k × d` means of the rows carrying each label.
pub fn class_means(points: &RepresentationMatrix, labels: &[usize], k: usize) -> Vec<f64> {
    let d = points.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (row, &l) in points.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(row) {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            let c = counts[j] as f64;
            sums[j * d..(j + 1) * d].iter_mut().for_each(|s| *s /= c);
        }
    }
    sums
}

/// Fraction of rows whose nearest class mean (lowest index on ties) is not
/// their own label.
pub fn nn_error_labels(points: &RepresentationMatrix, labels: &[usize], k: usize) -> f64 {
    let d = points.cols();
    let means = class_means(points, labels, k);
    let wrong = points
        .iter_rows()
        .zip(labels)
        .filter(|(row, &l)| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..k {
                let dj = sq_dist(row, &means[j * d..(j + 1) * d]);
                if dj < best_d {
                    best_d = dj;
                    best = j;
                }
            }
            best != l
        })
        .count();
    wrong as f64 / labels.len() as f64
}

pub fn nn_error(cloud: &LabeledCloud) -> f64 {
    nn_error_labels(&cloud.points, &cloud.labels, cloud.spec.num_classes)
}

/// Fraction of points satisfying the instance-wise condition
/// `‖z − μ̃_own‖ ≤ min_other ‖z − μ̃_other‖` under k-means pseudo-labels.
pub fn instance_margin_accuracy(matrix: &RepresentationMatrix, k: usize, seed: u64) -> Result<f64> {
    let assignment = kmeans(matrix, k, seed, KMeansParams::default())?;
    Ok(instance_margin_accuracy_for(matrix, &assignment))
}

pub fn instance_margin_accuracy_for(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> f64 {
    let ok = matrix
        .iter_rows()
        .zip(&assignment.labels)
        .filter(|(row, &l)| {
            let own = dist(row, assignment.centroid(l));
            (0..assignment.k)
                .filter(|&j| j != l)
                .all(|j| own <= dist(row, assignment.centroid(j)))
        })
        .count();
    ok as f64 / matrix.rows() as f64
}

/// Fraction of points satisfying the class-wise condition
/// `radius_own − min_other ‖z − μ̃_other‖ ≤ 0`, with the estimated radius of
/// the point's cluster and cluster means as centres.
pub fn class_wise_accuracy(matrix: &RepresentationMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    let (_, radii) = intra_radius(matrix, assignment)?;
    let k = assignment.k;
    let d = matrix.cols();
    let centers = class_means(matrix, &assignment.labels, k);
    let ok = matrix
        .iter_rows()
        .zip(&assignment.labels)
        .filter(|(row, &l)| {
            let d_min = (0..k)
                .filter(|&j| j != l)
                .map(|j| dist(row, &centers[j * d..(j + 1) * d]))
                .fold(f64::INFINITY, f64::min);
            radii[l] - d_min <= 0.0
        })
        .count();
    Ok(ok as f64 / matrix.rows() as f64)
}

/// Absolute constants of the margin term; their values are not pinned down
/// by the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c1: f64,
    pub c_tilde: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self { c1: 1.0, c_tilde: 1.0 }
    }
}

/// Class margin
/// `√( C1·R²d(ln(2/δ) + √ln(2/δ)) + C̃·R²(d√(ln(8/δ)/N) + (d + ln(8/δ))/N) )`.
pub fn c_delta(std: f64, dim: usize, class_size: usize, delta: f64, constants: BoundConstants) -> f64 {
    let r2 = std * std;
    let d = dim as f64;
    let n = class_size as f64;
    let l2 = (2.0 / delta).ln();
    let l8 = (8.0 / delta).ln();
    (constants.c1 * r2 * d * (l2 + l2.sqrt()) + constants.c_tilde * r2 * (d * (l8 / n).sqrt() + (d + l8) / n)).sqrt()
}

/// Per-coordinate separation above which the dimension-decay regime applies:
/// `R(2 + √(ln(8/δ)/N) + √3)`.
pub fn decay_threshold(std: f64, class_size: usize, delta: f64) -> f64 {
    std * (2.0 + ((8.0 / delta).ln() / class_size as f64).sqrt() + 3f64.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub empirical_err: f64,
    pub delta: f64,
    pub margin_cdf_term: f64,
    /// Largest per-class margin.
    pub c_delta: f64,
    pub bound: f64,
    pub holds: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(DseError::Config(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Fraction of points with `D_min − radius_own < C_δ^own`, and the largest
/// margin used. `D_min` is the distance to the nearest foreign group mean.
/// With a single group there is no foreign mean and every point counts.
fn margin_fraction(
    points: &RepresentationMatrix,
    labels: &[usize],
    k: usize,
    std: f64,
    delta: f64,
    constants: BoundConstants,
) -> Result<(f64, f64)> {
    let d = points.cols();
    let assignment = ClusterAssignment::from_labels(points, labels.to_vec(), k)?;
    let sizes = assignment.cluster_sizes();
    let margins: Vec<f64> = sizes
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { c_delta(std, d, n, delta, constants) })
        .collect();
    let max_margin = margins.iter().cloned().fold(0.0, f64::max);
    if sizes.iter().filter(|&&n| n > 0).count() < 2 {
        return Ok((1.0, max_margin));
    }
    let (_, radii) = intra_radius(points, &assignment)?;
    let centers = &assignment.centroids;
    let hits = points
        .iter_rows()
        .zip(labels)
        .filter(|(row, &l)| {
            let d_min = (0..k)
                .filter(|&j| j != l && sizes[j] > 0)
                .map(|j| dist(row, &centers[j * d..(j + 1) * d]))
                .fold(f64::INFINITY, f64::min);
            d_min - radii[l] < margins[l]
        })
        .count();
    Ok((hits as f64 / labels.len() as f64, max_margin))
}

/// Evaluates `δ + P(D_min − radius < C_δ)` with ground-truth labels and
/// compares it to the nearest-class-mean error of the same cloud.
pub fn thm1_bound(cloud: &LabeledCloud, delta: f64, constants: BoundConstants) -> Result<BoundReport> {
    check_delta(delta)?;
    let (term, c_delta) = margin_fraction(
        &cloud.points,
        &cloud.labels,
        cloud.spec.num_classes,
        cloud.spec.per_class_std,
        delta,
        constants,
    )?;
    let empirical_err = nn_error(cloud);
    let bound = delta + term;
    Ok(BoundReport {
        empirical_err,
        delta,
        margin_cdf_term: term,
        c_delta,
        bound,
        holds: empirical_err <= bound,
    })
}

/// Runs [`thm1_bound`] on `trials` independent draws of `spec`, trial `t`
/// seeded from `(spec.seed, t)`.
pub fn thm1_trials(spec: &MixtureSpec, trials: usize, delta: f64, constants: BoundConstants) -> Result<Vec<BoundReport>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = spec.clone();
            s.seed = rng::derive_seed(spec.seed, &[t as u64]);
            thm1_bound(&sample_mixture(&s)?, delta, constants)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimDecaySpec {
    pub num_classes: usize,
    pub per_coordinate_separation: f64,
    pub per_class_std: f64,
    pub samples_per_class: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for DimDecaySpec {
    fn default() -> Self {
        Self {
            num_classes: 2,
            per_coordinate_separation: 6.0,
            per_class_std: 1.0,
            samples_per_class: 2000,
            trials: 10,
            delta: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub dim: usize,
    /// Mean nearest-class-mean error over trials.
    pub error: f64,
    /// Monte-Carlo standard error of `error`.
    pub std_error: f64,
    /// Whether the per-coordinate separation exceeds [`decay_threshold`].
    pub condition_holds: bool,
}

pub fn dim_decay_experiment(spec: &DimDecaySpec, dims: &[usize]) -> Result<Vec<DecayPoint>> {
    if spec.trials == 0 {
        return Err(DseError::Config("dim decay needs at least one trial".into()));
    }
    check_delta(spec.delta)?;
    dims.iter()
        .enumerate()
        .map(|(di, &dim)| {
            let errors = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let mix = MixtureSpec::diagonal(
                        spec.num_classes,
                        dim,
                        spec.per_coordinate_separation,
                        spec.per_class_std,
                        spec.samples_per_class,
                        rng::derive_seed(spec.seed, &[di as u64, t as u64]),
                    )?;
                    Ok(nn_error(&sample_mixture(&mix)?))
                })
                .collect::<Result<Vec<f64>>>()?;
            let n_points = (spec.num_classes * spec.samples_per_class * spec.trials) as f64;
            let error = errors.iter().sum::<f64>() / errors.len() as f64;
            // binomial SE over all pooled points, or the spread across trials if larger
            let binomial = (error * (1.0 - error) / n_points).sqrt();
            let spread = if errors.len() > 1 {
                let var = errors.iter().map(|e| (e - error).powi(2)).sum::<f64>() / (errors.len() - 1) as f64;
                (var / errors.len() as f64).sqrt()
            } else {
                0.0
            };
            Ok(DecayPoint {
                dim,
                error,
                std_error: binomial.max(spread),
                condition_holds: spec.per_coordinate_separation
                    > decay_threshold(spec.per_class_std, spec.samples_per_class, spec.delta),
            })
        })
        .collect()
}

/// True when each step of the series rises by at most `z` combined standard
/// errors.
pub fn non_increasing_within(points: &[DecayPoint], z: f64) -> bool {
    points.windows(2).all(|w| {
        let slack = z * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].error <= w[0].error + slack
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepPoint {
    pub k: usize,
    pub margin_cdf_term: f64,
}

/// Recomputes the margin term with k-means pseudo-labels in place of the
/// ground truth, for each `k`.
pub fn k_sweep_experiment(
    cloud: &LabeledCloud,
    k_values: &[usize],
    delta: f64,
    constants: BoundConstants,
    seed: u64,
) -> Result<Vec<KSweepPoint>> {
    check_delta(delta)?;
    let m = cloud.points.rows();
    k_values
        .iter()
        .map(|&k| {
            if k == 0 || k > m {
                return Err(DseError::Config(format!("k={k} outside 1..={m}")));
            }
            let assignment = kmeans(&cloud.points, k, rng::derive_seed(seed, &[k as u64]), KMeansParams::default())?;
            let (term, _) = margin_fraction(
                &cloud.points,
                &assignment.labels,
                k,
                cloud.spec.per_class_std,
                delta,
                constants,
            )?;
            Ok(KSweepPoint { k, margin_cdf_term: term })
        })
        .collect()
}
