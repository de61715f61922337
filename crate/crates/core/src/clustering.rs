//! k-means pseudo-labeling with k-means++ seeding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DseError, Result};
use crate::linalg::sq_dist;
use crate::rng;
use crate::tensor_io::RepresentationMatrix;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    /// `k × d`, row-major.
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub inertia: f64,
    pub k: usize,
    pub iterations: usize,
}

impl ClusterAssignment {
    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.centroids[j * self.dim..(j + 1) * self.dim]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Builds an assignment from externally chosen labels, using the cluster
    /// means as centroids.
    pub fn from_labels(matrix: &RepresentationMatrix, labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.len() != matrix.rows() {
            return Err(DseError::Dimension(format!(
                "{} labels for {} rows",
                labels.len(),
                matrix.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(DseError::Cluster(format!("label {bad} out of range for k={k}")));
        }
        let centroids = cluster_means(matrix, &labels, k, None);
        let inertia = matrix
            .iter_rows()
            .zip(&labels)
            .map(|(row, &l)| sq_dist(row, &centroids[l * matrix.cols()..(l + 1) * matrix.cols()]))
            .sum();
        Ok(Self {
            labels,
            centroids,
            dim: matrix.cols(),
            inertia,
            k,
            iterations: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Convergence threshold on relative centroid movement (Frobenius).
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

/// Nearest centroid per row, lowest index on ties.
pub fn assign(matrix: &RepresentationMatrix, centroids: &[f64], k: usize) -> Result<Vec<usize>> {
    let d = matrix.cols();
    if k == 0 || centroids.len() != k * d {
        return Err(DseError::Dimension(format!(
            "{} centroid values do not form {k} centroids of dim {d}",
            centroids.len()
        )));
    }
    Ok(assign_with_dist(matrix, centroids, k).0)
}

fn assign_with_dist(matrix: &RepresentationMatrix, centroids: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let d = matrix.cols();
    let mut labels = Vec::with_capacity(matrix.rows());
    let mut dists = Vec::with_capacity(matrix.rows());
    for row in matrix.iter_rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let dj = sq_dist(row, &centroids[j * d..(j + 1) * d]);
            if dj < best_d {
                best_d = dj;
                best = j;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    (labels, dists)
}

fn cluster_means(matrix: &RepresentationMatrix, labels: &[usize], k: usize, fallback: Option<&[f64]>) -> Vec<f64> {
    let d = matrix.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (row, &l) in matrix.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(row) {
            *s += v;
        }
    }
    for j in 0..k {
        let block = &mut sums[j * d..(j + 1) * d];
        if counts[j] > 0 {
            let n = counts[j] as f64;
            block.iter_mut().for_each(|s| *s /= n);
        } else if let Some(prev) = fallback {
            block.copy_from_slice(&prev[j * d..(j + 1) * d]);
        }
    }
    sums
}

fn kmeans_plus_plus(matrix: &RepresentationMatrix, k: usize, rng: &mut rng::StreamRng) -> Vec<f64> {
    let d = matrix.cols();
    let m = matrix.rows();
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.random_range(0..m);
    centroids.extend_from_slice(matrix.row(first));
    let mut nearest: Vec<f64> = matrix.iter_rows().map(|r| sq_dist(r, matrix.row(first))).collect();

    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `target` just above the final sum
            chosen.unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            rng.random_range(0..m)
        };
        let c = matrix.row(pick).to_vec();
        for (n, row) in nearest.iter_mut().zip(matrix.iter_rows()) {
            *n = n.min(sq_dist(row, &c));
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Moves the centroid of each empty cluster onto the point farthest from its
/// own centroid. Returns false if an empty cluster could not be repaired
/// because every point already sits on its centroid.
fn repair_empty(
    matrix: &RepresentationMatrix,
    centroids: &mut [f64],
    labels: &mut [usize],
    dists: &mut [f64],
    k: usize,
) -> bool {
    let d = matrix.cols();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let (far, far_d) = dists
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far_d <= 0.0 {
            return false;
        }
        centroids[j * d..(j + 1) * d].copy_from_slice(matrix.row(far));
        counts[labels[far]] -= 1;
        labels[far] = j;
        dists[far] = 0.0;
        counts[j] = 1;
    }
    true
}

fn has_empty(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.iter().any(|s| !s)
}

pub fn kmeans(matrix: &RepresentationMatrix, k: usize, seed: u64, params: KMeansParams) -> Result<ClusterAssignment> {
    kmeans_traced(matrix, k, seed, params).map(|(a, _)| a)
}

/// Runs k-means and also returns the inertia after every assignment step,
/// starting with the inertia of the k-means++ initialization.
pub fn kmeans_traced(
    matrix: &RepresentationMatrix,
    k: usize,
    seed: u64,
    params: KMeansParams,
) -> Result<(ClusterAssignment, Vec<f64>)> {
    let m = matrix.rows();
    let d = matrix.cols();
    if k == 0 || k > m {
        return Err(DseError::Cluster(format!("k={k} must be in 1..={m}")));
    }
    if params.max_iter == 0 {
        return Err(DseError::Config("max_iter must be at least 1".into()));
    }
    if !(params.tol >= 0.0) {
        return Err(DseError::Config(format!("tol must be nonnegative, got {}", params.tol)));
    }

    let mut rng = rng::stream(seed);
    let mut centroids = kmeans_plus_plus(matrix, k, &mut rng);
    let mut history = Vec::new();
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        let (mut labels, mut dists) = assign_with_dist(matrix, &centroids, k);
        history.push(dists.iter().sum());
        repair_empty(matrix, &mut centroids, &mut labels, &mut dists, k);
        let updated = cluster_means(matrix, &labels, k, Some(&centroids));
        let shift = sq_dist(&updated, &centroids).sqrt();
        let scale = centroids.iter().map(|v| v * v).sum::<f64>().sqrt();
        centroids = updated;
        if shift <= params.tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    // Final assignment consistent with the returned centroids.
    let (mut labels, mut dists) = assign_with_dist(matrix, &centroids, k);
    for _ in 0..k {
        if !has_empty(&labels, k) || !repair_empty(matrix, &mut centroids, &mut labels, &mut dists, k) {
            break;
        }
        (labels, dists) = assign_with_dist(matrix, &centroids, k);
    }
    let inertia: f64 = dists.iter().sum();
    history.push(inertia);

    Ok((
        ClusterAssignment {
            labels,
            centroids,
            dim: d,
            inertia,
            k,
            iterations,
        },
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn matrix(rows: &[&[f64]]) -> RepresentationMatrix {
        RepresentationMatrix::from_rows(rows).unwrap()
    }

    fn random_matrix(m: usize, d: usize, seed: u64) -> RepresentationMatrix {
        let mut r = rng::stream(seed);
        let data = (0..m * d).map(|_| StandardNormal.sample(&mut r)).collect();
        RepresentationMatrix::from_row_major(data, m, d).unwrap()
    }

    /// Inertia of the best 2-partition by exhaustive search.
    fn best_two_partition(points: &[[f64; 2]]) -> (f64, Vec<usize>) {
        let n = points.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1u32..(1 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let mut cost = 0.0;
            for c in 0..2 {
                let members: Vec<_> = (0..n).filter(|&i| labels[i] == c).collect();
                let mx = members.iter().map(|&i| points[i][0]).sum::<f64>() / members.len() as f64;
                let my = members.iter().map(|&i| points[i][1]).sum::<f64>() / members.len() as f64;
                cost += members
                    .iter()
                    .map(|&i| (points[i][0] - mx).powi(2) + (points[i][1] - my).powi(2))
                    .sum::<f64>();
            }
            if cost < best.0 {
                best = (cost, labels);
            }
        }
        best
    }

    #[test]
    fn two_obvious_clusters() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let (oracle_cost, oracle_labels) = best_two_partition(&pts);
        assert_eq!(oracle_cost, 1.0);

        let rows: Vec<&[f64]> = pts.iter().map(|p| &p[..]).collect();
        let a = kmeans(&matrix(&rows), 2, 7, KMeansParams::default()).unwrap();
        assert_eq!(a.inertia, 1.0);
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[2], a.labels[3]);
        assert_ne!(a.labels[0], a.labels[2]);
        assert_eq!(a.labels[0] == a.labels[2], oracle_labels[0] == oracle_labels[2]);
        let left = a.labels[0];
        assert_eq!(a.centroid(left), &[0.0, 0.5]);
        assert_eq!(a.centroid(1 - left), &[10.0, 0.5]);
    }

    #[test]
    fn identical_points_single_cluster() {
        let rows: Vec<&[f64]> = vec![&[3.0, -1.0]; 6];
        let a = kmeans(&matrix(&rows), 1, 0, KMeansParams::default()).unwrap();
        assert_eq!(a.centroid(0), &[3.0, -1.0]);
        assert_eq!(a.inertia, 0.0);
    }

    #[test]
    fn k_equals_m_gives_zero_inertia() {
        let m = random_matrix(12, 3, 1);
        let a = kmeans(&m, 12, 3, KMeansParams::default()).unwrap();
        assert_eq!(a.inertia, 0.0);
        assert!(a.cluster_sizes().iter().all(|&s| s == 1));
    }

    #[test]
    fn k_larger_than_m_is_error() {
        let m = random_matrix(3, 2, 0);
        assert!(matches!(kmeans(&m, 4, 0, KMeansParams::default()), Err(DseError::Cluster(_))));
        assert!(matches!(kmeans(&m, 0, 0, KMeansParams::default()), Err(DseError::Cluster(_))));
    }

    #[test]
    fn assign_exact_hit_and_tie() {
        let m = matrix(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let labels = assign(&m, &[0.0, 0.0, 5.0, 5.0], 2).unwrap();
        assert_eq!(labels[0], 0);
        // (1, 0) is equidistant from (0, 0) and (2, 0)
        let labels = assign(&m, &[0.0, 0.0, 2.0, 0.0], 2).unwrap();
        assert_eq!(labels[1], 0);
        assert!(matches!(assign(&m, &[0.0; 3], 1), Err(DseError::Dimension(_))));
    }

    #[test]
    fn assign_matches_brute_force_scan() {
        let m = random_matrix(100, 8, 11);
        let c = random_matrix(5, 8, 12);
        let labels = assign(&m, c.as_slice(), 5).unwrap();
        for (i, row) in m.iter_rows().enumerate() {
            let mut best = (0, f64::INFINITY);
            for j in 0..5 {
                let dd: f64 = row.iter().zip(c.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                if dd < best.1 {
                    best = (j, dd);
                }
            }
            assert_eq!(labels[i], best.0);
        }
    }

    #[test]
    fn duplicate_heavy_data_keeps_coincident_centroids() {
        // three distinct values only, k = 5: two clusters cannot be filled
        let rows: Vec<&[f64]> = [[0.0], [0.0], [1.0], [1.0], [5.0]]
            .iter()
            .map(|p| &p[..])
            .collect();
        let a = kmeans(&matrix(&rows), 5, 2, KMeansParams::default()).unwrap();
        assert_eq!(a.inertia, 0.0);
        let sizes = a.cluster_sizes();
        assert_eq!(sizes.iter().filter(|&&s| s > 0).count(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn lloyd_invariants(m in 2usize..80, d in 1usize..6, kf in 0.0f64..1.0, seed in any::<u64>()) {
                let k = 1 + ((m - 1) as f64 * kf * 0.5) as usize;
                let mat = random_matrix(m, d, seed);
                let (a, history) = kmeans_traced(&mat, k, seed, KMeansParams::default()).unwrap();

                for w in history.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "inertia rose: {:?}", history);
                }
                prop_assert!(a.inertia <= history[0] * (1.0 + 1e-12) + 1e-12);

                let relabel = assign(&mat, &a.centroids, k).unwrap();
                prop_assert_eq!(&relabel, &a.labels);
                prop_assert!(a.cluster_sizes().iter().all(|&s| s > 0));
                prop_assert!(a.centroids.iter().all(|v| v.is_finite()));

                let again = kmeans(&mat, k, seed, KMeansParams::default()).unwrap();
                prop_assert_eq!(a, again);
            }
        }
    }
}
