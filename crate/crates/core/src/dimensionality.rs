//! Effective rank of a representation matrix as a measure of dimensional
//! collapse.

use serde::{Deserialize, Serialize};

use crate::error::{DseError, Result};
use crate::linalg::singular_values;
use crate::tensor_io::{sample_independent, EmbeddingBatch, RepresentationMatrix};

/// Singular values below this fraction of the largest are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErankReport {
    pub erank: f64,
    /// Descending, after the relative cutoff.
    pub singular_values: Vec<f64>,
    /// Shannon entropy in nats of the ℓ1-normalized spectrum.
    pub entropy: f64,
}

/// `exp(−Σ p_i ln p_i)` with `p = σ / ‖σ‖₁`, computed on the raw (uncentered)
/// matrix.
pub fn effective_rank(matrix: &RepresentationMatrix) -> Result<ErankReport> {
    let sigma = singular_values(matrix.as_slice(), matrix.rows(), matrix.cols());
    erank_from_spectrum(sigma)
}

pub fn erank_from_spectrum(mut sigma: Vec<f64>) -> Result<ErankReport> {
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(DseError::Data("effective rank of an all-zero matrix is undefined".into()));
    }
    for s in &mut sigma {
        if *s < RELATIVE_CUTOFF * top {
            *s = 0.0;
        }
    }
    let total: f64 = sigma.iter().sum();
    let entropy = sigma
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| {
            let p = s / total;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0);
    Ok(ErankReport {
        erank: entropy.exp(),
        singular_values: sigma,
        entropy,
    })
}

/// Effective rank of `b_prime` patches drawn from distinct images.
pub fn m_dim(batch: &EmbeddingBatch, b_prime: usize, seed: u64) -> Result<f64> {
    let sample = sample_independent(batch, b_prime, seed)?;
    Ok(effective_rank(&sample)?.erank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(m: usize, d: usize, seed: u64) -> RepresentationMatrix {
        let mut r = rng::stream(seed);
        let data = (0..m * d).map(|_| StandardNormal.sample(&mut r)).collect();
        RepresentationMatrix::from_row_major(data, m, d).unwrap()
    }

    #[test]
    fn identity_has_full_rank() {
        let mut data = vec![0.0; 16];
        for i in 0..4 {
            data[i * 5] = 2.5;
        }
        let r = effective_rank(&RepresentationMatrix::from_row_major(data, 4, 4).unwrap()).unwrap();
        assert!((r.entropy - 4f64.ln()).abs() < 1e-12);
        assert!((r.erank - 4.0).abs() < 1e-12);
    }

    #[test]
    fn outer_product_has_rank_one() {
        let u = [1.0, -2.0, 0.5, 3.0, 1.0];
        let v = [0.3, 1.0, -1.0];
        let data: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let r = effective_rank(&RepresentationMatrix::from_row_major(data, 5, 3).unwrap()).unwrap();
        assert!((r.erank - 1.0).abs() < 1e-12, "{}", r.erank);
    }

    #[test]
    fn three_to_one_spectrum() {
        let p = [0.75f64, 0.25];
        let entropy: f64 = p.iter().map(|p| -p * p.ln()).sum();
        assert!((entropy - 0.562_335).abs() < 1e-6);
        let m = RepresentationMatrix::from_row_major(vec![3.0, 0.0, 0.0, 1.0], 2, 2).unwrap();
        let r = effective_rank(&m).unwrap();
        assert!((r.entropy - entropy).abs() < 1e-12);
        assert!((r.erank - 1.754_765).abs() < 1e-6);
    }

    #[test]
    fn zero_matrix_is_data_error() {
        let m = RepresentationMatrix::from_row_major(vec![0.0; 6], 3, 2).unwrap();
        assert!(matches!(effective_rank(&m), Err(DseError::Data(_))));
    }

    #[test]
    fn line_through_origin_batch() {
        let dir = [0.2, -0.4, 1.0, 0.7];
        let mut r = rng::stream(3);
        let mut data = Vec::new();
        for _ in 0..20 * 5 {
            let t: f64 = StandardNormal.sample(&mut r);
            data.extend(dir.iter().map(|x| x * t));
        }
        let batch = EmbeddingBatch::new(data, 20, 5, 4, "line").unwrap();
        assert!((m_dim(&batch, 20, 0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_patches_are_near_full_rank() {
        let m = random_matrix(2048, 16, 8);
        let batch = EmbeddingBatch::new(m.as_slice().to_vec(), 2048, 1, 16, "iid").unwrap();
        let v = m_dim(&batch, 2048, 0).unwrap();
        assert!((14.0..=16.0).contains(&v), "{v}");
    }

    #[test]
    fn constant_patches_have_rank_one() {
        let batch = EmbeddingBatch::new(vec![1.5; 10 * 3 * 6], 10, 3, 6, "c").unwrap();
        assert!((m_dim(&batch, 10, 1).unwrap() - 1.0).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use nalgebra::DMatrix;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn scale_rotation_and_padding(seed in any::<u64>(), m in 2usize..40, d in 1usize..10, s in -50.0f64..50.0) {
                prop_assume!(s.abs() > 1e-3);
                let mat = random_matrix(m, d, seed);
                let base = effective_rank(&mat).unwrap().erank;

                let scaled = effective_rank(&mat.map(|v| v * s).unwrap()).unwrap().erank;
                prop_assert!((scaled - base).abs() < 1e-9);

                let q = random_matrix(d, d, seed ^ 7).to_nalgebra().qr().q();
                let rotated: DMatrix<f64> = mat.to_nalgebra() * q;
                let rows: Vec<Vec<f64>> = (0..m).map(|i| rotated.row(i).iter().copied().collect()).collect();
                let rot = effective_rank(&RepresentationMatrix::from_rows(&rows).unwrap()).unwrap().erank;
                prop_assert!((rot - base).abs() < 1e-7);

                let padded: Vec<Vec<f64>> = mat.iter_rows().map(|r| {
                    let mut v = r.to_vec();
                    v.extend([0.0, 0.0, 0.0]);
                    v
                }).collect();
                let pad = effective_rank(&RepresentationMatrix::from_rows(&padded).unwrap()).unwrap().erank;
                prop_assert!((pad - base).abs() < 1e-9);
            }
        }
    }
}
