//! Clusters three blobs with k-means and reports the within-cluster radius
//! and the distance to the nearest foreign centroid.

use dse::clustering::{kmeans, KMeansParams};
use dse::separability::{class_separability, separability_stats, SeparabilityConfig};
use dse::tensor_io::{flatten_all, EmbeddingBatch};
use rand_distr::{Distribution, Normal};

fn main() -> dse::Result<()> {
    let (images, patches, dim) = (16, 30, 8);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut rng = dse::rng::stream(1);
    let mut data = Vec::with_capacity(images * patches * dim);
    for _ in 0..images {
        for p in 0..patches {
            for c in 0..dim {
                let centre = if c == p % 3 { 6.0 } else { 0.0 };
                data.push(centre + noise.sample(&mut rng));
            }
        }
    }
    let batch = EmbeddingBatch::new(data, images, patches, dim, "blobs")?;

    let first = batch.image_range(0, 1)?;
    let a = kmeans(&first, 3, 7, KMeansParams::default())?;
    let stats = separability_stats(&first, &a)?;
    println!("image 0, k=3: sizes {:?}, iterations {}", a.cluster_sizes(), a.iterations);
    println!("  M_intra {:.4}  M_inter {:.4}  separability {:.4}", stats.m_intra, stats.m_inter, stats.class_separability());

    println!("all {} patches flattened: {} rows", batch.images(), flatten_all(&batch).rows());
    let cls = class_separability(&batch, &SeparabilityConfig::default(), 0)?;
    println!("class separability over groups (1,3) and (8,24): {cls:.4}");
    Ok(())
}
