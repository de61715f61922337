//! Writes a checkpoint dump to `.npy`, reads it back and draws the
//! one-patch-per-image sample used for the effective rank.
//!
//! cargo run --example npy_roundtrip -- [path]

use dse::tensor_io::{flatten_all, load_embeddings, sample_independent, save_embeddings, Dtype, EmbeddingBatch};

fn main() -> dse::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("epoch_0001.npy"));

    let (images, patches, dim) = (4, 3, 2);
    let data: Vec<f64> = (0..images * patches * dim).map(|i| i as f64 * 0.5).collect();
    let batch = EmbeddingBatch::new(data, images, patches, dim, "epoch_0001")?;
    save_embeddings(&path, &batch, Dtype::F32)?;

    let loaded = load_embeddings(&path)?;
    println!("{} -> source_id {:?}, shape {:?}", path.display(), loaded.source_id(), loaded.shape());
    assert_eq!(loaded.as_slice(), batch.as_slice());

    let flat = flatten_all(&loaded);
    println!("flattened: {} rows x {} cols", flat.rows(), flat.cols());
    let sample = sample_independent(&loaded, 3, 42)?;
    for row in sample.iter_rows() {
        println!("  sampled patch {row:?}");
    }
    Ok(())
}
