//! Loading, validating and sampling dense-representation dumps.
//!
//! A checkpoint dump is a 3-D `.npy` array of shape `(images, patches, dim)`.
//! Everything is widened to `f64` on load.

pub mod npy;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DseError, Result};
use crate::rng;

pub use npy::Dtype;

/// Default number of independently sampled rows used for the effective rank.
pub const DEFAULT_B_PRIME: usize = 2048;

/// Dense representations of one checkpoint: `images × patches × dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    data: Vec<f64>,
    images: usize,
    patches: usize,
    dim: usize,
    source_id: String,
}

impl EmbeddingBatch {
    pub fn new(
        data: Vec<f64>,
        images: usize,
        patches: usize,
        dim: usize,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if images == 0 || patches == 0 || dim == 0 {
            return Err(DseError::Format(format!(
                "empty batch shape ({images}, {patches}, {dim})"
            )));
        }
        if data.len() != images * patches * dim {
            return Err(DseError::Format(format!(
                "{} values do not fill shape ({images}, {patches}, {dim})",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            data,
            images,
            patches,
            dim,
            source_id: source_id.into(),
        })
    }

    pub fn images(&self) -> usize {
        self.images
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.images, self.patches, self.dim)
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// All patch vectors of one image, concatenated.
    pub fn image(&self, image: usize) -> &[f64] {
        let stride = self.patches * self.dim;
        &self.data[image * stride..(image + 1) * stride]
    }

    pub fn patch(&self, image: usize, patch: usize) -> &[f64] {
        let start = (image * self.patches + patch) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Patches of images `start..start + count`, flattened image-major.
    pub fn image_range(&self, start: usize, count: usize) -> Result<RepresentationMatrix> {
        if count == 0 || start + count > self.images {
            return Err(DseError::Sample(format!(
                "image range {start}..{} outside 0..{}",
                start + count,
                self.images
            )));
        }
        let stride = self.patches * self.dim;
        Ok(RepresentationMatrix {
            data: self.data[start * stride..(start + count) * stride].to_vec(),
            rows: count * self.patches,
            cols: self.dim,
            provenance: Provenance::FlattenedAll,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    FlattenedAll,
    IndependentSample,
    /// Built directly from caller-supplied rows.
    Direct,
}

/// Row-major `rows × cols` matrix of representation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    provenance: Provenance,
}

impl RepresentationMatrix {
    pub fn from_row_major(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(DseError::Format(format!("empty matrix shape ({rows}, {cols})")));
        }
        if data.len() != rows * cols {
            return Err(DseError::Format(format!(
                "{} values do not fill a {rows}×{cols} matrix",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self {
            data,
            rows,
            cols,
            provenance: Provenance::Direct,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(DseError::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(data, rows.len(), cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Applies `f` to every entry, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::from_row_major(self.data.iter().map(|&v| f(v)).collect(), self.rows, self.cols)?;
        out.provenance = self.provenance;
        Ok(out)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DseError::Data(format!("non-finite value {} at flat index {i}", data[i]))),
        None => Ok(()),
    }
}

/// Reads a `(images, patches, dim)` float32/float64 `.npy` dump. The
/// checkpoint label is the file stem.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingBatch> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DseError::io(path, e))?;
    let array = npy::read(&mut BufReader::new(file))?;
    let &[images, patches, dim] = array.shape.as_slice() else {
        return Err(DseError::Format(format!(
            "expected a 3-D array, found ndim={} (shape {:?})",
            array.shape.len(),
            array.shape
        )));
    };
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    EmbeddingBatch::new(array.data, images, patches, dim, source_id)
}

pub fn save_embeddings(path: impl AsRef<Path>, batch: &EmbeddingBatch, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DseError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let (b, n, d) = batch.shape();
    npy::write(&mut writer, &[b, n, d], dtype, batch.as_slice()).map_err(|e| DseError::io(path, e))?;
    std::io::Write::flush(&mut writer).map_err(|e| DseError::io(path, e))
}

/// `.npy` files directly inside `dir`, sorted by file name.
pub fn list_checkpoints(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|e| DseError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| DseError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "npy") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// All `images · patches` vectors, image-major then patch.
pub fn flatten_all(batch: &EmbeddingBatch) -> RepresentationMatrix {
    RepresentationMatrix {
        data: batch.data.clone(),
        rows: batch.images * batch.patches,
        cols: batch.dim,
        provenance: Provenance::FlattenedAll,
    }
}

/// Draws `count` distinct images without replacement, then one uniform patch
/// from each, so that rows are independent across images.
pub fn sample_independent(batch: &EmbeddingBatch, count: usize, seed: u64) -> Result<RepresentationMatrix> {
    Ok(sample_independent_indexed(batch, count, seed)?.0)
}

/// Like [`sample_independent`], also returning the `(image, patch)` of each row.
pub fn sample_independent_indexed(
    batch: &EmbeddingBatch,
    count: usize,
    seed: u64,
) -> Result<(RepresentationMatrix, Vec<(usize, usize)>)> {
    if count == 0 {
        return Err(DseError::Sample("sample count must be positive".into()));
    }
    if count > batch.images {
        return Err(DseError::Sample(format!(
            "cannot draw {count} rows from distinct images: batch has {} images",
            batch.images
        )));
    }
    let mut rng = rng::stream(seed);
    let images = index::sample(&mut rng, batch.images, count).into_vec();
    let mut data = Vec::with_capacity(count * batch.dim);
    let mut origin = Vec::with_capacity(count);
    for image in images {
        let patch = rng.random_range(0..batch.patches);
        data.extend_from_slice(batch.patch(image, patch));
        origin.push((image, patch));
    }
    let matrix = RepresentationMatrix {
        data,
        rows: count,
        cols: batch.dim,
        provenance: Provenance::IndependentSample,
    };
    Ok((matrix, origin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iota_batch(b: usize, n: usize, d: usize) -> EmbeddingBatch {
        let data = (0..b * n * d).map(|v| v as f64).collect();
        EmbeddingBatch::new(data, b, n, d, "iota").unwrap()
    }

    #[test]
    fn load_float32_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("epoch_0300.npy");
        let batch = iota_batch(2, 4, 8);
        save_embeddings(&path, &batch, Dtype::F32).unwrap();
        let loaded = load_embeddings(&path).unwrap();
        assert_eq!(loaded.shape(), (2, 4, 8));
        assert_eq!(loaded.source_id(), "epoch_0300");
        assert_eq!(loaded.as_slice(), batch.as_slice());
    }

    #[test]
    fn two_dimensional_dump_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.npy");
        let mut f = File::create(&path).unwrap();
        npy::write(&mut f, &[10, 8], Dtype::F64, &[0.0; 80]).unwrap();
        drop(f);
        let err = load_embeddings(&path).unwrap_err();
        assert!(matches!(err, DseError::Format(ref m) if m.contains("ndim=2")), "{err}");
    }

    #[test]
    fn nan_entry_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.npy");
        let mut values = vec![1.0; 8];
        values[5] = f64::NAN;
        let mut f = File::create(&path).unwrap();
        npy::write(&mut f, &[1, 2, 4], Dtype::F64, &values).unwrap();
        drop(f);
        assert!(matches!(load_embeddings(&path), Err(DseError::Data(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_embeddings("/nonexistent/dir/x.npy"),
            Err(DseError::Io { .. })
        ));
    }

    #[test]
    fn flatten_is_image_major() {
        let batch = iota_batch(2, 3, 5);
        let m = flatten_all(&batch);
        assert_eq!((m.rows(), m.cols()), (6, 5));
        assert_eq!(m.row(3), batch.patch(1, 0));
        assert_eq!(m.provenance(), Provenance::FlattenedAll);

        let single = EmbeddingBatch::new(vec![1.0, 2.0, 3.0], 1, 1, 3, "one").unwrap();
        assert_eq!(flatten_all(&single).row(0), &[1.0, 2.0, 3.0]);

        let sevens = EmbeddingBatch::new(vec![7.0; 8], 2, 2, 2, "c").unwrap();
        let m = flatten_all(&sevens);
        assert_eq!((m.rows(), m.cols()), (4, 2));
        assert!(m.as_slice().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn sample_uses_each_image_once() {
        let batch = iota_batch(2048, 3, 4);
        let (m, origin) = sample_independent_indexed(&batch, 2048, 0).unwrap();
        assert_eq!((m.rows(), m.cols()), (2048, 4));
        let mut images: Vec<usize> = origin.iter().map(|&(i, _)| i).collect();
        images.sort_unstable();
        assert_eq!(images, (0..2048).collect::<Vec<_>>());
        assert_eq!(m.provenance(), Provenance::IndependentSample);
    }

    #[test]
    fn single_patch_images_are_all_returned() {
        let batch = iota_batch(4, 1, 2);
        let m = sample_independent(&batch, 4, 0).unwrap();
        let mut rows: Vec<Vec<f64>> = m.iter_rows().map(<[f64]>::to_vec).collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0], vec![6.0, 7.0]]);
    }

    #[test]
    fn oversampling_is_sample_error() {
        let batch = iota_batch(2, 2, 2);
        assert!(matches!(sample_independent(&batch, 3, 0), Err(DseError::Sample(_))));
    }

    #[test]
    fn rejects_ragged_or_empty_inputs() {
        assert!(EmbeddingBatch::new(vec![0.0; 7], 2, 2, 2, "x").is_err());
        assert!(EmbeddingBatch::new(vec![], 0, 2, 2, "x").is_err());
        assert!(matches!(
            EmbeddingBatch::new(vec![f64::INFINITY; 2], 1, 1, 2, "x"),
            Err(DseError::Data(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn save_load_flatten_round_trip(
                b in 1usize..5, n in 1usize..5, d in 1usize..6,
                seed in any::<u64>(),
            ) {
                use rand::Rng;
                let mut r = rng::stream(seed);
                let data: Vec<f64> = (0..b * n * d).map(|_| r.random_range(-1e3..1e3)).collect();
                let batch = EmbeddingBatch::new(data.clone(), b, n, d, "rt").unwrap();
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("rt.npy");
                save_embeddings(&path, &batch, Dtype::F64).unwrap();
                let loaded = load_embeddings(&path).unwrap();
                let flat = flatten_all(&loaded);
                prop_assert_eq!(flat.rows(), b * n);
                // reshape back: row r is (image r / n, patch r % n)
                for r in 0..b * n {
                    prop_assert_eq!(flat.row(r), batch.patch(r / n, r % n));
                }
                prop_assert_eq!(flat.as_slice(), &data[..]);
            }

            #[test]
            fn samples_are_seeded_and_verbatim(
                b in 1usize..30, n in 1usize..6, seed in any::<u64>(), frac in 0.0f64..1.0,
            ) {
                let batch = iota_batch(b, n, 3);
                let count = 1 + ((b - 1) as f64 * frac) as usize;
                let (m1, origin) = sample_independent_indexed(&batch, count, seed).unwrap();
                let m2 = sample_independent(&batch, count, seed).unwrap();
                prop_assert_eq!(&m1, &m2);
                for (row, &(img, p)) in m1.iter_rows().zip(&origin) {
                    prop_assert_eq!(row, batch.patch(img, p));
                }
                let mut imgs: Vec<_> = origin.iter().map(|o| o.0).collect();
                imgs.sort_unstable();
                imgs.dedup();
                prop_assert_eq!(imgs.len(), count);
            }
        }
    }
}
