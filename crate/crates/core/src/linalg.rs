use nalgebra::DMatrix;

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Singular values of a row-major `rows × cols` matrix, descending.
pub fn singular_values(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(data.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut values: Vec<f64> = m.svd(false, false).singular_values.iter().map(|s| s.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Rows minus their column mean, plus the mean itself.
pub fn center_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, cols: usize) -> (Vec<f64>, Vec<f64>) {
    let mut data = Vec::new();
    let mut count = 0usize;
    for row in rows {
        data.extend_from_slice(row);
        count += 1;
    }
    let mut mean = vec![0.0; cols];
    for row in data.chunks_exact(cols) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    if count > 0 {
        for m in &mut mean {
            *m /= count as f64;
        }
    }
    for row in data.chunks_exact_mut(cols) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    (data, mean)
}
