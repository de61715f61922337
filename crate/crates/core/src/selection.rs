//! Checkpoint selection: local maxima of the score series, then the top-T.

use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: usize = 2;
pub const DEFAULT_TOP_T: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Local maxima, ascending index.
    pub candidate_indices: Vec<usize>,
    /// Highest-scoring candidates first.
    pub selected_indices: Vec<usize>,
    pub top_t: usize,
    pub window: usize,
}

/// Indices `i` that are the first argmax of `scores` over the clipped window
/// `[i − w, i + w]`. On ties inside a window only the earliest index survives.
pub fn local_maxima(scores: &[f64], window: usize) -> Vec<usize> {
    let n = scores.len();
    (0..n)
        .filter(|&i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(n - 1);
            scores[lo..i].iter().all(|&s| s < scores[i]) && scores[i + 1..=hi].iter().all(|&s| s <= scores[i])
        })
        .collect()
}

/// Candidates from [`local_maxima`], keeping the `top_t` best. Equal scores
/// prefer the later checkpoint.
pub fn select_top(scores: &[f64], window: usize, top_t: usize) -> SelectionResult {
    let candidate_indices = local_maxima(scores, window);
    let mut ranked = candidate_indices.clone();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(b.cmp(&a)));
    ranked.truncate(top_t);
    SelectionResult {
        candidate_indices,
        selected_indices: ranked,
        top_t,
        window,
    }
}
