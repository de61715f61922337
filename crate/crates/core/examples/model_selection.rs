//! Picks checkpoints from a score series: local maxima within a window,
//! then the highest few.
//!
//! cargo run --example model_selection -- [series.json]

use dse::dse::CheckpointSeries;
use dse::selection::{select_top, DEFAULT_TOP_T, DEFAULT_WINDOW};

fn main() -> dse::Result<()> {
    let (ids, scores): (Vec<String>, Vec<f64>) = match std::env::args().nth(1) {
        Some(path) => {
            let file = std::fs::File::open(&path).map_err(|e| dse::DseError::Format(format!("{path}: {e}")))?;
            let series = CheckpointSeries::from_json(std::io::BufReader::new(file))?;
            (series.source_ids().map(String::from).collect(), series.scores)
        }
        None => {
            let scores = vec![0.2, 0.9, 0.4, 0.5, 1.3, 1.1, 0.7, 0.8, 1.2, 0.6];
            ((0..scores.len()).map(|i| format!("epoch_{:04}", i * 10)).collect(), scores)
        }
    };
    let sel = select_top(&scores, DEFAULT_WINDOW, DEFAULT_TOP_T);
    let names = |idx: &[usize]| idx.iter().map(|&i| ids[i].as_str()).collect::<Vec<_>>().join(", ");
    println!("window {}: candidates {}", sel.window, names(&sel.candidate_indices));
    println!("top {}: {}", sel.top_t, names(&sel.selected_indices));
    Ok(())
}
