//! Error of the nearest-class-mean rule as dimension grows at fixed
//! per-coordinate separation.
//!
//! cargo run --example dim_decay -- [per-coordinate separation]

use dse::theory_lab::{decay_threshold, dim_decay_experiment, non_increasing_within, DimDecaySpec};

fn main() -> dse::Result<()> {
    let sep: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let spec = DimDecaySpec {
        per_coordinate_separation: sep,
        trials: 5,
        ..Default::default()
    };
    println!(
        "separation {sep} per coordinate, threshold {:.3}",
        decay_threshold(spec.per_class_std, spec.samples_per_class, spec.delta)
    );
    let points = dim_decay_experiment(&spec, &[1, 2, 4, 8, 16, 32, 64])?;
    for p in &points {
        println!("d = {:>3}: err {:.5} ± {:.5}", p.dim, p.error, p.std_error);
    }
    println!("non-increasing within 2 SE: {}", non_increasing_within(&points, 2.0));
    Ok(())
}
