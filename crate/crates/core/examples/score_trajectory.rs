//! Scores a synthetic training trajectory and compares the ranking with the
//! known downstream accuracy.
//!
//! cargo run --example score_trajectory -- [improving|separability_decay|dimension_collapse]

use dse::correlation::kendall_tau;
use dse::dse::{dse_components, dse_series, MetricConfig};
use dse::selection::{select_top, DEFAULT_TOP_T, DEFAULT_WINDOW};
use dse::synth_data::{generate_trajectory, Schedule, TrajectorySpec};

fn main() -> dse::Result<()> {
    let schedule = match std::env::args().nth(1).as_deref() {
        None | Some("improving") => Schedule::Improving,
        Some("separability_decay") => Schedule::SeparabilityDecay,
        Some("dimension_collapse") => Schedule::DimensionCollapse,
        Some(other) => {
            eprintln!("unknown schedule {other}");
            std::process::exit(2);
        }
    };
    let spec = TrajectorySpec { schedule, ..Default::default() };
    let traj = generate_trajectory(&spec)?;
    let cfg = MetricConfig::default();
    let records = traj
        .iter()
        .map(|c| dse_components(&c.batch, &cfg, 0))
        .collect::<dse::Result<Vec<_>>>()?;
    let series = dse_series(records, None)?;

    println!("lambda = {:.4}", series.lambda);
    println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "ckpt", "cls_sep", "m_dim", "dse", "accuracy");
    for ((r, s), c) in series.records.iter().zip(&series.scores).zip(&traj) {
        println!(
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            r.source_id, r.cls_sep, r.m_dim, s, c.true_nn_accuracy
        );
    }
    let acc: Vec<f64> = traj.iter().map(|c| c.true_nn_accuracy).collect();
    let tau = kendall_tau(&series.scores, &acc)?;
    println!("kendall tau = {:.3} (p = {:.2e})", tau.tau, tau.p_value);

    let sel = select_top(&series.scores, DEFAULT_WINDOW, DEFAULT_TOP_T);
    let best = acc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for &i in &sel.selected_indices {
        println!("selected {} (accuracy {:.4}, best {:.4})", series.records[i].source_id, acc[i], best);
    }
    Ok(())
}
