//! Rank agreement between a metric series and downstream performance.

use dse::correlation::kendall_tau;

fn main() -> dse::Result<()> {
    let metric = [0.12, 0.35, 0.31, 0.58, 0.66, 0.71, 0.69, 0.90];
    let miou = [21.0, 24.5, 25.1, 28.3, 29.0, 31.2, 30.8, 33.4];
    let r = kendall_tau(&metric, &miou)?;
    println!(
        "n = {}, concordant {}, discordant {}, tied {}",
        r.n, r.concordant, r.discordant, r.tied
    );
    println!("tau = {:.4}, p = {:.3e}", r.tau, r.p_value);
    Ok(())
}
