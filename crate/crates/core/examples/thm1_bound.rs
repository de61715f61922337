//! Nearest-class-mean error against the margin bound on Gaussian mixtures of
//! increasing separation.

use dse::theory_lab::{thm1_trials, BoundConstants, MixtureSpec};

fn main() -> dse::Result<()> {
    let (classes, dim, std) = (3, 4, 1.0);
    println!("{:>6} {:>10} {:>10} {:>8} {:>6}", "sep", "err", "margin", "C_delta", "held");
    for factor in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let sep = factor * std * (dim as f64).sqrt();
        let spec = MixtureSpec::equidistant(classes, dim, sep, std, 1000, factor as u64)?;
        let reports = thm1_trials(&spec, 20, 0.05, BoundConstants::default())?;
        let mean = |f: fn(&dse::theory_lab::BoundReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
        println!(
            "{:>6.1} {:>10.5} {:>10.5} {:>8.3} {:>3}/{}",
            sep,
            mean(|r| r.empirical_err),
            mean(|r| r.margin_cdf_term),
            reports[0].c_delta,
            reports.iter().filter(|r| r.holds).count(),
            reports.len()
        );
    }
    Ok(())
}
