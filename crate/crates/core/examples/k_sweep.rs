//! Margin term of the bound when k-means pseudo-labels replace the true
//! classes, for several k on a four-class mixture.

use dse::theory_lab::{k_sweep_experiment, sample_mixture, BoundConstants, MixtureSpec};

fn main() -> dse::Result<()> {
    let spec = MixtureSpec::equidistant(4, 8, 40.0, 1.0, 200, 3)?;
    let cloud = sample_mixture(&spec)?;
    let ks = [1, 2, 3, 4, 6, 8, 16];
    for p in k_sweep_experiment(&cloud, &ks, 0.05, BoundConstants::default(), 0)? {
        println!("k = {:>2}: margin term {:.4}", p.k, p.margin_cdf_term);
    }
    Ok(())
}
