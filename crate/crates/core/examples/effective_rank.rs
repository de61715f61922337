//! Effective rank of a few hand-built spectra.

use dse::dimensionality::{effective_rank, erank_from_spectrum};
use dse::tensor_io::RepresentationMatrix;

fn main() -> dse::Result<()> {
    for spectrum in [vec![1.0; 4], vec![3.0, 1.0], vec![10.0, 1e-3, 1e-3], vec![5.0, 0.0, 0.0]] {
        let r = erank_from_spectrum(spectrum.clone())?;
        println!("sigma = {spectrum:?}: entropy {:.6} nats, erank {:.6}", r.entropy, r.erank);
    }

    // rank-one matrix: every row is a multiple of the same direction
    let rows: Vec<Vec<f64>> = (1..=6).map(|k| vec![k as f64, -2.0 * k as f64, 0.5 * k as f64]).collect();
    let r = effective_rank(&RepresentationMatrix::from_rows(&rows)?)?;
    println!("outer product: erank {:.6}", r.erank);
    Ok(())
}
