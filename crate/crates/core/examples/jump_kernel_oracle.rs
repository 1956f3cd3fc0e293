//! One message, averaged over every admissible (sender, receiver) pair,
//! acts linearly on the moments: E[R', D'] = K (R, D) and E[d'] = k_N d.

use rand::Rng;
use synclab::model::{derived_scalars, expected_post_jump_moments, moments_of_config, pair_distribution};
use synclab::simulator::replica_rng;
use synclab::{ClockConfig, ModelParams};

fn main() -> synclab::Result<()> {
    let params = ModelParams::new(4, 1.0, 1.0, 1.0, 1.5, 0.75)?;
    let s = derived_scalars(&params)?;
    let k = s.k_matrix()?;
    println!(
        "{} ordered pairs, K = [[{:.6}, {:.6}], [{:.6}, {:.6}]], k_N = {:.6}",
        pair_distribution(&params)?.len(),
        k[(0, 0)],
        k[(0, 1)],
        k[(1, 0)],
        k[(1, 1)],
        s.k_n()?
    );

    let mut rng = replica_rng(7, 0);
    for _ in 0..5 {
        let x: Vec<f64> = (0..=params.n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cfg = ClockConfig::new(x)?;
        let m = moments_of_config(&cfg);
        let predicted = k * m.quadratic();
        let exact = expected_post_jump_moments(&cfg, &params)?;
        println!(
            "R {:.6} -> {:.12} (K: {:.12})   D {:.6} -> {:.12} (K: {:.12})   d {:.4} -> {:.12} (k_N: {:.12})",
            m.offset_sq,
            exact.offset_sq,
            predicted[0],
            m.pairwise_sq,
            exact.pairwise_sq,
            predicted[1],
            m.displacement,
            exact.displacement,
            s.k_n()? * m.displacement
        );
    }
    Ok(())
}
