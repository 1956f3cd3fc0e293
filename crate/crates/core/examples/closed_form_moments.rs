//! Exact moment trajectories from three routes: the closed form, its
//! eigenbasis expansion, and RK4 on the moment ODE.

use synclab::analytics::{moments_closed_form, moments_eigenbasis_form, ode_moments, regime, spectral};
use synclab::model::derived_scalars;
use synclab::{ModelParams, MomentVector};

fn main() -> synclab::Result<()> {
    let params = ModelParams::new(8, 1.0, 1.3, 0.7, 1.0, 0.5)?;
    let init = MomentVector::new(2.0, 1.0, 0.5);
    let s = derived_scalars(&params)?;
    let eig = spectral(&s)?;
    println!("regime {:?}, eigenvalues of L: {:.4}, {:.4}", regime(&params), eig.lambda1, eig.lambda2);

    let grid: Vec<f64> = (0..=8).map(|i| 2.5 * i as f64).collect();
    let ode = ode_moments(&params, init, &grid)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "t", "R", "D", "d", "max dev");
    for (&t, o) in grid.iter().zip(&ode) {
        let c = moments_closed_form(&params, init, t)?;
        let e = moments_eigenbasis_form(&params, init, t)?;
        let dev = c
            .to_array()
            .iter()
            .zip(o.to_array().iter().zip(e.to_array()))
            .map(|(a, (b, c2))| (a - b).abs().max((a - c2).abs()) / a.abs().max(1e-300))
            .fold(0.0, f64::max);
        println!("{t:>6.1} {:>12.6} {:>12.6} {:>12.6} {dev:>10.1e}", c.offset_sq, c.pairwise_sq, c.displacement);
    }
    Ok(())
}
