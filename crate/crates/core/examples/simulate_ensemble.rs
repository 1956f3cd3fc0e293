//! Monte Carlo ensemble of a 50-sensor network, printed as CSV with the
//! closed-form value next to each estimate.
//!
//! cargo run --release --example simulate_ensemble

use synclab::analytics::moments_closed_form;
use synclab::simulator::{run_ensemble, SimConfig};
use synclab::{ModelParams, MomentVector};

fn main() -> synclab::Result<()> {
    let params = ModelParams::new(50, 1.0, 1.1, 0.5, 2.0, 1.0)?;
    let cfg = SimConfig::new(params, vec![1.0, 10.0, 50.0, 200.0])
        .with_replicas(4000)
        .with_seed(1);
    let stats = run_ensemble(&cfg)?;

    println!("t,moment,mean,se,closed");
    for row in &stats.rows {
        let closed = moments_closed_form(&params, MomentVector::ZERO, row.t)?;
        for ((name, e), c) in ["R", "D", "d"].iter().zip(row.estimates()).zip(closed.to_array()) {
            println!("{},{name},{:.5},{:.5},{c:.5}", row.t, e.mean, e.se.unwrap_or(f64::NAN));
        }
    }
    Ok(())
}
