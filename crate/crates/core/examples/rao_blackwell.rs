//! Conditioning on the message epochs: the Rao-Blackwell estimator against
//! the direct simulation at equal replica counts.

use std::time::Instant;

use synclab::analytics::moments_closed_form;
use synclab::conditional::rao_blackwell_ensemble;
use synclab::simulator::{run_ensemble, SimConfig};
use synclab::{ModelParams, MomentVector};

fn main() -> synclab::Result<()> {
    let params = ModelParams::new(50, 1.0, 1.1, 0.5, 2.0, 1.0)?;
    let cfg = SimConfig::new(params, vec![50.0]).with_replicas(5000).with_seed(3);

    let clock = Instant::now();
    let direct = run_ensemble(&cfg)?;
    let t_direct = clock.elapsed();
    let clock = Instant::now();
    let rb = rao_blackwell_ensemble(MomentVector::ZERO.into(), &cfg)?;
    let t_rb = clock.elapsed();

    let closed = moments_closed_form(&params, MomentVector::ZERO, 50.0)?;
    println!("direct {t_direct:.2?}, rao-blackwell {t_rb:.2?}");
    for (k, name) in ["R", "D", "d"].iter().enumerate() {
        let (a, b) = (direct.rows[0].estimates()[k], rb.rows[0].estimates()[k]);
        let (sa, sb) = (a.se.unwrap(), b.se.unwrap());
        println!(
            "{name}: closed {:.5}  direct {:.5} +/- {sa:.1e}  rb {:.5} +/- {sb:.1e}  variance ratio {:.0}",
            closed.to_array()[k],
            a.mean,
            b.mean,
            (sa / sb).powi(2)
        );
    }
    Ok(())
}
