//! Non-Poisson message flows. The closed form no longer applies, but the
//! direct and conditional estimators still agree.

use synclab::conditional::rao_blackwell_ensemble;
use synclab::simulator::{run_ensemble, InterEventLaw, SimConfig};
use synclab::{ModelParams, MomentVector};

fn main() -> synclab::Result<()> {
    let params = ModelParams::new(10, 1.0, 1.2, 0.6, 1.0, 0.2)?;
    let rate = params.total_rate();
    let laws = [
        InterEventLaw::markovian(&params),
        InterEventLaw::Deterministic { period: 1.0 / rate },
        InterEventLaw::Uniform { low: 0.0, high: 2.0 / rate },
        InterEventLaw::Gamma { shape: 4.0, scale: 0.25 / rate },
    ];
    for law in laws {
        let cfg = SimConfig::new(params, vec![20.0]).with_replicas(4000).with_seed(5).with_law(law);
        let direct = run_ensemble(&cfg)?;
        let rb = rao_blackwell_ensemble(MomentVector::ZERO.into(), &cfg)?;
        let (a, b) = (direct.rows[0].offset_sq, rb.rows[0].offset_sq);
        println!(
            "{law:?}\n    R(20): direct {:.4} +/- {:.4}   conditional {:.4} +/- {:.4}",
            a.mean,
            a.se.unwrap(),
            b.mean,
            b.se.unwrap()
        );
    }
    Ok(())
}
