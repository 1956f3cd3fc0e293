//! Growth of D on time scales t = s N^gamma: predicted exponents and
//! log-log fits, with and without clock skew.

use synclab::phase::{classify, exponent_fit, PhaseQuery};
use synclab::ModelParams;

fn main() -> synclab::Result<()> {
    let grid: Vec<usize> = (10..=16).map(|k| 1usize << k).collect();
    for (label, v) in [("v = r", 1.0), ("v - r = 0.1", 1.1)] {
        let params = ModelParams::new(2, 1.0, v, 0.5, 2.0, 1.0)?;
        println!("{label}");
        println!("{:>6} {:>5} {:>9} {:>9} {:>12}", "gamma", "phase", "psi_D", "fitted", "C_D");
        for gamma in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let phase = classify(&PhaseQuery { gamma, s: 1.0, params })?;
            let fit = exponent_fit(&params, gamma, &grid, 1.0)?;
            println!(
                "{gamma:>6} {:>5} {:>9.4} {:>9.4} {:>12.5}",
                phase.label.to_string(),
                phase.psi_d,
                fit.slope,
                phase.c_d
            );
        }
    }
    Ok(())
}
