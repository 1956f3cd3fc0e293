//! Poisson-averaged powers E[a^Pi], E[Pi a^(Pi-1)], E[Pi(Pi-1) a^(Pi-2)]
//! and the U functions, closed form against brute-force series.

use synclab::analytics::{moments_closed_form, poisson_power_expectation, u_functions};
use synclab::conditional::poisson_mixture;
use synclab::model::derived_scalars;
use synclab::oracle::{series_powers, series_u};
use synclab::{ModelParams, MomentVector};

fn main() -> synclab::Result<()> {
    let (delta, t) = (3.0, 1.7);
    for a in [0.1, 0.5, 0.9] {
        let c = poisson_power_expectation(a, delta, t)?;
        let s = series_powers(a, delta, t);
        println!(
            "a={a}: {:.15} {:.15} {:.15}\n       {:.15} {:.15} {:.15}",
            c.power, c.shifted1, c.shifted2, s[0], s[1], s[2]
        );
    }
    for (a1, a2) in [(0.3, 0.6), (0.4, 0.4 + 1e-12)] {
        let (u1, u2) = u_functions(a1, a2, delta, t)?;
        let (w1, w2) = series_u(a1, a2, delta, t);
        println!("U({a1}, {a2}): {u1:.15} {u2:.15} | series {w1:.15} {w2:.15}");
    }

    // Averaging the count-conditioned moments over the Poisson law recovers
    // the unconditional trajectory.
    let params = ModelParams::new(20, 1.0, 1.2, 0.8, 1.0, 1.0)?;
    let s = derived_scalars(&params)?;
    for t in [1.0, 10.0, 100.0] {
        let mix = poisson_mixture(MomentVector::ZERO.into(), t, &s)?.to_moments(params.n);
        let exact = moments_closed_form(&params, MomentVector::ZERO, t)?;
        println!("t={t}: mixture {:?}\n       closed  {:?}", mix.to_array(), exact.to_array());
    }
    Ok(())
}
