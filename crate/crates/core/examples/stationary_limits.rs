//! Long-time limits of (R, D, d), exact and large-N, for growing networks.

use synclab::analytics::stationary_limits;
use synclab::ModelParams;

fn main() -> synclab::Result<()> {
    println!("{:>6} {:>14} {:>14} {:>12} {:>14} {:>14} {:>12}", "N", "R", "R~", "D", "D~", "d", "d~");
    for n in [2, 10, 100, 1000, 10_000] {
        let lim = stationary_limits(&ModelParams::new(n, 1.0, 1.05, 1.0, 1.0, 2.0)?)?;
        let (e, a) = (lim.exact, lim.asymptotic);
        println!(
            "{n:>6} {:>14.4} {:>14.4} {:>12.4} {:>14.4} {:>14.4} {:>12.4}",
            e.offset_sq, a.offset_sq, e.pairwise_sq, a.pairwise_sq, e.displacement, a.displacement
        );
    }
    Ok(())
}
