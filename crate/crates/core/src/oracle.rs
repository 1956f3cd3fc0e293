//! Brute-force reference computations used by the self-test and the test
//! suites: truncated Poisson series and literal sums.

use nalgebra::Matrix2;
use statrs::function::gamma::ln_gamma;

use crate::stats::CompensatedSum;

/// Poisson(mean) probabilities for `0..=nmax`, with `nmax` far in the tail.
pub fn poisson_table(mean: f64) -> Vec<f64> {
    let nmax = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    (0..=nmax)
        .map(|n| {
            if mean == 0.0 {
                if n == 0 { 1.0 } else { 0.0 }
            } else {
                (n as f64 * mean.ln() - mean - ln_gamma(n as f64 + 1.0)).exp()
            }
        })
        .collect()
}

/// `[E a^Pi, E t a^(Pi+1)/(Pi+1), E t^2 a^(Pi+2)/((Pi+1)(Pi+2))]` summed term by term.
pub fn series_powers(a: f64, delta: f64, t: f64) -> [f64; 3] {
    let mut acc = [CompensatedSum::new(); 3];
    let mut an = 1.0;
    for (n, p) in poisson_table(delta * t).into_iter().enumerate() {
        let (n1, n2) = ((n + 1) as f64, (n + 2) as f64);
        acc[0].add(p * an);
        acc[1].add(p * t * an * a / n1);
        acc[2].add(p * t * t * an * a * a / (n1 * n2));
        an *= a;
    }
    acc.map(|s| s.value())
}

/// Matrix version of [`series_powers`].
pub fn series_powers_matrix(a: &Matrix2<f64>, delta: f64, t: f64) -> [Matrix2<f64>; 3] {
    let mut acc = [Matrix2::zeros(); 3];
    let mut an = Matrix2::identity();
    for (n, p) in poisson_table(delta * t).into_iter().enumerate() {
        let (n1, n2) = ((n + 1) as f64, (n + 2) as f64);
        acc[0] += p * an;
        acc[1] += p * t / n1 * an * a;
        acc[2] += p * t * t / (n1 * n2) * an * a * a;
        an *= a;
    }
    acc
}

/// `(U1, U2)` by summing the Poisson series of the complete homogeneous sums.
pub fn series_u(a1: f64, a2: f64, delta: f64, t: f64) -> (f64, f64) {
    let mut u1 = CompensatedSum::new();
    let mut u2 = CompensatedSum::new();
    // h_n = sum_{m<=n} a1^m a2^(n-m); cum_n = sum_{j<=n} h_j.
    let mut h = 0.0;
    let mut a1n = 1.0;
    let mut cum = 0.0;
    for (n, p) in poisson_table(delta * t).into_iter().enumerate() {
        h = if n == 0 { 1.0 } else { a2 * h + a1n };
        cum += h;
        let (n1, n2) = ((n + 1) as f64, (n + 2) as f64);
        u1.add(p * t / n1 * h);
        u2.add(p * t * t / (n1 * n2) * cum);
        a1n *= a1;
    }
    (u1.value(), u2.value())
}
