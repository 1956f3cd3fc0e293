//! Built-in oracle suites. The report text is deterministic: all random
//! inputs come from fixed seeds.

use nalgebra::Matrix2;
use rand::Rng;

use crate::analytics::{
    moments_closed_form, ode_moments, poisson_power_expectation, poisson_power_expectation_matrix, u_functions,
};
use crate::conditional::poisson_mixture;
use crate::error::Result;
use crate::model::{derived_scalars, expected_post_jump_moments, moments_of_config, ClockConfig, ModelParams, MomentVector};
use crate::oracle::{series_powers, series_powers_matrix, series_u};
use crate::phi::{g2, g2_dd, g2_dd2, g2_prime, phi2};
use crate::simulator::replica_rng;

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestOptions {
    /// Adds 1e-3 to `K[0][0]` before the jump-kernel comparison.
    pub perturb_k: bool,
}

pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn jump_kernel(opts: SelftestOptions) -> Result<SuiteResult> {
    let mut rng = replica_rng(2024, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in [2, 3, 5, 10] {
        for _ in 0..25 {
            let alpha = rng.random_range(0.1..5.0);
            let beta = rng.random_range(0.1..5.0);
            let p = ModelParams::new(n, 1.0, 1.0, 1.0, alpha, beta)?;
            let x: Vec<f64> = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cfg = ClockConfig::new(x)?;
            let s = derived_scalars(&p)?;
            let mut k = s.k_matrix()?;
            if opts.perturb_k {
                k[(0, 0)] += 1e-3;
            }
            let m = moments_of_config(&cfg);
            let want = k * m.quadratic();
            let got = expected_post_jump_moments(&cfg, &p)?;
            worst = worst
                .max(rel(got.offset_sq, want[0]))
                .max(rel(got.pairwise_sq, want[1]))
                .max(rel(got.displacement, s.k_n()? * m.displacement));
            cases += 1;
        }
    }
    Ok(SuiteResult {
        name: "jump-kernel",
        cases,
        max_error: worst,
        tolerance: 1e-12,
    })
}

fn poisson_series() -> Result<SuiteResult> {
    let mut rng = replica_rng(2024, 1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..50 {
        let a1 = rng.random_range(0.05..0.95);
        let a2 = rng.random_range(0.05..0.95);
        let delta = rng.random_range(0.5..10.0);
        let t = rng.random_range(0.1..5.0);
        let got = poisson_power_expectation(a1, delta, t)?;
        let want = series_powers(a1, delta, t);
        worst = worst
            .max(rel(got.power, want[0]))
            .max(rel(got.shifted1, want[1]))
            .max(rel(got.shifted2, want[2]));
        let a = Matrix2::new(a1, 0.0, rng.random_range(0.0..1.0), a2);
        let got = poisson_power_expectation_matrix(&a, delta, t)?;
        let want = series_powers_matrix(&a, delta, t);
        for (g, w) in [got.power, got.shifted1, got.shifted2].iter().zip(want) {
            worst = worst.max((g - w).abs().max() / w.abs().max());
        }
        let (u1, u2) = u_functions(a1, a2, delta, t)?;
        let (w1, w2) = series_u(a1, a2, delta, t);
        worst = worst.max(rel(u1, w1)).max(rel(u2, w2));
        cases += 1;
    }
    Ok(SuiteResult {
        name: "poisson-series",
        cases,
        max_error: worst,
        tolerance: 1e-10,
    })
}

fn moment_triangle() -> Result<SuiteResult> {
    let sets = [
        ModelParams::new(50, 1.0, 1.1, 0.5, 2.0, 1.0)?,
        ModelParams::new(2, 1.0, 2.0, 1.0, 1.0, 2.0)?,
    ];
    let grid: Vec<f64> = (0..=10).map(|i| 5.0 * i as f64).collect();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for p in sets {
        let s = derived_scalars(&p)?;
        let ode = ode_moments(&p, MomentVector::ZERO, &grid)?;
        for (&t, o) in grid.iter().zip(&ode) {
            let c = moments_closed_form(&p, MomentVector::ZERO, t)?;
            let mix = poisson_mixture(MomentVector::ZERO.into(), t, &s)?.to_moments(p.n);
            for (a, (b, m)) in c.to_array().iter().zip(o.to_array().iter().zip(mix.to_array())) {
                worst = worst.max(rel(*a, *b)).max(rel(*a, m));
            }
            cases += 1;
        }
    }
    Ok(SuiteResult {
        name: "moment-triangle",
        cases,
        max_error: worst,
        tolerance: 1e-8,
    })
}

fn phi_stability() -> Result<SuiteResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for i in 1..=20 {
        let y = (-1.0f64).powi(i) * 1e-4 * i as f64 / 20.0;
        let taylor = 1.0 + y / 2.0 + y * y / 6.0 + y.powi(3) / 24.0;
        worst = worst.max((g2(y) - taylor).abs());
        cases += 1;
    }
    for y in [1.0f64, -1.0] {
        let inner = y * (1.0 - 1e-12);
        worst = worst
            .max(rel(g2(inner), g2(y)))
            .max(rel(phi2(inner), phi2(y)))
            .max(rel(g2_prime(inner), g2_prime(y)));
        cases += 1;
    }
    for (y, z) in [(-0.2, -0.9), (-0.2, -30.0), (-12.0, -0.5), (-3.0, -3.0000001)] {
        worst = worst
            .max(rel(g2_dd(y, z), g2_dd(z, y)))
            .max(rel(g2_dd2(y, z), g2_dd2(y, z * (1.0 + 1e-13))));
        cases += 1;
    }
    Ok(SuiteResult {
        name: "phi-stability",
        cases,
        max_error: worst,
        tolerance: 1e-10,
    })
}

pub fn run_suites(opts: SelftestOptions) -> Result<Vec<SuiteResult>> {
    Ok(vec![jump_kernel(opts)?, poisson_series()?, moment_triangle()?, phi_stability()?])
}

pub fn render(results: &[SuiteResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:<16} {}  cases={:<4} max_err={:.3e} tol={:.0e}\n",
            r.name,
            if r.passed() { "PASS" } else { "FAIL" },
            r.cases,
            r.max_error,
            r.tolerance
        ));
    }
    let all = results.iter().all(SuiteResult::passed);
    out.push_str(if all { "overall PASS\n" } else { "overall FAIL\n" });
    out
}
