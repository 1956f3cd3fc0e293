//! Time-scale phases of a large network.
//!
//! Time is measured as `t = s N^gamma`. Depending on `gamma` the expected
//! moments grow like `C_R N^psi_R` and `C_D N^psi_D`; the phase label names
//! the regime. Case 1 is `v = r`, case 2 is `v != r`.

use std::fmt;

use serde::Serialize;

use crate::analytics::{h_functions, moments_closed_form};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, MomentVector};
use crate::phi::g2;
use crate::stats::{ols, weighted_ols};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseLabel {
    P1,
    P1a,
    P1b,
    P1c,
    P2,
    P3,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseQuery {
    pub gamma: f64,
    pub s: f64,
    pub params: ModelParams,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseResult {
    pub label: PhaseLabel,
    pub psi_r: f64,
    pub psi_d: f64,
    pub c_r: f64,
    pub c_d: f64,
    /// Growth exponent of D in case 2; `None` in case 1.
    pub phi: Option<f64>,
}

/// Exponent of `D_N(s N^gamma)` when `v != r`.
pub fn phi_exponent(gamma: f64) -> f64 {
    if gamma <= 0.5 {
        gamma
    } else if gamma <= 1.0 {
        3.0 * gamma - 1.0
    } else {
        2.0
    }
}

/// `(l_R(s), l_D(s))`, the case-1 profiles at `gamma = 1`.
pub fn l_functions(s: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let lr = g2(-alpha * s);
    let ld = (alpha * lr + 2.0 * beta * g2(-2.0 * (alpha + beta) * s)) / (alpha + 2.0 * beta);
    (lr, ld)
}

pub fn classify(q: &PhaseQuery) -> Result<PhaseResult> {
    q.params.validate()?;
    if !(q.gamma > 0.0 && q.gamma.is_finite()) {
        return Err(invalid("gamma must be positive"));
    }
    if !(q.s > 0.0 && q.s.is_finite()) {
        return Err(invalid("s must be positive"));
    }
    let p = &q.params;
    let (g, s) = (q.gamma, q.s);
    if g >= 1.0 && p.alpha <= 0.0 {
        return Err(Error::NoSynchronizationPhase);
    }
    let s2 = p.sigma * p.sigma;
    let (alpha, beta) = (p.alpha, p.beta);

    if p.skew() == 0.0 {
        let psi = g.min(1.0);
        let (label, c_r, c_d) = if g < 1.0 {
            (PhaseLabel::P1, s2 * s, 2.0 * s2 * s)
        } else if g == 1.0 {
            let (lr, ld) = l_functions(s, alpha, beta);
            (PhaseLabel::P2, s2 * s * lr, 2.0 * s2 * s * ld)
        } else {
            (PhaseLabel::P3, s2 / alpha, 2.0 * s2 / (alpha + beta))
        };
        return Ok(PhaseResult {
            label,
            psi_r: psi,
            psi_d: psi,
            c_r,
            c_d,
            phi: None,
        });
    }

    let b2 = p.skew() * p.skew();
    let psi_r = (2.0 * g).min(2.0);
    let c_r = if g < 1.0 {
        b2 * s * s
    } else if g == 1.0 {
        2.0 * b2 * s * s * h_functions(s, alpha, beta)?.0
    } else {
        2.0 * b2 / (alpha * alpha)
    };
    let drift_d = 2.0 / 3.0 * alpha * b2 * s * s * s;
    let (label, c_d) = if g < 0.5 {
        (PhaseLabel::P1a, 2.0 * s2 * s)
    } else if g == 0.5 {
        (PhaseLabel::P1b, 2.0 * s2 * s + drift_d)
    } else if g < 1.0 {
        (PhaseLabel::P1c, drift_d)
    } else if g == 1.0 {
        (PhaseLabel::P2, 2.0 * b2 * s * s * h_functions(s, alpha, beta)?.1)
    } else {
        (PhaseLabel::P3, 2.0 * b2 / (alpha * (alpha + beta)))
    };
    let phi = phi_exponent(g);
    Ok(PhaseResult {
        label,
        psi_r,
        psi_d: phi,
        c_r,
        c_d,
        phi: Some(phi),
    })
}

/// One point of a scale curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalePoint {
    pub s: f64,
    pub t: f64,
    pub moments: MomentVector,
}

/// Closed-form moments from zero initial offsets at `t = s N^gamma`.
pub fn scale_curve(params: &ModelParams, gamma: f64, s_grid: &[f64], n: usize) -> Result<Vec<ScalePoint>> {
    if n < 2 {
        return Err(invalid("scale curves need N >= 2"));
    }
    if s_grid.iter().any(|&s| !(s > 0.0)) || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("s grid must be positive and increasing"));
    }
    let p = params.with_n(n);
    let scale = (n as f64).powf(gamma);
    s_grid
        .iter()
        .map(|&s| {
            let t = s * scale;
            Ok(ScalePoint {
                s,
                t,
                moments: moments_closed_form(&p, MomentVector::ZERO, t)?,
            })
        })
        .collect()
}

/// Which moment an exponent fit uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitTarget {
    OffsetSq,
    PairwiseSq,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

fn check_n_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.len() < 4 {
        return Err(invalid("exponent fits need at least 4 values of N"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] < 2 {
        return Err(invalid("N grid must be increasing with N >= 2"));
    }
    if (n_grid[n_grid.len() - 1] as f64) < 10.0 * n_grid[0] as f64 {
        return Err(invalid("N grid must span at least a decade"));
    }
    Ok(())
}

/// Least-squares slope of `log D_N(s N^gamma)` against `log N`.
pub fn exponent_fit(params: &ModelParams, gamma: f64, n_grid: &[usize], s: f64) -> Result<ExponentFit> {
    exponent_fit_of(params, gamma, n_grid, s, FitTarget::PairwiseSq)
}

pub fn exponent_fit_of(
    params: &ModelParams,
    gamma: f64,
    n_grid: &[usize],
    s: f64,
    target: FitTarget,
) -> Result<ExponentFit> {
    check_n_grid(n_grid)?;
    let mut values = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let pt = scale_curve(params, gamma, &[s], n)?[0];
        values.push(match target {
            FitTarget::OffsetSq => pt.moments.offset_sq,
            FitTarget::PairwiseSq => pt.moments.pairwise_sq,
        });
    }
    fit_log_slope(n_grid, &values, None)
}

/// Log-log slope of `values` against `N`. With standard errors, points are
/// weighted by the inverse variance of `log value`.
pub fn fit_log_slope(n_grid: &[usize], values: &[f64], se: Option<&[f64]>) -> Result<ExponentFit> {
    if n_grid.len() != values.len() || se.is_some_and(|e| e.len() != values.len()) {
        return Err(invalid("grid and values differ in length"));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive values".into()));
    }
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = match se {
        None => ols(&x, &y),
        Some(se) => {
            let w: Vec<f64> = values.iter().zip(se).map(|(v, e)| (v / e).powi(2)).collect();
            if w.iter().any(|w| !w.is_finite()) {
                return Err(Error::Domain("zero standard error in weighted fit".into()));
            }
            weighted_ols(&x, &y, &w)
        }
    };
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
    })
}
