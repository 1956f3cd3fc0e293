use crate::analytics::{moments_closed_form, ode_moments, stationary_limits};
use crate::conditional::rao_blackwell_ensemble;
use crate::error::{invalid, Error, Result};
use crate::phase::{classify, exponent_fit, PhaseQuery};
use crate::simulator::{run_ensemble, Estimate, EnsembleStats, InterEventLaw, SimConfig};

use super::config::{Estimator, RunConfig};
use super::csv::{Cell, Table};

/// Result of a subcommand: the file body plus human-readable notes.
pub struct Report {
    pub body: String,
    pub notes: Vec<String>,
    /// A comparison exceeded its threshold or a self-test suite failed.
    pub failed: bool,
}

impl Report {
    fn ok(body: String, notes: Vec<String>) -> Self {
        Self {
            body,
            notes,
            failed: false,
        }
    }
}

pub const SIMULATE_HEADER: [&str; 8] = ["t", "R_mean", "R_se", "D_mean", "D_se", "d_mean", "d_se", "replicas"];

pub fn ensemble_table(stats: &EnsembleStats) -> Table {
    let mut table = Table::new(&SIMULATE_HEADER);
    for row in &stats.rows {
        let mut cells = vec![Cell::from(row.t)];
        for e in row.estimates() {
            cells.push(e.mean.into());
            cells.push(e.se.into());
        }
        cells.push(stats.replicas.into());
        table.row(cells);
    }
    table
}

pub fn cmd_simulate(cfg: &RunConfig, seed: Option<u64>) -> Result<Report> {
    let sim = cfg.sim_config(seed)?;
    let stats = run_ensemble(&sim)?;
    let notes = vec![format!(
        "simulated {} replicas at {} observation times",
        stats.replicas,
        stats.rows.len()
    )];
    Ok(Report::ok(ensemble_table(&stats).as_str().to_string(), notes))
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn cmd_analytic(cfg: &RunConfig, with_ode: bool, with_limits: bool) -> Result<Report> {
    let params = cfg.params()?;
    let init = cfg.initial_moments()?;
    let grid = cfg.analytic_grid();
    if grid.is_empty() {
        return Err(invalid("analytic time grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("analytic time grid must be sorted"));
    }
    let closed: Vec<_> = grid
        .iter()
        .map(|&t| moments_closed_form(&params, init, t))
        .collect::<Result<_>>()?;
    let limits = if with_limits { Some(stationary_limits(&params)?) } else { None };
    let ode = if with_ode { Some(ode_moments(&params, init, grid)?) } else { None };

    let mut header = vec!["t", "R", "D", "d"];
    if with_ode {
        header.extend(["R_ode", "D_ode", "d_ode"]);
    }
    let mut table = Table::new(&header);
    let mut notes = Vec::new();
    let mut max_dev: f64 = 0.0;
    for (i, (&t, m)) in grid.iter().zip(&closed).enumerate() {
        let mut cells: Vec<Cell> = vec![t.into()];
        cells.extend(m.to_array().map(Cell::from));
        if let Some(ode) = &ode {
            let o = ode[i].to_array();
            for (a, b) in m.to_array().iter().zip(o) {
                max_dev = max_dev.max(relative_deviation(*a, b));
            }
            cells.extend(o.map(Cell::from));
        }
        table.row(cells);
    }
    if with_ode {
        notes.push(format!("max relative deviation closed form vs ODE: {max_dev:e}"));
    }
    if let Some(lim) = limits {
        for (label, m) in [("inf_exact", lim.exact), ("inf_asymptotic", lim.asymptotic)] {
            let mut cells: Vec<Cell> = vec![label.into()];
            cells.extend(m.to_array().map(Cell::from));
            if with_ode {
                cells.extend([Cell::Empty, Cell::Empty, Cell::Empty]);
            }
            table.row(cells);
        }
    }
    Ok(Report::ok(table.as_str().to_string(), notes))
}

pub fn cmd_limits(cfg: &RunConfig) -> Result<Report> {
    let lim = stationary_limits(&cfg.params()?)?;
    let mut table = Table::new(&["kind", "R", "D", "d"]);
    for (label, m) in [("exact", lim.exact), ("asymptotic", lim.asymptotic)] {
        let mut cells: Vec<Cell> = vec![label.into()];
        cells.extend(m.to_array().map(Cell::from));
        table.row(cells);
    }
    Ok(Report::ok(table.as_str().to_string(), Vec::new()))
}

/// `(mean - closed) / se`, 0 for an exact match with zero spread.
pub fn z_score(e: Estimate, closed: f64) -> f64 {
    let se = e.se.unwrap_or(0.0);
    let diff = e.mean - closed;
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn check_markovian(sim: &SimConfig) -> Result<()> {
    match sim.law {
        InterEventLaw::Exponential { rate } if rate == sim.params.total_rate() => Ok(()),
        _ => Err(invalid(
            "compare needs the Poisson flow with rate alpha + N beta (the closed form assumes it)",
        )),
    }
}

pub fn cmd_compare(cfg: &RunConfig, seed: Option<u64>, estimator: Estimator, z_threshold: f64) -> Result<Report> {
    if !(z_threshold > 0.0) {
        return Err(invalid("z threshold must be positive"));
    }
    let sim = cfg.sim_config(seed)?;
    if sim.replicas < 2 {
        return Err(invalid("compare needs at least 2 replicas"));
    }
    check_markovian(&sim)?;
    let init = sim.initial.expected_moments(sim.params.n)?;
    let closed: Vec<_> = sim
        .obs_grid
        .iter()
        .map(|&t| moments_closed_form(&sim.params, init, t))
        .collect::<Result<_>>()?;
    let stats = match estimator {
        Estimator::Direct => run_ensemble(&sim)?,
        Estimator::RaoBlackwell => rao_blackwell_ensemble(init.into(), &sim)?,
    };

    let mut table = Table::new(&["t", "moment", "mean", "se", "closed", "z"]);
    let mut max_z: f64 = 0.0;
    for (row, c) in stats.rows.iter().zip(&closed) {
        for ((name, e), cv) in ["R", "D", "d"].into_iter().zip(row.estimates()).zip(c.to_array()) {
            let z = z_score(e, cv);
            max_z = max_z.max(z.abs());
            table.row([row.t.into(), name.into(), e.mean.into(), e.se.into(), cv.into(), z.into()]);
        }
    }
    let failed = max_z > z_threshold;
    let notes = vec![format!(
        "estimator {estimator:?}, {} replicas: max |z| = {max_z} (threshold {z_threshold}){}",
        stats.replicas,
        if failed { " EXCEEDED" } else { "" }
    )];
    Ok(Report {
        body: table.as_str().to_string(),
        notes,
        failed,
    })
}

pub fn cmd_phase_scan(cfg: &RunConfig) -> Result<Report> {
    let sec = cfg
        .phase_scan
        .as_ref()
        .ok_or_else(|| Error::Config("missing phase_scan section".into()))?;
    if sec.gammas.is_empty() {
        return Err(invalid("gamma list is empty"));
    }
    let params = cfg.params()?;
    let mut plan = Vec::with_capacity(sec.gammas.len());
    for &gamma in &sec.gammas {
        let phase = classify(&PhaseQuery { gamma, s: sec.s, params })?;
        plan.push((gamma, phase));
    }
    let mut table = Table::new(&["gamma", "N", "t", "D_closed", "predicted_psi", "fitted_slope", "label"]);
    let mut notes = Vec::new();
    for (gamma, phase) in plan {
        let fit = exponent_fit(&params, gamma, &sec.n_grid, sec.s)?;
        for &n in &sec.n_grid {
            let pt = crate::phase::scale_curve(&params, gamma, &[sec.s], n)?[0];
            table.row([
                gamma.into(),
                n.into(),
                pt.t.into(),
                pt.moments.pairwise_sq.into(),
                phase.psi_d.into(),
                fit.slope.into(),
                phase.label.to_string().into(),
            ]);
        }
        notes.push(format!(
            "gamma {gamma}: {} predicted {} fitted {}",
            phase.label, phase.psi_d, fit.slope
        ));
    }
    Ok(Report::ok(table.as_str().to_string(), notes))
}
