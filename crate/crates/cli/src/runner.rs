//! Solver dispatch, sweeps and parallel simulation.

use rayon::prelude::*;

use infoacq_core::characteristics::{optimal_theta_path, theta0_sq};
use infoacq_core::closedform::value_surface;
use infoacq_core::detcontrol::{value_of_schedule, DetControlProblem};
use infoacq_core::filtersim::{paired_difference, SimBatch, SimConfig, Simulator, Trading};
use infoacq_core::hjsolver::{default_tau, default_u_max, solve_grid, theta_from_grid, GridSolution};
use infoacq_core::{CostModel, ModelParams, StrategyPath};

use crate::output::{path_hash, SweepRow};
use crate::{CliResult, RunConfig, SolverKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub solver: SolverKind,
    pub acquires: bool,
    /// First time the schedule is zero (`T` when it never is before the end).
    pub t_star: f64,
    pub theta0_sq: f64,
    /// Value at `(0, x0)` with no observations yet.
    pub value: f64,
    pub hash: u64,
}

impl Summary {
    pub fn lines(&self) -> Vec<String> {
        let mut v = vec![format!("solver      {}", self.solver)];
        if !self.acquires {
            v.push("no acquisition".into());
        }
        v.push(format!("t_star      {:.10}", self.t_star));
        v.push(format!("theta0_sq   {:.10}", self.theta0_sq));
        v.push(format!("value       {:.10}", self.value));
        v.push(format!("path_hash   {:016x}", self.hash));
        v
    }
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub path: StrategyPath,
    pub grid: Option<GridSolution>,
    pub summary: Summary,
}

pub fn upwind_grid(cfg: &RunConfig) -> CliResult<GridSolution> {
    let tau = match cfg.tau {
        Some(t) => t,
        None => default_tau(&cfg.params, &cfg.cost, cfg.h)?,
    };
    let u_max = match cfg.u_max {
        Some(u) => u,
        None => default_u_max(&cfg.params, &cfg.cost)?,
    };
    Ok(solve_grid(&cfg.params, &cfg.cost, cfg.h, tau, u_max)?)
}

pub fn solve(cfg: &RunConfig) -> CliResult<Solved> {
    let p = &cfg.params;
    let (path, grid, value, closed) = match cfg.solver {
        SolverKind::ClosedForm => {
            let surface = value_surface(p, &cfg.cost)?;
            let v = surface.value(0.0, p.x0, 0.0, 0.0)?;
            (surface.strategy_path(cfg.steps), None, v, Some(surface.solution))
        }
        SolverKind::Characteristics => {
            let path = optimal_theta_path(p, &cfg.cost, cfg.steps)?;
            let v = value_of_schedule(p, &cfg.cost, &path, p.x0)?;
            (path, None, v, None)
        }
        SolverKind::Upwind => {
            let grid = upwind_grid(cfg)?;
            let path = theta_from_grid(&grid, p, &cfg.cost)?;
            let v = value_of_schedule(p, &cfg.cost, &path, p.x0)?;
            (path, Some(grid), v, None)
        }
        SolverKind::DetControl => {
            let path = DetControlProblem::new(p, &cfg.cost, cfg.steps)?.solve()?.path;
            let v = value_of_schedule(p, &cfg.cost, &path, p.x0)?;
            (path, None, v, None)
        }
    };
    let (acquires, t_star) = match closed {
        Some(sol) => (sol.has_acquisition, sol.t_star),
        None => {
            let stop = path.times.iter().zip(&path.theta_sq).find(|(_, &th)| th <= 1e-12).map_or(p.horizon, |(&t, _)| t);
            (path.theta0_sq() > 1e-12, stop)
        }
    };
    let summary = Summary { solver: cfg.solver, acquires, t_star, theta0_sq: path.theta0_sq(), value, hash: path_hash(&path) };
    Ok(Solved { path, grid, summary })
}

/// `ϑ*(0)²` alone; characteristics need a single shooting here.
pub fn theta0(cfg: &RunConfig) -> CliResult<f64> {
    match cfg.solver {
        SolverKind::Characteristics => Ok(theta0_sq(&cfg.params, &cfg.cost, cfg.steps)?),
        _ => Ok(solve(cfg)?.path.theta0_sq()),
    }
}

/// Rows come back in parameter order whatever the completion order.
pub fn sweep(cfg: &RunConfig) -> Vec<SweepRow> {
    let spec = cfg.sweep;
    spec.values()
        .into_par_iter()
        .map(|value| match cfg.with_param(spec.param, value).and_then(|c| theta0(&c)) {
            Ok(theta0_sq) => SweepRow { value, theta0_sq, error: None },
            Err(e) => SweepRow { value, theta0_sq: f64::NAN, error: Some(e.to_string()) },
        })
        .collect()
}

/// Parallel over paths; bit-identical to the sequential batch.
pub fn par_simulate(params: &ModelParams, cost: &CostModel, path: &StrategyPath, trading: Trading, sim: SimConfig) -> CliResult<SimBatch> {
    let s = Simulator::new(params, cost, path, trading, sim)?;
    let utilities: Vec<f64> = (0..sim.n_paths).into_par_iter().map(|i| s.path_utility(i, &mut ())).collect();
    Ok(SimBatch::from_utilities(utilities, sim.antithetic)?)
}

#[derive(Debug, Clone)]
pub struct SimReport {
    pub batches: Vec<(String, SimBatch)>,
    /// Exact expected utility of each schedule.
    pub values: Vec<f64>,
    /// `(mean, std error)` of `optimal − candidate` for each other candidate.
    pub diffs: Vec<(String, f64, f64)>,
}

/// The solved schedule against no acquisition and 1.5× the schedule, on common random numbers.
pub fn simulate(cfg: &RunConfig) -> CliResult<SimReport> {
    let p = &cfg.params;
    let opt = solve(cfg)?.path;
    let zero = StrategyPath::constant(p, 0.0, opt.len() - 1)?;
    let big = opt.scaled(p, 1.5)?;
    let mut batches = Vec::new();
    let mut values = Vec::new();
    for (name, path) in [("optimal", &opt), ("zero", &zero), ("scaled-1.5", &big)] {
        batches.push((name.to_string(), par_simulate(p, &cfg.cost, path, cfg.trading, cfg.sim)?));
        values.push(value_of_schedule(p, &cfg.cost, path, p.x0)?);
    }
    let diffs = batches[1..]
        .iter()
        .map(|(name, b)| {
            let (m, se) = paired_difference(&batches[0].1, b);
            (name.clone(), m, se)
        })
        .collect();
    Ok(SimReport { batches, values, diffs })
}
