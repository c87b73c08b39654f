//! Direct solution of the deterministic control problem
//! `min_ϑ ∫γk(ϑ²)dt + ∫(σ0²/2σ²)/(σ0²u_t+1)dt − μ0²/(2σ0²)`, `du = ϑ²dt`, `u_0 = T/σ²`,
//! whose value is `Γ(0, T/σ²)`.
//!
//! The controls `a_i = ϑ_i²` are piecewise constant on `n` cells and both
//! integrals use the left endpoint, so the discrete objective is exactly
//! convex. It is minimised by spectral projected gradient (Barzilai–Borwein
//! steps with a nonmonotone Armijo search) on the box `[0, 2·cfl]`.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;

use crate::hjsolver::cfl_ratio;
use crate::model::{CostModel, ModelParams};
use crate::path::{interp, uniform_grid, SolverTag, StrategyPath};
use crate::{Error, Result};

pub const PG_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 100_000;
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
/// Window excluded at the end of the horizon by the Euler–Lagrange check.
pub const EL_WINDOW: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct DetControlProblem {
    pub params: ModelParams,
    pub cost: CostModel,
    pub n: usize,
    /// Upper bound on each control.
    pub a_cap: f64,
}

/// Optimiser output.
#[derive(Debug, Clone)]
pub struct DetSolution {
    pub path: StrategyPath,
    /// Cell controls `a_0 .. a_{n−1}`.
    pub controls: Vec<f64>,
    /// Objective including the `−μ0²/(2σ0²)` constant.
    pub objective: f64,
    pub iterations: usize,
    /// Final `‖P(a − ∇) − a‖∞`.
    pub pg_norm: f64,
}

impl DetControlProblem {
    pub fn new(params: &ModelParams, cost: &CostModel, n: usize) -> Result<Self> {
        params.validate()?;
        if !cost.is_smooth() {
            return Err(Error::UnsupportedCost("the direct solver needs a smooth cost"));
        }
        if n < 16 {
            return Err(Error::Config("need at least 16 time cells"));
        }
        let a_cap = 2.0 * cfl_ratio(params, cost)?;
        Ok(DetControlProblem { params: *params, cost: *cost, n, a_cap })
    }

    pub fn dt(&self) -> f64 {
        self.params.horizon / self.n as f64
    }

    fn heights(&self, a: &[f64]) -> Vec<f64> {
        let dt = self.dt();
        let mut u = Vec::with_capacity(self.n + 1);
        let mut cur = self.params.u_start();
        u.push(cur);
        for &ai in a {
            cur += ai * dt;
            u.push(cur);
        }
        u
    }

    /// `Σ[γk(a_i) + f(u_i)]`, the objective per unit `dt` without the prior constant.
    fn running(&self, a: &[f64]) -> Result<f64> {
        let u = self.heights(a);
        let g = self.params.gamma;
        let mut terms = Vec::with_capacity(self.n);
        for i in 0..self.n {
            terms.push(g * self.cost.eval_smooth(a[i])? + self.params.info_rate(u[i]));
        }
        Ok(crate::stats::pairwise_sum(&terms))
    }

    fn check(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.n {
            return Err(Error::Config("control vector length must equal the cell count"));
        }
        if let Some(&bad) = a.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain { what: "controls must be nonnegative", value: bad });
        }
        Ok(())
    }

    /// Left-endpoint objective, including `−μ0²/(2σ0²)`.
    pub fn objective(&self, a: &[f64]) -> Result<f64> {
        self.check(a)?;
        Ok(self.dt() * self.running(a)? - self.params.prior_constant())
    }

    /// Gradient of the objective divided by `dt`, by the adjoint recursion
    /// `λ_i = dt·Σ_{m>i} f'(u_m)`.
    pub fn scaled_gradient(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check(a)?;
        let u = self.heights(a);
        let dt = self.dt();
        let s0 = self.params.sigma0_sq();
        let coef = 0.5 * s0 * s0 / self.params.sigma_sq();
        let mut grad = alloc::vec![0.0; self.n];
        let mut lambda = 0.0;
        for i in (0..self.n).rev() {
            grad[i] = self.params.gamma * self.cost.marginal(a[i]) + lambda;
            let d = s0 * u[i] + 1.0;
            lambda -= dt * coef / (d * d);
        }
        Ok(grad)
    }

    fn project(&self, x: f64) -> f64 {
        x.clamp(0.0, self.a_cap)
    }

    fn pg_norm(&self, a: &[f64], g: &[f64]) -> f64 {
        a.iter().zip(g).fold(0.0_f64, |m, (ai, gi)| m.max((self.project(ai - gi) - ai).abs()))
    }

    /// Spectral projected gradient from `a ≡ 0`.
    pub fn solve(&self) -> Result<DetSolution> {
        let n = self.n;
        let mut a = alloc::vec![0.0; n];
        let mut f = self.running(&a)?;
        let mut g = self.scaled_gradient(&a)?;
        let mut pg = self.pg_norm(&a, &g);
        let mut alpha = if pg > 0.0 { 1.0 / pg } else { 1.0 };
        let mut history: VecDeque<f64> = VecDeque::with_capacity(MEMORY);
        history.push_back(f);
        let mut iter = 0;
        while pg >= PG_TOL {
            if iter >= MAX_ITER {
                return Err(Error::NoConvergence { iterations: iter, residual: pg });
            }
            iter += 1;
            let d: Vec<f64> = (0..n).map(|i| self.project(a[i] - alpha * g[i]) - a[i]).collect();
            let slope: f64 = crate::stats::pairwise_sum(&d.iter().zip(&g).map(|(x, y)| x * y).collect::<Vec<_>>());
            let f_ref = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut lam = 1.0;
            let (a_new, f_new) = loop {
                let trial: Vec<f64> = (0..n).map(|i| (a[i] + lam * d[i]).max(0.0)).collect();
                let ft = self.running(&trial)?;
                if ft <= f_ref + ARMIJO * lam * slope || lam < 1e-20 {
                    break (trial, ft);
                }
                lam *= 0.5;
            };
            let g_new = self.scaled_gradient(&a_new)?;
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..n {
                let s = a_new[i] - a[i];
                ss += s * s;
                sy += s * (g_new[i] - g[i]);
            }
            alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e12 };
            a = a_new;
            f = f_new;
            g = g_new;
            pg = self.pg_norm(&a, &g);
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back(f);
        }
        let path = self.path_from_controls(&a)?;
        let objective = self.dt() * f - self.params.prior_constant();
        Ok(DetSolution { path, controls: a, objective, iterations: iter, pg_norm: pg })
    }

    /// Nodes carry the control of the cell they open; the last node repeats
    /// the final cell.
    pub fn path_from_controls(&self, a: &[f64]) -> Result<StrategyPath> {
        self.check(a)?;
        let inv = 1.0 / self.params.sigma_sq();
        let times = uniform_grid(self.params.horizon, self.n);
        let mut theta_sq = a.to_vec();
        theta_sq.push(a[self.n - 1]);
        let u = self.heights(a);
        let z = times.iter().zip(&u).map(|(t, u)| u - (self.params.horizon - t) * inv).collect();
        Ok(StrategyPath { times, theta_sq, z, u, solver: SolverTag::DetControl })
    }

    /// Cell controls sampled from an arbitrary schedule at the left endpoints.
    pub fn controls_from_path(&self, path: &StrategyPath) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n).map(|i| interp(&path.times, &path.theta_sq, i as f64 * dt)).collect()
    }
}

/// Optimal schedule of the discretised problem.
pub fn solve(problem: &DetControlProblem) -> Result<StrategyPath> {
    Ok(problem.solve()?.path)
}

/// Largest `|−γk''(ϑ²)·dϑ²/dt − (σ0⁴/2σ²)/(σ0²u+1)²|` over interior nodes in
/// `[0, T − 0.05]`, with central differences in time.
pub fn euler_lagrange_residual(params: &ModelParams, cost: &CostModel, path: &StrategyPath) -> f64 {
    let s0 = params.sigma0_sq();
    let coef = 0.5 * s0 * s0 / params.sigma_sq();
    let t_max = params.horizon - EL_WINDOW;
    let mut worst = 0.0_f64;
    for i in 1..path.len() - 1 {
        let t = path.times[i];
        if t > t_max {
            break;
        }
        let da = (path.theta_sq[i + 1] - path.theta_sq[i - 1]) / (path.times[i + 1] - path.times[i - 1]);
        let d = s0 * path.u[i] + 1.0;
        let r = -params.gamma * cost.curvature(path.theta_sq[i]) * da - coef / (d * d);
        worst = worst.max(r.abs());
    }
    worst
}

/// Expected utility of a deterministic schedule with optimal trading:
/// `−(1/γ)e^{−γx0}exp{γ∫k(ϑ²) + ½log(σ²/(σ0²T+σ²)) − μ0²T/(2(σ0²T+σ²)) + ∫f(u)}`,
/// integrals by the trapezoid rule on the path grid.
pub fn value_of_schedule(params: &ModelParams, cost: &CostModel, path: &StrategyPath, x0: f64) -> Result<f64> {
    let exponent = schedule_exponent(params, cost, path)?;
    Ok(-(1.0 / params.gamma) * (-params.gamma * x0 + exponent).exp())
}

fn schedule_exponent(params: &ModelParams, cost: &CostModel, path: &StrategyPath) -> Result<f64> {
    let g = params.gamma;
    let mut pieces = Vec::with_capacity(path.len());
    for i in 1..path.len() {
        let dt = path.times[i] - path.times[i - 1];
        let k0 = cost_finite(cost, path.theta_sq[i - 1])?;
        let k1 = cost_finite(cost, path.theta_sq[i])?;
        let f0 = params.info_rate(path.u[i - 1]);
        let f1 = params.info_rate(path.u[i]);
        pieces.push(0.5 * dt * (g * (k0 + k1) + f0 + f1));
    }
    let s2 = params.sigma_sq();
    let big = params.sigma0_sq() * params.horizon + s2;
    Ok(crate::stats::pairwise_sum(&pieces) + 0.5 * (s2 / big).ln() - params.mu0 * params.mu0 * params.horizon / (2.0 * big))
}

fn cost_finite(cost: &CostModel, x: f64) -> Result<f64> {
    cost.eval(x)?.finite().ok_or(Error::Domain { what: "schedule exceeds the precision cap", value: x })
}

/// `V(0, x0)` rebuilt from `Γ(0, T/σ²)`:
/// `−(1/γ)e^{−γx0}·sqrt(H(0,0))·exp{Γ + H(0,0)μ0²/(2σ0²)}`.
pub fn value_from_gamma(params: &ModelParams, gamma0: f64, x0: f64) -> Result<f64> {
    let h = params.kernel().h(0.0, 0.0)?;
    let e = -params.gamma * x0 + 0.5 * h.ln() + gamma0 + h * params.prior_constant();
    Ok(-(1.0 / params.gamma) * e.exp())
}
