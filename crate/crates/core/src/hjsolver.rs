//! Explicit upwind finite differences for the Hamilton–Jacobi equation.
//!
//! The grid stores `Φ = Γ + μ0²/(2σ0²)`, which starts at zero, so `μ0` never
//! enters the march and the extracted schedule does not depend on it. Each
//! earlier level is filled from the later one:
//! `Φ^n_j = Φ^{n+1}_j + τ[f(u_j) + k̃*((Φ^{n+1}_{j+1} − Φ^{n+1}_j)/h)]`,
//! with the zero-acquisition value `f(u_max)(T − t)` at the last column.

#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::model::{CostModel, ModelParams};
use crate::path::{SolverTag, StrategyPath};
use crate::{Error, Result};

/// `(k')^{-1}(σ0⁴T/(2σ²γ))`, the largest characteristic speed and the
/// smallest admissible `h/τ`.
pub fn cfl_ratio(params: &ModelParams, cost: &CostModel) -> Result<f64> {
    let s0 = params.sigma0_sq();
    cost.marginal_inverse(s0 * s0 * params.horizon / (2.0 * params.sigma_sq() * params.gamma))
}

/// Smallest admissible grid cap: every reachable height plus one unit of drift.
pub fn min_u_max(params: &ModelParams, cost: &CostModel) -> Result<f64> {
    Ok(2.0 * params.horizon / params.sigma_sq() + params.horizon * cfl_ratio(params, cost)?)
}

pub fn default_u_max(params: &ModelParams, cost: &CostModel) -> Result<f64> {
    Ok(min_u_max(params, cost)? + 10.0)
}

pub fn default_tau(params: &ModelParams, cost: &CostModel, h: f64) -> Result<f64> {
    Ok(0.95 * h / cfl_ratio(params, cost)?)
}

/// One explicit backward step of the scheme on a fixed `u` grid.
#[derive(Debug, Clone)]
pub struct UpwindScheme {
    params: ModelParams,
    cost: CostModel,
    pub h: f64,
    pub tau: f64,
    pub u_grid: Vec<f64>,
}

impl UpwindScheme {
    pub fn new(params: &ModelParams, cost: &CostModel, h: f64, tau: f64, u_max: f64) -> Result<Self> {
        params.validate()?;
        if !cost.is_smooth() {
            return Err(Error::UnsupportedCost("the upwind solver needs a smooth cost"));
        }
        if !(h > 0.0 && tau > 0.0 && h.is_finite() && tau.is_finite()) {
            return Err(Error::Config("grid steps must be positive"));
        }
        let cfl = cfl_ratio(params, cost)?;
        if h / tau < cfl {
            return Err(Error::Config("CFL condition violated: h/tau is below the characteristic speed bound"));
        }
        if !(u_max >= min_u_max(params, cost)?) {
            return Err(Error::Config("u_max is below 2T/sigma^2 + T*cfl"));
        }
        let n_u = (u_max / h - 1e-9).ceil() as usize;
        let n_t = (params.horizon / tau - 1e-9).ceil().max(1.0) as usize;
        let u_grid = (0..=n_u).map(|j| j as f64 * h).collect();
        Ok(UpwindScheme { params: *params, cost: *cost, h, tau: params.horizon / n_t as f64, u_grid })
    }

    pub fn n_levels(&self) -> usize {
        (self.params.horizon / self.tau).round() as usize
    }

    /// Fills the level at time `t` from the level `later` at `t + τ`.
    pub fn step(&self, later: &[f64], t: f64) -> Result<Vec<f64>> {
        let n = self.u_grid.len();
        let g = self.params.gamma;
        let mut out = Vec::with_capacity(n);
        for j in 0..n - 1 {
            let slope = (later[j + 1] - later[j]) / self.h;
            let v = later[j] + self.tau * (self.params.info_rate(self.u_grid[j]) + self.cost.tilde_conjugate(slope, g)?);
            out.push(v);
        }
        out.push(self.params.info_rate(self.u_grid[n - 1]) * (self.params.horizon - t));
        Ok(out)
    }
}

/// `Γ` on `[0,T] × [0,u_max]`.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub t_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    /// `Φ = Γ + μ0²/(2σ0²)`, row `n` is time `t_grid[n]`.
    pub phi: Vec<Vec<f64>>,
    pub u_max: f64,
    pub h: f64,
    pub tau: f64,
    /// `−μ0²/(2σ0²)`.
    pub offset: f64,
}

impl GridSolution {
    pub fn gamma(&self, n: usize, j: usize) -> f64 {
        self.phi[n][j] + self.offset
    }

    /// Forward difference `(Γ_{j+1} − Γ_j)/h`; backward at the last column.
    pub fn gamma_u(&self, n: usize, j: usize) -> f64 {
        let row = &self.phi[n];
        let j = j.min(row.len() - 2);
        (row[j + 1] - row[j]) / self.h
    }

    /// Largest forward-difference slope over interior columns.
    pub fn max_slope(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for row in &self.phi {
            for w in row.windows(2) {
                m = m.max((w[1] - w[0]) / self.h);
            }
        }
        m
    }

    /// Bilinear interpolation of the forward-difference field, whose nodes sit
    /// at `u_j + h/2`.
    pub fn slope_at(&self, t: f64, u: f64) -> Result<f64> {
        let nt = self.t_grid.len() - 1;
        let nu = self.u_grid.len() - 1;
        let x = (u - 0.5 * self.h) / self.h;
        if !(u >= 0.0 && x <= (nu - 1) as f64) {
            return Err(Error::DomainCap { t, u });
        }
        let x = x.max(0.0);
        let j = (x.floor() as usize).min(nu - 2);
        let wx = x - j as f64;
        let y = (t / self.tau).clamp(0.0, nt as f64);
        let n = (y.floor() as usize).min(nt - 1);
        let wy = y - n as f64;
        let at = |n: usize, j: usize| (self.phi[n][j + 1] - self.phi[n][j]) / self.h;
        let lo = at(n, j) * (1.0 - wx) + at(n, j + 1) * wx;
        let hi = at(n + 1, j) * (1.0 - wx) + at(n + 1, j + 1) * wx;
        Ok(lo * (1.0 - wy) + hi * wy)
    }
}

/// Marches the scheme backward from `Γ(T,·) = −μ0²/(2σ0²)`.
pub fn solve_grid(params: &ModelParams, cost: &CostModel, h: f64, tau: f64, u_max: f64) -> Result<GridSolution> {
    let scheme = UpwindScheme::new(params, cost, h, tau, u_max)?;
    let n_t = scheme.n_levels();
    let t_grid: Vec<f64> = (0..=n_t).map(|n| if n == n_t { params.horizon } else { n as f64 * scheme.tau }).collect();
    let mut phi = alloc::vec![Vec::new(); n_t + 1];
    phi[n_t] = alloc::vec![0.0; scheme.u_grid.len()];
    for n in (0..n_t).rev() {
        let row = scheme.step(&phi[n + 1], t_grid[n])?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical { level: n });
        }
        phi[n] = row;
    }
    Ok(GridSolution {
        t_grid,
        u_grid: scheme.u_grid,
        phi,
        u_max,
        h,
        tau: scheme.tau,
        offset: -params.prior_constant(),
    })
}

/// Solves with `τ = 0.95h/cfl` and the default cap.
pub fn solve_grid_default(params: &ModelParams, cost: &CostModel, h: f64) -> Result<GridSolution> {
    let tau = default_tau(params, cost, h)?;
    solve_grid(params, cost, h, tau, default_u_max(params, cost)?)
}

/// Euler integration of the state equation on the grid's time levels using the
/// interpolated upwind slope.
pub fn theta_from_grid(grid: &GridSolution, params: &ModelParams, cost: &CostModel) -> Result<StrategyPath> {
    let inv = 1.0 / params.sigma_sq();
    let n_t = grid.t_grid.len() - 1;
    let mut theta_sq = Vec::with_capacity(n_t + 1);
    let mut z = Vec::with_capacity(n_t + 1);
    let mut u = Vec::with_capacity(n_t + 1);
    let mut zc = 0.0;
    for n in 0..=n_t {
        let t = grid.t_grid[n];
        let uc = zc + (params.horizon - t) * inv;
        let slope = grid.slope_at(t, uc)?;
        let r = cost.tilde_conjugate_deriv(slope, params.gamma)?.max(0.0);
        theta_sq.push(r);
        z.push(zc);
        u.push(uc);
        if n < n_t {
            zc += (grid.t_grid[n + 1] - t) * (inv + r);
        }
    }
    Ok(StrategyPath { times: grid.t_grid.clone(), theta_sq, z, u, solver: SolverTag::Upwind })
}
