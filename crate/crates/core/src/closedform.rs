//! Closed-form solution for the truncated-linear cost `k(x) = c·x` on `[0, β²]`.
//!
//! The investor buys information at the cap `β` until the deterministic state
//! `Z_t = (1/σ² + β²)t` meets the free boundary `δ(t)`, then stops. The value
//! function is `V = −(1/γ)e^{−γx}exp{P(t,z) + H(t,z)(μ0·y + σ0²y²/2)}` where
//! `P` has one expression above the boundary and one below it, the latter
//! obtained by following the acquisition characteristic up to the boundary.

#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::model::{CostModel, GaussKernel, ModelParams};
use crate::path::{uniform_grid, SolverTag, StrategyPath};
use crate::roots::bisect;
use crate::{Error, Result};

const SWITCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct Consts {
    p: ModelParams,
    gk: GaussKernel,
    c: f64,
    beta_sq: f64,
    /// `1/σ² + β²`, the state speed while acquiring.
    a: f64,
}

impl Consts {
    fn new(params: &ModelParams, cost: &CostModel) -> Result<Self> {
        params.validate()?;
        let CostModel::TruncatedLinear { c, beta } = *cost else {
            return Err(Error::UnsupportedCost("closed form needs the truncated-linear cost"));
        };
        let beta_sq = beta * beta;
        Ok(Consts { p: *params, gk: params.kernel(), c, beta_sq, a: 1.0 / params.sigma_sq() + beta_sq })
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.p.horizon) {
            return Err(Error::Domain { what: "time must lie in [0, T]", value: t });
        }
        Ok(())
    }

    fn delta(&self, t: f64) -> f64 {
        let s2 = self.p.sigma_sq();
        let rem = self.p.horizon - t;
        -rem / s2 - 1.0 / self.p.sigma0_sq() + (rem / (2.0 * self.c * s2 * self.p.gamma)).sqrt()
    }

    fn delta_prime(&self, t: f64) -> f64 {
        let s2 = self.p.sigma_sq();
        let k = 2.0 * self.c * s2 * self.p.gamma;
        let rem = self.p.horizon - t;
        1.0 / s2 - 1.0 / (2.0 * k) / (rem / k).sqrt()
    }

    fn h(&self, t: f64, z: f64) -> f64 {
        1.0 / (self.gk.sigma0_sq * z + self.gk.sigma0_sq / self.gk.sigma_sq * (self.p.horizon - t) + 1.0)
    }

    /// `(P, P_t, P_z)` above the boundary.
    fn p_right(&self, t: f64, z: f64) -> (f64, f64, f64) {
        let s0 = self.gk.sigma0_sq;
        let s2 = self.gk.sigma_sq;
        let m2 = self.p.mu0 * self.p.mu0;
        let h = self.h(t, z);
        let q = m2 * z + (m2 - s0) * (self.p.horizon - t) / s2;
        let p = 0.5 * h.ln() - 0.5 * h * q;
        let p_z = -0.5 * s0 * h + 0.5 * s0 * h * h * q - 0.5 * m2 * h;
        let p_t = 0.5 * s0 / s2 * h - 0.5 * s0 / s2 * h * h * q + 0.5 * h * (m2 - s0) / s2;
        (p, p_t, p_z)
    }

    /// Time at which the acquisition characteristic from `(t, z)` meets the boundary.
    fn hitting_time(&self, t: f64, z: f64) -> Result<f64> {
        let g = |t1: f64| self.a * (t1 - t) + z - self.delta(t1);
        bisect(g, t, self.p.horizon, 1e-15)
    }

    /// `(P, P_t, P_z)` below the boundary.
    fn p_left(&self, t: f64, z: f64) -> Result<(f64, f64, f64)> {
        let t1 = self.hitting_time(t, z)?;
        let d1 = self.delta(t1);
        let dp1 = self.delta_prime(t1);
        let s0 = self.gk.sigma0_sq;
        let s2 = self.gk.sigma_sq;
        let m = self.p.mu0 * self.p.mu0 / (2.0 * s0);
        let kappa = self.a / (2.0 * self.beta_sq);
        let cost_rate = self.beta_sq * self.c * self.p.gamma;

        let (pr, pr_t, pr_z) = self.p_right(t1, d1);
        let h1 = self.h(t1, d1);
        let h = self.h(t, z);
        let p = pr + cost_rate * (t1 - t) - m * (h1 - h) - kappa * (h1.ln() - h.ln());

        let h1_t = s0 / s2 * h1 * h1;
        let h1_z = -s0 * h1 * h1;
        let dh1 = h1_t + h1_z * dp1;
        let phi_prime = pr_t + pr_z * dp1 + cost_rate - m * dh1 - kappa * dh1 / h1;
        let denom = self.a - dp1;
        let h_t = s0 / s2 * h * h;
        let h_z = -s0 * h * h;
        let p_z = -phi_prime / denom + m * h_z + kappa * h_z / h;
        let p_t = phi_prime * self.a / denom - cost_rate + m * h_t + kappa * h_t / h;
        Ok((p, p_t, p_z))
    }

    fn p_all(&self, t: f64, z: f64) -> Result<(f64, f64, f64)> {
        self.check_t(t)?;
        if !(z >= 0.0) {
            return Err(Error::Domain { what: "z must be nonnegative", value: z });
        }
        if z >= self.delta(t).max(0.0) || t == self.p.horizon {
            Ok(self.p_right(t, z))
        } else {
            self.p_left(t, z)
        }
    }
}

/// Switching time of the closed-form strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeBoundarySolution {
    pub params: ModelParams,
    pub c: f64,
    pub beta: f64,
    /// Time at which acquisition stops (0 when there is none).
    pub t_star: f64,
    pub has_acquisition: bool,
    /// `t*(1/σ² + β²) − δ(t*)` at the returned root.
    pub residual: f64,
}

/// The free boundary `δ(t)`.
pub fn free_boundary(params: &ModelParams, cost: &CostModel, t: f64) -> Result<f64> {
    let k = Consts::new(params, cost)?;
    k.check_t(t)?;
    Ok(k.delta(t))
}

/// `δ'(t)`, finite for `t < T`.
pub fn free_boundary_slope(params: &ModelParams, cost: &CostModel, t: f64) -> Result<f64> {
    let k = Consts::new(params, cost)?;
    k.check_t(t)?;
    Ok(k.delta_prime(t))
}

/// Cost slope at which `δ(0) = 0`; any larger `c` means no acquisition.
pub fn critical_cost(params: &ModelParams) -> f64 {
    let s2 = params.sigma_sq();
    let big = params.horizon / s2 + 1.0 / params.sigma0_sq();
    params.horizon / (2.0 * s2 * params.gamma * big * big)
}

/// Solves `t(1/σ² + β²) = δ(t)` on `[0, T]`.
pub fn switching_time(params: &ModelParams, cost: &CostModel) -> Result<FreeBoundarySolution> {
    let k = Consts::new(params, cost)?;
    let CostModel::TruncatedLinear { c, beta } = *cost else { unreachable!() };
    let g = |t: f64| t * k.a - k.delta(t);
    let mut sol = FreeBoundarySolution { params: *params, c, beta, t_star: 0.0, has_acquisition: false, residual: 0.0 };
    if k.delta(0.0) <= 0.0 {
        return Ok(sol);
    }
    // g increases with slope above β², and g(T) = aT + 1/σ0² > 0.
    let (mut lo, mut hi) = (0.0, params.horizon);
    let mut root = 0.5 * (lo + hi);
    for _ in 0..400 {
        root = 0.5 * (lo + hi);
        let v = g(root);
        if v.abs() < SWITCH_TOL * 1e-3 || root <= lo || root >= hi {
            break;
        }
        if v < 0.0 {
            lo = root;
        } else {
            hi = root;
        }
    }
    sol.t_star = root;
    sol.has_acquisition = true;
    sol.residual = g(root);
    Ok(sol)
}

/// `P(t,z)` together with `(P_t, P_z)`.
pub fn coefficient_p(params: &ModelParams, cost: &CostModel, t: f64, z: f64) -> Result<(f64, f64, f64)> {
    Consts::new(params, cost)?.p_all(t, z)
}

/// `V` and its partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePartials {
    pub v: f64,
    pub v_t: f64,
    pub v_x: f64,
    pub v_xx: f64,
    pub v_y: f64,
    pub v_yy: f64,
    pub v_xy: f64,
    pub v_z: f64,
}

/// The value function of the truncated-linear problem.
#[derive(Debug, Clone, Copy)]
pub struct ValueSurface {
    k: Consts,
    pub solution: FreeBoundarySolution,
}

pub fn value_surface(params: &ModelParams, cost: &CostModel) -> Result<ValueSurface> {
    let k = Consts::new(params, cost)?;
    Ok(ValueSurface { k, solution: switching_time(params, cost)? })
}

impl ValueSurface {
    pub fn value(&self, t: f64, x: f64, y: f64, z: f64) -> Result<f64> {
        Ok(self.partials(t, x, y, z)?.v)
    }

    pub fn partials(&self, t: f64, x: f64, y: f64, z: f64) -> Result<ValuePartials> {
        let k = &self.k;
        let (p, p_t, p_z) = k.p_all(t, z)?;
        let s0 = k.gk.sigma0_sq;
        let g = k.p.gamma;
        let h = k.h(t, z);
        let h_t = s0 / k.gk.sigma_sq * h * h;
        let h_z = -s0 * h * h;
        let q = k.p.mu0 * y + 0.5 * s0 * y * y;
        let hy = h * (k.p.mu0 + s0 * y);
        let v = -(1.0 / g) * (-g * x + p + h * q).exp();
        Ok(ValuePartials {
            v,
            v_t: v * (p_t + h_t * q),
            v_x: -g * v,
            v_xx: g * g * v,
            v_y: v * hy,
            v_yy: v * (h * s0 + hy * hy),
            v_xy: -g * v * hy,
            v_z: v * (p_z + h_z * q),
        })
    }

    /// `h_z + h_yy/2 + h_y²/2 + cγ`; negative where acquiring at the cap is optimal.
    /// It does not depend on `y`.
    pub fn indicator(&self, t: f64, z: f64) -> Result<f64> {
        let k = &self.k;
        let (_, _, p_z) = k.p_all(t, z)?;
        let h = k.h(t, z);
        let m2 = k.p.mu0 * k.p.mu0;
        Ok(p_z + 0.5 * k.gk.sigma0_sq * h + 0.5 * m2 * h * h + k.c * k.p.gamma)
    }

    /// Residual of the HJB equation in the regime selected by the indicator,
    /// evaluated from the supplied partials.
    pub fn hjb_residual_from(&self, t: f64, z: f64, d: &ValuePartials) -> Result<f64> {
        let acquiring = self.indicator(t, z)? < 0.0;
        Ok(self.regime_residual(acquiring, d))
    }

    /// Residual of one regime's equation: acquisition at the cap, or none.
    pub fn regime_residual(&self, acquiring: bool, d: &ValuePartials) -> f64 {
        let k = &self.k;
        let s2 = k.gk.sigma_sq;
        let trade = d.v_xy * d.v_xy / (2.0 * s2 * d.v_xx);
        let diffusion = d.v_z + 0.5 * d.v_yy;
        if acquiring {
            d.v_t + k.a * diffusion - trade - k.c * k.beta_sq * d.v_x
        } else {
            d.v_t + diffusion / s2 - trade
        }
    }

    pub fn feedback_controls(&self, t: f64, y: f64, z: f64) -> Result<(f64, f64)> {
        feedback_from(&self.k, &self.solution, t, y, z)
    }

    /// The schedule on a uniform grid with `n` cells.
    pub fn strategy_path(&self, n: usize) -> StrategyPath {
        let sol = &self.solution;
        let inv = 1.0 / self.k.gk.sigma_sq;
        let times = uniform_grid(self.k.p.horizon, n);
        let stop = if sol.has_acquisition { sol.t_star } else { 0.0 };
        let mut theta_sq = Vec::with_capacity(n + 1);
        let mut z = Vec::with_capacity(n + 1);
        let mut u = Vec::with_capacity(n + 1);
        for &t in &times {
            let on = sol.has_acquisition && t <= sol.t_star;
            theta_sq.push(if on { self.k.beta_sq } else { 0.0 });
            let zt = t * inv + self.k.beta_sq * t.min(stop);
            z.push(zt);
            u.push(zt + (self.k.p.horizon - t) * inv);
        }
        StrategyPath { times, theta_sq, z, u, solver: SolverTag::ClosedForm }
    }
}

fn feedback_from(k: &Consts, sol: &FreeBoundarySolution, t: f64, y: f64, z: f64) -> Result<(f64, f64)> {
    k.check_t(t)?;
    let theta = if sol.has_acquisition && t <= sol.t_star { sol.beta } else { 0.0 };
    let pi = (k.p.mu0 + k.gk.sigma0_sq * y) * k.gk.h(t, z)? / (k.gk.sigma_sq * k.p.gamma);
    Ok((theta, pi))
}

/// Optimal `(ϑ, π)` at `(t, y, z)`.
pub fn feedback_controls(params: &ModelParams, cost: &CostModel, t: f64, y: f64, z: f64) -> Result<(f64, f64)> {
    let k = Consts::new(params, cost)?;
    let sol = switching_time(params, cost)?;
    feedback_from(&k, &sol, t, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> (ModelParams, CostModel) {
        (ModelParams::default(), CostModel::truncated_linear(0.002, 1.0).unwrap())
    }

    /// Parameters with an acquisition phase ending mid-horizon.
    pub(crate) fn acquiring() -> (ModelParams, CostModel) {
        let p = ModelParams { mu0: 0.172, sigma0: 1.0, sigma: 0.2, gamma: 1.0, horizon: 1.0, x0: 0.0 };
        (p, CostModel::truncated_linear(1e-2, 1.0).unwrap())
    }

    #[test]
    fn boundary_at_horizon_and_benchmark() {
        let (p, k) = bench();
        assert_eq!(free_boundary(&p, &k, 1.0).unwrap(), -1.0 / p.sigma0_sq());
        let d0 = free_boundary(&p, &k, 0.0).unwrap();
        let oracle = -27.1267 - 68.3013 + 58.2305;
        assert!((d0 - oracle).abs() < 0.01);
        assert!((d0 + 37.20).abs() < 0.01);
    }

    #[test]
    fn boundary_slope_below_inverse_variance() {
        let (p, k) = bench();
        for i in 0..1000 {
            let t = i as f64 / 1000.0;
            assert!(free_boundary_slope(&p, &k, t).unwrap() < 1.0 / p.sigma_sq());
        }
    }

    #[test]
    fn no_acquisition_at_benchmark() {
        let (p, k) = bench();
        let s = switching_time(&p, &k).unwrap();
        assert!(!s.has_acquisition);
        assert_eq!(s.t_star, 0.0);
        let v = value_surface(&p, &k).unwrap();
        assert_eq!(v.feedback_controls(0.0, 0.0, 0.0).unwrap().0, 0.0);
    }

    #[test]
    fn switching_time_matches_bisection_oracle() {
        let p = ModelParams { mu0: 0.172, sigma0: 1.0, sigma: 0.2, gamma: 1.0, horizon: 1.0, x0: 0.0 };
        let k = CostModel::truncated_linear(1e-4, 1.0).unwrap();
        let s = switching_time(&p, &k).unwrap();
        assert!(s.has_acquisition);
        let a = 1.0 / 0.04 + 1.0;
        let g = |t: f64| t * a - (-(1.0 - t) / 0.04 - 1.0 + ((1.0 - t) / (2.0 * 1e-4 * 0.04)).sqrt());
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((s.t_star - lo).abs() < 1e-12);
        assert!(s.residual.abs() < 1e-10);
    }

    #[test]
    fn terminal_coefficient() {
        let (p, k) = acquiring();
        assert_eq!(coefficient_p(&p, &k, 1.0, 0.0).unwrap().0, 0.0);
        let z = 2.5;
        let s0 = p.sigma0_sq();
        let expect = -0.5 * (s0 * z + 1.0).ln() - z * p.mu0 * p.mu0 / (2.0 * (s0 * z + 1.0));
        assert!((coefficient_p(&p, &k, 1.0, z).unwrap().0 - expect).abs() < 1e-14);
        assert!(coefficient_p(&p, &k, 0.5, -1.0).is_err());
    }

    #[test]
    fn coefficient_continuous_across_boundary() {
        let (p, k) = acquiring();
        for t in [0.0, 0.2, 0.5, 0.8] {
            let d = free_boundary(&p, &k, t).unwrap();
            if d <= 1e-3 {
                continue;
            }
            let eps = 1e-7;
            let above = coefficient_p(&p, &k, t, d + eps).unwrap();
            let below = coefficient_p(&p, &k, t, d - eps).unwrap();
            assert!((above.0 - below.0).abs() < 1e-6);
            assert!((above.2 - below.2).abs() < 1e-5, "P_z jump at t={t}");
        }
    }

    #[test]
    fn coefficient_satisfies_acquisition_pde() {
        // P_t + a(P_z + σ0²H/2) + β²μ0²H²/2 + cβ²γ = 0 below the boundary, via 4th-order FD.
        let (p, k) = acquiring();
        let c = Consts::new(&p, &k).unwrap();
        let pf = |t: f64, z: f64| coefficient_p(&p, &k, t, z).unwrap().0;
        let e = 1e-3;
        let d4 = |f: &dyn Fn(f64) -> f64, x: f64| (f(x - 2.0 * e) - 8.0 * f(x - e) + 8.0 * f(x + e) - f(x + 2.0 * e)) / (12.0 * e);
        for (t, z) in [(0.1, 1.0), (0.2, 3.0), (0.05, 6.0)] {
            assert!(z < c.delta(t));
            let pt = d4(&|s| pf(s, z), t);
            let pz = d4(&|s| pf(t, s), z);
            let h = c.h(t, z);
            let res = pt + c.a * (pz + 0.5 * p.sigma0_sq() * h) + 0.5 * c.beta_sq * p.mu0 * p.mu0 * h * h + c.c * c.beta_sq * p.gamma;
            assert!(res.abs() < 1e-6, "residual {res} at ({t},{z})");
            let (_, at, az) = coefficient_p(&p, &k, t, z).unwrap();
            assert!((at - pt).abs() < 1e-6 && (az - pz).abs() < 1e-6);
        }
    }

    #[test]
    fn feedback_examples() {
        let (p, k) = acquiring();
        let v = value_surface(&p, &k).unwrap();
        let ts = v.solution.t_star;
        assert!(ts > 0.3 && ts < 0.6);
        assert_eq!(v.feedback_controls(ts + 1e-6, 0.0, 0.0).unwrap().0, 0.0);
        assert_eq!(v.feedback_controls(0.0, 0.0, 0.0).unwrap().0, 1.0);
        let (_, pi) = v.feedback_controls(0.0, 0.0, 0.0).unwrap();
        let h = p.kernel().h(0.0, 0.0).unwrap();
        assert!((pi - p.mu0 / (p.sigma_sq() * p.gamma) * h).abs() < 1e-15);
        let (y, z) = (0.7, 3.0);
        let (_, pi) = v.feedback_controls(1.0, y, z).unwrap();
        let (mean, _) = p.kernel().posterior_moments(y, z).unwrap();
        assert!((pi - mean / (p.sigma_sq() * p.gamma)).abs() < 1e-14);
    }

    #[test]
    fn closed_form_path_has_jump_at_switch() {
        let (p, k) = acquiring();
        let v = value_surface(&p, &k).unwrap();
        let path = v.strategy_path(1000);
        assert_eq!(path.theta0_sq(), 1.0);
        assert_eq!(path.theta_end_sq(), 0.0);
        assert_eq!(path.max_ascent(), 0.0);
        let ts = v.solution.t_star;
        let zs = path.z_at(ts);
        assert!((zs - free_boundary(&p, &k, ts).unwrap()).abs() < 1e-2);
    }
}
