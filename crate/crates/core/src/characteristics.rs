//! Method of characteristics for the Hamilton–Jacobi equation
//! `Γ_t + (σ0²/2σ²)/(σ0²u+1) + k̃*(Γ_u) = 0`, `Γ(T,u) = −μ0²/(2σ0²)`.
//!
//! Work in reversed time `s = T − t`. Along the curve started at height `u0`
//! the costate `p = Γ̃_u` solves the scalar ODE
//! `p' = −2σ²[k̃*(p) − f(u0)]²`, the height follows `u' = −(k̃*)'(p)`, and the
//! value accumulates `Γ̃' = f(u0) − p·(k̃*)'(p)`, where `f(u) = (σ0²/2σ²)/(σ0²u+1)`.
//! `k̃*(p) + f(u) − f(u0)` is conserved. None of this reads `μ0` except the
//! additive starting value of `Γ̃`.

#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use crate::hjsolver::cfl_ratio;
use crate::model::{CostModel, ModelParams, PowerCost};
use crate::path::{uniform_grid, SolverTag, StrategyPath};
use crate::{Error, Result};

/// Default number of integration steps over `[0, T]`.
pub const DEFAULT_STEPS: usize = 4096;
const SHOOT_TOL: f64 = 1e-10;
const SHOOT_MAX_ITER: usize = 200;

/// Costate, height and value at one reversed time.
type State = [f64; 3];

#[derive(Debug, Clone, Copy)]
struct Flow {
    cost: CostModel,
    gamma: f64,
    sigma_sq: f64,
    sigma0_sq: f64,
    /// `σ0²/(2σ²)`.
    ratio: f64,
    horizon: f64,
    ds: f64,
    terminal: f64,
}

impl Flow {
    fn new(params: &ModelParams, cost: &CostModel, n_steps: usize) -> Result<Self> {
        params.validate()?;
        if !cost.is_smooth() {
            return Err(Error::UnsupportedCost("characteristics need a smooth cost"));
        }
        if !(cost.curvature_at_zero() > 0.0) {
            return Err(Error::UnsupportedCost("characteristics need k''(0) > 0; regularise the cost"));
        }
        if n_steps < 1 {
            return Err(Error::Config("need at least one integration step"));
        }
        let s2 = params.sigma_sq();
        let s0 = params.sigma0_sq();
        Ok(Flow {
            cost: *cost,
            gamma: params.gamma,
            sigma_sq: s2,
            sigma0_sq: s0,
            ratio: 0.5 * s0 / s2,
            horizon: params.horizon,
            ds: params.horizon / n_steps as f64,
            terminal: -params.prior_constant(),
        })
    }

    fn info(&self, u: f64) -> f64 {
        self.ratio / (self.sigma0_sq * u + 1.0)
    }

    /// `(k̃*(p), (k̃*)'(p))`.
    fn hamiltonian(&self, p: f64) -> Result<(f64, f64)> {
        if p >= 0.0 {
            return Ok((0.0, 0.0));
        }
        let y = -p / self.gamma;
        if let CostModel::Power(PowerCost { c, p: e }) = self.cost {
            if e == 2.0 {
                return Ok((-self.gamma * y * y / (4.0 * c), y / (2.0 * c)));
            }
        }
        let x = self.cost.marginal_inverse(y)?;
        let kstar = x * y - self.cost.eval_smooth(x)?;
        Ok((-self.gamma * kstar, x))
    }

    fn rhs(&self, f0: f64, st: &State) -> Result<State> {
        let (kt, x) = self.hamiltonian(st[0])?;
        let d = kt - f0;
        Ok([-2.0 * self.sigma_sq * d * d, -x, f0 - st[0] * x])
    }

    fn rk4(&self, f0: f64, st: &State, h: f64) -> Result<State> {
        let k1 = self.rhs(f0, st)?;
        let s2 = [st[0] + 0.5 * h * k1[0], st[1] + 0.5 * h * k1[1], st[2] + 0.5 * h * k1[2]];
        let k2 = self.rhs(f0, &s2)?;
        let s3 = [st[0] + 0.5 * h * k2[0], st[1] + 0.5 * h * k2[1], st[2] + 0.5 * h * k2[2]];
        let k3 = self.rhs(f0, &s3)?;
        let s4 = [st[0] + h * k3[0], st[1] + h * k3[1], st[2] + h * k3[2]];
        let k4 = self.rhs(f0, &s4)?;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = st[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(out)
    }

    /// State of the curve from `u0` at reversed time `s`: whole steps of `ds`
    /// up to the last node before `s`, then one partial step.
    fn integrate_to(&self, u0: f64, s: f64, cache: &mut CurveCache) -> Result<State> {
        let start = [0.0, u0, self.terminal];
        if s <= 0.0 {
            return Ok(start);
        }
        if cache.nodes.is_empty() || cache.u0.to_bits() != u0.to_bits() {
            cache.u0 = u0;
            cache.nodes.clear();
            cache.nodes.push(start);
        }
        let k = (s / self.ds).floor() as usize;
        let f0 = self.info(u0);
        while cache.nodes.len() <= k {
            let last = *cache.nodes.last().unwrap();
            let next = self.rk4(f0, &last, self.ds)?;
            if !(next[0] <= last[0]) || !next[1].is_finite() || !next[2].is_finite() {
                return Err(Error::Integration { u0, step: cache.nodes.len() });
            }
            cache.nodes.push(next);
        }
        let base = cache.nodes[k];
        let rem = s - k as f64 * self.ds;
        if rem.abs() <= 1e-12 * self.ds {
            return Ok(base);
        }
        let out = self.rk4(f0, &base, rem)?;
        if !(out[0] <= base[0]) || !out[1].is_finite() || !out[2].is_finite() {
            return Err(Error::Integration { u0, step: k + 1 });
        }
        Ok(out)
    }

    /// Finds `u0` whose curve passes through height `u` at reversed time `s`.
    fn shoot(&self, s: f64, u: f64, hint: Option<f64>, cache: &mut CurveCache) -> Result<(f64, State)> {
        let t = self.horizon - s;
        if s <= 0.0 {
            return Ok((u, [0.0, u, self.terminal]));
        }
        let mut eval = |u0: f64| -> Result<(f64, State)> {
            let st = self.integrate_to(u0, s, cache)?;
            Ok((st[1] - u, st))
        };
        // u0 ↦ u^{u0}(s) is increasing with slope at least 1 and u^{u0}(s) ≤ u0,
        // so u itself is a lower end and one unit-slope step from any point
        // lands on the other side of the root.
        let h0 = match hint {
            Some(h) if h >= u => h,
            _ => {
                let (fu, st) = eval(u)?;
                if fu.abs() < SHOOT_TOL {
                    return Ok((u, st));
                }
                u - fu
            }
        };
        let (fh, st) = eval(h0)?;
        if fh.abs() < SHOOT_TOL {
            return Ok((h0, st));
        }
        let (mut a, mut fa, mut b, mut fb);
        if fh > 0.0 {
            b = h0;
            fb = fh;
            a = (h0 - fh).max(u);
            let (f, st) = eval(a)?;
            if f.abs() < SHOOT_TOL {
                return Ok((a, st));
            }
            fa = f;
            if fa > 0.0 {
                a = u;
                fa = eval(a)?.0;
            }
        } else {
            a = h0;
            fa = fh;
            let mut w = -fh;
            b = h0 + w;
            let (f, st) = eval(b)?;
            if f.abs() < SHOOT_TOL {
                return Ok((b, st));
            }
            fb = f;
            let mut grown = 0;
            while fb < 0.0 {
                w *= 2.0;
                b = h0 + w;
                fb = eval(b)?.0;
                grown += 1;
                if grown > 80 {
                    return Err(Error::Shooting { t, u, residual: fb });
                }
            }
        }
        if fa > 0.0 || fb < 0.0 {
            return Err(Error::Shooting { t, u, residual: fa.abs().min(fb.abs()) });
        }
        // Illinois variant of regula falsi.
        let mut side = 0i8;
        for _ in 0..SHOOT_MAX_ITER {
            let c = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
            let c = if c > a && c < b { c } else { 0.5 * (a + b) };
            let (fc, st) = eval(c)?;
            if fc.abs() < SHOOT_TOL || b - a <= 4.0 * f64::EPSILON * b.abs() {
                return Ok((c, st));
            }
            if fc < 0.0 {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        Err(Error::Shooting { t, u, residual: fa.abs().min(fb.abs()) })
    }
}

/// Node states of the most recently integrated curve. Shooting along a single
/// characteristic (as the optimal path does) then costs one partial step per query.
#[derive(Debug, Clone, Default)]
pub struct CurveCache {
    u0: f64,
    nodes: Vec<State>,
}

/// One characteristic curve sampled on a uniform reversed-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CharCurve {
    pub u0: f64,
    /// Reversed times `s`.
    pub times: Vec<f64>,
    pub gamma_u: Vec<f64>,
    pub u: Vec<f64>,
    pub value: Vec<f64>,
    /// `k̃*(Γ̃_u) + f(u) − f(u0)` at each node; zero for the exact flow.
    pub invariant: Vec<f64>,
    slopes: Vec<State>,
}

impl CharCurve {
    /// Last reversed time reached (less than `T` if the height left its domain).
    pub fn s_cap(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `(Γ̃_u, u, Γ̃)` at reversed time `s` by cubic Hermite interpolation,
    /// using the ODE right-hand side as node derivatives.
    pub fn state_at(&self, s: f64) -> State {
        let n = self.times.len();
        if s <= self.times[0] {
            return [self.gamma_u[0], self.u[0], self.value[0]];
        }
        if s >= self.times[n - 1] {
            return [self.gamma_u[n - 1], self.u[n - 1], self.value[n - 1]];
        }
        let i = (self.times.partition_point(|v| *v <= s) - 1).min(n - 2);
        let (s0, s1) = (self.times[i], self.times[i + 1]);
        let h = s1 - s0;
        let w = (s - s0) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * w) * (1.0 - w) * (1.0 - w),
            w * (1.0 - w) * (1.0 - w),
            w * w * (3.0 - 2.0 * w),
            w * w * (w - 1.0),
        );
        let y0 = [self.gamma_u[i], self.u[i], self.value[i]];
        let y1 = [self.gamma_u[i + 1], self.u[i + 1], self.value[i + 1]];
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = h00 * y0[k] + h10 * h * self.slopes[i][k] + h01 * y1[k] + h11 * h * self.slopes[i + 1][k];
        }
        out
    }
}

/// Integrates Hamilton's ODE from height `u0` over `[0, T]` in reversed time
/// with `n_steps` classical Runge–Kutta steps, stopping early if the height
/// falls to `−1/(2σ0²)`.
pub fn hamilton_ode(params: &ModelParams, cost: &CostModel, u0: f64, n_steps: usize) -> Result<CharCurve> {
    let flow = Flow::new(params, cost, n_steps)?;
    if !(u0 >= 0.0) {
        return Err(Error::Domain { what: "initial height must be nonnegative", value: u0 });
    }
    let floor = -1.0 / (2.0 * flow.sigma0_sq) + 1e-6 / flow.sigma0_sq;
    let f0 = flow.info(u0);
    let grid = uniform_grid(params.horizon, n_steps);
    let mut curve = CharCurve {
        u0,
        times: Vec::with_capacity(n_steps + 1),
        gamma_u: Vec::with_capacity(n_steps + 1),
        u: Vec::with_capacity(n_steps + 1),
        value: Vec::with_capacity(n_steps + 1),
        invariant: Vec::with_capacity(n_steps + 1),
        slopes: Vec::with_capacity(n_steps + 1),
    };
    let mut st: State = [0.0, u0, flow.terminal];
    for (i, &s) in grid.iter().enumerate() {
        if i > 0 {
            let next = flow.rk4(f0, &st, s - grid[i - 1])?;
            if !(next[0] <= st[0]) || !next.iter().all(|v| v.is_finite()) {
                return Err(Error::Integration { u0, step: i });
            }
            if next[1] <= floor {
                break;
            }
            st = next;
        }
        let (kt, _) = flow.hamiltonian(st[0])?;
        curve.times.push(s);
        curve.gamma_u.push(st[0]);
        curve.u.push(st[1]);
        curve.value.push(st[2]);
        curve.invariant.push(kt + flow.info(st[1]) - f0);
        curve.slopes.push(flow.rhs(f0, &st)?);
    }
    Ok(curve)
}

/// `Γ`, `Γ_u` and the shooting height at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub gamma: f64,
    pub gamma_u: f64,
    pub u0: f64,
}

/// Classical solution `Γ(t,u)` obtained by inverting the characteristic flow.
#[derive(Debug, Clone, Copy)]
pub struct GammaField {
    flow: Flow,
    params: ModelParams,
}

/// Builds the field; `n_steps` sets the reversed-time step `T/n_steps`.
pub fn gamma_field(params: &ModelParams, cost: &CostModel, n_steps: usize) -> Result<GammaField> {
    Ok(GammaField { flow: Flow::new(params, cost, n_steps)?, params: *params })
}

impl GammaField {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cost(&self) -> &CostModel {
        &self.flow.cost
    }

    fn check(&self, t: f64, u: f64) -> Result<f64> {
        if !(t >= 0.0 && t <= self.params.horizon) {
            return Err(Error::Domain { what: "time must lie in [0, T]", value: t });
        }
        if !(u >= 0.0) {
            return Err(Error::Domain { what: "height must be nonnegative", value: u });
        }
        Ok(self.params.horizon - t)
    }

    /// The unique `u0` whose curve has height `u` at reversed time `s = T − t`.
    pub fn shoot_u0(&self, s: f64, u: f64) -> Result<f64> {
        self.check(self.params.horizon - s, u)?;
        Ok(self.flow.shoot(s, u, None, &mut CurveCache::default())?.0)
    }

    pub fn eval(&self, t: f64, u: f64) -> Result<FieldPoint> {
        self.eval_hinted(t, u, None)
    }

    /// As [`GammaField::eval`], starting the shooting from a nearby `u0`.
    pub fn eval_hinted(&self, t: f64, u: f64, hint: Option<f64>) -> Result<FieldPoint> {
        self.eval_cached(t, u, hint, &mut CurveCache::default())
    }

    /// As [`GammaField::eval_hinted`], reusing curve nodes across calls that
    /// land on the same characteristic.
    pub fn eval_cached(&self, t: f64, u: f64, hint: Option<f64>, cache: &mut CurveCache) -> Result<FieldPoint> {
        let s = self.check(t, u)?;
        let (u0, st) = self.flow.shoot(s, u, hint, cache)?;
        Ok(FieldPoint { gamma: st[2], gamma_u: st[0], u0 })
    }

    pub fn gamma(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.eval(t, u)?.gamma)
    }

    pub fn gamma_u(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.eval(t, u)?.gamma_u)
    }

    /// `(ϑ*)² = (k')^{-1}(−Γ_u/γ)` for a given costate.
    pub fn theta_sq_from(&self, gamma_u: f64) -> Result<f64> {
        Ok(self.flow.hamiltonian(gamma_u)?.1)
    }

    /// `k̃*(p)`.
    pub fn hamiltonian(&self, p: f64) -> Result<f64> {
        Ok(self.flow.hamiltonian(p)?.0)
    }
}

/// `ϑ*²(0)` from a single shooting at the starting state.
pub fn theta0_sq(params: &ModelParams, cost: &CostModel, n_steps: usize) -> Result<f64> {
    let field = gamma_field(params, cost, n_steps)?;
    let pt = field.eval(0.0, params.u_start())?;
    field.theta_sq_from(pt.gamma_u)
}

/// Integrates `dZ = (1/σ² + (k')^{-1}(−Γ_u(t, Z + (T−t)/σ²)/γ)) dt` from `Z(0) = 0`
/// with `n_steps` Runge–Kutta steps.
pub fn optimal_theta_path(params: &ModelParams, cost: &CostModel, n_steps: usize) -> Result<StrategyPath> {
    let field = gamma_field(params, cost, n_steps)?;
    theta_path_on(&field, n_steps)
}

/// As [`optimal_theta_path`] on an existing field.
pub fn theta_path_on(field: &GammaField, n_steps: usize) -> Result<StrategyPath> {
    let p = field.params;
    let inv = 1.0 / p.sigma_sq();
    let big_t = p.horizon;
    let times = uniform_grid(big_t, n_steps);
    let mut theta_sq = Vec::with_capacity(n_steps + 1);
    let mut z = Vec::with_capacity(n_steps + 1);
    let mut u = Vec::with_capacity(n_steps + 1);
    let mut hint: Option<f64> = None;
    let mut cache = CurveCache::default();
    let mut rate = |t: f64, uu: f64, hint: &mut Option<f64>| -> Result<f64> {
        let pt = field.eval_cached(t, uu, *hint, &mut cache)?;
        *hint = Some(pt.u0);
        field.theta_sq_from(pt.gamma_u)
    };
    let mut zc = 0.0;
    for i in 0..=n_steps {
        let t = times[i];
        let uc = zc + (big_t - t) * inv;
        let r1 = rate(t, uc, &mut hint)?;
        theta_sq.push(r1);
        z.push(zc);
        u.push(uc);
        if i == n_steps {
            break;
        }
        let h = times[i + 1] - t;
        let tm = t + 0.5 * h;
        let r2 = rate(tm, zc + 0.5 * h * r1 + (big_t - tm) * inv + 0.5 * h * inv, &mut hint)?;
        let r3 = rate(tm, zc + 0.5 * h * r2 + (big_t - tm) * inv + 0.5 * h * inv, &mut hint)?;
        let tn = times[i + 1];
        let r4 = rate(tn, zc + h * r3 + (big_t - tn) * inv + h * inv, &mut hint)?;
        zc += h * inv + h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
    }
    let cap = (inv + cfl_ratio(&p, field.cost())?) * big_t;
    let z_end = *z.last().unwrap();
    if z_end > cap * (1.0 + 1e-12) {
        return Err(Error::DomainCap { t: big_t, u: z_end });
    }
    Ok(StrategyPath { times, theta_sq, z, u, solver: SolverTag::Characteristics })
}

/// Sup-norm gaps between consecutive paths on `[0, t_max]`.
pub fn cauchy_gaps(paths: &[StrategyPath], t_max: f64) -> Vec<f64> {
    paths.windows(2).map(|w| w[0].sup_distance(&w[1], t_max)).collect()
}

/// Optimal paths for `k + b·x²` for each `b` in the sequence.
pub fn regularized_sequence(params: &ModelParams, base: PowerCost, b_sequence: &[f64], n_steps: usize) -> Result<Vec<StrategyPath>> {
    b_sequence
        .iter()
        .map(|&b| {
            let cost = CostModel::regularized(base.c, base.p, b)?;
            optimal_theta_path(params, &cost, n_steps)
        })
        .collect()
}

/// Window excluded at the end of the horizon when measuring Cauchy gaps.
pub const TERMINAL_WINDOW: f64 = 0.05;
/// Final gap required to accept the regularised limit.
pub const CAUCHY_TOL: f64 = 1e-4;

/// Limit of the optimal paths as the regularisation weight goes to zero.
///
/// Accepted when the last gap on `[0, T − 0.05]` is below `1e-4`; the last
/// path of the sequence is returned as the limit.
pub fn regularized_limit(params: &ModelParams, base: PowerCost, b_sequence: &[f64], n_steps: usize) -> Result<StrategyPath> {
    if base.p <= 2.0 {
        return Err(Error::Config("regularised limit is for p > 2"));
    }
    if b_sequence.len() < 2 || b_sequence.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::Config("regularisation weights must be positive and decreasing"));
    }
    let paths = regularized_sequence(params, base, b_sequence, n_steps)?;
    let gaps = cauchy_gaps(&paths, params.horizon - TERMINAL_WINDOW);
    if *gaps.last().unwrap() >= CAUCHY_TOL {
        return Err(Error::NotCauchy { gaps, tolerance: CAUCHY_TOL });
    }
    let mut limit = paths.into_iter().last().unwrap();
    limit.solver = SolverTag::Regularized;
    Ok(limit)
}
