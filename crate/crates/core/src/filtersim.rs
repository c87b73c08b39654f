//! Monte Carlo market simulation with exact Gaussian filtering.
//!
//! Each path draws `μ = μ0 + σ0ξ` and runs Euler steps of
//! `dS = μdt + σdW` (asset), `dB̃ = μϑdt + dB` (private signal). The filter
//! statistics `Y += dS/σ² + ϑdB̃`, `Z += (1/σ² + ϑ²)dt` are exact for these
//! discrete observations, so the posterior `N((μ0+σ0²Y)/(σ0²Z+1), σ0²/(σ0²Z+1))`
//! carries no discretisation error. Wealth follows `dX = ϖdS − k(ϑ²)dt`.
//!
//! Path `i` reads its normals from a ChaCha8 stream keyed by `(seed, i)`, always
//! drawing the same count per step, so any path can be replayed alone and
//! different strategies see common random numbers. With antithetic sampling,
//! paths `2m` and `2m+1` share stream `m` with all normals negated.

use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{CostModel, ModelParams};
use crate::path::StrategyPath;
use crate::stats::{mean, mean_and_stderr, regress, variance};
use crate::{Error, Result};

pub const DEFAULT_SIM_STEPS: usize = 512;
/// Largest tolerated share of paths with non-finite wealth.
pub const MAX_FLAGGED_SHARE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::Config("need at least one path"));
        }
        if self.n_steps < 16 {
            return Err(Error::Config("need at least 16 simulation steps"));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(Error::Config("antithetic sampling needs an even path count"));
        }
        Ok(())
    }
}

/// Dollar amount held in the risky asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trading {
    /// `ϖ = ((σ0²Z+1)/(σ0²u+1))·μ_t/(σ²γ)`, optimal for the given schedule.
    Feedback,
    /// Certainty-equivalent Merton amount `μ_t/(σ²γ)`.
    MertonMyopic,
    Constant(f64),
}

/// Filtered state of one path at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub mu_draw: f64,
    pub y: f64,
    pub z: f64,
    pub x: f64,
    pub post_mean: f64,
    pub post_var: f64,
}

/// Observer of per-step states; `step` counts completed steps (0 is the start).
pub trait Recorder {
    fn record(&mut self, step: usize, state: &PathState);
}

impl Recorder for () {
    fn record(&mut self, _: usize, _: &PathState) {}
}

/// A schedule and trading rule prepared on the simulation grid.
#[derive(Debug, Clone)]
pub struct Simulator {
    params: ModelParams,
    cfg: SimConfig,
    trading: Trading,
    dt: f64,
    /// `ϑ` on each step, from the schedule at the step midpoint.
    theta: Vec<f64>,
    /// `k(ϑ²)` on each step.
    cost_rate: Vec<f64>,
}

impl Simulator {
    pub fn new(params: &ModelParams, cost: &CostModel, theta_path: &StrategyPath, trading: Trading, cfg: SimConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        let dt = params.horizon / cfg.n_steps as f64;
        let mut theta = Vec::with_capacity(cfg.n_steps);
        let mut cost_rate = Vec::with_capacity(cfg.n_steps);
        for i in 0..cfg.n_steps {
            let th2 = theta_path.theta_sq_at((i as f64 + 0.5) * dt).max(0.0);
            let k = cost.eval(th2)?.finite().ok_or(Error::Domain { what: "schedule exceeds the precision cap", value: th2 })?;
            theta.push(th2.sqrt());
            cost_rate.push(k);
        }
        Ok(Simulator { params: *params, cfg, trading, dt, theta, cost_rate })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Terminal utility `−(1/γ)e^{−γX_T}` of path `index`.
    pub fn path_utility<R: Recorder>(&self, index: usize, rec: &mut R) -> f64 {
        let x = self.run_path(index, rec);
        -(1.0 / self.params.gamma) * (-self.params.gamma * x).exp()
    }

    /// Terminal wealth of path `index`.
    pub fn run_path<R: Recorder>(&self, index: usize, rec: &mut R) -> f64 {
        let p = &self.params;
        let (stream, sign) = if self.cfg.antithetic { (index / 2, if index % 2 == 0 { 1.0 } else { -1.0 }) } else { (index, 1.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(stream as u64);
        let mut normal = || -> f64 { sign * rng.sample::<f64, _>(StandardNormal) };

        let s0 = p.sigma0_sq();
        let s2 = p.sigma_sq();
        let inv = 1.0 / s2;
        let sq_dt = self.dt.sqrt();
        let mu = p.mu0 + p.sigma0 * normal();
        let (mut y, mut z, mut x) = (0.0, 0.0, p.x0);
        let mut state = PathState { t: 0.0, mu_draw: mu, y, z, x, post_mean: p.mu0, post_var: s0 };
        rec.record(0, &state);
        for i in 0..self.cfg.n_steps {
            let t = i as f64 * self.dt;
            let d = s0 * z + 1.0;
            let post_mean = (p.mu0 + s0 * y) / d;
            let hold = match self.trading {
                Trading::Feedback => {
                    let u = z + (p.horizon - t) * inv;
                    d / (s0 * u + 1.0) * post_mean / (s2 * p.gamma)
                }
                Trading::MertonMyopic => post_mean / (s2 * p.gamma),
                Trading::Constant(c) => c,
            };
            let th = self.theta[i];
            let ds = mu * self.dt + p.sigma * sq_dt * normal();
            let db = mu * th * self.dt + sq_dt * normal();
            y += ds * inv + th * db;
            z += (inv + th * th) * self.dt;
            x += hold * ds - self.cost_rate[i] * self.dt;
            if !x.is_finite() {
                return f64::NAN;
            }
            let d = s0 * z + 1.0;
            state = PathState { t: t + self.dt, mu_draw: mu, y, z, x, post_mean: (p.mu0 + s0 * y) / d, post_var: s0 / d };
            rec.record(i + 1, &state);
        }
        x
    }

    /// All paths in index order.
    pub fn utilities(&self) -> Vec<f64> {
        (0..self.cfg.n_paths).map(|i| self.path_utility(i, &mut ())).collect()
    }

    pub fn run(&self) -> Result<SimBatch> {
        SimBatch::from_utilities(self.utilities(), self.cfg.antithetic)
    }
}

/// Summary of a simulated ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBatch {
    pub n_paths: usize,
    pub mean_utility: f64,
    pub std_error: f64,
    /// Paths whose wealth became non-finite (excluded from the statistics).
    pub flagged: usize,
    pub utilities: Vec<f64>,
    pub antithetic: bool,
}

impl SimBatch {
    /// With antithetic sampling the standard error is taken over pair means.
    pub fn from_utilities(utilities: Vec<f64>, antithetic: bool) -> Result<Self> {
        let n = utilities.len();
        let flagged = utilities.iter().filter(|v| !v.is_finite()).count();
        if flagged as f64 > MAX_FLAGGED_SHARE * n as f64 {
            return Err(Error::Flagged { flagged, n_paths: n });
        }
        let (mean_utility, std_error) = if antithetic {
            let pairs: Vec<f64> = utilities
                .chunks(2)
                .filter(|c| c.iter().all(|v| v.is_finite()))
                .map(|c| 0.5 * (c[0] + c[1]))
                .collect();
            mean_and_stderr(&pairs)
        } else {
            let ok: Vec<f64> = utilities.iter().cloned().filter(|v| v.is_finite()).collect();
            mean_and_stderr(&ok)
        };
        Ok(SimBatch { n_paths: n, mean_utility, std_error, flagged, utilities, antithetic })
    }
}

pub fn simulate(params: &ModelParams, cost: &CostModel, theta_path: &StrategyPath, trading: Trading, cfg: SimConfig) -> Result<SimBatch> {
    Simulator::new(params, cost, theta_path, trading, cfg)?.run()
}

/// Mean and standard error of `a − b` over paired samples.
pub fn paired_difference(a: &SimBatch, b: &SimBatch) -> (f64, f64) {
    let d: Vec<f64> = a.utilities.iter().zip(&b.utilities).map(|(x, y)| x - y).collect();
    let d: Vec<f64> = if a.antithetic {
        d.chunks(2).map(|c| 0.5 * (c[0] + c[1])).filter(|v| v.is_finite()).collect()
    } else {
        d.into_iter().filter(|v| v.is_finite()).collect()
    };
    mean_and_stderr(&d)
}

/// Candidates simulated on common random numbers.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub batches: Vec<SimBatch>,
    /// Candidate indices by decreasing mean utility.
    pub ranking: Vec<usize>,
    /// `diffs[i][j]` = (mean, std error) of `U_i − U_j`.
    pub diffs: Vec<Vec<(f64, f64)>>,
}

impl Comparison {
    pub fn from_batches(batches: Vec<SimBatch>) -> Self {
        let n = batches.len();
        let mut ranking: Vec<usize> = (0..n).collect();
        ranking.sort_by(|&i, &j| batches[j].mean_utility.total_cmp(&batches[i].mean_utility));
        let diffs = (0..n).map(|i| (0..n).map(|j| paired_difference(&batches[i], &batches[j])).collect()).collect();
        Comparison { batches, ranking, diffs }
    }
}

pub fn compare_strategies(
    params: &ModelParams,
    cost: &CostModel,
    candidates: &[StrategyPath],
    trading: Trading,
    cfg: SimConfig,
) -> Result<Comparison> {
    let batches = candidates.iter().map(|c| simulate(params, cost, c, trading, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(Comparison::from_batches(batches))
}

/// Calibration of the filter at one snapshot time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotCheck {
    pub step: usize,
    pub t: f64,
    pub z: f64,
    /// Regression of the drawn drift on the posterior mean.
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    /// Sample variance of `μ − posterior mean` and its standard error.
    pub residual_var: f64,
    pub residual_var_se: f64,
    /// `σ0²/(σ0²Z+1)`.
    pub expected_var: f64,
    /// Mean and variance of `(μ − posterior mean)/posterior std`.
    pub standardized_mean: f64,
    pub standardized_var: f64,
    pub n: usize,
}

impl SnapshotCheck {
    /// Largest deviation from the Gaussian-conjugacy prediction, in standard errors.
    pub fn max_z_score(&self) -> f64 {
        let n = self.n as f64;
        [
            (self.slope - 1.0).abs() / self.slope_se,
            self.intercept.abs() / self.intercept_se,
            (self.residual_var - self.expected_var).abs() / self.residual_var_se,
            self.standardized_mean.abs() * n.sqrt(),
            (self.standardized_var - 1.0).abs() / (2.0 / n).sqrt(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, z: f64) -> bool {
        self.max_z_score() < z
    }
}

struct Snapshots<'a> {
    steps: [usize; 3],
    mu: &'a mut [Vec<f64>; 3],
    mean: &'a mut [Vec<f64>; 3],
    var: &'a mut [f64; 3],
    z: &'a mut [f64; 3],
}

impl Recorder for Snapshots<'_> {
    fn record(&mut self, step: usize, s: &PathState) {
        for k in 0..3 {
            if self.steps[k] == step {
                self.mu[k].push(s.mu_draw);
                self.mean[k].push(s.post_mean);
                self.var[k] = s.post_var;
                self.z[k] = s.z;
            }
        }
    }
}

/// Regresses drawn drifts on posterior means at `T/4`, `T/2` and `T`.
/// Paths are simulated with feedback trading (wealth does not enter the filter).
pub fn filter_consistency(params: &ModelParams, cost: &CostModel, theta_path: &StrategyPath, cfg: SimConfig) -> Result<Vec<SnapshotCheck>> {
    let sim = Simulator::new(params, cost, theta_path, Trading::Feedback, cfg)?;
    let n = cfg.n_steps;
    let steps = [n / 4, n / 2, n];
    let mut mu: [Vec<f64>; 3] = Default::default();
    let mut mean_: [Vec<f64>; 3] = Default::default();
    let mut var = [0.0; 3];
    let mut z = [0.0; 3];
    {
        let mut rec = Snapshots { steps, mu: &mut mu, mean: &mut mean_, var: &mut var, z: &mut z };
        for i in 0..cfg.n_paths {
            sim.run_path(i, &mut rec);
        }
    }
    let dt = params.horizon / n as f64;
    let mut out = Vec::with_capacity(3);
    for k in 0..3 {
        let reg = regress(&mean_[k], &mu[k]);
        let resid: Vec<f64> = mu[k].iter().zip(&mean_[k]).map(|(a, b)| a - b).collect();
        let m = resid.len() as f64;
        let rv = variance(&resid);
        let sd = var[k].sqrt();
        let std_resid: Vec<f64> = resid.iter().map(|r| r / sd).collect();
        out.push(SnapshotCheck {
            step: steps[k],
            t: steps[k] as f64 * dt,
            z: z[k],
            slope: reg.slope,
            slope_se: reg.slope_se,
            intercept: reg.intercept,
            intercept_se: reg.intercept_se,
            residual_var: rv,
            residual_var_se: var[k] * (2.0 / (m - 1.0)).sqrt(),
            expected_var: var[k],
            standardized_mean: mean(&std_resid),
            standardized_var: variance(&std_resid),
            n: resid.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> SimConfig {
        SimConfig { n_paths: n, n_steps: 64, seed: 7, antithetic: false }
    }

    struct Last(Option<PathState>, usize);
    impl Recorder for Last {
        fn record(&mut self, step: usize, s: &PathState) {
            self.0 = Some(*s);
            self.1 = step;
        }
    }

    #[test]
    fn prior_state_and_variance_formula() {
        let p = ModelParams::default();
        let k = CostModel::benchmark();
        let path = StrategyPath::constant(&p, 0.0, 64).unwrap();
        let sim = Simulator::new(&p, &k, &path, Trading::Feedback, cfg(4)).unwrap();
        struct First(Option<PathState>);
        impl Recorder for First {
            fn record(&mut self, step: usize, s: &PathState) {
                if step == 0 {
                    self.0 = Some(*s);
                }
            }
        }
        let mut f = First(None);
        sim.run_path(0, &mut f);
        let s0 = f.0.unwrap();
        assert_eq!(s0.post_var, p.sigma0_sq());
        assert_eq!((s0.y, s0.z), (0.0, 0.0));
        let mut last = Last(None, 0);
        sim.run_path(1, &mut last);
        let end = last.0.unwrap();
        assert_eq!(last.1, 64);
        let expect = p.sigma0_sq() / (p.sigma0_sq() / p.sigma_sq() + 1.0);
        assert!((end.post_var - expect).abs() < 1e-14);
        assert!((end.z - 1.0 / p.sigma_sq()).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_reproducible_and_paths_replayable() {
        let p = ModelParams::default();
        let k = CostModel::benchmark();
        let path = StrategyPath::constant(&p, 0.1, 64).unwrap();
        let a = simulate(&p, &k, &path, Trading::Feedback, cfg(50)).unwrap();
        let b = simulate(&p, &k, &path, Trading::Feedback, cfg(50)).unwrap();
        assert_eq!(a, b);
        let sim = Simulator::new(&p, &k, &path, Trading::Feedback, cfg(50)).unwrap();
        assert_eq!(sim.path_utility(37, &mut ()).to_bits(), a.utilities[37].to_bits());
    }

    #[test]
    fn antithetic_twins_mirror_noise() {
        let p = ModelParams { mu0: 0.0, ..ModelParams::default() };
        let k = CostModel::benchmark();
        let path = StrategyPath::constant(&p, 0.0, 64).unwrap();
        let c = SimConfig { antithetic: true, ..cfg(2) };
        let sim = Simulator::new(&p, &k, &path, Trading::Constant(1.0), c).unwrap();
        let x0 = sim.run_path(0, &mut ());
        let x1 = sim.run_path(1, &mut ());
        assert!((x0 + x1).abs() < 1e-12);
        assert!(SimConfig { n_paths: 3, ..c }.validate().is_err());
    }

    #[test]
    fn self_financing_identity() {
        // With constant holding ϖ, X_T = x0 + ϖ·ΣΔS − Σk(ϑ²)Δt.
        let p = ModelParams { x0: 1.5, ..ModelParams::default() };
        let k = CostModel::benchmark();
        let path = StrategyPath::constant(&p, 0.09, 64).unwrap();
        let sim = Simulator::new(&p, &k, &path, Trading::Constant(2.0), cfg(1)).unwrap();
        struct Y(f64, f64);
        impl Recorder for Y {
            fn record(&mut self, _: usize, s: &PathState) {
                self.0 = s.y;
                self.1 = s.z;
            }
        }
        let mut y = Y(0.0, 0.0);
        let x = sim.run_path(0, &mut y);
        // Y = ΣΔS/σ² + ϑΣΔB̃; recover ΣΔS with a second run at ϑ = 0 sharing the same draws.
        let zero = StrategyPath::constant(&p, 0.0, 64).unwrap();
        let sim0 = Simulator::new(&p, &k, &zero, Trading::Constant(2.0), cfg(1)).unwrap();
        let mut y0 = Y(0.0, 0.0);
        let x_free = sim0.run_path(0, &mut y0);
        let total_ds = y0.0 * p.sigma_sq();
        assert!((x_free - (1.5 + 2.0 * total_ds)).abs() < 1e-12);
        let cost = 0.002 * 0.09 * 0.09 * p.horizon;
        assert!((x - (1.5 + 2.0 * total_ds - cost)).abs() < 1e-12);
        assert!((y.1 - (1.0 / p.sigma_sq() + 0.09)).abs() < 1e-12);
    }

    #[test]
    fn identical_candidates_have_zero_difference() {
        let p = ModelParams::default();
        let k = CostModel::benchmark();
        let path = StrategyPath::constant(&p, 0.1, 64).unwrap();
        let cmp = compare_strategies(&p, &k, &[path.clone(), path], Trading::Feedback, cfg(100)).unwrap();
        assert_eq!(cmp.diffs[0][1], (0.0, 0.0));
    }

    #[test]
    fn flagged_paths_fail_batch() {
        let mut u = alloc::vec![-0.5; 999];
        u.push(f64::NAN);
        let b = SimBatch::from_utilities(u.clone(), false).unwrap();
        assert_eq!(b.flagged, 1);
        u[0] = f64::NAN;
        assert!(matches!(SimBatch::from_utilities(u, false), Err(Error::Flagged { .. })));
    }
}
