use alloc::vec::Vec;

use crate::model::ModelParams;
use crate::{Error, Result};

/// Which solver produced a [`StrategyPath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    ClosedForm,
    Characteristics,
    Upwind,
    DetControl,
    /// Limit of a regularised sequence.
    Regularized,
    /// Hand-built schedule (benchmarks, perturbations).
    Custom,
}

impl SolverTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverTag::ClosedForm => "closedform",
            SolverTag::Characteristics => "characteristics",
            SolverTag::Upwind => "upwind",
            SolverTag::DetControl => "detcontrol",
            SolverTag::Regularized => "regularized",
            SolverTag::Custom => "custom",
        }
    }
}

impl core::fmt::Display for SolverTag {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A deterministic acquisition schedule sampled on a time grid.
///
/// `z` is the filtered precision state `Z_t = t/σ² + ∫ϑ²`, and `u = Z + (T−t)/σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyPath {
    pub times: Vec<f64>,
    pub theta_sq: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub solver: SolverTag,
}

impl StrategyPath {
    /// Builds the states from a schedule by trapezoidal integration of `1/σ² + ϑ²`.
    pub fn from_theta_sq(params: &ModelParams, times: Vec<f64>, theta_sq: Vec<f64>, solver: SolverTag) -> Result<Self> {
        if times.len() != theta_sq.len() || times.len() < 2 {
            return Err(Error::Config("schedule needs matching time and value arrays of length >= 2"));
        }
        if let Some(&bad) = theta_sq.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain { what: "squared acquisition rate must be nonnegative", value: bad });
        }
        let inv = 1.0 / params.sigma_sq();
        let mut z = Vec::with_capacity(times.len());
        z.push(0.0);
        for i in 1..times.len() {
            let dt = times[i] - times[i - 1];
            let prev = z[i - 1];
            z.push(prev + dt * (inv + 0.5 * (theta_sq[i] + theta_sq[i - 1])));
        }
        let t_end = params.horizon;
        let u = times.iter().zip(&z).map(|(t, z)| z + (t_end - t) * inv).collect();
        Ok(StrategyPath { times, theta_sq, z, u, solver })
    }

    /// Constant schedule on a uniform grid with `n` cells.
    pub fn constant(params: &ModelParams, theta_sq: f64, n: usize) -> Result<Self> {
        let times = uniform_grid(params.horizon, n);
        let vals = alloc::vec![theta_sq; n + 1];
        Self::from_theta_sq(params, times, vals, SolverTag::Custom)
    }

    /// Multiplies `ϑ` by `factor` (so `ϑ²` by `factor²`) and rebuilds the states.
    pub fn scaled(&self, params: &ModelParams, factor: f64) -> Result<Self> {
        let f2 = factor * factor;
        let vals = self.theta_sq.iter().map(|v| v * f2).collect();
        Self::from_theta_sq(params, self.times.clone(), vals, SolverTag::Custom)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn theta0_sq(&self) -> f64 {
        self.theta_sq[0]
    }

    pub fn theta_end_sq(&self) -> f64 {
        *self.theta_sq.last().unwrap()
    }

    /// `ϑ²(t)` by linear interpolation (clamped at the ends).
    pub fn theta_sq_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.theta_sq, t)
    }

    pub fn z_at(&self, t: f64) -> f64 {
        interp(&self.times, &self.z, t)
    }

    /// Largest increase between consecutive samples (0 for a nonincreasing path).
    pub fn max_ascent(&self) -> f64 {
        self.theta_sq.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Sup-norm distance of the two `ϑ²` curves over the nodes of both paths in `[0, t_max]`.
    pub fn sup_distance(&self, other: &StrategyPath, t_max: f64) -> f64 {
        let mut d = 0.0_f64;
        for (t, v) in self.times.iter().zip(&self.theta_sq) {
            if *t <= t_max {
                d = d.max((v - other.theta_sq_at(*t)).abs());
            }
        }
        for (t, v) in other.times.iter().zip(&other.theta_sq) {
            if *t <= t_max {
                d = d.max((v - self.theta_sq_at(*t)).abs());
            }
        }
        d
    }

    /// Exact equality of every stored float, including the sign of zero.
    pub fn bitwise_eq(&self, other: &StrategyPath) -> bool {
        fn same(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        same(&self.times, &other.times) && same(&self.theta_sq, &other.theta_sq) && same(&self.z, &other.z)
    }
}

pub(crate) fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    let dt = horizon / n as f64;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    g[n] = horizon;
    g
}

/// Linear interpolation on an increasing grid, clamped outside it.
pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_schedule_states() {
        let p = ModelParams::default();
        let path = StrategyPath::constant(&p, 0.0, 64).unwrap();
        let zt = *path.z.last().unwrap();
        assert!((zt - 1.0 / 0.036864).abs() < 1e-12);
        for u in &path.u {
            assert!((u - p.u_start()).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_and_distance() {
        let p = ModelParams::default();
        let a = StrategyPath::constant(&p, 0.1, 10).unwrap();
        let b = StrategyPath::constant(&p, 0.15, 7).unwrap();
        assert!((a.sup_distance(&b, 1.0) - 0.05).abs() < 1e-15);
        assert_eq!(a.theta_sq_at(0.33), 0.1);
        assert_eq!(a.max_ascent(), 0.0);
    }

    #[test]
    fn rejects_negative_values() {
        let p = ModelParams::default();
        assert!(StrategyPath::from_theta_sq(&p, alloc::vec![0.0, 1.0], alloc::vec![0.1, -0.2], SolverTag::Custom).is_err());
    }
}
