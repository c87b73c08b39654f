//! Market parameters, the information cost family and the Gaussian-prior kernels.

#[allow(unused_imports)] // inherent float methods exist only when std is linked
use num_traits::Float;
use crate::roots::{bisect, increasing_root, ROOT_TOL};
use crate::{Error, Result};

/// Market and preference constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Prior mean of the drift.
    pub mu0: f64,
    /// Prior standard deviation of the drift.
    pub sigma0: f64,
    /// Asset volatility.
    pub sigma: f64,
    /// Absolute risk aversion.
    pub gamma: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Initial wealth.
    pub x0: f64,
}

impl Default for ModelParams {
    /// Maximum-likelihood estimates used as the benchmark calibration.
    fn default() -> Self {
        ModelParams { mu0: 0.172, sigma0: 0.121, sigma: 0.192, gamma: 2.0, horizon: 1.0, x0: 0.0 }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("sigma0 must be positive", self.sigma0),
            ("sigma must be positive", self.sigma),
            ("gamma must be positive", self.gamma),
            ("horizon must be positive", self.horizon),
        ];
        for (what, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain { what, value: v });
            }
        }
        if !self.mu0.is_finite() {
            return Err(Error::Domain { what: "mu0 must be finite", value: self.mu0 });
        }
        if !self.x0.is_finite() {
            return Err(Error::Domain { what: "x0 must be finite", value: self.x0 });
        }
        Ok(())
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0 * self.sigma0
    }

    /// Initial height `u = T/σ²` of the state with no acquired information.
    pub fn u_start(&self) -> f64 {
        self.horizon / self.sigma_sq()
    }

    /// Running information value `(σ0²/2σ²)/(σ0²u+1)`.
    pub fn info_rate(&self, u: f64) -> f64 {
        let s0 = self.sigma0_sq();
        0.5 * s0 / self.sigma_sq() / (s0 * u + 1.0)
    }

    /// Terminal constant `μ0²/(2σ0²)`.
    pub fn prior_constant(&self) -> f64 {
        self.mu0 * self.mu0 / (2.0 * self.sigma0_sq())
    }

    pub fn kernel(&self) -> GaussKernel {
        GaussKernel::new(self)
    }
}

/// `k(x) = c·x^p`, `p ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCost {
    pub c: f64,
    pub p: f64,
}

impl PowerCost {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain { what: "cost slope c must be positive", value: c });
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::Domain { what: "power exponent p must be >= 2", value: p });
        }
        Ok(PowerCost { c, p })
    }
}

/// Value of a possibly infinite cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostValue {
    Finite(f64),
    /// Precision beyond the cap of a truncated-linear cost.
    Infinite,
}

impl CostValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            CostValue::Finite(v) => Some(v),
            CostValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, CostValue::Infinite)
    }
}

/// The information cost `k(ϑ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// `c·x` on `[0, β²]`, infinite beyond.
    TruncatedLinear { c: f64, beta: f64 },
    Power(PowerCost),
    /// `base(x) + b·x²`.
    Regularized { base: PowerCost, b: f64 },
}

impl CostModel {
    pub fn truncated_linear(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain { what: "cost slope c must be positive", value: c });
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain { what: "precision cap beta must be positive", value: beta });
        }
        Ok(CostModel::TruncatedLinear { c, beta })
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        Ok(CostModel::Power(PowerCost::new(c, p)?))
    }

    pub fn regularized(c: f64, p: f64, b: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::Domain { what: "regularization weight b must be >= 0", value: b });
        }
        Ok(CostModel::Regularized { base: PowerCost::new(c, p)?, b })
    }

    /// Quadratic benchmark `k(x) = 0.002·x²`.
    pub fn benchmark() -> Self {
        CostModel::Power(PowerCost { c: 0.002, p: 2.0 })
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, CostModel::TruncatedLinear { .. })
    }

    fn smooth_parts(&self) -> Result<(PowerCost, f64)> {
        match *self {
            CostModel::TruncatedLinear { .. } => {
                Err(Error::UnsupportedCost("truncated-linear cost has no smooth conjugate"))
            }
            CostModel::Power(pc) => Ok((pc, 0.0)),
            CostModel::Regularized { base, b } => Ok((base, b)),
        }
    }

    /// `k''(0)`; the characteristic solver needs it strictly positive.
    pub fn curvature_at_zero(&self) -> f64 {
        self.curvature(0.0)
    }

    /// `k(x)`.
    pub fn eval(&self, x: f64) -> Result<CostValue> {
        if !(x >= 0.0) {
            return Err(Error::Domain { what: "cost argument must be nonnegative", value: x });
        }
        Ok(match *self {
            CostModel::TruncatedLinear { c, beta } => {
                if x <= beta * beta {
                    CostValue::Finite(c * x)
                } else {
                    CostValue::Infinite
                }
            }
            CostModel::Power(pc) => CostValue::Finite(power_eval(pc, x)),
            CostModel::Regularized { base, b } => CostValue::Finite(power_eval(base, x) + b * x * x),
        })
    }

    /// `k(x)` for smooth variants, as a plain float.
    pub fn eval_smooth(&self, x: f64) -> Result<f64> {
        let (pc, b) = self.smooth_parts()?;
        if !(x >= 0.0) {
            return Err(Error::Domain { what: "cost argument must be nonnegative", value: x });
        }
        Ok(power_eval(pc, x) + b * x * x)
    }

    /// `k'(x)`; for the truncated-linear cost, the slope on `[0, β²)`.
    pub fn marginal(&self, x: f64) -> f64 {
        match *self {
            CostModel::TruncatedLinear { c, .. } => c,
            CostModel::Power(pc) => power_marginal(pc, x),
            CostModel::Regularized { base, b } => power_marginal(base, x) + 2.0 * b * x,
        }
    }

    /// `k''(x)`.
    pub fn curvature(&self, x: f64) -> f64 {
        match *self {
            CostModel::TruncatedLinear { .. } => 0.0,
            CostModel::Power(pc) => power_curvature(pc, x),
            CostModel::Regularized { base, b } => power_curvature(base, x) + 2.0 * b,
        }
    }

    /// `(k')^{-1}(y)` for `y ≥ 0`.
    pub fn marginal_inverse(&self, y: f64) -> Result<f64> {
        let (pc, b) = self.smooth_parts()?;
        if !(y >= 0.0) {
            return Err(Error::Domain { what: "marginal inverse argument must be nonnegative", value: y });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let PowerCost { c, p } = pc;
        if b == 0.0 {
            return Ok(if p == 2.0 { y / (2.0 * c) } else { (y / (c * p)).powf(1.0 / (p - 1.0)) });
        }
        if p == 2.0 {
            return Ok(y / (2.0 * c + 2.0 * b));
        }
        if p == 3.0 {
            // Positive root of 3c·x² + 2b·x − y, written without cancellation.
            return Ok(2.0 * y / (2.0 * b + (4.0 * b * b + 12.0 * c * y).sqrt()));
        }
        increasing_root(|x| self.marginal(x) - y, ROOT_TOL)
    }

    /// Legendre–Fenchel transform `k*(y) = sup_{x≥0} {x·y − k(x)}`.
    pub fn conjugate(&self, y: f64) -> Result<f64> {
        self.smooth_parts()?;
        if !(y >= 0.0) {
            return Err(Error::Domain { what: "conjugate argument must be nonnegative", value: y });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let CostModel::Power(PowerCost { c, p }) = *self {
            if p == 2.0 {
                return Ok(y * y / (4.0 * c));
            }
        }
        let x = self.marginal_inverse(y)?;
        Ok((x * y - self.eval_smooth(x)?).max(0.0))
    }

    /// `k̃*(x) = −γ·k*(−x/γ)`, the Hamiltonian of the reduced equation.
    /// Vanishes for `x ≥ 0` because `k*` is zero on the negative axis.
    pub fn tilde_conjugate(&self, x: f64, gamma: f64) -> Result<f64> {
        if x >= 0.0 {
            self.smooth_parts()?;
            return Ok(0.0);
        }
        Ok(-gamma * self.conjugate(-x / gamma)?)
    }

    /// `(k̃*)'(x) = (k')^{-1}(−x/γ)`.
    pub fn tilde_conjugate_deriv(&self, x: f64, gamma: f64) -> Result<f64> {
        if x >= 0.0 {
            self.smooth_parts()?;
            return Ok(0.0);
        }
        self.marginal_inverse(-x / gamma)
    }

    /// Conjugate under correlated noise,
    /// `sup_θ {(θ − ρ/σ)²x/(1−ρ²) − k(θ²)}`, with its maximiser.
    ///
    /// For `ρ > 0` the maximiser is the nonpositive root of the first-order
    /// condition; for `ρ < 0` it is the mirror image `θ ↦ −θ`.
    pub fn correlated_conjugate(&self, rho: f64, sigma: f64, x: f64) -> Result<(f64, f64)> {
        self.smooth_parts()?;
        if !(x >= 0.0) {
            return Err(Error::Domain { what: "correlated conjugate argument must be nonnegative", value: x });
        }
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::Domain { what: "correlation must lie in (-1, 1)", value: rho });
        }
        if !(sigma > 0.0) {
            return Err(Error::Domain { what: "sigma must be positive", value: sigma });
        }
        if x == 0.0 {
            return Ok((0.0, 0.0));
        }
        let r = rho.abs();
        let scale = x / (1.0 - r * r);
        let theta = if r == 0.0 {
            -self.marginal_inverse(x)?.sqrt()
        } else {
            let shift = r / sigma;
            let foc = |th: f64| (th - shift) * scale - th * self.marginal(th * th);
            let mut lo = -1.0;
            let mut grown = 0;
            while foc(lo) <= 0.0 {
                lo *= 2.0;
                grown += 1;
                if grown > 1100 {
                    return Err(Error::NoConvergence { iterations: grown, residual: foc(lo) });
                }
            }
            bisect(foc, lo, 0.0, ROOT_TOL)?
        };
        let d = theta - r / sigma;
        let value = d * d * scale - self.eval_smooth(theta * theta)?;
        let theta = if rho < 0.0 { -theta } else { theta };
        Ok((value, theta))
    }
}

fn power_eval(pc: PowerCost, x: f64) -> f64 {
    if pc.p == 2.0 {
        pc.c * x * x
    } else {
        pc.c * x.powf(pc.p)
    }
}

fn power_marginal(pc: PowerCost, x: f64) -> f64 {
    if pc.p == 2.0 {
        2.0 * pc.c * x
    } else {
        pc.c * pc.p * x.powf(pc.p - 1.0)
    }
}

fn power_curvature(pc: PowerCost, x: f64) -> f64 {
    if pc.p == 2.0 {
        2.0 * pc.c
    } else {
        pc.c * pc.p * (pc.p - 1.0) * x.powf(pc.p - 2.0)
    }
}

/// Closed forms shared by every solver for the Gaussian prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussKernel {
    pub mu0: f64,
    pub sigma_sq: f64,
    pub sigma0_sq: f64,
    pub sigma0_4: f64,
    pub horizon: f64,
}

impl GaussKernel {
    pub fn new(p: &ModelParams) -> Self {
        let s0 = p.sigma0_sq();
        GaussKernel { mu0: p.mu0, sigma_sq: p.sigma_sq(), sigma0_sq: s0, sigma0_4: s0 * s0, horizon: p.horizon }
    }

    /// `H(t,z) = 1/(σ0²z + (σ0²/σ²)(T−t) + 1)`.
    pub fn h(&self, t: f64, z: f64) -> Result<f64> {
        let d = self.sigma0_sq * z + self.sigma0_sq / self.sigma_sq * (self.horizon - t) + 1.0;
        if !(d > 0.0) {
            return Err(Error::Domain { what: "H denominator must be positive", value: d });
        }
        Ok(1.0 / d)
    }

    /// `F(y,z) = E[exp{yμ − zμ²/2}]` under the prior.
    pub fn f(&self, y: f64, z: f64) -> Result<f64> {
        let d = z * self.sigma0_sq + 1.0;
        if !(d > 0.0) {
            return Err(Error::Domain { what: "z must exceed -1/sigma0^2", value: z });
        }
        let m = self.mu0;
        let e = (y * y * self.sigma0_sq + 2.0 * y * m - z * m * m) / (2.0 * d);
        Ok(e.exp() / d.sqrt())
    }

    /// Posterior mean and variance of the drift given filtered states `(y, z)`.
    pub fn posterior_moments(&self, y: f64, z: f64) -> Result<(f64, f64)> {
        let d = self.sigma0_sq * z + 1.0;
        if !(d > 0.0) {
            return Err(Error::Domain { what: "z must exceed -1/sigma0^2", value: z });
        }
        Ok(((self.mu0 + self.sigma0_sq * y) / d, self.sigma0_sq / d))
    }
}
