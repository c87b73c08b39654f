//! Flat `key = value` configuration with command-line overrides.
//!
//! Lines are `key = value`; blank lines and `#` comments are skipped. Keys
//! are the long flag names with `-` or `_` accepted interchangeably.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use infoacq_core::characteristics::DEFAULT_STEPS;
use infoacq_core::filtersim::{SimConfig, Trading, DEFAULT_SIM_STEPS};
use infoacq_core::{CostModel, ModelParams};

use crate::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "cost", "c", "beta", "p", "b", "mu0", "sigma0", "sigma", "gamma", "horizon", "x0", "solver", "steps", "h", "tau",
    "u_max", "paths", "sim_steps", "seed", "antithetic", "trading", "param", "from", "to", "points",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    TruncatedLinear,
    Power,
    Regularized,
}

impl FromStr for CostKind {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "truncated-linear" => Ok(CostKind::TruncatedLinear),
            "power" => Ok(CostKind::Power),
            "regularized" => Ok(CostKind::Regularized),
            _ => Err(CliError::Config(format!("unknown cost '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ClosedForm,
    Characteristics,
    Upwind,
    DetControl,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::ClosedForm => "closedform",
            SolverKind::Characteristics => "characteristics",
            SolverKind::Upwind => "upwind",
            SolverKind::DetControl => "detcontrol",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "closedform" => Ok(SolverKind::ClosedForm),
            "characteristics" => Ok(SolverKind::Characteristics),
            "upwind" => Ok(SolverKind::Upwind),
            "detcontrol" => Ok(SolverKind::DetControl),
            _ => Err(CliError::Config(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    C,
    Gamma,
    Sigma0,
    Sigma,
    Horizon,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::Gamma => "gamma",
            SweepParam::Sigma0 => "sigma0",
            SweepParam::Sigma => "sigma",
            SweepParam::Horizon => "T",
        }
    }

    /// Range used when none is given.
    pub fn default_range(self) -> (f64, f64) {
        match self {
            SweepParam::C => (0.001, 0.01),
            SweepParam::Gamma => (0.5, 10.0),
            SweepParam::Sigma0 => (0.05, 0.3),
            SweepParam::Sigma => (0.02, 0.5),
            SweepParam::Horizon => (0.2, 5.0),
        }
    }
}

impl FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "c" => Ok(SweepParam::C),
            "gamma" => Ok(SweepParam::Gamma),
            "sigma0" => Ok(SweepParam::Sigma0),
            "sigma" => Ok(SweepParam::Sigma),
            "T" | "horizon" => Ok(SweepParam::Horizon),
            _ => Err(CliError::Config(format!("cannot sweep '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let last = self.points - 1;
        (0..self.points)
            .map(|i| if i == last { self.to } else { self.from + (self.to - self.from) * i as f64 / last as f64 })
            .collect()
    }
}

/// Raw settings, merged from a file and flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

fn normalise(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            s.set(k, v.trim())?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let k = normalise(key);
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("unknown key '{}'", key.trim())));
        }
        self.0.insert(k, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::Config(format!("bad value '{v}' for {key}"))),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Later settings win.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

/// Everything a command needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub cost_kind: CostKind,
    pub cost: CostModel,
    pub solver: SolverKind,
    /// Grid cells for characteristics, detcontrol and the closed-form path.
    pub steps: usize,
    pub h: f64,
    /// `None` means `0.95h/cfl`.
    pub tau: Option<f64>,
    pub u_max: Option<f64>,
    pub sim: SimConfig,
    pub trading: Trading,
    pub sweep: SweepSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_settings(&Settings::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let d = ModelParams::default();
        let params = ModelParams {
            mu0: s.or("mu0", d.mu0)?,
            sigma0: s.or("sigma0", d.sigma0)?,
            sigma: s.or("sigma", d.sigma)?,
            gamma: s.or("gamma", d.gamma)?,
            horizon: s.or("horizon", d.horizon)?,
            x0: s.or("x0", d.x0)?,
        };
        params.validate()?;
        let cost_kind: CostKind = s.or("cost", CostKind::Power)?;
        let c = s.or("c", 0.002)?;
        let cost = match cost_kind {
            CostKind::TruncatedLinear => CostModel::truncated_linear(c, s.or("beta", 1.0)?)?,
            CostKind::Power => CostModel::power(c, s.or("p", 2.0)?)?,
            CostKind::Regularized => CostModel::regularized(c, s.or("p", 3.0)?, s.or("b", 1e-3)?)?,
        };
        let default_solver = if cost_kind == CostKind::TruncatedLinear { SolverKind::ClosedForm } else { SolverKind::Characteristics };
        let solver = s.or("solver", default_solver)?;
        if (solver == SolverKind::ClosedForm) != (cost_kind == CostKind::TruncatedLinear) {
            return Err(CliError::Usage(format!(
                "solver '{solver}' does not support this cost (closedform needs truncated-linear, the others a smooth cost)"
            )));
        }
        let default_steps = if solver == SolverKind::DetControl { 2048 } else { DEFAULT_STEPS };
        let steps = s.or("steps", default_steps)?;
        let sim = SimConfig {
            n_paths: s.or("paths", 200_000)?,
            n_steps: s.or("sim_steps", DEFAULT_SIM_STEPS)?,
            seed: s.or("seed", 2024)?,
            antithetic: s.or("antithetic", false)?,
        };
        sim.validate()?;
        let trading = match s.get("trading").unwrap_or("feedback") {
            "feedback" => Trading::Feedback,
            "merton" => Trading::MertonMyopic,
            v => Trading::Constant(v.parse().map_err(|_| CliError::Config(format!("bad trading rule '{v}'")))?),
        };
        let param: SweepParam = s.or("param", SweepParam::C)?;
        let (lo, hi) = param.default_range();
        let sweep = SweepSpec { param, from: s.or("from", lo)?, to: s.or("to", hi)?, points: s.or("points", 20)? };
        if !(sweep.from > 0.0 && sweep.to > 0.0 && sweep.points >= 1) {
            return Err(CliError::Config("sweep range must be positive with at least one point".into()));
        }
        Ok(RunConfig {
            params,
            cost_kind,
            cost,
            solver,
            steps,
            h: s.or("h", 0.005)?,
            tau: s.parsed("tau")?,
            u_max: s.parsed("u_max")?,
            sim,
            trading,
            sweep,
        })
    }

    /// Copy with one swept parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> CliResult<Self> {
        let mut out = self.clone();
        match param {
            SweepParam::C => {
                out.cost = match self.cost {
                    CostModel::TruncatedLinear { beta, .. } => CostModel::truncated_linear(value, beta)?,
                    CostModel::Power(pc) => CostModel::power(value, pc.p)?,
                    CostModel::Regularized { base, b } => CostModel::regularized(value, base.p, b)?,
                }
            }
            SweepParam::Gamma => out.params.gamma = value,
            SweepParam::Sigma0 => out.params.sigma0 = value,
            SweepParam::Sigma => out.params.sigma = value,
            SweepParam::Horizon => out.params.horizon = value,
        }
        out.params.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let s = Settings::parse("# defaults\nc = 0.004\n\nsigma0=0.2 # prior\nsim-steps = 64\n").unwrap();
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.cost, CostModel::power(0.004, 2.0).unwrap());
        assert_eq!(cfg.params.sigma0, 0.2);
        assert_eq!(cfg.sim.n_steps, 64);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(Settings::parse("colour = red").is_err());
        assert!(Settings::parse("no equals sign").is_err());
        let s = Settings::parse("gamma = lots").unwrap();
        assert!(matches!(RunConfig::from_settings(&s), Err(CliError::Config(_))));
    }

    #[test]
    fn solver_must_match_cost() {
        let s = Settings::parse("cost = truncated-linear\nsolver = upwind").unwrap();
        assert_eq!(RunConfig::from_settings(&s).unwrap_err().exit_code(), 2);
        let s = Settings::parse("cost = truncated-linear").unwrap();
        assert_eq!(RunConfig::from_settings(&s).unwrap().solver, SolverKind::ClosedForm);
    }

    #[test]
    fn later_settings_win() {
        let mut a = Settings::parse("c = 0.004\ngamma = 3").unwrap();
        a.merge(&Settings::parse("c = 0.005").unwrap());
        let cfg = RunConfig::from_settings(&a).unwrap();
        assert_eq!(cfg.cost, CostModel::power(0.005, 2.0).unwrap());
        assert_eq!(cfg.params.gamma, 3.0);
    }

    #[test]
    fn sweep_grid_includes_endpoints() {
        let spec = SweepSpec { param: SweepParam::C, from: 0.001, to: 0.01, points: 10 };
        let v = spec.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 0.001);
        assert_eq!(v[9], 0.01);
    }
}
