//! The verification battery behind `infoacq verify`.

use rayon::prelude::*;

use infoacq_core::characteristics::{gamma_field, theta_path_on};
use infoacq_core::closedform::{free_boundary, value_surface};
use infoacq_core::detcontrol::{euler_lagrange_residual, value_from_gamma, value_of_schedule, DetControlProblem};
use infoacq_core::filtersim::{filter_consistency, Trading};
use infoacq_core::hjsolver::{cfl_ratio, theta_from_grid};
use infoacq_core::StrategyPath;

use crate::runner::{par_simulate, upwind_grid};
use crate::{CliResult, CostKind, RunConfig};

pub const AGREEMENT_TOL: f64 = 1e-3;
pub const ASCENT_TOL: f64 = 1e-9;
pub const TERMINAL_TOL: f64 = 1e-4;
pub const EL_TOL: f64 = 1e-4;
pub const VALUE_REL_TOL: f64 = 1e-4;
pub const HJB_TOL: f64 = 1e-6;
pub const SE_MULTIPLE: f64 = 3.0;
pub const BOUND_POINTS: usize = 1000;
pub const FIELD_STEPS: usize = 1024;
pub const DET_STEPS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value <= limit }
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag}  {:<40} {:>12.4e}  (limit {:.1e})", self.name, self.value, self.limit)
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    match cfg.cost_kind {
        CostKind::TruncatedLinear => closed_form_checks(cfg),
        _ => smooth_checks(cfg),
    }
}

/// Weyl sequence in the unit square; deterministic and well spread.
pub fn unit_points(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let a = 0.754_877_666_246_692_8; // 1/plastic number
    let b = 0.569_840_290_998_053_3;
    (1..=n).map(move |i| ((i as f64 * a).fract(), (i as f64 * b).fract()))
}

fn smooth_checks(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let p = &cfg.params;
    let k = &cfg.cost;
    let mut out = Vec::new();

    let field = gamma_field(p, k, cfg.steps)?;
    let ch = theta_path_on(&field, cfg.steps)?;
    let grid = upwind_grid(cfg)?;
    let up = theta_from_grid(&grid, p, k)?;
    let dc = DetControlProblem::new(p, k, DET_STEPS)?.solve()?.path;
    let t = p.horizon;
    out.push(Check::at_most("characteristics vs upwind (sup)", ch.sup_distance(&up, t), AGREEMENT_TOL));
    out.push(Check::at_most("characteristics vs detcontrol (sup)", ch.sup_distance(&dc, t), AGREEMENT_TOL));
    out.push(Check::at_most("upwind vs detcontrol (sup)", up.sup_distance(&dc, t), AGREEMENT_TOL));
    let paths: [(&str, &StrategyPath); 3] = [("characteristics", &ch), ("upwind", &up), ("detcontrol", &dc)];
    for (name, path) in paths {
        out.push(Check::at_most(format!("{name} largest ascent"), path.max_ascent(), ASCENT_TOL));
        out.push(Check::at_most(format!("{name} theta_sq(T)"), path.theta_end_sq(), TERMINAL_TOL));
    }
    out.push(Check::at_most("Euler-Lagrange residual", euler_lagrange_residual(p, k, &ch), EL_TOL));

    let cfl = cfl_ratio(p, k)?;
    out.push(Check::at_most("theta0_sq over cfl bound", ch.theta0_sq(), cfl));
    let coarse = gamma_field(p, k, FIELD_STEPS)?;
    let s0 = p.sigma0_sq();
    let u_top = 2.0 * p.horizon / p.sigma_sq() + p.horizon * cfl;
    let worst = unit_points(BOUND_POINTS)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(a, b)| {
            let (t, u) = (a * p.horizon, b * u_top);
            let g = -coarse.gamma_u(t, u)? / p.gamma;
            let bound = s0 * s0 * (p.horizon - t) / (2.0 * p.sigma_sq() * p.gamma);
            // Fraction of the bound used; anything nonpositive counts as a violation.
            Ok(if g > 0.0 { g / bound } else { f64::INFINITY })
        })
        .collect::<Result<Vec<f64>, infoacq_core::Error>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(Check::at_most("-gamma_u/gamma over its upper bound", worst, 1.0));

    let v = value_of_schedule(p, k, &ch, p.x0)?;
    let g = value_from_gamma(p, field.gamma(0.0, p.u_start())?, p.x0)?;
    out.push(Check::at_most("value identity (relative)", ((v - g) / g).abs(), VALUE_REL_TOL));

    let b = par_simulate(p, k, &ch, Trading::Feedback, cfg.sim)?;
    out.push(Check::at_most("MC mean vs schedule value (SE units)", (b.mean_utility - v).abs() / b.std_error, SE_MULTIPLE));
    let fc = filter_consistency(p, k, &ch, cfg.sim)?;
    let z = fc.iter().map(|s| s.max_z_score()).fold(0.0, f64::max);
    out.push(Check::at_most("filter calibration (SE units)", z, SE_MULTIPLE));
    Ok(out)
}

fn closed_form_checks(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let p = &cfg.params;
    let k = &cfg.cost;
    let surface = value_surface(p, k)?;
    let sol = surface.solution;
    let mut out = vec![
        Check::at_most("delta(T) + 1/sigma0^2", (free_boundary(p, k, p.horizon)? + 1.0 / p.sigma0_sq()).abs(), 0.0),
        Check::at_most("switching residual", sol.residual.abs(), 1e-10),
    ];
    let mut hjb = 0.0_f64;
    let mut fit = 0.0_f64;
    for (a, b) in unit_points(200) {
        let t = a * p.horizon * 0.999;
        let d = free_boundary(p, k, t)?;
        let z = if d > 0.0 { 2.0 * b * d } else { b * 50.0 };
        let part = surface.partials(t, p.x0, b - 0.5, z)?;
        hjb = hjb.max(surface.hjb_residual_from(t, z, &part)?.abs() / part.v.abs());
        if d > 1e-6 {
            for zz in [d - 1e-9, d + 1e-9] {
                fit = fit.max(surface.indicator(t, zz)?.abs());
            }
        }
    }
    out.push(Check::at_most("HJB residual (relative)", hjb, HJB_TOL));
    out.push(Check::at_most("smooth fit at the boundary", fit, HJB_TOL));
    Ok(out)
}
