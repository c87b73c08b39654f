//! CSV schemas. Numbers are written with 17 significant digits.
//!
//! | file | header |
//! |------|--------|
//! | path | `t,theta_sq,Z,u,solver` |
//! | grid | `t,u,gamma,gamma_u` (row-major in `t`) |
//! | sweep | `param,value,theta0_sq` |
//! | batch | `strategy,n_paths,mean_utility,std_error,flagged` |
//! | per-path dump | `strategy,path,utility` |

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use infoacq_core::filtersim::SimBatch;
use infoacq_core::hjsolver::GridSolution;
use infoacq_core::StrategyPath;

use crate::CliResult;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Buffered file, or stdout when no path is given.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn write_path<W: Write>(w: W, path: &StrategyPath) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "theta_sq", "Z", "u", "solver"])?;
    for i in 0..path.len() {
        out.write_record([num(path.times[i]), num(path.theta_sq[i]), num(path.z[i]), num(path.u[i]), path.solver.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_grid<W: Write>(w: W, grid: &GridSolution) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "u", "gamma", "gamma_u"])?;
    for (n, &t) in grid.t_grid.iter().enumerate() {
        for (j, &u) in grid.u_grid.iter().enumerate() {
            out.write_record([num(t), num(u), num(grid.gamma(n, j)), num(grid.gamma_u(n, j))])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One sweep point; `theta0_sq` is NaN where the solver failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub theta0_sq: f64,
    pub error: Option<String>,
}

pub fn write_sweep<W: Write>(w: W, param: &str, rows: &[SweepRow]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["param", "value", "theta0_sq"])?;
    for r in rows {
        out.write_record([param.to_string(), num(r.value), num(r.theta0_sq)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_batches<W: Write>(w: W, rows: &[(String, SimBatch)]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["strategy", "n_paths", "mean_utility", "std_error", "flagged"])?;
    for (name, b) in rows {
        out.write_record([name.clone(), b.n_paths.to_string(), num(b.mean_utility), num(b.std_error), b.flagged.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_utilities<W: Write>(w: W, rows: &[(String, SimBatch)]) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["strategy", "path", "utility"])?;
    for (name, b) in rows {
        for (i, u) in b.utilities.iter().enumerate() {
            out.write_record([name.clone(), i.to_string(), num(*u)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// FNV-1a over the bits of the schedule, for quick identity checks across runs.
pub fn path_hash(path: &StrategyPath) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in path.times.iter().chain(&path.theta_sq).chain(&path.z) {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
