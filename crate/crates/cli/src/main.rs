use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infoacq_cli::output::{num, sink, write_batches, write_grid, write_path, write_sweep, write_utilities};
use infoacq_cli::{runner, verify, CliError, CliResult, RunConfig, Settings};

/// Optimal information acquisition and portfolio choice under drift uncertainty.
#[derive(Debug, Parser)]
#[command(name = "infoacq", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve for the optimal schedule and write it as CSV.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the upwind grid (upwind solver only).
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Re-solve over a parameter range and record theta0_sq.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of c, gamma, sigma0, sigma, T.
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Monte Carlo check of the solved schedule against alternatives.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sim_steps: Option<usize>,
        #[arg(long)]
        antithetic: bool,
        /// feedback, merton, or a constant dollar holding.
        #[arg(long)]
        trading: Option<String>,
        /// Write every path's utility here.
        #[arg(long)]
        dump_paths: Option<PathBuf>,
    },
    /// Run the cross-solver and Monte Carlo checks.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// truncated-linear, power or regularized.
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu0: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// closedform, characteristics, upwind or detcontrol.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn settings(&self, extra: &[(&str, Option<String>)]) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let flags: [(&str, Option<String>); 16] = [
            ("cost", self.cost.clone()),
            ("c", self.c.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("b", self.b.map(|v| v.to_string())),
            ("mu0", self.mu0.map(|v| v.to_string())),
            ("sigma0", self.sigma0.map(|v| v.to_string())),
            ("sigma", self.sigma.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("horizon", self.horizon.map(|v| v.to_string())),
            ("x0", self.x0.map(|v| v.to_string())),
            ("solver", self.solver.clone()),
            ("steps", self.steps.map(|v| v.to_string())),
            ("h", self.h.map(|v| v.to_string())),
            ("tau", self.tau.map(|v| v.to_string())),
            ("paths", self.paths.map(|v| v.to_string())),
        ];
        let seed = [("seed", self.seed.map(|v| v.to_string()))];
        for (k, v) in flags.iter().chain(&seed).chain(extra) {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        Ok(s)
    }

    fn config(&self, extra: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
        RunConfig::from_settings(&self.settings(extra)?)
    }
}

/// Summary text goes to stdout unless stdout carries the CSV.
fn report(to_file: bool, lines: &[String]) {
    for l in lines {
        if to_file {
            println!("{l}");
        } else {
            eprintln!("{l}");
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Solve { common, grid_out } => {
            let cfg = common.config(&[])?;
            let solved = runner::solve(&cfg)?;
            write_path(sink(common.out.as_deref())?, &solved.path)?;
            if let Some(path) = grid_out {
                let grid = solved.grid.as_ref().ok_or_else(|| CliError::Usage("--grid-out needs --solver upwind".into()))?;
                write_grid(sink(Some(&path))?, grid)?;
            }
            report(common.out.is_some(), &solved.summary.lines());
        }
        Cmd::Sweep { common, param, from, to, points } => {
            let extra = [
                ("param", param),
                ("from", from.map(|v| v.to_string())),
                ("to", to.map(|v| v.to_string())),
                ("points", points.map(|v| v.to_string())),
            ];
            let cfg = common.config(&extra)?;
            let rows = runner::sweep(&cfg);
            write_sweep(sink(common.out.as_deref())?, cfg.sweep.param.as_str(), &rows)?;
            let failed: Vec<String> = rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| format!("flagged {}={}: {e}", cfg.sweep.param.as_str(), num(r.value))))
                .collect();
            report(common.out.is_some(), &failed);
        }
        Cmd::Simulate { common, sim_steps, antithetic, trading, dump_paths } => {
            let extra = [
                ("sim_steps", sim_steps.map(|v| v.to_string())),
                ("antithetic", antithetic.then(|| "true".to_string())),
                ("trading", trading),
            ];
            let cfg = common.config(&extra)?;
            let rep = runner::simulate(&cfg)?;
            write_batches(sink(common.out.as_deref())?, &rep.batches)?;
            if let Some(path) = dump_paths {
                write_utilities(sink(Some(&path))?, &rep.batches)?;
            }
            let mut lines: Vec<String> =
                rep.batches.iter().zip(&rep.values).map(|((n, _), v)| format!("exact {n:<12} {v:.10}")).collect();
            lines.extend(rep.diffs.iter().map(|(n, m, se)| format!("optimal - {n:<12} {m:.4e} (se {se:.2e})")));
            report(common.out.is_some(), &lines);
        }
        Cmd::Verify { common } => {
            let cfg = common.config(&[])?;
            let checks = verify::run(&cfg)?;
            let mut w = sink(common.out.as_deref())?;
            for c in &checks {
                writeln!(w, "{}", c.line())?;
            }
            w.flush()?;
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::Verification { failed, total: checks.len() });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infoacq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
