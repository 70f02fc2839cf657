use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use glvortex::app::{self, AppError};
use glvortex::config::ConfigError;
use glvortex::verify::{run_checks, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "glvortex",
    version,
    about = "Ginzburg-Landau vortices under tangential anchoring"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one configuration and write field, trace, report, plot and manifest.
    Run {
        /// Run config (TOML) or a manifest.json from an earlier run.
        config: PathBuf,
    },
    /// Warm-started chain over decreasing eps with a log fit of the energy.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "0.2,0.1,0.05,0.025")]
        eps: String,
    },
    /// Run the built-in identity and gradient checks.
    Verify {
        #[arg(long)]
        only: Option<String>,
        /// Optional `[verify]` table of tolerances.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Quiver SVG from a field CSV and a vortex report.
    Plot {
        field: PathBuf,
        report: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Draw this domain's outline instead of the field's envelope.
        #[arg(long)]
        shape: Option<String>,
    },
}

fn fail(e: AppError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config } => {
            let cfg = match app::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            let dir = cfg.output_dir();
            let out = match app::solve(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            if let Err(e) = app::write_run(&out, &dir) {
                return fail(e);
            }
            if !out.trace.converged() {
                eprintln!("warning: stopped at the iteration cap before the gradient tolerance was reached");
            }
            let e = out.energy();
            println!(
                "eps {} rings {} energy {:.6} converged {} index_sum {} ({} interior, {} boundary) -> {}",
                out.params.eps,
                out.mesh.rings,
                e.total,
                out.trace.converged(),
                out.report.index_sum,
                out.report.interior.len(),
                out.report.boundary.len(),
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Cmd::Sweep { config, eps } => {
            let run = || -> Result<(), AppError> {
                let cfg = app::load_config(&config)?;
                let list = app::parse_eps_list(&eps)?;
                let dir = cfg.output_dir();
                let (record, outcomes) = app::sweep(&cfg, &list)?;
                app::write_sweep(&record, &outcomes, &dir)?;
                for r in &record.rows {
                    println!(
                        "eps {:<7} total {:>10.5} eps*maxgrad {:.3} max|u| {:.4} index_sum {}",
                        r.eps, r.total, r.eps_maxgrad, r.max_modulus, r.index_sum
                    );
                }
                println!(
                    "slope {:.5} ({:.4} pi) intercept {:.4}",
                    record.slope,
                    record.slope / std::f64::consts::PI,
                    record.intercept
                );
                Ok(())
            };
            match run() {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Cmd::Verify { only, config } => {
            let cfg = match config.map(|p| VerifyConfig::load(&p)).transpose() {
                Ok(c) => c.unwrap_or_default(),
                Err(e) => return fail(e.into()),
            };
            let results = match run_checks(&cfg, only.as_deref()) {
                Ok(r) => r,
                Err(msg) => return fail(ConfigError::Invalid(msg).into()),
            };
            for r in &results {
                println!("{}", r.line());
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::Plot {
            field,
            report,
            output,
            shape,
        } => match app::plot(&field, &report, shape.as_deref()).and_then(|svg| app::write_plot(&svg, &output)) {
            Ok(p) => {
                println!("{}", p.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
