use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hotspot::error::{EXIT_FAIL, EXIT_NUMERICAL, EXIT_PASS};
use hotspot::experiments::{certified_run, eps_sweep, gamma_compare, heat_oracle_error, initial_state, log_slope, standard_verdicts};
use hotspot::io::{
    format_diagnostics_csv, format_field, format_gamma_csv, format_sweep_csv, format_verdicts, parse_diagnostics_csv, read_text,
    write_text,
};
use hotspot::{parse_config, HarnessError, RunConfig};
use hotspot_core::diagnostics::Sense;
use hotspot_core::{Grid, Verdict};

#[derive(Parser)]
#[command(name = "hotspot", version, about = "Crime-hotspot taxis simulator and bound checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration, write diagnostics and check the bounds.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the cutoff ladder and write pairwise distances.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare running maxima across logistic exponents and horizons.
    GammaCompare {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Refinement study of the diffusion-only scheme against the exact
    /// cosine-mode solution, with `dt = dt0 (n0/n)²`.
    Oracle {
        #[arg(long, value_delimiter = ',', default_values_t = vec![32usize, 64, 128])]
        grids: Vec<usize>,
        #[arg(long, default_value_t = 4e-3)]
        dt0: f64,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value_t = 0.9)]
        min_slope: f64,
    },
    /// Re-check the bounds on a stored diagnostics CSV.
    Certify {
        config: PathBuf,
        diagnostics: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig, HarnessError> {
    parse_config(&read_text(path)?)
}

fn verdict_code(verdicts: &[Verdict]) -> i32 {
    print!("{}", format_verdicts(verdicts));
    if verdicts.iter().all(|v| v.pass) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn execute(cmd: Command) -> Result<i32, HarnessError> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let res = certified_run(&cfg)?;
            write_text(&dir.join("diagnostics.csv"), &format_diagnostics_csv(&res.records))?;
            write_text(&dir.join("verdicts.txt"), &format_verdicts(&res.verdicts))?;
            write_text(&dir.join("u_final.txt"), &format_field(&res.final_state.u, res.final_state.t))?;
            write_text(&dir.join("v_final.txt"), &format_field(&res.final_state.v, res.final_state.t))?;
            println!(
                "t = {} accepted = {} rejected = {} clamp_events = {}",
                res.final_state.t, res.stats.accepted, res.stats.rejected, res.stats.clamp_events
            );
            if !res.status.is_none() {
                println!("threshold {} crossed at t = {} (value {})", res.status.kind.as_str(), res.status.time, res.status.value);
            }
            Ok(verdict_code(&res.verdicts))
        }
        Command::Sweep { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = eps_sweep(&cfg, &cfg.sweep_ladder, cfg.sweep_t)?;
            write_text(&dir.join("sweep.csv"), &format_sweep_csv(&report))?;
            print!("{}", format_sweep_csv(&report));
            let m = report.monotone;
            println!("nonincreasing d_lnu={} d_v={} d_gradv={} d_u_lp={}", m.d_lnu, m.d_v, m.d_gradv, m.d_u_lp);
            for (eps, msg) in &report.failed {
                eprintln!("eps = {eps} failed: {msg}");
            }
            Ok(if report.failed.is_empty() { EXIT_PASS } else { EXIT_NUMERICAL })
        }
        Command::GammaCompare { config, out } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = gamma_compare(&cfg, &cfg.gamma_values, &cfg.gamma_horizons)?;
            write_text(&dir.join("gamma.csv"), &format_gamma_csv(&report))?;
            print!("{}", format_gamma_csv(&report));
            let mut code = EXIT_PASS;
            for (gamma, flag) in &report.stable {
                match flag {
                    Some(ok) => {
                        println!("gamma = {gamma} maxima stable: {ok}");
                        if !ok {
                            code = EXIT_FAIL;
                        }
                    }
                    None => println!("gamma = {gamma} reported without verdict"),
                }
            }
            Ok(code)
        }
        Command::Oracle { grids, dt0, t_end, min_slope } => {
            let Some(&n0) = grids.first() else {
                return Err(HarnessError::config(0, "grids", "at least one grid"));
            };
            let mut xs = Vec::new();
            let mut errs = Vec::new();
            for &n in &grids {
                let grid = Grid::unit_square(n)?;
                let dt = dt0 * (n0 as f64 / n as f64).powi(2);
                let err = heat_oracle_error(&grid, dt, t_end)?;
                println!("n = {n} dt = {dt} error = {err}");
                xs.push(grid.h() * grid.h() + dt);
                errs.push(err);
            }
            if grids.len() < 2 {
                return Ok(EXIT_PASS);
            }
            let slope = log_slope(&xs, &errs);
            Ok(verdict_code(&[Verdict::new("heat_oracle_slope", Sense::Lower, min_slope, slope, 0.0)]))
        }
        Command::Certify { config, diagnostics } => {
            let cfg = load(&config)?;
            let records = parse_diagnostics_csv(&read_text(&diagnostics)?)?;
            let s0 = initial_state(&cfg)?;
            Ok(verdict_code(&standard_verdicts(&records, &cfg, &s0)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
