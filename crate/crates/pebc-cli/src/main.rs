//! `pebc` — command-line front end for the boundary-feedback simulation
//! toolkit.
//!
//! Subcommands:
//! - `kernel`      build the feedback kernel for a gain and write it as CSV
//! - `check-gains` print the certified constants and pass flags for a config
//! - `simulate`    run one configured scenario and write its trajectory CSV
//! - `sweep`       rerun the scenario across a gain range and tabulate
//!
//! Exit codes: 0 pass, 2 gain-condition or decay-audit failure,
//! 3 numerical divergence, 4 configuration error.

mod config;
mod scenario;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pebc::analysis::{find_c1_for_target_k1, gain_report};
use pebc::grid::Grid;
use pebc::kernel::{build_kernel, KernelConfig};
use pebc::Error;

use config::{parse_config, ScenarioConfig};
use scenario::{condition_for_mode, run_scenario, run_sweep, write_sweep_csv};

const EXIT_PASS: u8 = 0;
const EXIT_CONDITION_FAIL: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_CONFIG_ERROR: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pebc",
    version,
    about = "Simulation and gain verification for a boundary-controlled \
             coupled parabolic-elliptic system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the feedback kernel for a gain and write its sampled triangle
    /// as CSV.
    Kernel {
        /// Design gain c1 (positive).
        #[arg(long, allow_negative_numbers = true)]
        c1: f64,
        /// Grid points per axis.
        #[arg(long)]
        n: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the certified gain constants and pass flags for a config.
    CheckGains {
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
        /// Also root-search the smallest c1 whose feedback margin K1
        /// reaches this target; exits 2 when infeasible below --c1-max.
        #[arg(long, value_name = "TARGET_K1")]
        find_c1: Option<f64>,
        /// Upper end of the root-search range.
        #[arg(long, default_value_t = 10.0)]
        c1_max: f64,
    },
    /// Run the configured scenario and write its trajectory CSV.
    Simulate {
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Rerun the scenario across a range of gains and tabulate margins and
    /// fitted rates into one CSV.
    Sweep {
        /// Scenario config file.
        #[arg(long)]
        config: PathBuf,
        /// Range spec `c1=START:STOP:COUNT` (inclusive, linearly spaced).
        #[arg(long)]
        vary: String,
    },
}

fn exit_for_error(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::NonFinite { .. } => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG_ERROR,
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: could not read `{}`: {e}", path.display());
        EXIT_CONFIG_ERROR
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_CONFIG_ERROR
    })
}

fn cmd_kernel(c1: f64, n: usize, out: &Path) -> u8 {
    let result = (|| -> Result<(), Error> {
        let cfg = KernelConfig::new(c1)?;
        let grid = Grid::new(n)?;
        let kernel = build_kernel(&cfg, &grid)?;
        let file = File::create(out)?;
        let mut writer = BufWriter::new(file);
        kernel.to_csv(&mut writer)?;
        writer.flush()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            println!("wrote kernel samples for c1 = {c1}, n = {n} to {}", out.display());
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn cmd_check_gains(config_path: &Path, find_c1: Option<f64>, c1_max: f64) -> u8 {
    let cfg = match load_config(config_path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG_ERROR;
        }
    };
    let report = match gain_report(&params, cfg.c1) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG_ERROR;
        }
    };
    print!("{}", report.to_key_values());
    println!("mode={}", cfg.mode.as_str());
    let condition = condition_for_mode(cfg.mode, &report);
    println!("mode_condition_pass={condition}");

    if let Some(target) = find_c1 {
        match find_c1_for_target_k1(&params, target, c1_max) {
            Ok(Some(found)) => {
                let found_report = gain_report(&params, found).expect("report at found gain");
                println!("found_c1={found}");
                println!("found_k1={}", found_report.k1);
                EXIT_PASS
            }
            Ok(None) => {
                println!("found_c1=infeasible");
                println!(
                    "no gain at or below {c1_max} reaches a feedback margin of {target}"
                );
                EXIT_CONDITION_FAIL
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG_ERROR
            }
        }
    } else if condition {
        EXIT_PASS
    } else {
        EXIT_CONDITION_FAIL
    }
}

fn cmd_simulate(config_path: &Path) -> u8 {
    let cfg = match load_config(config_path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    match run_scenario(&cfg) {
        Ok(result) => {
            print!("{}", result.report.to_key_values());
            println!("mode={}", cfg.mode.as_str());
            println!("mode_condition_pass={}", result.condition_pass);
            println!("guaranteed_rate={}", result.guaranteed_rate);
            match result.fit {
                Some(fit) => {
                    println!("fitted_series={}", result.fitted_series);
                    println!("fitted_rate={}", fit.rate);
                    println!("fitted_r_squared={}", fit.r_squared);
                    println!(
                        "fit_window={}..{}",
                        fit.window.0, fit.window.1
                    );
                    println!(
                        "decay_audit_pass={}",
                        result.audit_pass.expect("audit accompanies a fit")
                    );
                }
                None => {
                    println!("fitted_series={}", result.fitted_series);
                    println!("fitted_rate=degenerate");
                }
            }
            println!(
                "trajectory: {} rows -> {}",
                result.rows_written,
                cfg.out.display()
            );
            if result.passed() {
                EXIT_PASS
            } else {
                EXIT_CONDITION_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for_error(&e)
        }
    }
}

/// Parses `c1=START:STOP:COUNT` into the inclusive, linearly spaced list.
fn parse_vary(spec: &str) -> Result<Vec<f64>, String> {
    let (key, range) = spec
        .split_once('=')
        .ok_or_else(|| format!("`{spec}` is not of the form c1=START:STOP:COUNT"))?;
    if key.trim() != "c1" {
        return Err(format!("only `c1` can be varied (got `{}`)", key.trim()));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(format!("`{range}` is not of the form START:STOP:COUNT"));
    };
    let start: f64 = start
        .trim()
        .parse()
        .map_err(|_| format!("`{start}` is not a number"))?;
    let stop: f64 = stop
        .trim()
        .parse()
        .map_err(|_| format!("`{stop}` is not a number"))?;
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| format!("`{count}` is not a positive integer"))?;
    if count == 0 {
        return Err("COUNT must be at least 1".to_string());
    }
    if !(start > 0.0) || !(stop >= start) || !stop.is_finite() {
        return Err(format!(
            "the range must satisfy 0 < START <= STOP (got {start}:{stop})"
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn cmd_sweep(config_path: &Path, vary: &str) -> u8 {
    let cfg = match load_config(config_path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let c1_values = match parse_vary(vary) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: malformed --vary: {msg}");
            return EXIT_CONFIG_ERROR;
        }
    };
    match run_sweep(&cfg, &c1_values) {
        Ok(points) => {
            let write = (|| -> std::io::Result<()> {
                let file = File::create(&cfg.out)?;
                let mut out = BufWriter::new(file);
                write_sweep_csv(&points, &mut out)?;
                out.flush()
            })();
            if let Err(e) = write {
                eprintln!("error: could not write `{}`: {e}", cfg.out.display());
                return EXIT_CONFIG_ERROR;
            }
            let failures = points.iter().filter(|p| p.failure.is_some()).count();
            println!(
                "swept {} gains ({} simulation failures recorded) -> {}",
                points.len(),
                failures,
                cfg.out.display()
            );
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_for_error(&e)
        }
    }
}

fn main() -> ExitCode {
    // Route argument-parse failures to the config-error exit code rather than
    // clap's default usage code, which would collide with the condition-fail
    // code; help and version output remain successes.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_CONFIG_ERROR,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Kernel { c1, n, out } => cmd_kernel(c1, n, &out),
        Command::CheckGains {
            config,
            find_c1,
            c1_max,
        } => cmd_check_gains(&config, find_c1, c1_max),
        Command::Simulate { config } => cmd_simulate(&config),
        Command::Sweep { config, vary } => cmd_sweep(&config, &vary),
    };
    ExitCode::from(code)
}
