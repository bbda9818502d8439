//! Scenario orchestration: build what the configured mode needs, run the
//! simulation, fit the applicable decay series, write the trajectory CSV,
//! and fold the gain conditions and empirical audit into a single outcome.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use pebc::analysis::{fit_decay, gain_report, rate_audit, DecayFit, GainReport};
use pebc::control::{simulate_with_observer, Controller};
use pebc::grid::Grid;
use pebc::kernel::{build_kernel, KernelConfig};
use pebc::pde::{simulate, simulate_target, SimOptions, Trajectory};
use pebc::Error;

use crate::config::{Mode, ScenarioConfig};

/// A completed scenario: the certified constants, the empirical fit (absent
/// when the trajectory is degenerate, e.g. identically zero), and the
/// verdicts that drive the process exit code.
pub struct ScenarioReport {
    pub report: GainReport,
    pub fit: Option<DecayFit>,
    /// Which norm series was fitted, for human-readable output.
    pub fitted_series: &'static str,
    /// The mode's gain condition (K-margin positivity, or the open-loop M).
    pub condition_pass: bool,
    /// The decay rate the passing condition certifies.
    pub guaranteed_rate: f64,
    /// Whether the fitted rate reaches the certified rate within the audit
    /// allowance; `None` when no fit was possible.
    pub audit_pass: Option<bool>,
    /// Rows written to the trajectory CSV (⌈T/dt⌉ + 1).
    pub rows_written: usize,
}

impl ScenarioReport {
    /// A scenario passes when its gain condition holds and the empirical
    /// decay (if fittable) audits clean against the certified rate.
    pub fn passed(&self) -> bool {
        self.condition_pass && self.audit_pass != Some(false)
    }
}

/// The per-mode simulation core: runs the loop and returns the trajectory,
/// the norm series the certificate speaks about, that series' name, the
/// applicable condition flag, and the certified rate.
fn run_core(
    cfg: &ScenarioConfig,
    c1: f64,
    report: &GainReport,
) -> Result<(Trajectory, Vec<f64>, &'static str, bool, f64), Error> {
    let params = cfg.params()?;
    let grid = Grid::new(cfg.grid_n)?;
    let u0 = cfg.u0.build(&grid).map_err(|reason| Error::InvalidParameter {
        name: "u0",
        value: f64::NAN,
        reason,
    })?;
    let opts = SimOptions::default();

    match cfg.mode {
        Mode::OpenLoop => {
            let traj = simulate(&params, &u0, |_| 0.0, cfg.t_final, cfg.dt, &opts)?;
            let series = traj.norm_u.clone();
            Ok((traj, series, "state norm", report.open_loop_pass, report.m))
        }
        Mode::StateFeedback => {
            let kernel = build_kernel(&KernelConfig::new(c1)?, &grid)?;
            let controller = Controller::state_feedback(kernel);
            let traj = simulate(
                &params,
                &u0,
                |s| controller.signal(s.u()).expect("grids match by construction"),
                cfg.t_final,
                cfg.dt,
                &opts,
            )?;
            let series = traj.norm_u.clone();
            Ok((traj, series, "state norm", report.closed_loop_pass, report.k1))
        }
        Mode::TargetSystem => {
            let kernel = build_kernel(&KernelConfig::new(c1)?, &grid)?;
            let inverse = kernel.invert()?;
            let traj = simulate_target(
                &params,
                c1,
                &kernel,
                &inverse,
                &u0,
                cfg.t_final,
                cfg.dt,
                &opts,
            )?;
            let series = traj.norm_u.clone();
            Ok((
                traj,
                series,
                "transformed state norm",
                report.closed_loop_pass,
                report.k1,
            ))
        }
        Mode::ObserverOnly | Mode::OutputFeedback => {
            let kernel = build_kernel(&KernelConfig::new(c1)?, &grid)?;
            let u_hat0 = cfg
                .observer_u0
                .build(&grid)
                .map_err(|reason| Error::InvalidParameter {
                    name: "observer_u0",
                    value: f64::NAN,
                    reason,
                })?;
            let controller = match cfg.mode {
                Mode::ObserverOnly => Controller::open_loop(),
                _ => Controller::output_feedback(kernel.clone()),
            };
            let traj = simulate_with_observer(
                &params,
                &kernel,
                &controller,
                &u0,
                &u_hat0,
                cfg.t_final,
                cfg.dt,
                cfg.noise_std,
                cfg.seed,
                &opts,
            )?;
            let observer = traj.observer.as_ref().expect("observer series present");
            if cfg.mode == Mode::ObserverOnly {
                let series = observer.norm_err_u.clone();
                Ok((
                    traj,
                    series,
                    "estimation error norm",
                    report.observer_pass,
                    report.k3,
                ))
            } else {
                let series: Vec<f64> = traj
                    .norm_u
                    .iter()
                    .zip(&observer.norm_err_u)
                    .map(|(s, e)| (s * s + e * e).sqrt())
                    .collect();
                Ok((
                    traj,
                    series,
                    "joint state+error norm",
                    report.output_feedback_pass,
                    report.k1.min(report.k3),
                ))
            }
        }
    }
}

/// Fits the series, tolerating the degenerate cases (identically-zero data,
/// too few usable samples) by reporting no fit instead of failing the run.
fn tolerant_fit(times: &[f64], series: &[f64]) -> Result<Option<DecayFit>, Error> {
    match fit_decay(times, series, None) {
        Ok(fit) => Ok(Some(fit)),
        Err(Error::DegenerateFit { .. }) | Err(Error::TooFewSamples { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs one scenario end to end and writes its trajectory CSV to `cfg.out`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport, Error> {
    let params = cfg.params()?;
    let report = gain_report(&params, cfg.c1)?;
    let (traj, series, fitted_series, condition_pass, guaranteed_rate) =
        run_core(cfg, cfg.c1, &report)?;
    let fit = tolerant_fit(&traj.times, &series)?;
    let audit_pass = fit.map(|f| rate_audit(f.rate, guaranteed_rate));

    let file = File::create(&cfg.out)?;
    let mut out = BufWriter::new(file);
    traj.write_csv(&mut out)?;
    out.flush()?;

    Ok(ScenarioReport {
        report,
        fit,
        fitted_series,
        condition_pass,
        guaranteed_rate,
        audit_pass,
        rows_written: traj.times.len(),
    })
}

/// One gain value's worth of sweep output; the gain itself sits in
/// `report.c1`.
pub struct SweepPoint {
    pub report: GainReport,
    pub fit: Option<DecayFit>,
    pub condition_pass: bool,
    pub audit_pass: Option<bool>,
    /// Present when this point's simulation failed (e.g. diverged); the
    /// sweep keeps going and records the failure textually.
    pub failure: Option<String>,
}

/// Runs the configured scenario once per gain value, concurrently up to
/// `cfg.workers`, returning points in the input order regardless of worker
/// scheduling. Per-point simulation failures (divergence, non-finite data)
/// are recorded on the point; only setup errors abort the sweep.
pub fn run_sweep(cfg: &ScenarioConfig, c1_values: &[f64]) -> Result<Vec<SweepPoint>, Error> {
    let params = cfg.params()?;
    let slots: Vec<Mutex<Option<Result<SweepPoint, Error>>>> =
        c1_values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.workers.max(1).min(c1_values.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= c1_values.len() {
                    break;
                }
                let c1 = c1_values[idx];
                let point = (|| -> Result<SweepPoint, Error> {
                    let report = gain_report(&params, c1)?;
                    match run_core(cfg, c1, &report) {
                        Ok((traj, series, _, condition_pass, guaranteed)) => {
                            let fit = tolerant_fit(&traj.times, &series)?;
                            let audit_pass = fit.map(|f| rate_audit(f.rate, guaranteed));
                            Ok(SweepPoint {
                                report,
                                fit,
                                condition_pass,
                                audit_pass,
                                failure: None,
                            })
                        }
                        Err(e @ Error::Divergence { .. }) | Err(e @ Error::NonFinite { .. }) => {
                            let condition_pass = condition_for_mode(cfg.mode, &report);
                            Ok(SweepPoint {
                                report,
                                fit: None,
                                condition_pass,
                                audit_pass: None,
                                failure: Some(e.to_string()),
                            })
                        }
                        Err(e) => Err(e),
                    }
                })();
                *slots[idx].lock().expect("sweep slot") = Some(point);
            });
        }
    });

    let mut points = Vec::with_capacity(c1_values.len());
    for slot in slots {
        match slot.into_inner().expect("sweep slot") {
            Some(Ok(point)) => points.push(point),
            Some(Err(e)) => return Err(e),
            None => unreachable!("every index is claimed exactly once"),
        }
    }
    Ok(points)
}

/// The pass flag the given mode's certificate rests on.
pub fn condition_for_mode(mode: Mode, report: &GainReport) -> bool {
    match mode {
        Mode::OpenLoop => report.open_loop_pass,
        Mode::StateFeedback | Mode::TargetSystem => report.closed_loop_pass,
        Mode::ObserverOnly => report.observer_pass,
        Mode::OutputFeedback => report.output_feedback_pass,
    }
}

/// Writes the sweep table: one gain-report row per point plus the fitted
/// rate, its r², the audit verdict, and a failure note for points whose
/// simulation did not complete.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "{},fitted_rate,r_squared,condition_pass,audit_pass,note",
        GainReport::csv_header()
    )?;
    for p in points {
        let (rate, r2) = match p.fit {
            Some(f) => (f.rate.to_string(), f.r_squared.to_string()),
            None => (String::new(), String::new()),
        };
        let audit = match p.audit_pass {
            Some(flag) => flag.to_string(),
            None => String::new(),
        };
        let note = p
            .failure
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace('\n', " ");
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.report.to_csv_row(),
            rate,
            r2,
            p.condition_pass,
            audit,
            note
        )?;
    }
    Ok(())
}
