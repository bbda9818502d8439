//! Boundary feedback and observation.
//!
//! Three cooperating objects:
//!
//! * the state-feedback boundary law
//!   ω(t) = ∫₀¹ k_x(1,y) u(y,t) dy + k(1,1) u(1,t),
//!   which forces the transformed state to satisfy the homogeneous Neumann
//!   condition at x = 1;
//! * a boundary observer — a copy of the plant driven by output injection
//!   from the single measurement u(1,t), with in-domain gain identically
//!   zero and boundary-flux gain σ₂ = −k(1,1) = c₁/2 > 0:
//!   û_x(1,t) = ω(t) + σ₂·[u(1,t) − û(1,t)];
//! * the output-feedback loop, which evaluates the state-feedback law on
//!   the observer state û instead of the unmeasurable u.
//!
//! The estimation error ε = u − û obeys an autonomous-boundary error system
//! with flux ε_x(1) = −σ₂ ε(1) and interior difference terms
//! f(u) − f(u − ε); [`simulate_error_system`] integrates that system
//! directly from a recorded plant trajectory so the observer implementation
//! can be validated against the analytically derived error dynamics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{composite_trapezoid, Field};
use crate::kernel::Kernel;
use crate::pde::{
    consistent_state, guard_norm, solve_neumann_tridiag, step_parabolic, ObserverSeries,
    SimOptions, SimState, SystemParams, Trajectory,
};

/// How the boundary input is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// ω ≡ 0; the plant runs uncontrolled.
    OpenLoop,
    /// ω from the feedback law evaluated on the true state u.
    StateFeedback,
    /// ω from the feedback law evaluated on the observer state û.
    OutputFeedback,
}

/// The boundary feedback law. Closed-loop modes carry the kernel whose
/// boundary traces k_x(1,·) and k(1,1) define the signal.
#[derive(Debug, Clone)]
pub struct Controller {
    mode: ControlMode,
    kernel: Option<Kernel>,
}

impl Controller {
    /// No feedback: the signal is identically zero.
    pub fn open_loop() -> Self {
        Controller {
            mode: ControlMode::OpenLoop,
            kernel: None,
        }
    }

    /// Full-state feedback through the given kernel.
    pub fn state_feedback(kernel: Kernel) -> Self {
        Controller {
            mode: ControlMode::StateFeedback,
            kernel: Some(kernel),
        }
    }

    /// Feedback evaluated on an observer estimate.
    pub fn output_feedback(kernel: Kernel) -> Self {
        Controller {
            mode: ControlMode::OutputFeedback,
            kernel: Some(kernel),
        }
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    /// The boundary signal for state `u`:
    /// trapezoid quadrature of k_x(1,·) against u, plus k(1,1)·u(1).
    /// Open-loop controllers return exactly 0 for any state.
    pub fn signal(&self, u: &Field) -> Result<f64> {
        let kernel = match (&self.mode, &self.kernel) {
            (ControlMode::OpenLoop, _) => return Ok(0.0),
            (_, Some(k)) => k,
            (_, None) => unreachable!("closed-loop controllers always carry a kernel"),
        };
        if kernel.grid() != u.grid() {
            return Err(Error::GridMismatch {
                left: kernel.grid().n(),
                right: u.grid().n(),
            });
        }
        let h = u.grid().h();
        let integrand: Vec<f64> = kernel
            .kx_at_1()
            .iter()
            .zip(u.values())
            .map(|(kx, uy)| kx * uy)
            .collect();
        Ok(composite_trapezoid(&integrand, h) + kernel.corner() * u.values()[u.grid().n() - 1])
    }

    /// The output-feedback signal: the same law evaluated on the observer
    /// state. Only valid on a controller built for output feedback.
    pub fn estimate_signal(&self, obs: &ObserverState) -> Result<f64> {
        if self.mode != ControlMode::OutputFeedback {
            return Err(Error::InvalidParameter {
                name: "mode",
                value: f64::NAN,
                reason: "the estimate-driven signal requires an output-feedback controller"
                    .into(),
            });
        }
        self.signal(&obs.u_hat)
    }
}

/// The observer state: the estimate pair (û, v̂) and the boundary injection
/// gain σ₂. The in-domain injection gain is identically zero, so it is not
/// stored; see [`ObserverState::sigma1`].
#[derive(Debug, Clone)]
pub struct ObserverState {
    u_hat: Field,
    v_hat: Field,
    sigma2: f64,
}

impl ObserverState {
    /// Builds a consistent observer state from the estimate û₀, taking the
    /// boundary injection gain σ₂ = −k(1,1) from the kernel and deriving v̂
    /// by the same elliptic solve as the plant's.
    pub fn new(params: &SystemParams, kernel: &Kernel, u_hat0: &Field) -> Result<Self> {
        if kernel.grid() != u_hat0.grid() {
            return Err(Error::GridMismatch {
                left: kernel.grid().n(),
                right: u_hat0.grid().n(),
            });
        }
        let state = consistent_state(params, u_hat0)?;
        Ok(ObserverState {
            u_hat: state.u().clone(),
            v_hat: state.v().clone(),
            sigma2: -kernel.corner(),
        })
    }

    pub fn u_hat(&self) -> &Field {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &Field {
        &self.v_hat
    }

    /// The boundary injection gain, −k(1,1) = c₁/2 > 0.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// The in-domain injection gain, identically zero: the design injects
    /// the measurement error only through the boundary flux.
    pub fn sigma1(&self) -> f64 {
        0.0
    }

    /// Max-norm residual of the observer's elliptic constraint.
    pub fn consistency_residual(&self, params: &SystemParams) -> f64 {
        SimState::from_parts(0.0, self.u_hat.clone(), self.v_hat.clone())
            .consistency_residual(params)
    }
}

/// Advances the observer one step: identical IMEX scheme to the plant's, but
/// with boundary flux ω + σ₂·(u(1) − û(1)) built from the measurement.
pub fn observer_step(
    params: &SystemParams,
    obs: &ObserverState,
    measurement_u1: f64,
    omega: f64,
    dt: f64,
) -> Result<ObserverState> {
    if !measurement_u1.is_finite() {
        return Err(Error::NonFinite {
            context: "boundary measurement".into(),
        });
    }
    let n = obs.u_hat.grid().n();
    let flux = omega + obs.sigma2 * (measurement_u1 - obs.u_hat.values()[n - 1]);
    let state = SimState::from_parts(0.0, obs.u_hat.clone(), obs.v_hat.clone());
    let next = step_parabolic(params, &state, flux, dt)?;
    Ok(ObserverState {
        u_hat: next.u().clone(),
        v_hat: next.v().clone(),
        sigma2: obs.sigma2,
    })
}

fn diff_norm(a: &Field, b: &Field) -> f64 {
    let h = a.grid().h();
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .enumerate()
        .map(|(i, d)| {
            if i == 0 || i == a.grid().n() - 1 {
                0.5 * d
            } else {
                d
            }
        })
        .sum();
    (h * sq).sqrt()
}

/// Runs plant and observer side by side. The plant's boundary input follows
/// the controller's mode (zero, state feedback on u, or output feedback on
/// û); the observer always receives the same ω plus its boundary injection.
/// The measurement is u(1,t), optionally corrupted by centered Gaussian
/// noise of standard deviation `noise_std` drawn from a stream seeded by
/// `seed` (identical seed + inputs ⇒ identical trajectories).
#[allow(clippy::too_many_arguments)]
pub fn simulate_with_observer(
    params: &SystemParams,
    kernel: &Kernel,
    controller: &Controller,
    u0: &Field,
    u_hat0: &Field,
    t_final: f64,
    dt: f64,
    noise_std: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "the horizon must be finite and positive".into(),
        });
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidParameter {
            name: "noise_std",
            value: noise_std,
            reason: "the measurement noise level must be finite and nonnegative".into(),
        });
    }
    if u0.grid() != u_hat0.grid() {
        return Err(Error::GridMismatch {
            left: u0.grid().n(),
            right: u_hat0.grid().n(),
        });
    }
    let steps = crate::pde::step_count(t_final, dt);
    let mut plant = consistent_state(params, u0)?;
    let mut obs = ObserverState::new(params, kernel, u_hat0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).map_err(|_| Error::InvalidParameter {
            name: "noise_std",
            value: noise_std,
            reason: "not a valid Gaussian scale".into(),
        })?)
    } else {
        None
    };
    let n = u0.grid().n();
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        norm_u: Vec::with_capacity(steps + 1),
        norm_v: Vec::with_capacity(steps + 1),
        omega: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        snapshot_every: opts.snapshot_every,
        observer: Some(ObserverSeries::default()),
    };
    let keep = |step: usize| {
        step == 0 || step == steps || (opts.snapshot_every > 0 && step % opts.snapshot_every == 0)
    };
    let record =
        |traj: &mut Trajectory, plant: &SimState, obs: &ObserverState, w: f64, keep: bool| {
            traj.times.push(plant.t());
            traj.norm_u.push(plant.u().l2_norm());
            traj.norm_v.push(plant.v().l2_norm());
            traj.omega.push(w);
            let series = traj.observer.as_mut().expect("observer series present");
            series.norm_u_hat.push(obs.u_hat.l2_norm());
            series.norm_v_hat.push(obs.v_hat.l2_norm());
            series.norm_err_u.push(diff_norm(plant.u(), &obs.u_hat));
            series.norm_err_v.push(diff_norm(plant.v(), &obs.v_hat));
            if keep {
                traj.snapshots.push(plant.clone());
                series.snapshots.push(SimState::from_parts(
                    plant.t(),
                    obs.u_hat.clone(),
                    obs.v_hat.clone(),
                ));
            }
        };
    for step in 0..steps {
        let w = match controller.mode() {
            ControlMode::OpenLoop => 0.0,
            ControlMode::StateFeedback => controller.signal(plant.u())?,
            ControlMode::OutputFeedback => controller.signal(&obs.u_hat)?,
        };
        record(&mut traj, &plant, &obs, w, keep(step));
        let measurement = match &noise {
            Some(dist) => plant.u().values()[n - 1] + dist.sample(&mut rng),
            None => plant.u().values()[n - 1],
        };
        let plant_next = step_parabolic(params, &plant, w, dt)?;
        obs = observer_step(params, &obs, measurement, w, dt)?;
        plant = plant_next;
    }
    let w = match controller.mode() {
        ControlMode::OpenLoop => 0.0,
        ControlMode::StateFeedback => controller.signal(plant.u())?,
        ControlMode::OutputFeedback => controller.signal(&obs.u_hat)?,
    };
    record(&mut traj, &plant, &obs, w, true);
    Ok(traj)
}

/// Integrates the estimation-error system directly, as derived: for the
/// error pair (ε^u, ε^v),
///
/// ```text
/// ε^u_t = ε^u_xx − ρ ε^u + f₁(u) − f₁(u − ε^u) + α ε^v + f₂(v) − f₂(v − ε^v)
///   0   = ε^v_xx − γ ε^v + β ε^u + f₃(u) − f₃(u − ε^u)
/// ε^u_x(0) = 0,   ε^u_x(1) = −σ₂ ε^u(1)
/// ```
///
/// The difference terms make the system non-autonomous: it is driven by the
/// plant states, so the plant trajectory must carry a snapshot at every step
/// (snapshot_every = 1). The recorded `norm_u`/`norm_v` are ‖ε^u‖/‖ε^v‖ and
/// the boundary-input column holds the applied error flux −σ₂ ε^u(1).
pub fn simulate_error_system(
    params: &SystemParams,
    kernel: &Kernel,
    plant: &Trajectory,
    eps_u0: &Field,
    dt: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if plant.snapshot_every != 1 || plant.snapshots.len() != plant.times.len() {
        return Err(Error::InvalidParameter {
            name: "plant",
            value: plant.snapshot_every as f64,
            reason: "the error dynamics are driven by the plant state at every step; \
                     record the plant trajectory with snapshot_every = 1"
                .into(),
        });
    }
    if (dt - plant.dt).abs() > 1e-12 * plant.dt.abs().max(1.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: format!("must match the plant trajectory step {}", plant.dt),
        });
    }
    let grid = eps_u0.grid().clone();
    if plant.snapshots[0].u().grid() != &grid {
        return Err(Error::GridMismatch {
            left: plant.snapshots[0].u().grid().n(),
            right: grid.n(),
        });
    }
    if kernel.grid() != &grid {
        return Err(Error::GridMismatch {
            left: kernel.grid().n(),
            right: grid.n(),
        });
    }
    let sigma2 = -kernel.corner();
    let n = grid.n();
    let h = grid.h();
    let steps = plant.times.len() - 1;
    let mut eps_u = eps_u0.clone();
    let mut traj = Trajectory {
        dt: plant.dt,
        times: Vec::with_capacity(steps + 1),
        norm_u: Vec::with_capacity(steps + 1),
        norm_v: Vec::with_capacity(steps + 1),
        omega: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        snapshot_every: opts.snapshot_every,
        observer: None,
    };
    let keep = |step: usize| {
        step == 0 || step == steps || (opts.snapshot_every > 0 && step % opts.snapshot_every == 0)
    };
    for step in 0..=steps {
        let state = &plant.snapshots[step];
        let u = state.u().values();
        let v = state.v().values();
        let e = eps_u.values();
        // Elliptic error state from the current parabolic error.
        let mut rhs_ell = vec![0.0; n];
        for i in 0..n {
            rhs_ell[i] = params.beta() * e[i] + params.f3().evaluate(u[i])
                - params.f3().evaluate(u[i] - e[i]);
        }
        let eps_v = Field::new(
            grid.clone(),
            solve_neumann_tridiag(
                n,
                params.gamma() + 2.0 / (h * h),
                -1.0 / (h * h),
                &rhs_ell,
            )?,
        )?;
        let flux = -sigma2 * e[n - 1];
        traj.times.push(state.t());
        traj.norm_u.push(eps_u.l2_norm());
        traj.norm_v.push(eps_v.l2_norm());
        traj.omega.push(flux);
        if keep(step) {
            traj.snapshots
                .push(SimState::from_parts(state.t(), eps_u.clone(), eps_v.clone()));
        }
        if step == steps {
            break;
        }
        // One IMEX step of the parabolic error equation.
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let explicit = params.f1().evaluate(u[i]) - params.f1().evaluate(u[i] - e[i])
                + params.alpha() * eps_v.values()[i]
                + params.f2().evaluate(v[i])
                - params.f2().evaluate(v[i] - eps_v.values()[i]);
            rhs[i] = e[i] + dt * explicit;
        }
        rhs[n - 1] += dt * 2.0 * flux / h;
        let diag = 1.0 + dt * params.rho() + 2.0 * dt / (h * h);
        let off = -dt / (h * h);
        eps_u = Field::new(grid.clone(), solve_neumann_tridiag(n, diag, off, &rhs)?)?;
        guard_norm(state.t() + dt, &eps_u)?;
    }
    Ok(traj)
}
