//! Discrete dynamics: the elliptic constraint solve, the IMEX time stepper
//! for the boundary-actuated parabolic state, and whole-trajectory drivers
//! for both the physical system and the transformed (target) system.
//!
//! The plant is
//!
//! ```text
//! u_t = u_xx − ρ u + f₁(u) + α v + f₂(v),
//!  0  = v_xx − γ v + β u + f₃(u),
//! u_x(0) = 0,  u_x(1) = ω(t),   v_x(0) = v_x(1) = 0,
//! ```
//!
//! discretized with second-order central differences and ghost-node Neumann
//! boundaries. Time stepping is first-order IMEX: diffusion and the linear
//! reaction −ρu are taken implicitly (backward Euler, unconditionally stable
//! in the diffusion part), while the couplings, nonlinearities, and the
//! boundary flux ω are explicit. The elliptic state v is recomputed from u by
//! a tridiagonal solve after every update, so every returned state satisfies
//! the constraint to solver precision — the discrete form of requiring
//! consistent initial data.
//!
//! With the ghost-node scheme the discrete Laplacian is self-adjoint under
//! the trapezoid inner product and annihilates constants, so the pure Neumann
//! heat equation conserves the trapezoid mass of u exactly (to round-off); a
//! homogeneous-flux run can be used to validate that identity.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernel::Kernel;
use crate::nonlin::Nonlinearity;

/// Hard cap on the state norm; beyond this a trajectory is declared divergent.
pub const BLOW_UP_GUARD: f64 = 1e12;

/// Relative guard band around the elliptic resonances γ = −(nπ)².
pub const RESONANCE_GUARD: f64 = 1e-6;

/// Physical parameters (ρ, α, β, γ) and the three certified nonlinearities.
#[derive(Debug, Clone)]
pub struct SystemParams {
    rho: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    f1: Nonlinearity,
    f2: Nonlinearity,
    f3: Nonlinearity,
}

impl SystemParams {
    /// Validates and stores the parameter set.
    ///
    /// γ must stay away from every value −(nπ)², n = 0, 1, 2, …, where the
    /// elliptic operator γI − ∂ₓₓ is singular; the guard band is relative,
    /// rejecting γ with min_n |γ + (nπ)²| ≤ 1e−6 · max(1, |γ|).
    pub fn new(
        rho: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        f1: Nonlinearity,
        f2: Nonlinearity,
        f3: Nonlinearity,
    ) -> Result<Self> {
        for (name, value) in [
            ("rho", rho),
            ("alpha", alpha),
            ("beta", beta),
            ("gamma", gamma),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "system parameters must be finite".into(),
                });
            }
        }
        // Only n with (nπ)² near |γ| can violate the guard.
        let n_hi = (gamma.abs().sqrt() / std::f64::consts::PI).ceil() as usize + 2;
        for n in 0..=n_hi {
            let eigen = -((n as f64 * std::f64::consts::PI).powi(2));
            let distance = (gamma - eigen).abs();
            if distance <= RESONANCE_GUARD * gamma.abs().max(1.0) {
                return Err(Error::Resonance {
                    gamma,
                    n,
                    distance,
                });
            }
        }
        Ok(SystemParams {
            rho,
            alpha,
            beta,
            gamma,
            f1,
            f2,
            f3,
        })
    }

    /// Linear system: all three nonlinearities identically zero.
    pub fn linear(rho: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(
            rho,
            alpha,
            beta,
            gamma,
            Nonlinearity::zero(),
            Nonlinearity::zero(),
            Nonlinearity::zero(),
        )
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn f1(&self) -> &Nonlinearity {
        &self.f1
    }
    pub fn f2(&self) -> &Nonlinearity {
        &self.f2
    }
    pub fn f3(&self) -> &Nonlinearity {
        &self.f3
    }

    /// The certified Lipschitz constants (M₁, M₂, M₃).
    pub fn lipschitz_constants(&self) -> (f64, f64, f64) {
        (self.f1.gain(), self.f2.gain(), self.f3.gain())
    }
}

/// One instant of the coupled system: time, parabolic state u, and the
/// elliptic state v consistent with it.
#[derive(Debug, Clone)]
pub struct SimState {
    t: f64,
    u: Field,
    v: Field,
}

impl SimState {
    pub(crate) fn from_parts(t: f64, u: Field, v: Field) -> Self {
        SimState { t, u, v }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn u(&self) -> &Field {
        &self.u
    }
    pub fn v(&self) -> &Field {
        &self.v
    }

    /// Max-norm residual of the discrete elliptic constraint
    /// v_xx − γv + βu + f₃(u) at this state.
    pub fn consistency_residual(&self, params: &SystemParams) -> f64 {
        let n = self.u.grid().n();
        let h2 = self.u.grid().h() * self.u.grid().h();
        let u = self.u.values();
        let v = self.v.values();
        let mut worst = 0.0_f64;
        for i in 0..n {
            let lap = if i == 0 {
                (2.0 * v[1] - 2.0 * v[0]) / h2
            } else if i == n - 1 {
                (2.0 * v[n - 2] - 2.0 * v[n - 1]) / h2
            } else {
                (v[i - 1] - 2.0 * v[i] + v[i + 1]) / h2
            };
            let res = lap - params.gamma * v[i] + params.beta * u[i] + params.f3.evaluate(u[i]);
            worst = worst.max(res.abs());
        }
        worst
    }
}

/// Solves the constant-coefficient tridiagonal system arising from
/// (σI − Δ_h) with ghost-node Neumann rows, by the Thomas algorithm.
///
/// `sigma_plus` is the diagonal shift (σ + 2/h²), `off` the interior
/// off-diagonal (−1/h²); the first and last rows carry 2·off.
pub(crate) fn solve_neumann_tridiag(n: usize, diag: f64, off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(rhs.len(), n);
    let scale = diag.abs().max(2.0 * off.abs());
    let guard = 1e-12 * scale.max(1.0);
    // Forward elimination.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut denom = diag;
    if denom.abs() <= guard {
        return Err(Error::SingularSolve { pivot: denom });
    }
    c_prime[0] = 2.0 * off / denom;
    d_prime[0] = rhs[0] / denom;
    for i in 1..n {
        let sub = if i == n - 1 { 2.0 * off } else { off };
        let sup = if i == n - 1 { 0.0 } else { off };
        denom = diag - sub * c_prime[i - 1];
        if denom.abs() <= guard {
            return Err(Error::SingularSolve { pivot: denom });
        }
        c_prime[i] = sup / denom;
        d_prime[i] = (rhs[i] - sub * d_prime[i - 1]) / denom;
    }
    // Back substitution.
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        let correction = c_prime[i] * x[i + 1];
        x[i] -= correction;
    }
    Ok(x)
}

/// Applies the resolvent (γI − Δ_h)⁻¹ with homogeneous Neumann ends.
pub fn apply_elliptic_resolvent(gamma: f64, rhs: &Field) -> Result<Field> {
    let grid = rhs.grid().clone();
    let h2 = grid.h() * grid.h();
    let values = solve_neumann_tridiag(grid.n(), gamma + 2.0 / h2, -1.0 / h2, rhs.values())?;
    Field::new(grid, values)
}

/// Solves the elliptic constraint for v given u:
/// (γI − Δ_h) v = β u + f₃(u), Neumann ends.
pub fn solve_elliptic(params: &SystemParams, u: &Field) -> Result<Field> {
    let mut rhs = u.clone();
    for r in rhs.values_mut() {
        *r = params.beta * *r + params.f3.evaluate(*r);
    }
    apply_elliptic_resolvent(params.gamma, &rhs)
}

/// Builds the consistent state at time t = 0 from the parabolic data alone:
/// v is always derived by the elliptic solve, never accepted from outside.
pub fn consistent_state(params: &SystemParams, u0: &Field) -> Result<SimState> {
    if u0.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "initial data".into(),
        });
    }
    let v = solve_elliptic(params, u0)?;
    Ok(SimState {
        t: 0.0,
        u: u0.clone(),
        v,
    })
}

/// Checks a freshly computed parabolic state against the blow-up guard.
pub(crate) fn guard_norm(t: f64, u: &Field) -> Result<f64> {
    let norm = u.l2_norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            context: format!("state norm at t = {t}"),
        });
    }
    if norm > BLOW_UP_GUARD {
        return Err(Error::Divergence { t, norm });
    }
    Ok(norm)
}

/// Advances the coupled system by one IMEX step under boundary flux ω.
///
/// Implicit: backward Euler on u_xx − ρu. Explicit: f₁(u) + αv + f₂(v) with
/// v from the current state, and the Neumann flux ω entering the last row as
/// a 2ω/h ghost-node contribution. The elliptic state is recomputed from the
/// new u, so the returned state is consistent by construction.
pub fn step_parabolic(
    params: &SystemParams,
    state: &SimState,
    boundary_input: f64,
    dt: f64,
) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "the time step must be finite and positive".into(),
        });
    }
    let grid = state.u.grid().clone();
    let n = grid.n();
    let h = grid.h();
    let u = state.u.values();
    let v = state.v.values();
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let explicit =
            params.f1.evaluate(u[i]) + params.alpha * v[i] + params.f2.evaluate(v[i]);
        rhs[i] = u[i] + dt * explicit;
    }
    rhs[n - 1] += dt * 2.0 * boundary_input / h;
    let diag = 1.0 + dt * params.rho + 2.0 * dt / (h * h);
    let off = -dt / (h * h);
    let u_new = Field::new(grid, solve_neumann_tridiag(n, diag, off, &rhs)?)?;
    let t_new = state.t + dt;
    guard_norm(t_new, &u_new)?;
    let v_new = solve_elliptic(params, &u_new)?;
    Ok(SimState {
        t: t_new,
        u: u_new,
        v: v_new,
    })
}

/// Per-step norm records of an observer run, parallel to the plant series.
#[derive(Debug, Clone, Default)]
pub struct ObserverSeries {
    pub norm_u_hat: Vec<f64>,
    pub norm_v_hat: Vec<f64>,
    pub norm_err_u: Vec<f64>,
    pub norm_err_v: Vec<f64>,
    /// Observer states sampled at the same stride as the plant snapshots.
    pub snapshots: Vec<SimState>,
}

/// A completed simulation: per-step norms and boundary inputs, plus full
/// states sampled every `snapshot_every` steps (always including the first
/// and last instants).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub norm_u: Vec<f64>,
    pub norm_v: Vec<f64>,
    pub omega: Vec<f64>,
    pub snapshots: Vec<SimState>,
    pub snapshot_every: usize,
    pub observer: Option<ObserverSeries>,
}

/// Options shared by the trajectory drivers.
#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    /// Store a full state snapshot every this many steps (1 = every step).
    /// The initial and final states are always stored.
    pub snapshot_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { snapshot_every: 0 }
    }
}

impl SimOptions {
    fn keep(&self, step: usize, total: usize) -> bool {
        step == 0
            || step == total
            || (self.snapshot_every > 0 && step % self.snapshot_every == 0)
    }
}

/// Number of steps needed to cover [0, T] with step dt: ⌈T/dt⌉.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    (t_final / dt).ceil() as usize
}

impl Trajectory {
    fn with_capacity(dt: f64, steps: usize) -> Self {
        Trajectory {
            dt,
            times: Vec::with_capacity(steps + 1),
            norm_u: Vec::with_capacity(steps + 1),
            norm_v: Vec::with_capacity(steps + 1),
            omega: Vec::with_capacity(steps + 1),
            snapshots: Vec::new(),
            snapshot_every: 0,
            observer: None,
        }
    }

    fn record(&mut self, state: &SimState, omega: f64, keep_snapshot: bool) {
        self.times.push(state.t);
        self.norm_u.push(state.u.l2_norm());
        self.norm_v.push(state.v.l2_norm());
        self.omega.push(omega);
        if keep_snapshot {
            self.snapshots.push(state.clone());
        }
    }

    /// Writes the trajectory as CSV with the fixed column layout
    /// `t,norm_u,norm_v,omega,norm_u_hat,norm_v_hat,norm_err_u,norm_err_v`;
    /// the observer columns are left empty when no observer ran.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "t,norm_u,norm_v,omega,norm_u_hat,norm_v_hat,norm_err_u,norm_err_v"
        )?;
        for i in 0..self.times.len() {
            match &self.observer {
                Some(obs) => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    self.times[i],
                    self.norm_u[i],
                    self.norm_v[i],
                    self.omega[i],
                    obs.norm_u_hat[i],
                    obs.norm_v_hat[i],
                    obs.norm_err_u[i],
                    obs.norm_err_v[i],
                )?,
                None => writeln!(
                    out,
                    "{},{},{},{},,,,",
                    self.times[i], self.norm_u[i], self.norm_v[i], self.omega[i],
                )?,
            }
        }
        Ok(())
    }
}

/// Runs the coupled system from `u0` (v derived by the elliptic solve) for
/// ⌈T/dt⌉ steps, querying `omega` for the boundary input before each step.
///
/// The recorded boundary-input series holds, at each time t, the value
/// applied on the step departing t; the final entry is the signal evaluated
/// at the final state for reference.
pub fn simulate(
    params: &SystemParams,
    u0: &Field,
    mut omega: impl FnMut(&SimState) -> f64,
    t_final: f64,
    dt: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "the horizon must be finite and positive".into(),
        });
    }
    let steps = step_count(t_final, dt);
    let mut state = consistent_state(params, u0)?;
    let mut traj = Trajectory::with_capacity(dt, steps);
    traj.snapshot_every = opts.snapshot_every;
    for step in 0..steps {
        let w = omega(&state);
        traj.record(&state, w, opts.keep(step, steps));
        state = step_parabolic(params, &state, w, dt)?;
    }
    let w = omega(&state);
    traj.record(&state, w, true);
    Ok(traj)
}

/// The explicit (non-stiff) part of the transformed dynamics at state ũ,
/// together with the elliptic state it implies:
///
/// ```text
/// u   = ũ + ∫₀ˣ ℓ(x,y) ũ(y) dy                  (reconstruction)
/// v   = (γI − Δ)⁻¹ (βu + f₃(u))
/// rhs = α v − α ∫₀ˣ k v + f₁(u) − ∫₀ˣ k f₁(u) + f₂(v) − ∫₀ˣ k f₂(v)
/// ```
///
/// The damping −(c₁+ρ)ũ and the diffusion are handled implicitly by the
/// stepper and are not included here.
pub fn target_explicit_terms(
    params: &SystemParams,
    forward: &Kernel,
    inverse: &Kernel,
    utilde: &Field,
) -> Result<(Field, Field)> {
    let u_rec = inverse.inverse_transform(utilde)?;
    let v = solve_elliptic(params, &u_rec)?;
    let f1_of_u = params.f1.apply_field(&u_rec);
    let f2_of_v = params.f2.apply_field(&v);
    let v_conv = forward.apply(&v)?;
    let f1_conv = forward.apply(&f1_of_u)?;
    let f2_conv = forward.apply(&f2_of_v)?;
    let mut rhs = Field::zeros(utilde.grid().clone());
    let out = rhs.values_mut();
    for i in 0..out.len() {
        out[i] = params.alpha * (v.values()[i] - v_conv.values()[i])
            + (f1_of_u.values()[i] - f1_conv.values()[i])
            + (f2_of_v.values()[i] - f2_conv.values()[i]);
    }
    Ok((rhs, v))
}

/// Advances the transformed system one IMEX step: implicit backward Euler on
/// ũ_xx − (c₁+ρ)ũ with homogeneous Neumann ends, explicit kernel-convolved
/// couplings from [`target_explicit_terms`]. The state's v component is the
/// elliptic state implied by the *new* ũ.
pub fn step_target(
    params: &SystemParams,
    c1: f64,
    forward: &Kernel,
    inverse: &Kernel,
    state: &SimState,
    dt: f64,
) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "the time step must be finite and positive".into(),
        });
    }
    let grid = state.u.grid().clone();
    let n = grid.n();
    let h = grid.h();
    let (explicit, _v_now) = target_explicit_terms(params, forward, inverse, &state.u)?;
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        rhs[i] = state.u.values()[i] + dt * explicit.values()[i];
    }
    let diag = 1.0 + dt * (c1 + params.rho) + 2.0 * dt / (h * h);
    let off = -dt / (h * h);
    let utilde_new = Field::new(grid, solve_neumann_tridiag(n, diag, off, &rhs)?)?;
    let t_new = state.t + dt;
    guard_norm(t_new, &utilde_new)?;
    let u_rec = inverse.inverse_transform(&utilde_new)?;
    let v_new = solve_elliptic(params, &u_rec)?;
    Ok(SimState {
        t: t_new,
        u: utilde_new,
        v: v_new,
    })
}

/// Simulates the transformed system directly from transformed data ũ₀. In
/// the returned trajectory, `norm_u` carries ‖ũ‖ and `norm_v` the norm of
/// the elliptic state driven by the reconstructed u; the boundary-input
/// column is identically zero (the target boundary is homogeneous).
pub fn simulate_target(
    params: &SystemParams,
    c1: f64,
    forward: &Kernel,
    inverse: &Kernel,
    utilde0: &Field,
    t_final: f64,
    dt: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_final,
            reason: "the horizon must be finite and positive".into(),
        });
    }
    if utilde0.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "initial transformed data".into(),
        });
    }
    let steps = step_count(t_final, dt);
    let u_rec = inverse.inverse_transform(utilde0)?;
    let v0 = solve_elliptic(params, &u_rec)?;
    let mut state = SimState {
        t: 0.0,
        u: utilde0.clone(),
        v: v0,
    };
    let mut traj = Trajectory::with_capacity(dt, steps);
    traj.snapshot_every = opts.snapshot_every;
    for step in 0..steps {
        traj.record(&state, 0.0, opts.keep(step, steps));
        state = step_target(params, c1, forward, inverse, &state, dt)?;
    }
    traj.record(&state, 0.0, true);
    Ok(traj)
}
