//! Acceptance gate: eleven numbered criteria covering kernel correctness
//! (AC-1), transform inversion (AC-2), linear and nonlinear closed-loop
//! stabilization (AC-3, AC-4), observer convergence (AC-5), output feedback
//! (AC-6), physical/target trajectory equivalence (AC-7), open-loop
//! contraction (AC-8), the spectral stability oracle (AC-9), kernel norm
//! bounds (AC-10), and conservation sanity (AC-11).
//!
//! Every test computes its measurements first, prints a single
//! `AC-n PASS/FAIL` line carrying them, and only then asserts, so a red
//! criterion still reports exactly what was measured.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pebc::analysis::{
    closed_loop_condition, elliptic_norm_bound_check, find_c1_for_target_k1, fit_decay,
    observer_condition, open_loop_condition, rate_audit, spectral_margin, spectrum, DecayFit,
    TrajectoryKind,
};
use pebc::control::{simulate_error_system, simulate_with_observer, Controller};
use pebc::grid::{composite_trapezoid, l2_norm, Field, Grid};
use pebc::kernel::{build_kernel, kernel_norm_bound, Kernel, KernelConfig};
use pebc::nonlin::Nonlinearity;
use pebc::pde::{simulate, simulate_target, SimOptions, SystemParams, Trajectory};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn build(c1: f64, n: usize) -> Kernel {
    let grid = Grid::new(n).expect("grid");
    build_kernel(&KernelConfig::new(c1).expect("config"), &grid).expect("kernel")
}

fn diff_l2(a: &Field, b: &Field) -> f64 {
    let d: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    l2_norm(&d, a.grid().h())
}

/// A random superposition of the first six cosine modes — smooth, Neumann
/// compatible, and rich enough to exercise the whole transform.
fn random_smooth_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_fn(grid.clone(), |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, a)| a * (m as f64 * PI * x).cos())
            .sum()
    })
}

/// AC-1: the built kernel solves its hyperbolic PDE at second order — the
/// interior residual drops by ≈4× when the grid doubles — with the diagonal
/// pinned exactly and a vanishing derivative along y = 0.
#[test]
fn ac1_kernel_solves_its_pde_at_second_order() {
    let start = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for &c1 in &[0.5, 1.0, 2.0, 4.0] {
        let coarse = build(c1, 201);
        let fine = build(c1, 401);
        let r_coarse = coarse.pde_residual(c1);
        let r_fine = fine.pde_residual(c1);
        let factor = r_coarse / r_fine;
        let factor_ok = (3.0..=5.0).contains(&factor);
        let diag_ok = (0..201).all(|i| {
            coarse.value(i, i) == -0.5 * c1 * coarse.grid().node(i)
        });
        let ky = coarse.ky_at_zero_max();
        let ky_ok = ky <= 1e-3;
        pass &= factor_ok && diag_ok && ky_ok;
        lines.push(format!(
            "c1={c1}: residual {r_coarse:.2e}→{r_fine:.2e} (factor {factor:.2}), \
             diag exact {diag_ok}, |k_y(x,0)| ≤ {ky:.2e}"
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 10.0;
    println!(
        "AC-1 {} — {}; runtime {elapsed:.2}s (< 10s)",
        verdict(pass),
        lines.join("; ")
    );
    assert!(pass, "kernel second-order convergence criterion failed");
}

/// AC-2: both compositions of the forward and inverse transforms return the
/// input to within 5e−4 relative, over twenty random smooth fields per gain.
#[test]
fn ac2_transform_round_trips_on_random_smooth_fields() {
    let start = Instant::now();
    let grid = Grid::new(201).expect("grid");
    let mut rng = ChaCha8Rng::seed_from_u64(0xac2);
    let mut worst = 0.0_f64;
    for &c1 in &[1.0, 2.0] {
        let kernel = build(c1, 201);
        let ell = kernel.invert().expect("inverse");
        for _ in 0..20 {
            let f = random_smooth_field(&grid, &mut rng);
            let norm = f.l2_norm().max(1e-12);
            let there_back = ell
                .inverse_transform(&kernel.forward_transform(&f).unwrap())
                .unwrap();
            let back_there = kernel
                .forward_transform(&ell.inverse_transform(&f).unwrap())
                .unwrap();
            worst = worst
                .max(diff_l2(&there_back, &f) / norm)
                .max(diff_l2(&back_there, &f) / norm);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 5e-4 && elapsed < 5.0;
    println!(
        "AC-2 {} — worst relative round-trip defect {worst:.2e} (≤ 5e−4) \
         over 2×20 random fields; runtime {elapsed:.2}s (< 5s)",
        verdict(pass)
    );
    assert!(pass, "transform round-trip criterion failed");
}

/// AC-3: with ρ = −0.5 and no coupling the open loop grows (λ₀ = 0.5), the
/// design margin at c₁ = 2 is K₁ = 1.5, and the closed loop contracts at
/// ≥ 1.4 per unit time while the uncontrolled run keeps growing.
#[test]
fn ac3_linear_feedback_stabilizes_an_unstable_plant() {
    let start = Instant::now();
    let params = SystemParams::linear(-0.5, 0.0, 0.0, 2.0).expect("params");
    let lambda0 = spectrum(&params, 0)[0];
    let margin = spectral_margin(&params);
    let (k1, k1_pass) = closed_loop_condition(&params, 2.0).expect("margin");

    let grid = Grid::new(201).expect("grid");
    let kernel = build(2.0, 201);
    let controller = Controller::state_feedback(kernel);
    let u0 = Field::from_fn(grid.clone(), |_| 1.0);
    let opts = SimOptions::default();
    let closed = simulate(
        &params,
        &u0,
        |s| controller.signal(s.u()).unwrap(),
        5.0,
        1e-4,
        &opts,
    )
    .expect("closed-loop run");
    let closed_fit = fit_decay(&closed.times, &closed.norm_u, Some((2.5, 5.0))).expect("fit");

    let open = simulate(&params, &u0, |_| 0.0, 5.0, 1e-4, &opts).expect("open-loop run");
    let open_fit = fit_decay(&open.times, &open.norm_u, Some((2.5, 5.0))).expect("fit");

    let elapsed = start.elapsed().as_secs_f64();
    let pass = (lambda0 - 0.5).abs() < 1e-15
        && margin > 0.0
        && (k1 - 1.5).abs() < 1e-12
        && k1_pass
        && closed_fit.rate >= 1.4
        && closed_fit.r_squared >= 0.999
        && open_fit.rate <= -0.45
        && elapsed < 60.0;
    println!(
        "AC-3 {} — λ₀ = {lambda0}, K₁ = {k1}, closed-loop rate {:.4} \
         (≥ 1.4, r² = {:.6}), open-loop rate {:.4} (≤ −0.45); runtime {elapsed:.1}s (< 60s)",
        verdict(pass),
        closed_fit.rate,
        closed_fit.r_squared,
        open_fit.rate
    );
    assert!(pass, "linear closed-loop stabilization criterion failed");
}

/// The nonlinear closed-loop run shared by AC-4 and AC-10: the gain found by
/// root search, a five-second feedback simulation with periodic snapshots,
/// and the fitted decay of ‖u‖.
struct NonlinearClosedLoop {
    params: SystemParams,
    c1: f64,
    k1: f64,
    traj: Trajectory,
    fit: DecayFit,
    build_seconds: f64,
}

fn nonlinear_closed_loop() -> &'static NonlinearClosedLoop {
    static RUN: OnceLock<NonlinearClosedLoop> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let params = SystemParams::new(
            -0.2,
            0.3,
            0.3,
            2.0,
            Nonlinearity::scaled_tanh(0.05),
            Nonlinearity::scaled_sin(0.05),
            Nonlinearity::scaled_tanh(0.05),
        )
        .expect("params");
        let c1 = find_c1_for_target_k1(&params, 0.5, 10.0)
            .expect("search")
            .expect("a feasible gain exists below the search cap");
        let (k1, _) = closed_loop_condition(&params, c1).expect("margin");
        let kernel = build(c1, 201);
        let grid = kernel.grid().clone();
        let controller = Controller::state_feedback(kernel);
        let u0 = Field::from_fn(grid, |_| 1.0);
        let opts = SimOptions { snapshot_every: 500 };
        let traj = simulate(
            &params,
            &u0,
            |s| controller.signal(s.u()).unwrap(),
            5.0,
            1e-4,
            &opts,
        )
        .expect("closed-loop run");
        let fit = fit_decay(&traj.times, &traj.norm_u, None).expect("fit");
        NonlinearClosedLoop {
            params,
            c1,
            k1,
            traj,
            fit,
            build_seconds: start.elapsed().as_secs_f64(),
        }
    })
}

/// AC-4: for the coupled nonlinear plant a root search finds the smallest
/// gain with margin K₁ ≥ 0.5, and the resulting closed loop contracts at
/// ≥ 0.45 per unit time.
#[test]
fn ac4_root_searched_gain_stabilizes_the_nonlinear_plant() {
    let start = Instant::now();
    let run = nonlinear_closed_loop();
    let elapsed = start.elapsed().as_secs_f64().max(run.build_seconds);
    let pass = run.k1 >= 0.5 - 1e-9 && run.fit.rate >= 0.45 && elapsed < 90.0;
    println!(
        "AC-4 {} — root search found c₁ = {:.4} with K₁ = {:.4} (≥ 0.5); \
         fitted closed-loop rate {:.4} (≥ 0.45, r² = {:.6}); runtime {elapsed:.1}s (< 90s)",
        verdict(pass),
        run.c1,
        run.k1,
        run.fit.rate,
        run.fit.r_squared
    );
    assert!(pass, "nonlinear closed-loop stabilization criterion failed");
}

/// AC-5: the boundary observer's estimation error decays at least as fast as
/// the certified rate (minus the 5% audit allowance) with a clean
/// exponential tail.
#[test]
fn ac5_observer_error_decays_at_certified_rate() {
    let start = Instant::now();
    let params = SystemParams::linear(-0.5, 0.0, 0.0, 2.0).expect("params");
    let c1 = 2.0;
    let kernel = build(c1, 201);
    let grid = kernel.grid().clone();
    let (k3, k4, eta, _) = observer_condition(&params, c1).expect("condition");

    let controller = Controller::state_feedback(kernel.clone());
    let u0 = Field::from_fn(grid.clone(), |x| (PI * x).cos());
    let u_hat0 = Field::zeros(grid);
    let traj = simulate_with_observer(
        &params,
        &kernel,
        &controller,
        &u0,
        &u_hat0,
        5.0,
        1e-4,
        0.0,
        5,
        &SimOptions::default(),
    )
    .expect("joint run");
    let observer = traj.observer.as_ref().expect("observer series");
    let fit = fit_decay(&traj.times, &observer.norm_err_u, None).expect("fit");

    let elapsed = start.elapsed().as_secs_f64();
    let pass = rate_audit(fit.rate, k3) && fit.r_squared >= 0.99 && elapsed < 60.0;
    println!(
        "AC-5 {} — certified error rate K₃ = {k3:.4} (K₄ = {k4:.4}, η = {eta:.4}), \
         fitted ‖u − û‖ rate {:.4} (r² = {:.4} ≥ 0.99); runtime {elapsed:.1}s (< 60s)",
        verdict(pass),
        fit.rate,
        fit.r_squared
    );
    assert!(pass, "observer convergence criterion failed");
}

/// AC-6: output feedback from a zero-initialized observer must contract the
/// joint state+error norm exponentially AND reach 1e−4 of its initial value
/// by T = 5.
///
/// The second clause is unattainable at this horizon: the error subsystem's
/// slowest boundary-injected mode decays at ≈ 0.24 per unit time (its flux
/// gain is σ₂ = c₁/2 = 1, and the associated Robin spectrum gives
/// q₀² + ρ ≈ 0.8603² − 0.5), so a 1e−4 contraction needs T ≈ ln(1e4)/0.24 ≈
/// 38, not 5. The exponential-tail clause passes; the level clause is
/// reported as measured and left to fail rather than loosened here.
#[test]
fn ac6_output_feedback_joint_norm_reaches_certified_level() {
    let start = Instant::now();
    let params = SystemParams::linear(-0.5, 0.0, 0.0, 2.0).expect("params");
    let kernel = build(2.0, 201);
    let grid = kernel.grid().clone();
    let controller = Controller::output_feedback(kernel.clone());
    let u0 = Field::from_fn(grid.clone(), |_| 1.0);
    let u_hat0 = Field::zeros(grid);
    let traj = simulate_with_observer(
        &params,
        &kernel,
        &controller,
        &u0,
        &u_hat0,
        5.0,
        1e-4,
        0.0,
        6,
        &SimOptions::default(),
    )
    .expect("output-feedback run");
    let observer = traj.observer.as_ref().expect("observer series");
    let joint: Vec<f64> = traj
        .norm_u
        .iter()
        .zip(&observer.norm_err_u)
        .map(|(s, e)| (s * s + e * e).sqrt())
        .collect();
    let fit = fit_decay(&traj.times, &joint, None).expect("fit");
    let initial = joint[0];
    let final_ratio = joint.last().unwrap() / initial;

    let r2_ok = fit.r_squared >= 0.99;
    let level_ok = final_ratio <= 1e-4;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = r2_ok && level_ok;
    println!(
        "AC-6 {} — joint norm rate {:.4} with r² = {:.4} (≥ 0.99: {}), \
         final/initial = {final_ratio:.3e} (≤ 1e−4: {}); runtime {elapsed:.1}s",
        verdict(pass),
        fit.rate,
        fit.r_squared,
        verdict(r2_ok),
        verdict(level_ok)
    );
    assert!(
        pass,
        "output-feedback contraction criterion failed: final/initial = {final_ratio:.3e} \
         against the required 1e-4; at the error subsystem's certified decay (≈0.24/unit \
         time from the σ₂ = 1 boundary injection) that level needs a horizon near T = 38, \
         not T = 5"
    );
}

/// The relative sup-over-time defect between the forward-transformed
/// closed-loop run and the directly simulated transformed system, sampled on
/// the shared snapshot schedule.
fn equivalence_defect(params: &SystemParams, c1: f64, n: usize, dt: f64, stride: usize) -> f64 {
    let grid = Grid::new(n).expect("grid");
    let kernel = build_kernel(&KernelConfig::new(c1).expect("config"), &grid).expect("kernel");
    let inverse = kernel.invert().expect("inverse");
    let controller = Controller::state_feedback(kernel.clone());
    let u0 = Field::from_fn(grid.clone(), |_| 1.0);
    let opts = SimOptions {
        snapshot_every: stride,
    };
    let physical = simulate(
        params,
        &u0,
        |s| controller.signal(s.u()).unwrap(),
        1.0,
        dt,
        &opts,
    )
    .expect("physical run");
    let utilde0 = kernel.forward_transform(&u0).expect("transform");
    let target = simulate_target(params, c1, &kernel, &inverse, &utilde0, 1.0, dt, &opts)
        .expect("target run");

    assert_eq!(physical.snapshots.len(), target.snapshots.len());
    let mut sup_diff = 0.0_f64;
    let mut sup_ref = 0.0_f64;
    for (ps, ts) in physical.snapshots.iter().zip(&target.snapshots) {
        assert!((ps.t() - ts.t()).abs() < 1e-9, "snapshot times diverged");
        let mapped = kernel.forward_transform(ps.u()).expect("transform");
        sup_diff = sup_diff.max(diff_l2(&mapped, ts.u()));
        sup_ref = sup_ref.max(ts.u().l2_norm());
    }
    sup_diff / sup_ref
}

/// AC-7: the forward-transformed physical trajectory and the directly
/// simulated transformed trajectory agree to 1e−2 relative (sup over time),
/// improving to 2.5e−3 when both grid and step are refined 4× in effective
/// resolution.
#[test]
fn ac7_transform_equivalence_between_physical_and_target_runs() {
    let start = Instant::now();
    let params = SystemParams::new(
        -0.2,
        0.3,
        0.3,
        2.0,
        Nonlinearity::scaled_tanh(0.05),
        Nonlinearity::scaled_sin(0.05),
        Nonlinearity::scaled_tanh(0.05),
    )
    .expect("params");
    let c1 = 1.5;
    let coarse = equivalence_defect(&params, c1, 201, 1e-4, 10);
    let fine = equivalence_defect(&params, c1, 401, 2.5e-5, 40);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = coarse <= 1e-2 && fine <= 2.5e-3;
    println!(
        "AC-7 {} — relative sup-over-time defect {coarse:.3e} at n=201, dt=1e−4 (≤ 1e−2); \
         {fine:.3e} at n=401, dt=2.5e−5 (≤ 2.5e−3); runtime {elapsed:.1}s",
        verdict(pass)
    );
    assert!(pass, "physical/target equivalence criterion failed");
}

/// AC-8: the uncontrolled coupled nonlinear plant with a strong decay
/// coefficient contracts at least as fast as the proof-form rate
/// ρ − αβ/γ − M_lip, within the 5% audit allowance.
#[test]
fn ac8_open_loop_contracts_at_proof_rate() {
    let start = Instant::now();
    let params = SystemParams::new(
        2.0,
        0.5,
        0.5,
        2.0,
        Nonlinearity::scaled_tanh(0.1),
        Nonlinearity::scaled_tanh(0.1),
        Nonlinearity::scaled_tanh(0.1),
    )
    .expect("params");
    let (proof_rate, condition_pass) = open_loop_condition(&params);

    let grid = Grid::new(201).expect("grid");
    let u0 = Field::from_fn(grid, |_| 1.0);
    let traj = simulate(&params, &u0, |_| 0.0, 5.0, 1e-4, &SimOptions::default())
        .expect("open-loop run");
    let fit = fit_decay(&traj.times, &traj.norm_u, None).expect("fit");

    let threshold = proof_rate * 0.95;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = condition_pass && fit.rate >= threshold;
    println!(
        "AC-8 {} — proof-form rate {proof_rate:.4} (condition pass {condition_pass}), \
         fitted rate {:.4} (≥ {threshold:.4}); runtime {elapsed:.1}s",
        verdict(pass),
        fit.rate
    );
    assert!(pass, "open-loop contraction criterion failed");
}

/// AC-9: over 1000 random parameter draws the sign of the computed spectral
/// maximum agrees with the closed-form inequality ρ > αβ/γ, with zero
/// disagreements, in under a second.
#[test]
fn ac9_spectral_oracle_matches_closed_form_on_random_parameters() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xac9);
    let mut disagreements = 0_usize;
    for _ in 0..1000 {
        let rho = rng.gen_range(-3.0..3.0);
        let alpha = rng.gen_range(-3.0..3.0);
        let beta = rng.gen_range(-3.0..3.0);
        let gamma = rng.gen_range(1e-3..=10.0);
        let params = SystemParams::linear(rho, alpha, beta, gamma).expect("params");
        let stable_by_spectrum = spectral_margin(&params) < 0.0;
        let stable_by_closed_form = rho > alpha * beta / gamma;
        if stable_by_spectrum != stable_by_closed_form {
            disagreements += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = disagreements == 0 && elapsed < 1.0;
    println!(
        "AC-9 {} — 1000 random draws, {disagreements} disagreements; \
         runtime {elapsed:.3}s (< 1s)",
        verdict(pass)
    );
    assert!(pass, "spectral oracle criterion failed");
}

/// AC-10: the discrete L² norms of both built kernels respect the closed-form
/// bound N(c₁) across the gain range, and along the nonlinear closed-loop
/// trajectory the elliptic state respects its transformed-state bound.
#[test]
fn ac10_kernel_and_elliptic_norm_bounds_hold() {
    let start = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for &c1 in &[0.5, 1.0, 2.0, 4.0] {
        let kernel = build(c1, 201);
        let ell = kernel.invert().expect("inverse");
        let bound = kernel_norm_bound(c1).expect("bound");
        let nk = kernel.l2_norm();
        let nl = ell.l2_norm();
        let ok = nk <= bound + 1e-3 && nl <= bound + 1e-3;
        pass &= ok;
        lines.push(format!(
            "c1={c1}: ‖k‖={nk:.4}, ‖ℓ‖={nl:.4} ≤ N+1e−3={:.4}",
            bound + 1e-3
        ));
    }
    let run = nonlinear_closed_loop();
    let elliptic_ok = elliptic_norm_bound_check(
        &run.params,
        run.c1,
        &run.traj,
        TrajectoryKind::Physical,
    )
    .expect("bound check");
    pass &= elliptic_ok;
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "AC-10 {} — {}; elliptic bound along the nonlinear closed-loop \
         trajectory: {}; runtime {elapsed:.1}s",
        verdict(pass),
        lines.join("; "),
        verdict(elliptic_ok)
    );
    assert!(pass, "norm bound criterion failed");
}

/// AC-11: an insulated pure-diffusion run conserves its mean to 1e−10
/// relative per unit time, and identically zero data stays exactly zero in
/// every simulation mode.
#[test]
fn ac11_mass_conservation_and_zero_equilibrium() {
    let start = Instant::now();

    // Conservation: no reaction, no coupling, no flux.
    let heat = SystemParams::linear(0.0, 0.0, 0.0, 1.0).expect("params");
    let grid = Grid::new(201).expect("grid");
    let u0 = Field::from_fn(grid.clone(), |x| 1.0 + 0.3 * (2.0 * PI * x).cos());
    let opts = SimOptions { snapshot_every: 1 };
    let traj = simulate(&heat, &u0, |_| 0.0, 2.0, 1e-3, &opts).expect("heat run");
    let h = grid.h();
    let mass0 = composite_trapezoid(traj.snapshots[0].u().values(), h);
    let mut worst_drift_per_time = 0.0_f64;
    for state in &traj.snapshots[1..] {
        let drift = (composite_trapezoid(state.u().values(), h) - mass0).abs() / mass0.abs();
        worst_drift_per_time = worst_drift_per_time.max(drift / state.t().max(1.0));
    }
    let conservation_ok = worst_drift_per_time <= 1e-10;

    // Zero data stays zero, in every mode.
    let params = SystemParams::new(
        0.3,
        0.2,
        0.2,
        2.0,
        Nonlinearity::scaled_tanh(0.1),
        Nonlinearity::scaled_sin(0.1),
        Nonlinearity::scaled_tanh(0.1),
    )
    .expect("params");
    let zgrid = Grid::new(101).expect("grid");
    let zero = Field::zeros(zgrid.clone());
    let kernel = build_kernel(&KernelConfig::new(1.0).expect("config"), &zgrid).expect("kernel");
    let inverse = kernel.invert().expect("inverse");
    let dense = SimOptions { snapshot_every: 1 };

    let max_norm = |t: &Trajectory| -> f64 {
        let state = t.norm_u.iter().copied().fold(0.0, f64::max);
        let err = t
            .observer
            .as_ref()
            .map(|o| o.norm_err_u.iter().copied().fold(0.0, f64::max))
            .unwrap_or(0.0);
        state.max(err)
    };

    let open = simulate(&params, &zero, |_| 0.0, 0.3, 1e-3, &dense).expect("open");
    let sf_controller = Controller::state_feedback(kernel.clone());
    let state_fb = simulate(
        &params,
        &zero,
        |s| sf_controller.signal(s.u()).unwrap(),
        0.3,
        1e-3,
        &dense,
    )
    .expect("state feedback");
    let target = simulate_target(&params, 1.0, &kernel, &inverse, &zero, 0.3, 1e-3, &dense)
        .expect("target");
    let observed = simulate_with_observer(
        &params,
        &kernel,
        &sf_controller,
        &zero,
        &zero,
        0.3,
        1e-3,
        0.0,
        11,
        &dense,
    )
    .expect("observer");
    let of_controller = Controller::output_feedback(kernel.clone());
    let output_fb = simulate_with_observer(
        &params,
        &kernel,
        &of_controller,
        &zero,
        &zero,
        0.3,
        1e-3,
        0.0,
        11,
        &dense,
    )
    .expect("output feedback");
    let error_run =
        simulate_error_system(&params, &kernel, &open, &zero, 1e-3, &dense).expect("error");

    let zero_worst = [
        max_norm(&open),
        max_norm(&state_fb),
        max_norm(&target),
        max_norm(&observed),
        max_norm(&output_fb),
        max_norm(&error_run),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let zero_ok = zero_worst == 0.0;

    let elapsed = start.elapsed().as_secs_f64();
    let pass = conservation_ok && zero_ok;
    println!(
        "AC-11 {} — worst mass drift {worst_drift_per_time:.2e} relative per unit time \
         (≤ 1e−10); zero data stays exactly zero in all six modes (worst norm \
         {zero_worst:e}); runtime {elapsed:.1}s",
        verdict(pass)
    );
    assert!(pass, "conservation / zero-equilibrium criterion failed");
}
