//! Stability constants, operator spectrum, and empirical decay-rate fits.
//!
//! Every closed-form constant that certifies a decay rate is evaluated here:
//!
//! * the open-loop margin M = ρ − αβ/γ − M_lip, with the Lipschitz aggregate
//!   M_lip = M₁ + M₃|α| + M₂|β| + M₂M₃;
//! * the feedback gain margin K₁ = c₁ + ρ − (M₁ + (M₂+|α|)(|β|+M₃))(1+N)²,
//!   where N = N(c₁) is the closed-form kernel norm bound;
//! * the observer margins K₄ = ((M₂+|α|)(|β|+M₃) + (η²+1)/2 + M₁)(1+N)² and
//!   K₃ = c₁ + ρ − K₄, with η(c₁) an erf-based boundary-trace constant;
//! * the well-posedness chain L₁, L₂, L₃ bounding the Lipschitz constant of
//!   the transformed right-hand side.
//!
//! The open-loop operator spectrum λₙ = −ρ + αβ/(γ + (nπ)²) − (nπ)² is
//! computed directly; its maximum is provably attained among finitely many
//! modes, and the truncation is certified by an analytic tail bound.
//!
//! Decay rates claimed by the gain conditions are exponential envelopes; the
//! empirical counterpart is a least-squares line on (t, log‖·‖) over a
//! window, by default the second half of the run to skip transients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::kernel::{build_kernel, kernel_norm_bound, Kernel, KernelConfig};
use crate::pde::{target_explicit_terms, SystemParams, Trajectory};
use crate::special::erf;

/// All certified constants for one (params, c₁) pair, with pass flags for
/// each stability condition.
#[derive(Debug, Clone)]
pub struct GainReport {
    pub c1: f64,
    /// Open-loop margin ρ − αβ/γ − M_lip; positive means certified decay.
    pub m: f64,
    /// Closed-form kernel norm bound N(c₁).
    pub n_c1: f64,
    /// Boundary-trace constant η(c₁) from the observer energy estimate.
    pub eta: f64,
    /// State-feedback margin; positive certifies closed-loop decay at rate K₁.
    pub k1: f64,
    /// Observer margin; positive certifies estimation-error decay at rate K₃.
    pub k3: f64,
    /// The observer's aggregate coupling constant, K₃ = c₁ + ρ − K₄.
    pub k4: f64,
    /// Elliptic-to-parabolic error coupling bound.
    pub l1: f64,
    /// Nonlinearity chain bound.
    pub l2: f64,
    /// Lipschitz bound for the transformed right-hand side.
    pub l3: f64,
    /// max_n λₙ of the open-loop operator; negative means spectrally stable.
    pub spectral_margin: f64,
    pub open_loop_pass: bool,
    pub closed_loop_pass: bool,
    pub observer_pass: bool,
    /// Output feedback is certified when both the feedback and observer
    /// margins are positive (no sharper joint constant is available).
    pub output_feedback_pass: bool,
}

impl GainReport {
    /// Flat `key=value` lines, one constant per line.
    pub fn to_key_values(&self) -> String {
        format!(
            "c1={}\nm={}\nn_c1={}\neta={}\nk1={}\nk3={}\nk4={}\nl1={}\nl2={}\nl3={}\n\
             spectral_margin={}\nopen_loop_pass={}\nclosed_loop_pass={}\nobserver_pass={}\n\
             output_feedback_pass={}\n",
            self.c1,
            self.m,
            self.n_c1,
            self.eta,
            self.k1,
            self.k3,
            self.k4,
            self.l1,
            self.l2,
            self.l3,
            self.spectral_margin,
            self.open_loop_pass,
            self.closed_loop_pass,
            self.observer_pass,
            self.output_feedback_pass,
        )
    }

    /// Header for the CSV row form, matching [`GainReport::to_csv_row`].
    pub fn csv_header() -> &'static str {
        "c1,m,n_c1,eta,k1,k3,k4,l1,l2,l3,spectral_margin,open_loop_pass,closed_loop_pass,\
         observer_pass,output_feedback_pass"
    }

    /// One CSV row in the [`GainReport::csv_header`] column order.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.c1,
            self.m,
            self.n_c1,
            self.eta,
            self.k1,
            self.k3,
            self.k4,
            self.l1,
            self.l2,
            self.l3,
            self.spectral_margin,
            self.open_loop_pass,
            self.closed_loop_pass,
            self.observer_pass,
            self.output_feedback_pass,
        )
    }
}

/// A least-squares exponential fit of a norm series: rate is the negated
/// slope of the log-linear fit, so positive rate means decay.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Eigenvalues λₙ = −ρ + αβ/(γ + (nπ)²) − (nπ)² for n = 0..=n_max.
pub fn spectrum(params: &SystemParams, n_max: usize) -> Vec<f64> {
    let coupling = params.alpha() * params.beta();
    (0..=n_max)
        .map(|n| {
            let npi = n as f64 * std::f64::consts::PI;
            let np2 = npi * npi;
            -params.rho() + coupling / (params.gamma() + np2) - np2
        })
        .collect()
}

/// Default truncation for the spectral margin.
pub const SPECTRUM_N_MAX: usize = 64;

/// sup_n λₙ, computed over finitely many modes with a certified tail bound:
/// for (nπ)² ≥ 2|γ|, λₙ ≤ |ρ| + 2|αβ|/(nπ)² − (nπ)², which is decreasing in
/// n, so the truncation is extended until the bound at the first omitted
/// mode cannot exceed the maximum already found.
pub fn spectral_margin(params: &SystemParams) -> f64 {
    let coupling = (params.alpha() * params.beta()).abs();
    let mut n_max = SPECTRUM_N_MAX;
    loop {
        let margin = spectrum(params, n_max)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let npi = (n_max + 1) as f64 * std::f64::consts::PI;
        let np2 = npi * npi;
        let tail_bound = params.rho().abs() + 2.0 * coupling / np2 - np2;
        if np2 >= 2.0 * params.gamma().abs() && tail_bound <= margin {
            return margin;
        }
        n_max *= 2;
    }
}

/// Open-loop stability: M = ρ − αβ/γ − (M₁ + M₃|α| + M₂|β| + M₂M₃).
///
/// The pass flag requires both M > 0 and a spectrally stable linear part
/// (max λₙ < 0): the nonlinear margin alone is meaningless when the
/// underlying linear semigroup already grows.
pub fn open_loop_condition(params: &SystemParams) -> (f64, bool) {
    let (m1, m2, m3) = params.lipschitz_constants();
    let m_lip = m1 + m3 * params.alpha().abs() + m2 * params.beta().abs() + m2 * m3;
    let m = params.rho() - params.alpha() * params.beta() / params.gamma() - m_lip;
    let pass = m > 0.0 && spectral_margin(params) < 0.0;
    (m, pass)
}

/// State-feedback stability: K₁ = c₁ + ρ − (M₁ + (M₂+|α|)(|β|+M₃))(1+N)².
///
/// Two algebraically identical groupings of the constant are evaluated and
/// cross-checked to round-off as a transcription guard.
pub fn closed_loop_condition(params: &SystemParams, c1: f64) -> Result<(f64, bool)> {
    let n = kernel_norm_bound(c1)?;
    let (m1, m2, m3) = params.lipschitz_constants();
    let amp = (1.0 + n) * (1.0 + n);
    let printed = c1 + params.rho() - (m1 + (m2 + params.alpha().abs()) * (params.beta().abs() + m3)) * amp;
    let l5 = m1 + m2 * (params.beta().abs() + m3);
    let regrouped =
        c1 + params.rho() - (l5 + params.alpha().abs() * (params.beta().abs() + m3)) * amp;
    assert!(
        (printed - regrouped).abs() <= 1e-12 * printed.abs().max(1.0),
        "the two groupings of the feedback margin must agree to round-off"
    );
    Ok((printed, printed > 0.0))
}

/// The erf-based boundary-trace constant
/// η(c₁) = (c₁/2)(1 + c₁/2) e^{c₁/4} (√(π/(2c₁)) · erf(√(c₁/2)))^{1/2},
/// with η → 0 as c₁ → 0⁺.
pub fn observer_eta(c1: f64) -> Result<f64> {
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c1",
            value: c1,
            reason: "the design gain must be finite and positive".into(),
        });
    }
    let half = 0.5 * c1;
    let trace = ((std::f64::consts::PI / (2.0 * c1)).sqrt() * erf(half.sqrt())).sqrt();
    Ok(half * (1.0 + half) * (0.25 * c1).exp() * trace)
}

/// Observer stability: K₄ = ((M₂+|α|)(|β|+M₃) + (η²+1)/2 + M₁)(1+N)² and
/// K₃ = c₁ + ρ − K₄; the estimation error is certified to decay at rate K₃
/// when K₃ > 0. Returns (K₃, K₄, η, pass).
pub fn observer_condition(params: &SystemParams, c1: f64) -> Result<(f64, f64, f64, bool)> {
    let n = kernel_norm_bound(c1)?;
    let eta = observer_eta(c1)?;
    let (m1, m2, m3) = params.lipschitz_constants();
    let amp = (1.0 + n) * (1.0 + n);
    let k4 = ((m2 + params.alpha().abs()) * (params.beta().abs() + m3)
        + 0.5 * (eta * eta + 1.0)
        + m1)
        * amp;
    let k3 = c1 + params.rho() - k4;
    Ok((k3, k4, eta, k3 > 0.0))
}

/// The Lipschitz chain certifying well-posedness of the transformed system:
/// L₁ = (|β|+M₃)√(2(1+N²)), L₂ = M₂L₁ + M₁√(2(1+N²)),
/// L₃ = (1+N)(L₁|α| + L₂) + |c₁+ρ|.
pub fn wellposedness_constants(params: &SystemParams, c1: f64) -> Result<(f64, f64, f64)> {
    let n = kernel_norm_bound(c1)?;
    let (m1, m2, m3) = params.lipschitz_constants();
    let s = (2.0 * (1.0 + n * n)).sqrt();
    let l1 = (params.beta().abs() + m3) * s;
    let l2 = m2 * l1 + m1 * s;
    let l3 = (1.0 + n) * (l1 * params.alpha().abs() + l2) + (c1 + params.rho()).abs();
    Ok((l1, l2, l3))
}

/// Assembles every certified constant and pass flag for one design point.
pub fn gain_report(params: &SystemParams, c1: f64) -> Result<GainReport> {
    let (m, open_loop_pass) = open_loop_condition(params);
    let (k1, closed_loop_pass) = closed_loop_condition(params, c1)?;
    let (k3, k4, eta, observer_pass) = observer_condition(params, c1)?;
    let (l1, l2, l3) = wellposedness_constants(params, c1)?;
    Ok(GainReport {
        c1,
        m,
        n_c1: kernel_norm_bound(c1)?,
        eta,
        k1,
        k3,
        k4,
        l1,
        l2,
        l3,
        spectral_margin: spectral_margin(params),
        open_loop_pass,
        closed_loop_pass,
        observer_pass,
        output_feedback_pass: closed_loop_pass && observer_pass,
    })
}

/// Least-squares exponential fit of `norms` against `times` over `window`
/// (defaults to the second half of the samples). Requires at least 10
/// in-window samples, all strictly above 1e−14.
pub fn fit_decay(
    times: &[f64],
    norms: &[f64],
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::InvalidParameter {
            name: "norms",
            value: norms.len() as f64,
            reason: format!("series lengths differ: {} times vs {} norms", times.len(), norms.len()),
        });
    }
    if times.is_empty() {
        return Err(Error::TooFewSamples { have: 0, need: 10 });
    }
    let (lo, hi) = window.unwrap_or_else(|| {
        let first = times[0];
        let last = times[times.len() - 1];
        (0.5 * (first + last), last)
    });
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &norm) in times.iter().zip(norms) {
        if t < lo || t > hi {
            continue;
        }
        if !norm.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite {
                context: format!("norm series at t = {t}"),
            });
        }
        if norm <= 1e-14 {
            return Err(Error::DegenerateFit {
                reason: format!("norm {norm:e} at t = {t} is at or below the 1e-14 floor"),
            });
        }
        ts.push(t);
        ys.push(norm.ln());
    }
    if ts.len() < 10 {
        return Err(Error::TooFewSamples {
            have: ts.len(),
            need: 10,
        });
    }
    let count = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let mut stt = 0.0;
    let mut sty = 0.0;
    let mut syy = 0.0;
    for (&t, &y) in ts.iter().zip(&ys) {
        let dt = t - t_mean;
        let dy = y - y_mean;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(Error::DegenerateFit {
            reason: "all in-window samples share one time value".into(),
        });
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let r_squared = if syy <= 1e-30 {
        // A perfectly flat series is fitted exactly by its constant.
        1.0
    } else {
        let ss_res = syy - slope * sty;
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        r_squared,
        window: (lo, hi),
    })
}

/// The audit rule applied to every certified rate: a fitted empirical rate
/// confirms a guaranteed rate when it is no more than 5% (plus a small
/// absolute allowance for discretization) below it.
pub fn rate_audit(fitted: f64, guaranteed: f64) -> bool {
    fitted >= guaranteed - 0.05 * guaranteed.abs() - 0.05
}

/// Whether a trajectory's u-slot holds the physical state (to be forward
/// transformed before applying transformed-state bounds) or the transformed
/// state itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Physical,
    Target,
}

/// Verifies ‖v(·,t)‖ ≤ (|β| + M₃)(1 + N(c₁))·‖ũ(·,t)‖ + 1e−6 at every
/// stored snapshot. For a physical trajectory the transformed state is
/// obtained by forward-transforming each snapshot with a kernel built at c₁.
pub fn elliptic_norm_bound_check(
    params: &SystemParams,
    c1: f64,
    traj: &Trajectory,
    kind: TrajectoryKind,
) -> Result<bool> {
    let n = kernel_norm_bound(c1)?;
    let (_, _, m3) = params.lipschitz_constants();
    let factor = (params.beta().abs() + m3) * (1.0 + n);
    let kernel = match (kind, traj.snapshots.first()) {
        (TrajectoryKind::Physical, Some(state)) => {
            Some(build_kernel(&KernelConfig::new(c1)?, state.u().grid())?)
        }
        _ => None,
    };
    for state in &traj.snapshots {
        let utilde_norm = match &kernel {
            Some(k) => k.forward_transform(state.u())?.l2_norm(),
            None => state.u().l2_norm(),
        };
        if state.v().l2_norm() > factor * utilde_norm + 1e-6 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest c₁ ∈ (0, c1_max] whose feedback margin reaches `target_k1`,
/// found by a coarse scan (step 0.05) refined by bisection; `None` when no
/// scanned gain reaches the target.
pub fn find_c1_for_target_k1(
    params: &SystemParams,
    target_k1: f64,
    c1_max: f64,
) -> Result<Option<f64>> {
    if !target_k1.is_finite() || !(c1_max > 0.0) || !c1_max.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c1_max",
            value: c1_max,
            reason: "the search bound must be finite and positive".into(),
        });
    }
    let k1_at = |c: f64| closed_loop_condition(params, c).map(|(k1, _)| k1);
    let steps = (c1_max / 0.05).floor() as usize;
    let mut bracket = None;
    for i in 1..=steps.max(1) {
        let c = (i as f64) * 0.05;
        if c > c1_max {
            break;
        }
        if k1_at(c)? >= target_k1 {
            bracket = Some(((i as f64 - 1.0) * 0.05, c));
            break;
        }
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            // The scan may have skipped c1_max itself.
            if k1_at(c1_max)? >= target_k1 {
                (c1_max - 0.05, c1_max)
            } else {
                return Ok(None);
            }
        }
    };
    if lo <= 0.0 {
        lo = 1e-4;
        if k1_at(lo)? >= target_k1 {
            return Ok(Some(lo));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if k1_at(mid)? >= target_k1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Measures the worst Lipschitz ratio ‖Λ(ũ₁) − Λ(ũ₂)‖ / ‖ũ₁ − ũ₂‖ of the
/// full discrete transformed right-hand side Λ(ũ) = −(c₁+ρ)ũ + (explicit
/// terms) over `samples` random smooth field pairs; the certified bound L₃
/// must dominate it.
pub fn target_rhs_lipschitz_audit(
    params: &SystemParams,
    c1: f64,
    forward: &Kernel,
    inverse: &Kernel,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let grid = forward.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_field = |rng: &mut ChaCha8Rng| {
        let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_fn(grid.clone(), |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, a)| a * (m as f64 * std::f64::consts::PI * x).cos())
                .sum()
        })
    };
    let lambda = |utilde: &Field| -> Result<Field> {
        let (explicit, _) = target_explicit_terms(params, forward, inverse, utilde)?;
        let mut out = explicit;
        for (o, u) in out.values_mut().iter_mut().zip(utilde.values()) {
            *o -= (c1 + params.rho()) * u;
        }
        Ok(out)
    };
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let u1 = random_field(&mut rng);
        let u2 = random_field(&mut rng);
        let mut diff = u1.clone();
        for (d, w) in diff.values_mut().iter_mut().zip(u2.values()) {
            *d -= w;
        }
        let denom = diff.l2_norm();
        if denom < 1e-12 {
            continue;
        }
        let l1 = lambda(&u1)?;
        let l2 = lambda(&u2)?;
        let mut gap = l1;
        for (g, w) in gap.values_mut().iter_mut().zip(l2.values()) {
            *g -= w;
        }
        worst = worst.max(gap.l2_norm() / denom);
    }
    Ok(worst)
}
