//! Shared closed-form oracles for integration tests.
//!
//! The kernel of the backstepping transform has a classical closed form in
//! modified Bessel functions,
//!
//! ```text
//! k(x,y)  = −c₁ x · I₁(z)/z,          z = √(c₁ (x² − y²)),
//! k_x(x,y) = −c₁ I₁(z)/z − c₁² x² · I₂(z)/z²,
//! ℓ(x,y)  = −c₁ x · J₁(z)/z,
//! ```
//!
//! evaluated here through the entire series in w = z²/4:
//! I₁(z)/z = ½ Σ wᵐ/(m!(m+1)!) and I₂(z)/z² = ¼ Σ wᵐ/(m!(m+2)!), with the
//! ordinary Bessel J variants obtained by alternating signs. These power
//! series are independent of the production solver (which integrates the
//! kernel's characteristic equations), so agreement is a genuine
//! cross-check, not a tautology.

#![allow(dead_code)]

/// I₁(z)/z as an entire function of w = z²/4 (works at z = 0).
pub fn bessel_i1_over_z(z: f64) -> f64 {
    ratio_series(z * z / 4.0, 1)
}

/// I₂(z)/z² as an entire function of w = z²/4.
pub fn bessel_i2_over_z2(z: f64) -> f64 {
    ratio_series(z * z / 4.0, 2)
}

/// J₁(z)/z: alternating-sign counterpart of I₁(z)/z.
pub fn bessel_j1_over_z(z: f64) -> f64 {
    ratio_series(-z * z / 4.0, 1)
}

/// Σ_m w^m / (m! (m+ν)!) / 2^ν — the common core of the ratio series.
fn ratio_series(w: f64, nu: u32) -> f64 {
    let mut term = 1.0 / (1..=nu).map(|k| k as f64).product::<f64>();
    let mut sum = term;
    for m in 1..200 {
        term *= w / (m as f64 * (m + nu as usize) as f64);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum / 2.0_f64.powi(nu as i32)
}

/// Closed-form forward kernel value.
pub fn kernel_closed_form(c1: f64, x: f64, y: f64) -> f64 {
    let z = (c1 * (x * x - y * y)).max(0.0).sqrt();
    -c1 * x * bessel_i1_over_z(z)
}

/// Closed-form x-derivative of the forward kernel.
pub fn kernel_kx_closed_form(c1: f64, x: f64, y: f64) -> f64 {
    let z2 = (c1 * (x * x - y * y)).max(0.0);
    let z = z2.sqrt();
    -c1 * bessel_i1_over_z(z) - c1 * c1 * x * x * bessel_i2_over_z2(z)
}

/// Closed-form inverse kernel value.
pub fn inverse_kernel_closed_form(c1: f64, x: f64, y: f64) -> f64 {
    let z = (c1 * (x * x - y * y)).max(0.0).sqrt();
    -c1 * x * bessel_j1_over_z(z)
}

#[test]
fn oracle_self_checks() {
    // I₁(0.5) via the ratio series against a frozen reference value.
    let i1_half = 0.5 * bessel_i1_over_z(0.5);
    assert!((i1_half - 0.2578943053908963).abs() < 1e-12);
    // I₁(2)/2 and I₂(2)/4 against frozen references.
    assert!((bessel_i1_over_z(2.0) - 0.7953184273186645).abs() < 1e-12);
    assert!((bessel_i2_over_z2(2.0) - 0.1722371119246845).abs() < 1e-12);
    // J₁(1) reference.
    assert!((bessel_j1_over_z(1.0) - 0.4400505857449335).abs() < 1e-12);
    // The corner trace k_x(1,1) collapses to −c₁/2 − c₁²/8 at z = 0.
    for c1 in [0.5, 1.0, 2.0, 4.0] {
        let corner = kernel_kx_closed_form(c1, 1.0, 1.0);
        assert!((corner - (-0.5 * c1 - c1 * c1 / 8.0)).abs() < 1e-12);
    }
}
