//! Globally Lipschitz scalar nonlinearities with certified slope bounds.
//!
//! The coupled system carries three nonlinearities f₁, f₂, f₃ acting pointwise
//! (superposition operators). Every stability condition in [`crate::analysis`]
//! consumes their Lipschitz constants M₁, M₂, M₃, so each shape here is built
//! so that its constant is known exactly rather than estimated:
//!
//! * `zero` — f ≡ 0, constant 0;
//! * `scaled_tanh` — f(s) = g·tanh(s), constant |g| (slope maximal at 0);
//! * `scaled_sin` — f(s) = g·sin(s), constant |g|;
//! * `saturation` — f(s) = g·clamp(s, −1, 1), constant |g|;
//! * `custom_table` — piecewise-linear interpolation through user breakpoints,
//!   constant = max segment slope, held constant outside the table range.
//!
//! All shapes satisfy f(0) = 0 exactly, and [`Nonlinearity::lipschitz_audit`]
//! checks the certified constant against randomly sampled difference quotients.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Field;

/// The shape of a pointwise nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// f ≡ 0.
    Zero,
    /// f(s) = gain · tanh(s).
    ScaledTanh,
    /// f(s) = gain · sin(s).
    ScaledSin,
    /// f(s) = gain · clamp(s, −1, 1).
    Saturation,
    /// Piecewise-linear interpolation through `(s, f(s))` breakpoints, held
    /// constant outside the covered range.
    CustomTable { breakpoints: Vec<(f64, f64)> },
}

/// A globally Lipschitz scalar function with f(0) = 0 and a certified
/// Lipschitz constant available through [`Nonlinearity::gain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    shape: Shape,
    gain: f64,
}

impl Nonlinearity {
    /// The zero function.
    pub fn zero() -> Self {
        Nonlinearity {
            shape: Shape::Zero,
            gain: 0.0,
        }
    }

    /// f(s) = gain·tanh(s); Lipschitz constant |gain| (attained at s = 0).
    pub fn scaled_tanh(gain: f64) -> Self {
        Nonlinearity {
            shape: Shape::ScaledTanh,
            gain: gain.abs(),
        }
    }

    /// f(s) = gain·sin(s); Lipschitz constant |gain|.
    pub fn scaled_sin(gain: f64) -> Self {
        Nonlinearity {
            shape: Shape::ScaledSin,
            gain: gain.abs(),
        }
    }

    /// f(s) = gain·clamp(s, −1, 1); Lipschitz constant |gain|.
    pub fn saturation(gain: f64) -> Self {
        Nonlinearity {
            shape: Shape::Saturation,
            gain: gain.abs(),
        }
    }

    /// Piecewise-linear function through `breakpoints` (strictly increasing
    /// abscissae, all values finite, containing the point (0, 0) exactly).
    /// The certified Lipschitz constant is the maximum segment slope.
    pub fn custom_table(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "breakpoints",
                value: breakpoints.len() as f64,
                reason: "a table needs at least two breakpoints".into(),
            });
        }
        let mut has_origin = false;
        let mut max_slope = 0.0_f64;
        for (i, &(s, f)) in breakpoints.iter().enumerate() {
            if !s.is_finite() || !f.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("table breakpoint {i}"),
                });
            }
            if s == 0.0 && f == 0.0 {
                has_origin = true;
            }
            if i > 0 {
                let (s_prev, f_prev) = breakpoints[i - 1];
                if s <= s_prev {
                    return Err(Error::InvalidParameter {
                        name: "breakpoints",
                        value: s,
                        reason: format!("abscissae must be strictly increasing (index {i})"),
                    });
                }
                max_slope = max_slope.max(((f - f_prev) / (s - s_prev)).abs());
            }
        }
        if !has_origin {
            return Err(Error::InvalidParameter {
                name: "breakpoints",
                value: 0.0,
                reason: "the table must contain the breakpoint (0, 0) exactly".into(),
            });
        }
        Ok(Nonlinearity {
            shape: Shape::CustomTable { breakpoints },
            gain: max_slope,
        })
    }

    /// The certified Lipschitz constant M of this function.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// The shape tag.
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Evaluates the function; f(0) = 0 exactly for every shape.
    pub fn evaluate(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Zero => 0.0,
            Shape::ScaledTanh => self.gain * s.tanh(),
            Shape::ScaledSin => self.gain * s.sin(),
            Shape::Saturation => self.gain * s.clamp(-1.0, 1.0),
            Shape::CustomTable { breakpoints } => {
                let first = breakpoints[0];
                let last = breakpoints[breakpoints.len() - 1];
                if s <= first.0 {
                    return first.1;
                }
                if s >= last.0 {
                    return last.1;
                }
                // Index of the first breakpoint with abscissa > s.
                let hi = breakpoints.partition_point(|&(b, _)| b <= s);
                let (s0, f0) = breakpoints[hi - 1];
                if s == s0 {
                    return f0; // exact at breakpoints, in particular at (0, 0)
                }
                let (s1, f1) = breakpoints[hi];
                f0 + (f1 - f0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// Applies the function node by node.
    pub fn apply_field(&self, u: &Field) -> Field {
        let mut out = u.clone();
        for v in out.values_mut() {
            *v = self.evaluate(*v);
        }
        out
    }

    /// Samples `samples` random pairs in [−range, range] and returns the
    /// largest observed difference quotient |f(a) − f(b)| / |a − b|.
    ///
    /// Fails with [`Error::LipschitzViolation`] if the observed slope exceeds
    /// the certified constant beyond round-off (factor 1 + 1e−9).
    pub fn lipschitz_audit(&self, samples: usize, range: f64, seed: u64) -> Result<f64> {
        if samples < 2 {
            return Err(Error::TooFewSamples {
                have: samples,
                need: 2,
            });
        }
        if !(range > 0.0) {
            return Err(Error::InvalidParameter {
                name: "range",
                value: range,
                reason: "audit range must be positive".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-range, range);
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let a = dist.sample(&mut rng);
            let b = dist.sample(&mut rng);
            if (a - b).abs() < 1e-12 {
                continue;
            }
            let quotient = (self.evaluate(a) - self.evaluate(b)).abs() / (a - b).abs();
            worst = worst.max(quotient);
        }
        if worst > self.gain * (1.0 + 1e-9) {
            return Err(Error::LipschitzViolation {
                claimed: self.gain,
                observed: worst,
            });
        }
        Ok(worst)
    }
}
