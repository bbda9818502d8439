//! Numerical toolkit for boundary stabilization of a coupled parabolic–elliptic
//! PDE pair on the unit interval.
//!
//! The plant is a heat-like state u(x, t) coupled to a quasi-static field
//! v(x, t):
//!
//! ```text
//! u_t = u_xx − ρ u + f₁(u) + α v + f₂(v),     0 < x < 1,  t > 0,
//!  0  = v_xx − γ v + β u + f₃(u),
//! u_x(0, t) = 0,    u_x(1, t) = ω(t),
//! v_x(0, t) = 0,    v_x(1, t) = 0,
//! ```
//!
//! where ω(t) is the boundary control. A Volterra change of variables
//! w = u − ∫₀ˣ k(x, y) u(y) dy maps the u-equation onto a target system with
//! tunable decay rate c₁ + ρ; the same kernel drives a boundary observer fed by
//! the collocated measurement y(t) = u(1, t).
//!
//! Modules:
//!
//! * [`grid`] — uniform grids, nodal fields, trapezoid quadrature;
//! * [`special`] — the error functions erf/erfi used by the gain bounds;
//! * [`nonlin`] — bounded-slope nonlinearities f₁, f₂, f₃ and an empirical
//!   slope audit;
//! * [`kernel`] — the backstepping kernel k(x, y): its hyperbolic PDE, series
//!   construction, boundary derivative k_x(1, ·), and operational inverse;
//! * [`pde`] — finite-difference time stepping for the coupled plant and for
//!   the transformed (target) system;
//! * [`control`] — state- and output-feedback boundary controllers and the
//!   boundary observer;
//! * [`analysis`] — spectra, stability margins, gain-condition reports, and
//!   exponential decay-rate fitting.

pub mod analysis;
pub mod control;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod nonlin;
pub mod pde;
pub mod special;

pub use error::{Error, Result};
pub use grid::{Field, Grid};
