//! Uniform grids and scalar fields on the unit interval, plus the composite
//! trapezoid quadrature used by every integral operator in the crate.
//!
//! Functions of x ∈ [0, 1] are represented by their values at the n equally
//! spaced nodes x_i = i/(n−1), i = 0, …, n−1, so both endpoints are nodes.
//! The discrete L² inner product is the composite trapezoid rule
//!
//! ```text
//! ⟨f, g⟩_h = h · Σ_i w_i f_i g_i,    w_0 = w_{n−1} = 1/2,   w_i = 1 otherwise,
//! ```
//!
//! which is second-order accurate and, combined with the ghost-node Neumann
//! Laplacian in [`crate::pde`], keeps the discrete integration-by-parts
//! identities exact.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest admissible node count: the discrete Laplacian needs an interior node.
pub const MIN_NODES: usize = 3;

/// A uniform grid on [0, 1] with nodes x_i = i/(n−1), endpoints included.
///
/// Cloning is cheap (the node table is shared behind an `Arc`). Two grids
/// compare equal exactly when they have the same node count, since node
/// positions are determined by n alone.
#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    h: f64,
    nodes: Arc<[f64]>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl Eq for Grid {}

impl Grid {
    /// Builds a uniform grid with `n` nodes.
    ///
    /// Fails with [`Error::GridTooSmall`] when `n < MIN_NODES`.
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { n, min: MIN_NODES });
        }
        let denom = (n - 1) as f64;
        let nodes: Arc<[f64]> = (0..n).map(|i| i as f64 / denom).collect();
        Ok(Grid {
            n,
            h: 1.0 / denom,
            nodes,
        })
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing h = 1/(n−1).
    pub fn h(&self) -> f64 {
        self.h
    }

    /// All node coordinates, in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Coordinate of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }
}

/// A scalar field sampled at the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw nodal values, checking the length against the grid.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    /// The identically zero field.
    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.n()];
        Field { grid, values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field { grid, values }
    }

    /// The grid this field lives on.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Nodal values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable nodal values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Discrete L² norm of the field under the trapezoid inner product.
    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values, self.grid.h())
    }
}

/// Composite trapezoid rule: h · (f₀/2 + f₁ + … + f_{n−2} + f_{n−1}/2).
pub fn composite_trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.5 * (values[0] + values[n - 1]);
    for &v in &values[1..n - 1] {
        sum += v;
    }
    h * sum
}

/// Cumulative trapezoid integral: out[j] ≈ ∫₀^{x_j} f, with out[0] = 0.
pub fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Discrete L² norm √(∫ f²) under the trapezoid rule.
pub fn l2_norm(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.5 * (values[0] * values[0] + values[n - 1] * values[n - 1]);
    for &v in &values[1..n - 1] {
        sum += v * v;
    }
    (h * sum).sqrt()
}
