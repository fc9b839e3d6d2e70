//! Uniform grids, sampled space-time fields and a few small numerical kernels
//! shared by the solvers.

use crate::error::{Error, Result};

/// Uniform 1-D node set `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !step.is_finite() {
            return Err(Error::invalid(format!(
                "axis needs finite start and positive step, got start={start}, step={step}"
            )));
        }
        Ok(Axis { start, step, len })
    }

    /// Axis covering `[lo, hi]` with spacing as close to `step` as an integer
    /// number of cells allows (never coarser).
    pub fn spanning(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) || !(step > 0.0) {
            return Err(Error::invalid(format!(
                "cannot span [{lo}, {hi}] with step {step}"
            )));
        }
        let cells = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
        Axis::new(lo, (hi - lo) / cells as f64, cells + 1)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.node(self.len.saturating_sub(1))
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.node(i))
    }

    /// Same extent, half the spacing. Every node of `self` is a node of the result.
    pub fn refined(&self) -> Axis {
        Axis {
            start: self.start,
            step: 0.5 * self.step,
            len: 2 * self.len - 1,
        }
    }
}

/// Tensor-product spatial grid in the reduced x-coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialGrid {
    Line(Axis),
    /// Row-major: the first axis varies slowest.
    Plane(Axis, Axis),
}

impl SpatialGrid {
    pub fn dim(&self) -> usize {
        match self {
            SpatialGrid::Line(_) => 1,
            SpatialGrid::Plane(..) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SpatialGrid::Line(a) => a.len,
            SpatialGrid::Plane(a, b) => a.len * b.len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axes(&self) -> Vec<Axis> {
        match self {
            SpatialGrid::Line(a) => vec![*a],
            SpatialGrid::Plane(a, b) => vec![*a, *b],
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        match self {
            SpatialGrid::Line(a) => vec![a.node(i)],
            SpatialGrid::Plane(a, b) => vec![a.node(i / b.len), b.node(i % b.len)],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn line(&self) -> Result<Axis> {
        match self {
            SpatialGrid::Line(a) => Ok(*a),
            SpatialGrid::Plane(..) => Err(Error::Unsupported(
                "operation needs a one-dimensional spatial grid".into(),
            )),
        }
    }
}

/// Scalar field sampled at increasing times on a fixed spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub grid: SpatialGrid,
    /// `values[k]` is the spatial row at `times[k]`.
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, grid: SpatialGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("one row per time required"));
        }
        if values.iter().any(|row| row.len() != grid.len()) {
            return Err(Error::invalid("row length does not match spatial grid"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("field times must be strictly increasing"));
        }
        Ok(SpaceTimeField {
            times,
            grid,
            values,
        })
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    /// Index of the stored time equal to `t` up to a relative `1e-9`.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest pointwise difference against `f(t, x)` over rows with `t` in `[lo, hi]`.
    pub fn max_abs_error<F>(&self, lo: f64, hi: f64, mut f: F) -> f64
    where
        F: FnMut(f64, &[f64]) -> f64,
    {
        let mut worst = 0.0_f64;
        for (t, row) in self.times.iter().zip(&self.values) {
            if *t < lo - 1e-12 || *t > hi + 1e-12 {
                continue;
            }
            for (i, v) in row.iter().enumerate() {
                let e = (v - f(*t, &self.grid.point(i))).abs();
                if e.is_nan() {
                    return f64::NAN;
                }
                worst = worst.max(e);
            }
        }
        worst
    }
}

/// Solve a tridiagonal system in place (Thomas algorithm).
///
/// `lower[0]` and `upper[n-1]` are ignored. `rhs` is overwritten with the solution.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Four-point Lagrange interpolation of samples on `axis` at `s`.
///
/// The stencil is shifted inward near the ends. `s` must lie in `[start, end]`.
pub fn cubic_interpolate(axis: &Axis, values: impl Fn(usize) -> f64, s: f64) -> f64 {
    let n = axis.len;
    debug_assert!(n >= 4);
    let pos = (s - axis.start) / axis.step;
    let j = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = pos - j as f64;
    let (f0, f1, f2, f3) = (values(j), values(j + 1), values(j + 2), values(j + 3));
    // nodes at u = 0, 1, 2, 3
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    l0 * f0 + l1 * f1 + l2 * f2 + l3 * f3
}

/// Composite trapezoid weights for `axis`.
pub fn trapezoid_weights(axis: &Axis) -> Vec<f64> {
    let mut w = vec![axis.step; axis.len];
    if let Some(first) = w.first_mut() {
        *first *= 0.5;
    }
    if let Some(last) = w.last_mut() {
        *last *= 0.5;
    }
    w
}
