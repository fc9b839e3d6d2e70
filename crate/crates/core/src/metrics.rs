//! Exact Ricci-flow metric families in reduced coordinates.
//!
//! `sphere2` is the shrinking round sphere `g(t) = (1 - 2t) g_unit`, restricted to
//! axisymmetric data so that the reduced coordinate is the polar angle θ.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, SpatialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFamily {
    Euclid1,
    Euclid2,
    Sphere2,
}

impl MetricFamily {
    pub const ALL: [MetricFamily; 3] = [
        MetricFamily::Euclid1,
        MetricFamily::Euclid2,
        MetricFamily::Sphere2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricFamily::Euclid1 => "euclid1",
            MetricFamily::Euclid2 => "euclid2",
            MetricFamily::Sphere2 => "sphere2",
        }
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            MetricFamily::Euclid1 | MetricFamily::Sphere2 => 1,
            MetricFamily::Euclid2 => 2,
        }
    }

    /// `[t_lo, t_hi)` on which the flow exists.
    pub fn time_domain(self) -> (f64, f64) {
        match self {
            MetricFamily::Sphere2 => (f64::NEG_INFINITY, 0.5),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Open interval of each reduced coordinate.
    pub fn x_domain(self) -> (f64, f64) {
        match self {
            MetricFamily::Sphere2 => (0.0, PI),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn is_flat(self) -> bool {
        !matches!(self, MetricFamily::Sphere2)
    }

    pub fn check_time(self, t: f64) -> Result<()> {
        let (lo, hi) = self.time_domain();
        if t.is_finite() && t >= lo && t < hi {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                coordinate: "t".into(),
                value: t,
                domain: format!("[{lo}, {hi}) for {self}"),
            })
        }
    }

    pub fn check_point(self, t: f64, x: &[f64]) -> Result<()> {
        self.check_time(t)?;
        if x.len() != self.spatial_dim() {
            return Err(Error::invalid(format!(
                "{self} expects {} spatial coordinates, got {}",
                self.spatial_dim(),
                x.len()
            )));
        }
        let (lo, hi) = self.x_domain();
        for (k, &xk) in x.iter().enumerate() {
            if !(xk.is_finite() && xk > lo && xk < hi) {
                let name = if self == MetricFamily::Sphere2 {
                    "theta".to_string()
                } else {
                    format!("x{k}")
                };
                return Err(Error::OutOfDomain {
                    coordinate: name,
                    value: xk,
                    domain: format!("({lo}, {hi}) for {self}"),
                });
            }
        }
        Ok(())
    }

    /// Scalar curvature; spatially constant on every family in the catalog.
    pub fn scalar_curvature(self, t: f64) -> f64 {
        match self {
            MetricFamily::Sphere2 => 2.0 / (1.0 - 2.0 * t),
            _ => 0.0,
        }
    }

    /// Conformal factor `c(t)` with `g(t) = c(t) g_ref`.
    pub fn conformal_factor(self, t: f64) -> f64 {
        match self {
            MetricFamily::Sphere2 => 1.0 - 2.0 * t,
            _ => 1.0,
        }
    }

    /// θ-grid on the sphere with `cells` cells that stops one cell short of each pole.
    pub fn pole_margin_axis(cells: usize) -> Result<Axis> {
        if cells < 4 {
            return Err(Error::invalid("sphere grid needs at least 4 cells"));
        }
        let d = PI / cells as f64;
        Axis::new(d, d, cells - 1)
    }
}

impl fmt::Display for MetricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricFamily::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric family `{s}`")))
    }
}

/// Closed-form metric data at one space-time point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub g_inv: DMatrix<f64>,
    pub scalar_curvature: f64,
    pub dginv_dt: DMatrix<f64>,
    /// `dginv_dx[k]` is the derivative of the inverse metric along coordinate `k`.
    pub dginv_dx: Vec<DMatrix<f64>>,
    pub tr_gdot: f64,
    pub vol_weight: f64,
}

pub fn metric_at(family: MetricFamily, t: f64, x: &[f64]) -> Result<MetricSample> {
    family.check_point(t, x)?;
    let d = family.spatial_dim();
    let zero = DMatrix::zeros(d, d);
    let sample = match family {
        MetricFamily::Euclid1 | MetricFamily::Euclid2 => MetricSample {
            g_inv: DMatrix::identity(d, d),
            scalar_curvature: 0.0,
            dginv_dt: zero.clone(),
            dginv_dx: vec![zero; d],
            tr_gdot: 0.0,
            vol_weight: 1.0,
        },
        MetricFamily::Sphere2 => {
            let c = 1.0 - 2.0 * t;
            let r = 2.0 / c;
            MetricSample {
                g_inv: DMatrix::from_element(1, 1, 1.0 / c),
                scalar_curvature: r,
                dginv_dt: DMatrix::from_element(1, 1, 2.0 / (c * c)),
                dginv_dx: vec![zero],
                // both tangent directions scale by c(t): tr(g^{-1} dg/dt) = 2 * (-2/c)
                tr_gdot: -2.0 * r,
                vol_weight: c * x[0].sin(),
            }
        }
    };
    Ok(sample)
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * u[i];
            if i > 0 {
                s += self.lower[i] * u[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * u[i + 1];
            }
            out[i] = s;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in self
            .lower
            .iter_mut()
            .chain(self.diag.iter_mut())
            .chain(self.upper.iter_mut())
        {
            *v *= k;
        }
    }
}

/// True when `axis` stops exactly one cell short of both poles.
pub fn has_pole_margin(axis: &Axis) -> bool {
    let tol = 1e-9 * axis.step;
    (axis.start - axis.step).abs() <= tol && (PI - axis.end() - axis.step).abs() <= tol
}

/// θ-part of the axisymmetric sphere Laplacian at unit radius, `u_θθ + cot θ u_θ`,
/// on a pole-margin grid.
///
/// The missing pole value is replaced by the even quadratic extrapolation
/// `(4 u_0 - u_1) / 3`, which keeps the end rows tridiagonal and second order.
pub fn sphere_unit_stencil(axis: &Axis) -> Result<Tridiagonal> {
    if !has_pole_margin(axis) {
        return Err(Error::invalid(
            "sphere2 solver grids must stop one cell short of each pole",
        ));
    }
    let n = axis.len;
    let h = axis.step;
    let mut op = Tridiagonal {
        lower: vec![0.0; n],
        diag: vec![0.0; n],
        upper: vec![0.0; n],
    };
    for i in 0..n {
        let cot = 1.0 / axis.node(i).tan();
        if i == 0 {
            let k = (2.0 / 3.0) * (1.0 / (h * h) + cot / h);
            op.diag[i] = -k;
            op.upper[i] = k;
        } else if i == n - 1 {
            let k = (2.0 / 3.0) * (1.0 / (h * h) - cot / h);
            op.diag[i] = -k;
            op.lower[i] = k;
        } else {
            op.lower[i] = 1.0 / (h * h) - cot / (2.0 * h);
            op.diag[i] = -2.0 / (h * h);
            op.upper[i] = 1.0 / (h * h) + cot / (2.0 * h);
        }
    }
    Ok(op)
}

fn check_values(values: &[f64], grid: &SpatialGrid) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::invalid(format!(
            "field has {} values but grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    if grid.axes().iter().any(|a| a.len < 3) {
        return Err(Error::invalid("Laplacian needs at least 3 points per axis"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("field contains NaN"));
    }
    Ok(())
}

/// Second derivative of a strided 1-D line, one-sided at the ends.
fn second_derivative_line(u: impl Fn(usize) -> f64, n: usize, h: f64, out: &mut [f64]) {
    let h2 = h * h;
    for (i, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
        *o = (u(i - 1) - 2.0 * u(i) + u(i + 1)) / h2;
    }
    if n >= 4 {
        out[0] = (2.0 * u(0) - 5.0 * u(1) + 4.0 * u(2) - u(3)) / h2;
        out[n - 1] = (2.0 * u(n - 1) - 5.0 * u(n - 2) + 4.0 * u(n - 3) - u(n - 4)) / h2;
    } else {
        out[0] = out[1];
        out[n - 1] = out[1];
    }
}

/// Laplace–Beltrami operator of `g(t)` applied to a field sampled on `grid`.
///
/// Central differences in the interior. Euclidean ends use one-sided
/// second-order stencils; sphere grids use the pole rule of
/// [`sphere_unit_stencil`] when they stop one cell short of the poles.
pub fn laplace_beltrami(
    family: MetricFamily,
    t: f64,
    values: &[f64],
    grid: &SpatialGrid,
) -> Result<Vec<f64>> {
    family.check_time(t)?;
    if grid.dim() != family.spatial_dim() {
        return Err(Error::invalid(format!(
            "{family} needs a {}-d grid",
            family.spatial_dim()
        )));
    }
    check_values(values, grid)?;
    let mut out = vec![0.0; values.len()];
    match (family, grid) {
        (MetricFamily::Euclid1, SpatialGrid::Line(a)) => {
            second_derivative_line(|i| values[i], a.len, a.step, &mut out);
        }
        (MetricFamily::Euclid2, SpatialGrid::Plane(a, b)) => {
            let mut line = vec![0.0; a.len.max(b.len)];
            for j in 0..b.len {
                second_derivative_line(|i| values[i * b.len + j], a.len, a.step, &mut line);
                for i in 0..a.len {
                    out[i * b.len + j] += line[i];
                }
            }
            for i in 0..a.len {
                second_derivative_line(|j| values[i * b.len + j], b.len, b.step, &mut line);
                for j in 0..b.len {
                    out[i * b.len + j] += line[j];
                }
            }
        }
        (MetricFamily::Sphere2, SpatialGrid::Line(a)) => {
            let (lo, hi) = family.x_domain();
            if !(a.start > lo && a.end() < hi) {
                return Err(Error::OutOfDomain {
                    coordinate: "theta".into(),
                    value: if a.start <= lo { a.start } else { a.end() },
                    domain: "(0, pi) for sphere2".into(),
                });
            }
            if has_pole_margin(a) {
                sphere_unit_stencil(a)?.apply(values, &mut out);
            } else {
                sphere_one_sided(values, a, &mut out);
            }
            let k = 1.0 / family.conformal_factor(t);
            out.iter_mut().for_each(|v| *v *= k);
        }
        _ => unreachable!("grid dimension checked above"),
    }
    Ok(out)
}

fn sphere_one_sided(u: &[f64], a: &Axis, out: &mut [f64]) {
    let n = a.len;
    let h = a.step;
    let mut uxx = vec![0.0; n];
    second_derivative_line(|i| u[i], n, h, &mut uxx);
    for i in 0..n {
        let ux = if i == 0 {
            (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h)
        } else {
            (u[i + 1] - u[i - 1]) / (2.0 * h)
        };
        out[i] = uxx[i] + ux / a.node(i).tan();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclid1_sample() {
        let s = metric_at(MetricFamily::Euclid1, 0.3, &[0.7]).unwrap();
        assert_eq!(s.g_inv[(0, 0)], 1.0);
        assert_eq!(s.scalar_curvature, 0.0);
        assert_eq!(s.tr_gdot, 0.0);
    }

    #[test]
    fn sphere_curvature_values() {
        let s = metric_at(MetricFamily::Sphere2, 0.0, &[PI / 2.0]).unwrap();
        assert_eq!(s.scalar_curvature, 2.0);
        let s = metric_at(MetricFamily::Sphere2, 0.25, &[1.0]).unwrap();
        assert_eq!(s.scalar_curvature, 4.0);
        assert_eq!(s.tr_gdot + 2.0 * s.scalar_curvature, 0.0);
    }

    #[test]
    fn domain_errors_name_coordinate() {
        let e = metric_at(MetricFamily::Sphere2, 0.1, &[0.0]).unwrap_err();
        assert!(e.to_string().contains("theta"), "{e}");
        let e = metric_at(MetricFamily::Sphere2, 0.5, &[1.0]).unwrap_err();
        assert!(e.to_string().contains("coordinate t"), "{e}");
    }

    #[test]
    fn dginv_dt_matches_finite_difference() {
        let h = 1e-5;
        for t in [-0.4, 0.0, 0.2, 0.45] {
            let s = metric_at(MetricFamily::Sphere2, t, &[1.2]).unwrap();
            let p = metric_at(MetricFamily::Sphere2, t + h, &[1.2]).unwrap();
            let m = metric_at(MetricFamily::Sphere2, t - h, &[1.2]).unwrap();
            let fd = (p.g_inv[(0, 0)] - m.g_inv[(0, 0)]) / (2.0 * h);
            assert_relative_eq!(fd, s.dginv_dt[(0, 0)], max_relative = 1e-6);
        }
    }

    #[test]
    fn laplacian_of_quadratic() {
        let a = Axis::new(-1.0, 0.1, 21).unwrap();
        let u: Vec<f64> = a.nodes().map(|x| x * x).collect();
        let l = laplace_beltrami(MetricFamily::Euclid1, 0.0, &u, &SpatialGrid::Line(a)).unwrap();
        for v in l {
            assert_relative_eq!(v, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_rejects_short_and_nan() {
        let a = Axis::new(0.0, 0.1, 2).unwrap();
        assert!(laplace_beltrami(
            MetricFamily::Euclid1,
            0.0,
            &[1.0, 2.0],
            &SpatialGrid::Line(a)
        )
        .is_err());
        let a = Axis::new(0.0, 0.1, 4).unwrap();
        let u = [0.0, f64::NAN, 1.0, 2.0];
        assert!(laplace_beltrami(MetricFamily::Euclid1, 0.0, &u, &SpatialGrid::Line(a)).is_err());
    }
}
