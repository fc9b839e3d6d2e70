//! Backward heat equation `∂ₜu + Δ_{g(t)}u = -R` with terminal data `u(T) = h`,
//! solved by Crank–Nicolson, plus the closed-form Gaussian oracle.

use crate::error::{Error, Result};
use crate::grid::{solve_tridiagonal, Axis, SpaceTimeField, SpatialGrid};
use crate::metrics::{laplace_beltrami, sphere_unit_stencil, MetricFamily, Tridiagonal};
use crate::profile::Profile;

/// Exact solution of the Euclidean backward heat equation for Gaussian or
/// constant terminal data.
///
/// The Gaussian formula stays valid past `T` as long as `width² + 4(T - t) > 0`;
/// the lift relies on that continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    pub profile: Profile,
    pub t_final: f64,
}

impl KernelSolution {
    pub fn new(profile: Profile, t_final: f64) -> Result<Self> {
        match profile {
            Profile::Gaussian { .. } | Profile::Constant(_) => {
                Ok(KernelSolution { profile, t_final })
            }
            _ => Err(Error::Unsupported(format!(
                "no closed-form kernel solution for `{}` data; use solve_backward_heat",
                profile.name()
            ))),
        }
    }

    /// `width² + 4(T - t)`, or `None` for constant data.
    fn spread(&self, t: f64) -> Option<(f64, f64)> {
        match &self.profile {
            Profile::Gaussian { width, .. } => {
                let w2 = width * width;
                Some((w2, w2 + 4.0 * (self.t_final - t)))
            }
            _ => None,
        }
    }

    /// Latest time at which the continuation past `T` is still defined.
    pub fn t_max(&self) -> f64 {
        match self.spread(self.t_final) {
            Some((w2, _)) => self.t_final + 0.25 * w2,
            None => f64::INFINITY,
        }
    }

    fn parts(&self, t: f64, x: &[f64]) -> Result<(f64, f64, f64, f64)> {
        let (w2, a) = self.spread(t).unwrap();
        if !(a > 0.0) {
            return Err(Error::OutOfDomain {
                coordinate: "t".into(),
                value: t,
                domain: format!(
                    "(-inf, {}) for the Gaussian kernel continuation",
                    self.t_max()
                ),
            });
        }
        let Profile::Gaussian { center, .. } = &self.profile else {
            unreachable!()
        };
        let rho2: f64 = x.iter().zip(center).map(|(p, c)| (p - c) * (p - c)).sum();
        let n = center.len() as f64;
        let u = (w2 / a).powf(0.5 * n) * (-rho2 / a).exp();
        Ok((u, a, rho2, n))
    }

    pub fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        match &self.profile {
            Profile::Constant(c) => Ok(*c),
            _ => Ok(self.parts(t, x)?.0),
        }
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> Result<f64> {
        if let Profile::Constant(_) = self.profile {
            return Ok(0.0);
        }
        let (u, a, rho2, n) = self.parts(t, x)?;
        // d/dt ln u with da/dt = -4
        Ok(u * (2.0 * n / a - 4.0 * rho2 / (a * a)))
    }

    pub fn dtt(&self, t: f64, x: &[f64]) -> Result<f64> {
        if let Profile::Constant(_) = self.profile {
            return Ok(0.0);
        }
        let (u, a, rho2, n) = self.parts(t, x)?;
        let g = 2.0 * n / a - 4.0 * rho2 / (a * a);
        let dg = 8.0 * n / (a * a) - 32.0 * rho2 / (a * a * a);
        Ok(u * (g * g + dg))
    }

    /// Spatial Laplacian from the x-derivatives of the closed form.
    pub fn laplacian_x(&self, t: f64, x: &[f64]) -> Result<f64> {
        if let Profile::Constant(_) = self.profile {
            return Ok(0.0);
        }
        let (u, a, _, _) = self.parts(t, x)?;
        let Profile::Gaussian { center, .. } = &self.profile else {
            unreachable!()
        };
        let s: f64 = x
            .iter()
            .zip(center)
            .map(|(p, c)| 4.0 * (p - c) * (p - c) / (a * a) - 2.0 / a)
            .sum();
        Ok(u * s)
    }
}

/// Closed-form `u(t, x)` for Gaussian or constant `h`, `t <= T`.
pub fn gaussian_kernel_solution(
    h: &Profile,
    t: f64,
    x: &[f64],
    t_final: f64,
    n: usize,
) -> Result<f64> {
    if t > t_final {
        return Err(Error::invalid(format!(
            "kernel solution needs t <= T, got t={t}, T={t_final}"
        )));
    }
    h.validate(n)?;
    if x.len() != n {
        return Err(Error::invalid(format!(
            "point has {} coordinates, expected {n}",
            x.len()
        )));
    }
    KernelSolution::new(h.clone(), t_final)?.value(t, x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatProblem {
    pub family: MetricFamily,
    pub h: Profile,
    pub t0: f64,
    pub t_final: f64,
    pub grid: SpatialGrid,
    pub dt: f64,
}

/// Half-width of the Euclidean truncation box around the data.
pub fn box_half_width(h: &Profile, duration: f64) -> (Vec<f64>, f64) {
    let spread = 4.0 * duration.abs().sqrt();
    match h {
        Profile::Gaussian { center, width } => (center.clone(), 6.0 * width + spread),
        Profile::Bump { center, radius } => (center.clone(), radius + spread),
        _ => (Vec::new(), 6.0 + spread),
    }
}

impl HeatProblem {
    /// Problem on the default grid: the truncation box for Euclidean data, a
    /// pole-margin θ-grid for the sphere.
    pub fn with_default_grid(
        family: MetricFamily,
        h: Profile,
        t0: f64,
        t_final: f64,
        dx: f64,
        dt: f64,
    ) -> Result<Self> {
        let grid = default_grid(family, &h, (t_final - t0).abs(), dx, 0.0)?;
        Ok(HeatProblem {
            family,
            h,
            t0,
            t_final,
            grid,
            dt,
        })
    }

    /// Problem in the reflected time `s = -t`.
    pub fn reflected(&self) -> HeatProblem {
        HeatProblem {
            t0: -self.t0,
            t_final: -self.t_final,
            ..self.clone()
        }
    }

    fn validate_backward(&self) -> Result<()> {
        if !(self.t0 > 0.0) {
            return Err(Error::invalid(format!("t0 must be > 0, got {}", self.t0)));
        }
        if !(self.t0 < self.t_final) {
            return Err(Error::invalid("need t0 < T"));
        }
        self.family.check_time(self.t_final)?;
        if !(self.dt > 0.0) || self.dt > (self.t_final - self.t0) / 10.0 {
            return Err(Error::invalid(format!(
                "dt must lie in (0, (T - t0)/10], got {}",
                self.dt
            )));
        }
        if self.grid.dim() != self.family.spatial_dim() {
            return Err(Error::invalid("grid dimension does not match the family"));
        }
        if self.grid.axes().iter().any(|a| a.len < 3) {
            return Err(Error::invalid("heat grid needs at least 3 points per axis"));
        }
        self.h.validate(self.family.spatial_dim())?;
        for p in self.grid.points() {
            if !self.h.eval(&p).is_finite() {
                return Err(Error::invalid(format!("terminal data not finite at {p:?}")));
            }
        }
        Ok(())
    }

    fn oracle(&self) -> Option<KernelSolution> {
        if self.family.is_flat() {
            KernelSolution::new(self.h.clone(), self.t_final).ok()
        } else {
            None
        }
    }
}

/// Default spatial grid for `family` around data `h` over a time span `duration`.
///
/// `extra` widens the Euclidean box on each side.
pub fn default_grid(
    family: MetricFamily,
    h: &Profile,
    duration: f64,
    dx: f64,
    extra: f64,
) -> Result<SpatialGrid> {
    match family {
        MetricFamily::Sphere2 => {
            let cells = (std::f64::consts::PI / dx).round() as usize;
            Ok(SpatialGrid::Line(MetricFamily::pole_margin_axis(cells)?))
        }
        _ => {
            let (center, half) = box_half_width(h, duration);
            let half = half + extra;
            let dim = family.spatial_dim();
            let c = |k: usize| center.get(k).copied().unwrap_or(0.0);
            let axis = |k: usize| Axis::spanning(c(k) - half, c(k) + half, dx);
            if dim == 1 {
                Ok(SpatialGrid::Line(axis(0)?))
            } else {
                Ok(SpatialGrid::Plane(axis(0)?, axis(1)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Boundary {
    Pinned,
    Neumann,
}

/// Euclidean second-difference operator along one axis.
/// Pinned boundary rows are zero; Neumann rows use a mirrored ghost node.
fn euclid_line_operator(axis: &Axis, bc: Boundary) -> Tridiagonal {
    let n = axis.len;
    let k = 1.0 / (axis.step * axis.step);
    let mut op = Tridiagonal {
        lower: vec![k; n],
        diag: vec![-2.0 * k; n],
        upper: vec![k; n],
    };
    match bc {
        Boundary::Pinned => {
            for i in [0, n - 1] {
                op.lower[i] = 0.0;
                op.diag[i] = 0.0;
                op.upper[i] = 0.0;
            }
        }
        Boundary::Neumann => {
            op.upper[0] = 2.0 * k;
            op.lower[n - 1] = 2.0 * k;
        }
    }
    op
}

/// One Crank–Nicolson solve `(I - a L) u_new = rhs` for a tridiagonal `L`.
fn implicit_solve(op: &Tridiagonal, a: f64, rhs: &mut [f64]) {
    let lower: Vec<f64> = op.lower.iter().map(|v| -a * v).collect();
    let upper: Vec<f64> = op.upper.iter().map(|v| -a * v).collect();
    let diag: Vec<f64> = op.diag.iter().map(|v| 1.0 - a * v).collect();
    solve_tridiagonal(&lower, &diag, &upper, rhs);
}

fn check_finite(row: &[f64], t: f64) -> Result<()> {
    match row.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::diverged(t, format!("non-finite value at node {i}"))),
        None => Ok(()),
    }
}

/// March `∂ₜu + Δu = -R` from `u(T) = h` down to `t0` by Crank–Nicolson.
///
/// Euclidean boundaries are pinned to the kernel oracle when the data has one
/// and zero-flux otherwise. Rows of the result are in increasing time.
pub fn solve_backward_heat(problem: &HeatProblem) -> Result<SpaceTimeField> {
    problem.validate_backward()?;
    let steps = ((problem.t_final - problem.t0) / problem.dt - 1e-9).ceil() as usize;
    let dtau = (problem.t_final - problem.t0) / steps as f64;
    let time = |k: usize| {
        if k == steps {
            problem.t0
        } else {
            problem.t_final - k as f64 * dtau
        }
    };
    let oracle = problem.oracle();
    let bc = if oracle.is_some() {
        Boundary::Pinned
    } else {
        Boundary::Neumann
    };
    let pin = |t: f64, x: &[f64]| -> f64 {
        oracle
            .as_ref()
            .and_then(|o| o.value(t, x).ok())
            .unwrap_or(0.0)
    };

    let grid = &problem.grid;
    let mut u: Vec<f64> = grid.points().map(|p| problem.h.eval(&p)).collect();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(u.clone());

    match grid {
        SpatialGrid::Line(axis) => {
            let unit = match problem.family {
                MetricFamily::Sphere2 => sphere_unit_stencil(axis)?,
                _ => euclid_line_operator(axis, bc),
            };
            let op_at = |t: f64| {
                let mut op = unit.clone();
                op.scale(1.0 / problem.family.conformal_factor(t));
                op
            };
            let mut lu = vec![0.0; u.len()];
            for k in 0..steps {
                let (t_old, t_new) = (time(k), time(k + 1));
                op_at(t_old).apply(&u, &mut lu);
                let source = 0.5
                    * dtau
                    * (problem.family.scalar_curvature(t_old)
                        + problem.family.scalar_curvature(t_new));
                for (v, l) in u.iter_mut().zip(&lu) {
                    *v += 0.5 * dtau * l + source;
                }
                if bc == Boundary::Pinned && problem.family.is_flat() {
                    let n = axis.len;
                    u[0] = pin(t_new, &[axis.node(0)]);
                    u[n - 1] = pin(t_new, &[axis.node(n - 1)]);
                }
                implicit_solve(&op_at(t_new), 0.5 * dtau, &mut u);
                check_finite(&u, t_new)?;
                rows.push(u.clone());
            }
        }
        SpatialGrid::Plane(a, b) => {
            // Peaceman–Rachford splitting; Euclidean only, so R = 0.
            let la = euclid_line_operator(a, bc);
            let lb = euclid_line_operator(b, bc);
            let (na, nb) = (a.len, b.len);
            let pin_all = |u: &mut [f64], t: f64| {
                if bc != Boundary::Pinned {
                    return;
                }
                for i in 0..na {
                    for j in 0..nb {
                        if i == 0 || j == 0 || i == na - 1 || j == nb - 1 {
                            u[i * nb + j] = pin(t, &[a.node(i), b.node(j)]);
                        }
                    }
                }
            };
            let mut line_a = vec![0.0; na];
            let mut line_b = vec![0.0; nb];
            let mut tmp_a = vec![0.0; na];
            let mut tmp_b = vec![0.0; nb];
            for k in 0..steps {
                let (t_old, t_new) = (time(k), time(k + 1));
                let t_mid = 0.5 * (t_old + t_new);
                // explicit in b, implicit in a
                let mut star = u.clone();
                for i in 0..na {
                    line_b.copy_from_slice(&u[i * nb..(i + 1) * nb]);
                    lb.apply(&line_b, &mut tmp_b);
                    for j in 0..nb {
                        star[i * nb + j] = u[i * nb + j] + 0.5 * dtau * tmp_b[j];
                    }
                }
                pin_all(&mut star, t_mid);
                for j in 0..nb {
                    for i in 0..na {
                        line_a[i] = star[i * nb + j];
                    }
                    implicit_solve(&la, 0.5 * dtau, &mut line_a);
                    for i in 0..na {
                        star[i * nb + j] = line_a[i];
                    }
                }
                // explicit in a, implicit in b
                for j in 0..nb {
                    for i in 0..na {
                        line_a[i] = star[i * nb + j];
                    }
                    la.apply(&line_a, &mut tmp_a);
                    for i in 0..na {
                        u[i * nb + j] = star[i * nb + j] + 0.5 * dtau * tmp_a[i];
                    }
                }
                pin_all(&mut u, t_new);
                for i in 0..na {
                    implicit_solve(&lb, 0.5 * dtau, &mut u[i * nb..(i + 1) * nb]);
                }
                check_finite(&u, t_new)?;
                rows.push(u.clone());
            }
        }
    }

    let times: Vec<f64> = (0..=steps).rev().map(time).collect();
    rows.reverse();
    SpaceTimeField::new(times, grid.clone(), rows)
}

/// Forward heat `∂ₜu - Δu = 0` on `[T, t0] ⊂ (-∞, 0)` from `u(T) = h`, by solving
/// the reflected backward problem in `s = -t`.
pub fn solve_forward_heat(problem: &HeatProblem) -> Result<SpaceTimeField> {
    if !(problem.t_final < problem.t0 && problem.t0 < 0.0) {
        return Err(Error::invalid(format!(
            "forward heat needs T < t0 < 0, got T={}, t0={}",
            problem.t_final, problem.t0
        )));
    }
    if !problem.family.is_flat() {
        return Err(Error::Unsupported(
            "forward heat by reflection needs a static flat family (R = 0)".into(),
        ));
    }
    let backward = solve_backward_heat(&problem.reflected())?;
    Ok(reflect_field(&backward))
}

/// `t ↦ -t` applied to a field; rows stay in increasing time.
pub fn reflect_field(field: &SpaceTimeField) -> SpaceTimeField {
    SpaceTimeField {
        times: field.times.iter().rev().map(|t| -t).collect(),
        grid: field.grid.clone(),
        values: field.values.iter().rev().cloned().collect(),
    }
}

/// Largest `|∂ₜu + Δu + R|` over interior times and interior nodes, with a
/// centered time difference and the discrete Laplacian.
pub fn centered_residual(field: &SpaceTimeField, family: MetricFamily) -> Result<f64> {
    let axis = field.grid.line()?;
    let n = axis.len;
    let mut worst = 0.0_f64;
    for k in 1..field.times.len().saturating_sub(1) {
        let (tm, t, tp) = (field.times[k - 1], field.times[k], field.times[k + 1]);
        let lap = laplace_beltrami(family, t, field.row(k), &field.grid)?;
        let r = family.scalar_curvature(t);
        let interior = if family == MetricFamily::Sphere2 {
            0..n
        } else {
            1..n - 1
        };
        for i in interior {
            let ut = (field.values[k + 1][i] - field.values[k - 1][i]) / (tp - tm);
            worst = worst.max((ut + lap[i] + r).abs());
        }
    }
    Ok(worst)
}

/// Second moment `∫x²u / ∫u` of a 1-D row about `center`.
pub fn variance(row: &[f64], axis: &Axis, center: f64) -> f64 {
    let w = crate::grid::trapezoid_weights(axis);
    let (mut m0, mut m2) = (0.0, 0.0);
    for (i, (u, wi)) in row.iter().zip(&w).enumerate() {
        let d = axis.node(i) - center;
        m0 += wi * u;
        m2 += wi * u * d * d;
    }
    m2 / m0
}
