//! Lifting a function of `(t, x)` to a radial function of `(x, y)`, `y ∈ ℝᴺ`,
//! through `t = |y|² / 2N`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpatialGrid};
use crate::heat::KernelSolution;
use crate::metrics::{laplace_beltrami, MetricFamily};

/// Base function `w(t, x)` of a lift.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatBase {
    Constant(f64),
    /// `offset + rate * t + slope · x`
    Affine {
        offset: f64,
        rate: f64,
        slope: Vec<f64>,
    },
    Kernel(KernelSolution),
    /// Euclidean samples; derivatives by finite differences at interior nodes.
    Sampled(SpaceTimeField),
}

impl HeatBase {
    pub fn value(&self, t: f64, x: &[f64]) -> Result<f64> {
        match self {
            HeatBase::Constant(c) => Ok(*c),
            HeatBase::Affine {
                offset,
                rate,
                slope,
            } => Ok(offset + rate * t + dot(slope, x)),
            HeatBase::Kernel(k) => k.value(t, x),
            HeatBase::Sampled(f) => {
                let (k, i) = sampled_index(f, t, x)?;
                Ok(f.values[k][i])
            }
        }
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> Result<f64> {
        match self {
            HeatBase::Constant(_) => Ok(0.0),
            HeatBase::Affine { rate, .. } => Ok(*rate),
            HeatBase::Kernel(k) => k.dt(t, x),
            HeatBase::Sampled(f) => Ok(sampled_time_derivatives(f, t, x)?.0),
        }
    }

    pub fn dtt(&self, t: f64, x: &[f64]) -> Result<f64> {
        match self {
            HeatBase::Constant(_) | HeatBase::Affine { .. } => Ok(0.0),
            HeatBase::Kernel(k) => k.dtt(t, x),
            HeatBase::Sampled(f) => Ok(sampled_time_derivatives(f, t, x)?.1),
        }
    }

    pub fn laplacian_x(&self, t: f64, x: &[f64]) -> Result<f64> {
        match self {
            HeatBase::Constant(_) | HeatBase::Affine { .. } => Ok(0.0),
            HeatBase::Kernel(k) => k.laplacian_x(t, x),
            HeatBase::Sampled(f) => {
                let (k, i) = sampled_index(f, t, x)?;
                let family = match f.grid.dim() {
                    1 => MetricFamily::Euclid1,
                    _ => MetricFamily::Euclid2,
                };
                Ok(laplace_beltrami(family, t, f.row(k), &f.grid)?[i])
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn sampled_index(f: &SpaceTimeField, t: f64, x: &[f64]) -> Result<(usize, usize)> {
    let k = f.time_index(t).ok_or_else(|| {
        Error::invalid(format!("t = {t} is not a stored time of the sampled base"))
    })?;
    let i = f
        .grid
        .points()
        .position(|p| {
            p.iter()
                .zip(x)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()))
        })
        .ok_or_else(|| Error::invalid(format!("x = {x:?} is not a node of the sampled base")))?;
    Ok((k, i))
}

fn sampled_time_derivatives(f: &SpaceTimeField, t: f64, x: &[f64]) -> Result<(f64, f64)> {
    let (k, i) = sampled_index(f, t, x)?;
    if k == 0 || k + 1 >= f.times.len() {
        return Err(Error::invalid(format!(
            "t = {t} is not an interior time of the sampled base"
        )));
    }
    let (hm, hp) = (f.times[k] - f.times[k - 1], f.times[k + 1] - f.times[k]);
    let (um, u0, up) = (f.values[k - 1][i], f.values[k][i], f.values[k + 1][i]);
    let dt = (hm * hm * (up - u0) + hp * hp * (u0 - um)) / (hm * hp * (hm + hp));
    let dtt = 2.0 * ((up - u0) / hp - (u0 - um) / hm) / (hm + hp);
    Ok((dt, dtt))
}

/// `ũ(x, r) = w(r² / 2N, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedField {
    pub n: usize,
    pub base: HeatBase,
}

impl LiftedField {
    pub fn new(n: usize, base: HeatBase) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("fiber dimension N must be positive"));
        }
        Ok(LiftedField { n, base })
    }

    pub fn time_of_radius(&self, r: f64) -> f64 {
        r * r / (2.0 * self.n as f64)
    }

    pub fn slice_radius(&self, t: f64) -> f64 {
        (2.0 * self.n as f64 * t).sqrt()
    }

    pub fn eval(&self, x: &[f64], r: f64) -> Result<f64> {
        self.base.value(self.time_of_radius(r), x)
    }

    /// `(ũ_r, ũ_rr)` by the chain rule through `t(r) = r²/2N`.
    pub fn radial_derivatives(&self, x: &[f64], r: f64) -> Result<(f64, f64)> {
        let n = self.n as f64;
        let t = self.time_of_radius(r);
        let (wt, wtt) = (self.base.dt(t, x)?, self.base.dtt(t, x)?);
        let dt_dr = r / n;
        Ok((wt * dt_dr, wtt * dt_dr * dt_dr + wt / n))
    }

    /// Radial part of `Δ_y ũ`, `ũ_rr + ((N - 1)/r) ũ_r`.
    pub fn radial_laplacian(&self, x: &[f64], r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::invalid("radial Laplacian is singular at r = 0"));
        }
        let (ur, urr) = self.radial_derivatives(x, r)?;
        Ok(urr + (self.n as f64 - 1.0) / r * ur)
    }
}

/// Both sides of `Δ_y ũ = w_t + (2t/N) w_tt` at the point of the slice `r = √(2Nt)`.
pub fn dy_laplacian_of_lift(base: &HeatBase, n: usize, t: f64, x: &[f64]) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!(
            "lift identity needs t > 0 (r = 0 is singular), got t = {t}"
        )));
    }
    let lift = LiftedField::new(n, base.clone())?;
    let lhs = lift.radial_laplacian(x, lift.slice_radius(t))?;
    let rhs = base.dt(t, x)? + 2.0 * t / n as f64 * base.dtt(t, x)?;
    Ok((lhs, rhs))
}

/// Default relative tolerance of the heat-residual precheck for analytic bases.
pub const HEAT_CHECK_TOLERANCE: f64 = 1e-8;

/// Full `(x, y)`-Laplacian of the lift on the slice, `Δ_x ũ + ũ_rr + ((N-1)/r) ũ_r`
/// at `r = √(2Nt)`, over `times × grid`.
pub fn almost_harmonic_residual(
    base: &HeatBase,
    n: usize,
    times: &[f64],
    grid: &SpatialGrid,
) -> Result<SpaceTimeField> {
    almost_harmonic_residual_with_tolerance(base, n, times, grid, HEAT_CHECK_TOLERANCE)
}

/// As [`almost_harmonic_residual`], refusing bases whose own heat residual
/// `max|w_t + Δ_x w|` exceeds `tolerance · (1 + max|w_t|)`.
pub fn almost_harmonic_residual_with_tolerance(
    base: &HeatBase,
    n: usize,
    times: &[f64],
    grid: &SpatialGrid,
    tolerance: f64,
) -> Result<SpaceTimeField> {
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::invalid("residual times must be positive"));
    }
    let points: Vec<Vec<f64>> = grid.points().collect();
    let mut heat_residual = 0.0_f64;
    let mut scale = 0.0_f64;
    for &t in times {
        for p in &points {
            let wt = base.dt(t, p)?;
            heat_residual = heat_residual.max((wt + base.laplacian_x(t, p)?).abs());
            scale = scale.max(wt.abs());
        }
    }
    let bound = tolerance * (1.0 + scale);
    if !(heat_residual <= bound) {
        return Err(Error::NotHeatSolution {
            max_residual: heat_residual,
            tolerance: bound,
        });
    }
    let lift = LiftedField::new(n, base.clone())?;
    let rows = times
        .iter()
        .map(|&t| {
            let r = lift.slice_radius(t);
            points
                .iter()
                .map(|p| Ok(base.laplacian_x(t, p)? + lift.radial_laplacian(p, r)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(times.to_vec(), grid.clone(), rows)
}

/// Rotational average of a function on ℝᴺ as a function of the radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Average `f` over the sphere of each radius in `radii`.
///
/// N = 2 uses `quadrature_points` equally spaced angles. N = 3 uses a product rule:
/// `quadrature_points` Gauss–Legendre nodes in `cos θ` times `2·quadrature_points`
/// equally spaced azimuths, exact for polynomials of degree below `2·quadrature_points`.
pub fn symmetrize_small_n<F>(
    f: F,
    n: usize,
    quadrature_points: usize,
    radii: &[f64],
) -> Result<RadialProfile>
where
    F: Fn(&[f64]) -> f64,
{
    if quadrature_points < 8 {
        return Err(Error::invalid(format!(
            "need at least 8 quadrature points, got {quadrature_points}"
        )));
    }
    let values = match n {
        2 => {
            let m = quadrature_points;
            radii
                .iter()
                .map(|&r| {
                    (0..m)
                        .map(|k| {
                            let phi = 2.0 * PI * k as f64 / m as f64;
                            f(&[r * phi.cos(), r * phi.sin()])
                        })
                        .sum::<f64>()
                        / m as f64
                })
                .collect()
        }
        3 => {
            let (z, wz) = gauss_legendre(quadrature_points);
            let m = 2 * quadrature_points;
            radii
                .iter()
                .map(|&r| {
                    let mut acc = 0.0;
                    for (zi, wi) in z.iter().zip(&wz) {
                        let s = (1.0 - zi * zi).sqrt();
                        let ring: f64 = (0..m)
                            .map(|k| {
                                let phi = 2.0 * PI * k as f64 / m as f64;
                                f(&[r * s * phi.cos(), r * s * phi.sin(), r * zi])
                            })
                            .sum();
                        acc += wi * ring / m as f64;
                    }
                    0.5 * acc
                })
                .collect()
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "explicit rotational averaging is implemented for N = 2, 3 only, got {n}"
            )))
        }
    };
    Ok(RadialProfile {
        radii: radii.to_vec(),
        values,
    })
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { 1.0 } else { p0 };
            let pn = if m == 1 { z } else { p1 };
            dp = m as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}
