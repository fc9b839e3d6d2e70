//! The potential `f` of the coupled flow `∂ₜf = -R - Δf`, the functional
//! `F = ∫(|∇f|² + R) dm` against a fixed measure, and its monotonicity.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, Axis, SpaceTimeField, SpatialGrid};
use crate::heat::{solve_backward_heat, HeatProblem};
use crate::metrics::{has_pole_margin, metric_at, MetricFamily};
use crate::profile::Profile;

fn check_family(family: MetricFamily) -> Result<()> {
    match family {
        MetricFamily::Euclid1 | MetricFamily::Sphere2 => Ok(()),
        MetricFamily::Euclid2 => Err(Error::Unsupported(
            "the coupled flow is implemented for euclid1 and sphere2".into(),
        )),
    }
}

/// Solve `∂ₜf = -R - Δf` backward from `f(T) = 0` down to `t0`.
pub fn f_evolution(
    family: MetricFamily,
    t_final: f64,
    t0: f64,
    grid: &SpatialGrid,
    dt: f64,
) -> Result<SpaceTimeField> {
    check_family(family)?;
    solve_backward_heat(&HeatProblem {
        family,
        h: Profile::Constant(0.0),
        t0,
        t_final,
        grid: grid.clone(),
        dt,
    })
}

/// Quadrature weights of the reduced grid, including the `2π` azimuth on the sphere.
fn quadrature(family: MetricFamily, axis: &Axis) -> Vec<f64> {
    match family {
        // the integrand carries sin θ, which vanishes at the omitted poles
        MetricFamily::Sphere2 if has_pole_margin(axis) => vec![2.0 * PI * axis.step; axis.len],
        MetricFamily::Sphere2 => trapezoid_weights(axis)
            .iter()
            .map(|w| 2.0 * PI * w)
            .collect(),
        _ => trapezoid_weights(axis),
    }
}

/// `dm_ref = dμ(T)` as quadrature weights on `axis`.
pub fn reference_measure(family: MetricFamily, axis: &Axis, t_final: f64) -> Result<Vec<f64>> {
    quadrature(family, axis)
        .iter()
        .enumerate()
        .map(|(i, q)| Ok(q * metric_at(family, t_final, &[axis.node(i)])?.vol_weight))
        .collect()
}

/// `(f_x, f_xx)` by central differences; pole rule or one-sided at the ends.
fn derivatives(family: MetricFamily, axis: &Axis, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = axis.len;
    let h = axis.step;
    let mut fx = vec![0.0; n];
    let mut fxx = vec![0.0; n];
    for i in 1..n - 1 {
        fx[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
        fxx[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
    if family == MetricFamily::Sphere2 && has_pole_margin(axis) {
        // even extrapolation to the pole, as in the Laplacian
        let d0 = (2.0 / 3.0) * (f[1] - f[0]);
        fx[0] = d0 / h;
        fxx[0] = d0 / (h * h);
        let d1 = (2.0 / 3.0) * (f[n - 2] - f[n - 1]);
        fx[n - 1] = -d1 / h;
        fxx[n - 1] = d1 / (h * h);
    } else if n >= 4 {
        fx[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        fx[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
        fxx[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
        fxx[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
    }
    (fx, fxx)
}

fn check_level(f_level: &[f64], axis: &Axis, dm: &[f64]) -> Result<()> {
    if f_level.len() != axis.len || dm.len() != axis.len {
        return Err(Error::invalid(format!(
            "grid mismatch: field {}, weights {}, grid {}",
            f_level.len(),
            dm.len(),
            axis.len
        )));
    }
    if axis.len < 3 {
        return Err(Error::invalid("functional needs at least 3 grid points"));
    }
    Ok(())
}

fn finite(value: f64, t: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::diverged(t, "non-finite quadrature"))
    }
}

/// `F(t) = ∫ (g^{ij}∂ᵢf∂ⱼf + R) dm_ref`.
pub fn f_functional(
    family: MetricFamily,
    f_level: &[f64],
    axis: &Axis,
    t: f64,
    dm_ref: &[f64],
) -> Result<f64> {
    check_family(family)?;
    check_level(f_level, axis, dm_ref)?;
    let (fx, _) = derivatives(family, axis, f_level);
    let r = family.scalar_curvature(t);
    let ginv = 1.0 / family.conformal_factor(t);
    finite(
        dm_ref
            .iter()
            .zip(&fx)
            .map(|(w, d)| w * (ginv * d * d + r))
            .sum(),
        t,
    )
}

/// `2∫|Ric + Hess f|²_g dm_ref`.
pub fn ricci_hessian_integral(
    family: MetricFamily,
    f_level: &[f64],
    axis: &Axis,
    t: f64,
    dm_ref: &[f64],
) -> Result<f64> {
    check_family(family)?;
    check_level(f_level, axis, dm_ref)?;
    let (fx, fxx) = derivatives(family, axis, f_level);
    let rho = family.conformal_factor(t);
    let integrand = |i: usize| match family {
        MetricFamily::Sphere2 => {
            let cot = 1.0 / axis.node(i).tan();
            ((1.0 + fxx[i]).powi(2) + (1.0 + cot * fx[i]).powi(2)) / (rho * rho)
        }
        _ => fxx[i] * fxx[i],
    };
    finite(
        2.0 * (0..axis.len).map(|i| dm_ref[i] * integrand(i)).sum::<f64>(),
        t,
    )
}

/// Potential of the coupled flow with its fixed reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledFlowState {
    pub family: MetricFamily,
    pub f: SpaceTimeField,
    pub t_final: f64,
    pub dm_ref: Vec<f64>,
}

impl CoupledFlowState {
    /// Wrap a solved potential; its last row must be the terminal level `f(T) = 0`.
    pub fn new(family: MetricFamily, f: SpaceTimeField) -> Result<Self> {
        check_family(family)?;
        let axis = f.grid.line()?;
        let t_final = *f
            .times
            .last()
            .ok_or_else(|| Error::invalid("empty potential"))?;
        if f.values.last().unwrap().iter().any(|v| *v != 0.0) {
            return Err(Error::invalid("potential must vanish at the terminal time"));
        }
        let dm_ref = reference_measure(family, &axis, t_final)?;
        Ok(CoupledFlowState {
            family,
            f,
            t_final,
            dm_ref,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Interior times at which `lhs` and `rhs` are reported.
    pub times: Vec<f64>,
    /// `F` at every stored time.
    pub functional: Vec<f64>,
    /// Centered difference quotient of `F`.
    pub lhs: Vec<f64>,
    /// `2∫|Ric + Hess f|² dm`.
    pub rhs: Vec<f64>,
    /// `max_t |∫e^{-f}dμ(t) / ∫e^{-f}dμ(T) - 1|`.
    pub rn_drift: f64,
}

pub fn monotonicity_check(state: &CoupledFlowState) -> Result<MonotonicityReport> {
    let family = state.family;
    let axis = state.f.grid.line()?;
    let times = &state.f.times;
    let functional = times
        .iter()
        .zip(&state.f.values)
        .map(|(t, row)| f_functional(family, row, &axis, *t, &state.dm_ref))
        .collect::<Result<Vec<f64>>>()?;
    let k_max = times.len().saturating_sub(1);
    let mut out = MonotonicityReport {
        times: Vec::new(),
        functional,
        lhs: Vec::new(),
        rhs: Vec::new(),
        rn_drift: 0.0,
    };
    for k in 1..k_max {
        out.times.push(times[k]);
        out.lhs
            .push((out.functional[k + 1] - out.functional[k - 1]) / (times[k + 1] - times[k - 1]));
        out.rhs.push(ricci_hessian_integral(
            family,
            state.f.row(k),
            &axis,
            times[k],
            &state.dm_ref,
        )?);
    }
    let q = quadrature(family, &axis);
    let mass = |k: usize| -> Result<f64> {
        let t = times[k];
        let mut m = 0.0;
        for (i, (qi, f)) in q.iter().zip(state.f.row(k)).enumerate() {
            m += qi * (-f).exp() * metric_at(family, t, &[axis.node(i)])?.vol_weight;
        }
        finite(m, t)
    };
    let m_final = mass(k_max)?;
    for k in 0..=k_max {
        out.rn_drift = out.rn_drift.max((mass(k)? / m_final - 1.0).abs());
    }
    Ok(out)
}
