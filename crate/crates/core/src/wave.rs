//! Finite-N wave evolution
//! `(2t/N + c) u_tt + (tR/N) u_t - Δ_{g(t)} u - (u_rr + (N-1)/r u_r) = R`
//! backward from `t = T` in radial-in-y coordinates, and its restriction to the
//! hypersurface `r = √(2Nt)`.

use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cubic_interpolate, Axis, SpaceTimeField, SpatialGrid};
use crate::heat::{box_half_width, solve_backward_heat, HeatProblem, KernelSolution};
use crate::metrics::{laplace_beltrami, sphere_unit_stencil, MetricFamily, Tridiagonal};
use crate::profile::Profile;
use crate::table::{ResultTable, DIVERGED};

/// Terminal velocity `∂ₜu(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    /// `-R(T, x)`; config value `paper`
    #[serde(rename = "paper")]
    CurvatureOnly,
    /// `-Δ_{g(T)} h - R(T, x)`
    HeatCompatible,
}

impl FromStr for VelocityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(VelocityMode::CurvatureOnly),
            "heat_compatible" => Ok(VelocityMode::HeatCompatible),
            _ => Err(Error::Config(format!(
                "unknown terminal velocity mode `{s}`"
            ))),
        }
    }
}

/// Terminal displacement `u(T, x, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalData {
    /// `u(T, x, r) = h(x)` for every r.
    Uniform,
    /// Manufactured data: the lift `w(r²/2N, x)` of the exact heat solution, with
    /// zero velocity. The velocity mode is ignored.
    Lift,
}

impl FromStr for TerminalData {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(TerminalData::Uniform),
            "lift" => Ok(TerminalData::Lift),
            _ => Err(Error::Config(format!("unknown wave terminal data `{s}`"))),
        }
    }
}

/// Everything needed to build a [`WaveProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpec {
    pub family: MetricFamily,
    pub n: usize,
    pub h: Profile,
    pub velocity_mode: VelocityMode,
    pub data: TerminalData,
    pub c_shift: f64,
    pub t0: f64,
    pub t_final: f64,
    pub dx: f64,
    pub dr: f64,
    pub dt_safety: f64,
    /// Number of equally spaced slice rows in `[t0, T]`.
    pub record_levels: usize,
    /// Keep every K-th full level (0 keeps none).
    pub keep_every: usize,
    /// Largest admissible number of (x, r) nodes.
    pub max_points: usize,
    /// Relative slack on the causal padding.
    pub padding_slack: f64,
}

impl WaveSpec {
    pub fn new(family: MetricFamily, n: usize, h: Profile, t0: f64, t_final: f64) -> Self {
        WaveSpec {
            family,
            n,
            h,
            velocity_mode: VelocityMode::HeatCompatible,
            data: TerminalData::Uniform,
            c_shift: 0.0,
            t0,
            t_final,
            dx: 0.05,
            dr: 0.05,
            dt_safety: 0.5,
            record_levels: 16,
            keep_every: 0,
            max_points: 20_000_000,
            padding_slack: 0.2,
        }
    }

    /// `1 / √(2t/N + c)`, the propagation speed at time `t`.
    pub fn speed(&self, t: f64) -> f64 {
        1.0 / (2.0 * t / self.n as f64 + self.c_shift).sqrt()
    }

    /// `∫_{t0}^{T} speed(s) ds`.
    pub fn travel(&self) -> f64 {
        let n = self.n as f64;
        let c = self.c_shift;
        n * ((2.0 * self.t_final / n + c).sqrt() - (2.0 * self.t0 / n + c).sqrt())
    }

    pub fn slice_radius(&self, t: f64) -> f64 {
        (2.0 * self.n as f64 * t).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("fiber dimension N must be >= 2"));
        }
        if !(self.t0 > 0.0 && self.t0 < self.t_final) {
            return Err(Error::invalid(format!(
                "need 0 < t0 < T, got t0={}, T={}",
                self.t0, self.t_final
            )));
        }
        self.family.check_time(self.t_final)?;
        if !(self.c_shift >= 0.0) {
            return Err(Error::invalid("c_shift must be nonnegative"));
        }
        if self.c_shift > 0.0 && !self.family.is_flat() {
            return Err(Error::Unsupported(
                "c_shift > 0 is only defined for Euclidean families".into(),
            ));
        }
        if self.family.spatial_dim() != 1 {
            return Err(Error::Unsupported(format!(
                "wave solver handles one reduced x-coordinate; {} has {}",
                self.family,
                self.family.spatial_dim()
            )));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety < 1.0) {
            return Err(Error::invalid("dt_safety must lie in (0, 1)"));
        }
        if !(self.dx > 0.0 && self.dr > 0.0) {
            return Err(Error::invalid("grid steps must be positive"));
        }
        if self.record_levels < 2 {
            return Err(Error::invalid("need at least 2 record levels"));
        }
        self.h.validate(1)
    }
}

/// Exact heat solution used as terminal lift data and as sweep oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatOracle {
    Kernel(KernelSolution),
    /// `c + ln((1 - 2t)/(1 - 2T))` on the sphere.
    SphereConstant {
        c: f64,
        t_final: f64,
    },
    /// Fine-grid numerical solution; evaluated at its stored times and nodes.
    Sampled(SpaceTimeField),
}

impl HeatOracle {
    /// Closed-form oracle for `h` on `family`, if there is one.
    pub fn closed_form(family: MetricFamily, h: &Profile, t_final: f64) -> Option<Self> {
        match (family, h) {
            (MetricFamily::Sphere2, Profile::Constant(c)) => {
                Some(HeatOracle::SphereConstant { c: *c, t_final })
            }
            (MetricFamily::Sphere2, _) => None,
            _ => KernelSolution::new(h.clone(), t_final)
                .ok()
                .map(HeatOracle::Kernel),
        }
    }

    /// Closed form when available, else a Crank–Nicolson solve on `x_axis`
    /// sampled at `times`.
    pub fn for_sweep(spec: &WaveSpec, x_axis: &Axis, times: &[f64]) -> Result<Self> {
        if let Some(o) = HeatOracle::closed_form(spec.family, &spec.h, spec.t_final) {
            return Ok(o);
        }
        let gaps = times.len().saturating_sub(1).max(1);
        let per_gap = ((spec.t_final - spec.t0) / gaps as f64 / 1e-3)
            .ceil()
            .max(1.0);
        let problem = HeatProblem {
            family: spec.family,
            h: spec.h.clone(),
            t0: spec.t0,
            t_final: spec.t_final,
            grid: SpatialGrid::Line(*x_axis),
            dt: (spec.t_final - spec.t0) / (gaps as f64 * per_gap),
        };
        Ok(HeatOracle::Sampled(solve_backward_heat(&problem)?))
    }

    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            HeatOracle::Kernel(k) => k.value(t, &[x]),
            HeatOracle::SphereConstant { c, t_final } => {
                Ok(c + ((1.0 - 2.0 * t) / (1.0 - 2.0 * t_final)).ln())
            }
            HeatOracle::Sampled(f) => {
                let k = f
                    .time_index(t)
                    .ok_or_else(|| Error::invalid(format!("oracle has no row at t = {t}")))?;
                let axis = f.grid.line()?;
                let i = ((x - axis.start) / axis.step).round();
                if i < 0.0 || i as usize >= axis.len || (axis.node(i as usize) - x).abs() > 1e-9 {
                    return Err(Error::invalid(format!("oracle has no node at x = {x}")));
                }
                Ok(f.values[k][i as usize])
            }
        }
    }

    /// Latest time at which the oracle is defined.
    fn t_max(&self) -> f64 {
        match self {
            HeatOracle::Kernel(k) => k.t_max(),
            HeatOracle::SphereConstant { .. } => 0.5,
            HeatOracle::Sampled(f) => *f.times.last().unwrap(),
        }
    }
}

/// One time level: `u` and `v = ∂ₜu` on the `(x, r)` grid, shape `(nx, nr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveProblem {
    pub spec: WaveSpec,
    pub x_axis: Axis,
    pub r_axis: Axis,
    pub terminal: WaveState,
    pub record_times: Vec<f64>,
    x_operator: Option<Tridiagonal>,
    radial_lower: Vec<f64>,
    radial_upper: Vec<f64>,
}

/// Spatial axes chosen by the padding rules.
pub fn default_axes(spec: &WaveSpec) -> Result<(Axis, Axis)> {
    spec.validate()?;
    let travel = (1.0 + spec.padding_slack) * spec.travel();
    let x_axis = match spec.family {
        MetricFamily::Sphere2 => {
            MetricFamily::pole_margin_axis((std::f64::consts::PI / spec.dx).round() as usize)?
        }
        _ => {
            let (center, half) = box_half_width(&spec.h, spec.t_final - spec.t0);
            let c = center.first().copied().unwrap_or(0.0);
            Axis::spanning(c - half - travel, c + half + travel, spec.dx)?
        }
    };
    let slice_lo = spec.slice_radius(spec.t0);
    let slice_hi = spec.slice_radius(spec.t_final);
    let r_min = (slice_lo - travel).max(0.5 * slice_lo);
    let r_max = match spec.data {
        TerminalData::Uniform => slice_hi + travel,
        TerminalData::Lift => {
            // The lift is only defined while its base is; inward signals from
            // r_max run parallel to the slice curve and never reach it.
            let oracle = HeatOracle::closed_form(spec.family, &spec.h, spec.t_final);
            let t_max = oracle.map(|o| o.t_max()).unwrap_or(f64::INFINITY);
            let t_cap =
                spec.t_final + (0.25 * (spec.t_final - spec.t0)).min(0.5 * (t_max - spec.t_final));
            (slice_hi + travel).min(spec.slice_radius(t_cap))
        }
    };
    let r_axis = Axis::spanning(r_min, r_max, spec.dr)?;
    let points = x_axis.len * r_axis.len;
    if points > spec.max_points {
        return Err(Error::PaddingUnsatisfiable {
            required_r_max: r_max,
            points,
            budget: spec.max_points,
        });
    }
    Ok((x_axis, r_axis))
}

pub fn build_wave_problem(spec: &WaveSpec) -> Result<WaveProblem> {
    let (x_axis, r_axis) = default_axes(spec)?;
    build_wave_problem_on(spec, x_axis, r_axis)
}

/// Build on explicit axes (used to refine with fixed extents).
pub fn build_wave_problem_on(spec: &WaveSpec, x_axis: Axis, r_axis: Axis) -> Result<WaveProblem> {
    spec.validate()?;
    let n = spec.n as f64;
    if r_axis.len < 4 || x_axis.len < 3 {
        return Err(Error::invalid("wave grid too small"));
    }
    if !(r_axis.start > 0.0
        && r_axis.start < spec.slice_radius(spec.t0)
        && r_axis.end() > spec.slice_radius(spec.t_final))
    {
        return Err(Error::invalid(format!(
            "r-grid [{}, {}] must satisfy 0 < r_min < √(2N t0) and r_max > √(2N T)",
            r_axis.start,
            r_axis.end()
        )));
    }
    if (n - 1.0) * r_axis.step / (2.0 * r_axis.start) >= 1.0 {
        return Err(Error::invalid(format!(
            "Δr = {} too coarse for the radial stencil at r_min = {} (need (N-1)Δr < 2 r_min)",
            r_axis.step, r_axis.start
        )));
    }
    let x_operator = match spec.family {
        MetricFamily::Sphere2 => Some(sphere_unit_stencil(&x_axis)?),
        _ => None,
    };
    let (radial_lower, radial_upper): (Vec<f64>, Vec<f64>) = r_axis
        .nodes()
        .map(|r| {
            let h = r_axis.step;
            let k = (n - 1.0) / (2.0 * r * h);
            (1.0 / (h * h) - k, 1.0 / (h * h) + k)
        })
        .unzip();

    let t_final = spec.t_final;
    let (nx, nr) = (x_axis.len, r_axis.len);
    let mut u = Array2::zeros((nx, nr));
    let mut v = Array2::zeros((nx, nr));
    let r_term = spec.family.scalar_curvature(t_final);
    match spec.data {
        TerminalData::Uniform => {
            let grid = SpatialGrid::Line(x_axis);
            let hx: Vec<f64> = x_axis.nodes().map(|x| spec.h.eval(&[x])).collect();
            let velocity: Vec<f64> = match spec.velocity_mode {
                VelocityMode::CurvatureOnly => vec![-r_term; nx],
                VelocityMode::HeatCompatible => {
                    let analytic: Option<Vec<f64>> = x_axis
                        .nodes()
                        .map(|x| spec.h.laplacian(spec.family, t_final, &[x]))
                        .collect();
                    let lap = match analytic {
                        Some(l) => l,
                        None => laplace_beltrami(spec.family, t_final, &hx, &grid)?,
                    };
                    lap.iter().map(|l| -l - r_term).collect()
                }
            };
            for i in 0..nx {
                u.row_mut(i).fill(hx[i]);
                v.row_mut(i).fill(velocity[i]);
            }
        }
        TerminalData::Lift => {
            let oracle =
                HeatOracle::closed_form(spec.family, &spec.h, t_final).ok_or_else(|| {
                    Error::Unsupported(format!(
                        "lift data needs a closed-form heat solution; `{}` on {} has none",
                        spec.h.name(),
                        spec.family
                    ))
                })?;
            for i in 0..nx {
                for j in 0..nr {
                    let r = r_axis.node(j);
                    u[(i, j)] = oracle.value(r * r / (2.0 * n), x_axis.node(i))?;
                }
            }
        }
    }
    let gaps = spec.record_levels - 1;
    let record_times = (0..=gaps)
        .map(|k| {
            if k == gaps {
                spec.t0
            } else {
                t_final - (t_final - spec.t0) * k as f64 / gaps as f64
            }
        })
        .collect();
    Ok(WaveProblem {
        spec: spec.clone(),
        x_axis,
        r_axis,
        terminal: WaveState { t: t_final, u, v },
        record_times,
        x_operator,
        radial_lower,
        radial_upper,
    })
}

impl WaveProblem {
    fn pinned_x(&self) -> bool {
        self.x_operator.is_none()
    }

    // Boundary nodes follow the first-order extension `u(T) + (t - T) v(T)`
    // of the terminal data, so the corner at t = T is compatible.
    fn pin_velocity(&self, v: &mut Array2<f64>) {
        let (nx, nr) = v.dim();
        let v_t = &self.terminal.v;
        for i in 0..nx {
            v[(i, 0)] = v_t[(i, 0)];
            v[(i, nr - 1)] = v_t[(i, nr - 1)];
        }
        if self.pinned_x() {
            v.row_mut(0).assign(&v_t.row(0));
            v.row_mut(nx - 1).assign(&v_t.row(nx - 1));
        }
    }

    fn pin_displacement(&self, u: &mut Array2<f64>, t: f64) {
        let (nx, nr) = u.dim();
        let (u_t, v_t) = (&self.terminal.u, &self.terminal.v);
        let lag = t - self.terminal.t;
        for i in 0..nx {
            u[(i, 0)] = u_t[(i, 0)] + lag * v_t[(i, 0)];
            u[(i, nr - 1)] = u_t[(i, nr - 1)] + lag * v_t[(i, nr - 1)];
        }
        if self.pinned_x() {
            for j in 0..nr {
                u[(0, j)] = u_t[(0, j)] + lag * v_t[(0, j)];
                u[(nx - 1, j)] = u_t[(nx - 1, j)] + lag * v_t[(nx - 1, j)];
            }
        }
    }

    /// Same extents, half of every step (Δx, Δr and, at fixed Courant factor, dt).
    pub fn refined(&self) -> Result<WaveProblem> {
        let mut spec = self.spec.clone();
        spec.dx *= 0.5;
        spec.dr *= 0.5;
        let x_axis = match spec.family {
            MetricFamily::Sphere2 => {
                let cells = (std::f64::consts::PI / self.x_axis.step).round() as usize;
                MetricFamily::pole_margin_axis(2 * cells)?
            }
            _ => self.x_axis.refined(),
        };
        build_wave_problem_on(&spec, x_axis, self.r_axis.refined())
    }

    /// `∂ₜₜu` forcing without the damping term: `(L u + R) / (2t/N + c)`.
    fn acceleration(&self, u: &Array2<f64>, t: f64, out: &mut Array2<f64>) {
        let spec = &self.spec;
        let (nx, nr) = u.dim();
        let inertia = 2.0 * t / spec.n as f64 + spec.c_shift;
        let r_term = spec.family.scalar_curvature(t);
        let conformal = spec.family.conformal_factor(t);
        let hx2 = self.x_axis.step * self.x_axis.step;
        let us = u.as_slice().expect("standard layout");
        let xop = self.x_operator.as_ref();
        let (lo, up) = (&self.radial_lower, &self.radial_upper);
        let hr2 = self.r_axis.step * self.r_axis.step;
        out.as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(nr)
            .enumerate()
            .for_each(|(i, acc)| {
                let row = &us[i * nr..(i + 1) * nr];
                let edge_x = xop.is_none() && (i == 0 || i == nx - 1);
                if edge_x {
                    acc.fill(0.0);
                    return;
                }
                let (prev, next) = if i > 0 && i + 1 < nx {
                    (&us[(i - 1) * nr..i * nr], &us[(i + 1) * nr..(i + 2) * nr])
                } else {
                    (row, row)
                };
                acc[0] = 0.0;
                acc[nr - 1] = 0.0;
                for j in 1..nr - 1 {
                    let lx = match xop {
                        None => (prev[j] - 2.0 * row[j] + next[j]) / hx2,
                        Some(op) => {
                            let mut s = op.diag[i] * row[j];
                            if i > 0 {
                                s += op.lower[i] * us[(i - 1) * nr + j];
                            }
                            if i + 1 < nx {
                                s += op.upper[i] * us[(i + 1) * nr + j];
                            }
                            s / conformal
                        }
                    };
                    let lr = lo[j] * row[j - 1] - 2.0 / hr2 * row[j] + up[j] * row[j + 1];
                    acc[j] = (lx + lr + r_term) / inertia;
                }
            });
    }

    /// Damping rate `(tR/N) / (2t/N + c)`.
    fn damping(&self, t: f64) -> f64 {
        let spec = &self.spec;
        let n = spec.n as f64;
        t * spec.family.scalar_curvature(t) / n / (2.0 * t / n + spec.c_shift)
    }

    /// Step from `t` toward `t0` by the CFL rule evaluated at the earlier end.
    pub fn cfl_step(&self, t: f64) -> Result<f64> {
        let spec = &self.spec;
        let conformal_lo = spec.family.conformal_factor(t).min(1.0);
        let h = spec.dt_safety * (self.x_axis.step * conformal_lo.sqrt()).min(self.r_axis.step);
        // dt = h √(2(t - dt)/N + c)  ⇔  dt² + a dt - (a t + h² c) = 0 with a = 2h²/N
        let a = 2.0 * h * h / spec.n as f64;
        let b = a * t + h * h * spec.c_shift;
        let dt = 0.5 * (-a + (a * a + 4.0 * b).sqrt());
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!(
                "CFL step is not positive at t = {t}"
            )));
        }
        Ok(dt)
    }

    /// One backward step of at most the CFL step, not passing `t_stop`.
    pub fn step_to(&self, state: &WaveState, t_stop: f64) -> Result<WaveState> {
        let dt = self.cfl_step(state.t)?.min(state.t - t_stop);
        if !(dt > 0.0) {
            return Err(Error::invalid("step target is not below the current time"));
        }
        let t_new = if dt == state.t - t_stop {
            t_stop
        } else {
            state.t - dt
        };
        let h = t_new - state.t;
        let mut acc = Array2::zeros(state.u.dim());

        self.acceleration(&state.u, state.t, &mut acc);
        let g0 = self.damping(state.t);
        let mut v = (&state.v + &(&acc * (0.5 * h))) / (1.0 + 0.5 * h * g0);
        self.pin_velocity(&mut v);
        let mut u = &state.u + &(&v * h);
        self.pin_displacement(&mut u, t_new);

        self.acceleration(&u, t_new, &mut acc);
        let g1 = self.damping(t_new);
        let vh = v.clone();
        v = &vh + &((&acc - &(&vh * g1)) * (0.5 * h));
        self.pin_velocity(&mut v);

        if u.iter().chain(v.iter()).any(|z| !z.is_finite()) {
            return Err(Error::diverged(t_new, "non-finite wave state"));
        }
        Ok(WaveState { t: t_new, u, v })
    }

    /// One full CFL step toward `t0`.
    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        self.step_to(state, self.spec.t0)
    }

    /// Slice row `u(t, x, √(2Nt))` of a state.
    pub fn slice_row(&self, state: &WaveState) -> Result<Vec<f64>> {
        slice_state(state, &self.r_axis, self.spec.n)
    }
}

fn slice_state(state: &WaveState, r_axis: &Axis, n: usize) -> Result<Vec<f64>> {
    let r = (2.0 * n as f64 * state.t).sqrt();
    let tol = 1e-12 * r_axis.end();
    if !(r >= r_axis.start - tol && r <= r_axis.end() + tol) || r_axis.len < 4 {
        return Err(Error::SliceOutsideGrid {
            time: state.t,
            radius: r,
            r_min: r_axis.start,
            r_max: r_axis.end(),
        });
    }
    let r = r.clamp(r_axis.start, r_axis.end());
    Ok(state
        .u
        .rows()
        .into_iter()
        .map(|row| cubic_interpolate(r_axis, |j| row[j], r))
        .collect())
}

/// Restrict stored `(t, x, r)` levels to `r = √(2Nt)`.
pub fn slice_hypersurface(
    levels: &[WaveState],
    x_axis: &Axis,
    r_axis: &Axis,
    n: usize,
) -> Result<SpaceTimeField> {
    let mut sorted: Vec<&WaveState> = levels.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut times = Vec::with_capacity(sorted.len());
    let mut rows = Vec::with_capacity(sorted.len());
    for s in sorted {
        if s.u.dim() != (x_axis.len, r_axis.len) {
            return Err(Error::invalid("stored level does not match the grid"));
        }
        times.push(s.t);
        rows.push(slice_state(s, r_axis, n)?);
    }
    SpaceTimeField::new(times, SpatialGrid::Line(*x_axis), rows)
}

/// Output of a backward wave solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRecord {
    pub slice: SpaceTimeField,
    pub dt_history: Vec<f64>,
    pub max_abs_u: f64,
    /// Every K-th full level, in marching order.
    pub levels: Vec<WaveState>,
}

impl SliceRecord {
    pub fn dt_min(&self) -> f64 {
        self.dt_history
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn solve_backward_wave(problem: &WaveProblem) -> Result<SliceRecord> {
    let spec = &problem.spec;
    let mut state = problem.terminal.clone();
    let mut slice_times = vec![state.t];
    let mut slice_rows = vec![problem.slice_row(&state)?];
    let mut dt_history = Vec::new();
    let mut max_abs_u = state.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut levels = Vec::new();
    if spec.keep_every > 0 {
        levels.push(state.clone());
    }
    let mut steps = 0usize;
    for &target in &problem.record_times[1..] {
        while state.t > target {
            let next = problem.step_to(&state, target)?;
            dt_history.push(state.t - next.t);
            state = next;
            steps += 1;
            max_abs_u = state.u.iter().fold(max_abs_u, |m, v| m.max(v.abs()));
            if spec.keep_every > 0 && steps % spec.keep_every == 0 {
                levels.push(state.clone());
            }
        }
        slice_times.push(state.t);
        slice_rows.push(problem.slice_row(&state)?);
    }
    slice_times.reverse();
    slice_rows.reverse();
    Ok(SliceRecord {
        slice: SpaceTimeField::new(slice_times, SpatialGrid::Line(problem.x_axis), slice_rows)?,
        dt_history,
        max_abs_u,
        levels,
    })
}

/// Max-abs slice error against `oracle` over `[t0 + δ, T - δ]`.
pub fn slice_error(record: &SliceRecord, oracle: &HeatOracle, lo: f64, hi: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    let axis = record.slice.grid.line()?;
    for (t, row) in record.slice.times.iter().zip(&record.slice.values) {
        if *t < lo - 1e-12 || *t > hi + 1e-12 {
            continue;
        }
        for (i, v) in row.iter().enumerate() {
            worst = worst.max((v - oracle.value(*t, axis.node(i))?).abs());
        }
    }
    Ok(worst)
}

/// Probe window `[t0 + δ, T - δ]`.
pub fn probe_window(spec: &WaveSpec, delta: f64) -> (f64, f64) {
    (spec.t0 + delta, spec.t_final - delta)
}

/// Solve for every N and compare the slice with the heat oracle.
///
/// Columns: `N, e, dt_min, runtime, diverged`. Failed members are flagged and
/// carry NaN.
pub fn n_sweep(template: &WaveSpec, ns: &[usize], probe_delta: f64) -> Result<ResultTable> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] < 2 {
        return Err(Error::invalid("Ns must be strictly increasing and >= 2"));
    }
    let rows: Vec<Result<Vec<f64>>> = ns
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let spec = WaveSpec {
                n,
                ..template.clone()
            };
            let outcome = (|| -> Result<(f64, f64)> {
                let problem = build_wave_problem(&spec)?;
                let record = solve_backward_wave(&problem)?;
                let oracle = HeatOracle::for_sweep(&spec, &problem.x_axis, &record.slice.times)?;
                let (lo, hi) = probe_window(&spec, probe_delta);
                Ok((slice_error(&record, &oracle, lo, hi)?, record.dt_min()))
            })();
            let runtime = start.elapsed().as_secs_f64();
            match outcome {
                Ok((e, dt_min)) => Ok(vec![n as f64, e, dt_min, runtime, 0.0]),
                Err(err) if err.is_numerical() => {
                    Ok(vec![n as f64, f64::NAN, f64::NAN, runtime, 1.0])
                }
                Err(err) => Err(err),
            }
        })
        .collect();
    let mut table = ResultTable::new(["N", "e", "dt_min", "runtime", DIVERGED]);
    for row in rows {
        table.push(row?)?;
    }
    Ok(table)
}

/// Differences between successive refinements of the slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfConvergence {
    /// `max |S_h - S_{h/2}|`
    pub coarse_diff: f64,
    /// `max |S_{h/2} - S_{h/4}|`
    pub fine_diff: f64,
}

impl SelfConvergence {
    pub fn ratio(&self) -> f64 {
        self.coarse_diff / self.fine_diff
    }
}

/// Self-convergence of the slice under halving of (Δx, Δr, dt).
pub fn self_convergence(spec: &WaveSpec) -> Result<SelfConvergence> {
    let p0 = build_wave_problem(spec)?;
    let p1 = p0.refined()?;
    let p2 = p1.refined()?;
    let (s0, s1, s2) = (
        solve_backward_wave(&p0)?,
        solve_backward_wave(&p1)?,
        solve_backward_wave(&p2)?,
    );
    let diff = |a: &SliceRecord, b: &SliceRecord| -> Result<f64> {
        let (ax, bx) = (a.slice.grid.line()?, b.slice.grid.line()?);
        let mut worst = 0.0_f64;
        for (k, row) in a.slice.values.iter().enumerate() {
            let kb = b
                .slice
                .time_index(a.slice.times[k])
                .ok_or_else(|| Error::invalid("refined run misses a record time"))?;
            for (i, v) in row.iter().enumerate() {
                let jb = ((ax.node(i) - bx.start) / bx.step).round() as usize;
                worst = worst.max((v - b.slice.values[kb][jb]).abs());
            }
        }
        Ok(worst)
    };
    Ok(SelfConvergence {
        coarse_diff: diff(&s0, &s1)?,
        fine_diff: diff(&s1, &s2)?,
    })
}
