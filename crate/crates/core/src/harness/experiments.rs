//! One function per registered experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::fit::fit_rate;
use crate::error::{Error, Result};
use crate::gradientflow::{f_evolution, monotonicity_check, CoupledFlowState};
use crate::grid::{Axis, SpatialGrid};
use crate::heat::{default_grid, solve_forward_heat, variance, HeatProblem, KernelSolution};
use crate::lift::{almost_harmonic_residual, HeatBase};
use crate::metrics::MetricFamily;
use crate::profile::Profile;
use crate::rays::{
    classify_wf_infinity, euclid_ray_closed_form, integrate_ray, principal_symbol, PhasePoint,
};
use crate::table::ResultTable;
use crate::wave::n_sweep;

fn record_times(c: &ExperimentConfig) -> Vec<f64> {
    let gaps = c.record_levels - 1;
    (0..=gaps)
        .map(|k| {
            if k == gaps {
                c.t_final
            } else {
                c.t0 + (c.t_final - c.t0) * k as f64 / gaps as f64
            }
        })
        .collect()
}

fn add_rate_meta(table: &mut ResultTable, x: &str, y: &str) {
    match fit_rate(table, x, y) {
        Ok(fit) => {
            table.set_meta("slope", format!("{:.16e}", fit.slope));
            table.set_meta("r_squared", format!("{:.16e}", fit.r_squared));
        }
        Err(e) => table.set_meta("slope", format!("unavailable: {e}")),
    }
}

/// Columns `N, residual, predicted, mismatch`: max-abs lifted Laplacian on the
/// slice, max-abs `(2t/N) w_tt`, and their largest pointwise difference.
pub fn euclid_residual(c: &ExperimentConfig) -> Result<ResultTable> {
    let h = c.terminal_profile();
    let kernel = KernelSolution::new(h.clone(), c.t_final)?;
    let base = HeatBase::Kernel(kernel.clone());
    let grid = default_grid(c.family, &h, c.t_final - c.t0, c.dx, 0.0)?;
    let times = record_times(c);
    let rows: Vec<Result<Vec<f64>>> =
        c.ns.par_iter()
            .map(|&n| {
                let field = almost_harmonic_residual(&base, n, &times, &grid)?;
                let (mut predicted, mut mismatch) = (0.0_f64, 0.0_f64);
                for (t, row) in field.times.iter().zip(&field.values) {
                    for (p, res) in grid.points().zip(row) {
                        let expected = 2.0 * t / n as f64 * kernel.dtt(*t, &p)?;
                        predicted = predicted.max(expected.abs());
                        mismatch = mismatch.max((res - expected).abs());
                    }
                }
                Ok(vec![n as f64, field.max_abs(), predicted, mismatch])
            })
            .collect();
    let mut table = ResultTable::new(["N", "residual", "predicted", "mismatch"]);
    for row in rows {
        table.push(row?)?;
    }
    add_rate_meta(&mut table, "N", "residual");
    Ok(table)
}

/// Columns `N, e, dt_min, runtime, diverged`.
pub fn wave_sweep(c: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = n_sweep(&c.wave_spec(), &c.ns, c.probe_delta)?;
    add_rate_meta(&mut table, "N", "e");
    Ok(table)
}

/// Random characteristic seed on `euclid1`.
fn random_seed(rng: &mut ChaCha8Rng, ns: &[usize]) -> Result<PhasePoint> {
    let n = ns[rng.gen_range(0..ns.len())];
    let t = rng.gen_range(0.25..2.0);
    let x = vec![rng.gen_range(-1.0..1.0)];
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let tau = rng.gen_range(0.1..1.0);
    let xi = vec![rng.gen_range(-1.0..1.0)];
    let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    PhasePoint::new(t, x, y, tau, xi, eta)?.normalized(MetricFamily::Euclid1)
}

fn max_component_error(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let pairs = [(&a.x, &b.x), (&a.y, &b.y), (&a.xi, &b.xi), (&a.eta, &b.eta)];
    pairs
        .iter()
        .flat_map(|(u, v)| u.iter().zip(v.iter()).map(|(p, q)| (p - q).abs()))
        .fold((a.t - b.t).abs().max((a.tau - b.tau).abs()), f64::max)
}

/// Columns `ray, N, t0, tau0, max_error, symbol_drift, ttau2_drift`; the last is
/// relative to `t(0)τ(0)²`.
pub fn rays_oracle(c: &ExperimentConfig) -> Result<ResultTable> {
    let family = MetricFamily::Euclid1;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let seeds = (0..c.rays)
        .map(|_| random_seed(&mut rng, &c.ns))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Result<Vec<f64>>> = seeds
        .par_iter()
        .enumerate()
        .map(|(k, p0)| {
            let ray = integrate_ray(p0, family, c.s_max, c.ray_step)?;
            if ray.exited {
                return Err(Error::diverged(p0.t, format!("ray {k} left the domain")));
            }
            let p_start = principal_symbol(p0, family)?;
            let invariant = p0.t * p0.tau * p0.tau;
            let (mut err, mut drift, mut ttau) = (0.0_f64, 0.0_f64, 0.0_f64);
            for (s, p) in &ray.samples {
                err = err.max(max_component_error(p, &euclid_ray_closed_form(p0, *s)?));
                drift = drift.max((principal_symbol(p, family)? - p_start).abs());
                ttau = ttau.max((p.t * p.tau * p.tau / invariant - 1.0).abs());
            }
            Ok(vec![k as f64, p0.n as f64, p0.t, p0.tau, err, drift, ttau])
        })
        .collect();
    let mut table = ResultTable::new([
        "ray",
        "N",
        "t0",
        "tau0",
        "max_error",
        "symbol_drift",
        "ttau2_drift",
    ]);
    for row in rows {
        table.push(row?)?;
    }
    table.set_meta("rng", "ChaCha8Rng::seed_from_u64");
    Ok(table)
}

/// The three canonical templates at `t(0) = T`: stationary, escaping, off-characteristic.
pub fn wf_templates(c: &ExperimentConfig) -> Result<[(&'static str, PhasePoint); 3]> {
    let t = c.t_final;
    let x = vec![c.center];
    Ok([
        (
            "terminal",
            PhasePoint::new(t, x.clone(), vec![0.0], 0.0, vec![0.0], vec![0.0])?,
        ),
        (
            "null",
            PhasePoint::new(t, x.clone(), vec![0.0], 1.0, vec![1.0], vec![1.0])?,
        ),
        (
            "off",
            PhasePoint::new(t, x, vec![0.0], 1.0, vec![0.0], vec![0.0])?,
        ),
    ])
}

/// Columns `seed, class, spread, n_bound, max_symbol`; class codes
/// 0 regular, 1 terminal_stationary, 2 escapes_to_infinity, 3 indeterminate.
pub fn wf_classify(c: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(["seed", "class", "spread", "n_bound", "max_symbol"]);
    for (k, (name, template)) in wf_templates(c)?.iter().enumerate() {
        let report = classify_wf_infinity(template, c.family, &c.ns, c.s_probe, c.ray_step)?;
        let max_symbol = report
            .probes
            .iter()
            .map(|p| p.symbol.abs())
            .fold(0.0, f64::max);
        let spread = if report.spread.is_nan() {
            -1.0
        } else {
            report.spread
        };
        table.push(vec![
            k as f64,
            report.class.code(),
            spread,
            report.n_exceeding_bound.unwrap_or(0.0),
            max_symbol,
        ])?;
        table.set_meta(
            &format!("seed{k}"),
            format!("{name}: {} ({})", report.class.name(), report.note),
        );
    }
    Ok(table)
}

/// Columns `t, F, dF_dt, rhs` at interior times; metadata `rn_drift`.
pub fn f_monotonicity(c: &ExperimentConfig) -> Result<ResultTable> {
    let grid = match c.family {
        MetricFamily::Sphere2 => SpatialGrid::Line(MetricFamily::pole_margin_axis(c.cells)?),
        _ => SpatialGrid::Line(Axis::spanning(-1.0, 1.0, 2.0 / c.cells as f64)?),
    };
    let f = f_evolution(c.family, c.t_final, c.t0, &grid, c.dt)?;
    let state = CoupledFlowState::new(c.family, f)?;
    let report = monotonicity_check(&state)?;
    let mut table = ResultTable::new(["t", "F", "dF_dt", "rhs"]);
    for (k, t) in report.times.iter().enumerate() {
        table.push(vec![
            *t,
            report.functional[k + 1],
            report.lhs[k],
            report.rhs[k],
        ])?;
    }
    table.set_meta("rn_drift", format!("{:.16e}", report.rn_drift));
    Ok(table)
}

/// Columns `t, variance, variance_exact, max_error` for the forward solve on `[T, t0]`.
pub fn forward_heat(c: &ExperimentConfig) -> Result<ResultTable> {
    let h = c.terminal_profile();
    let problem = HeatProblem::with_default_grid(c.family, h.clone(), c.t0, c.t_final, c.dx, c.dt)?;
    let field = solve_forward_heat(&problem)?;
    let axis = field.grid.line()?;
    // forward solution from T is the backward kernel solution in s = -t
    let kernel = KernelSolution::new(h.clone(), -c.t_final)?;
    let (center, width) = match &h {
        Profile::Gaussian { center, width } => (center[0], Some(*width)),
        _ => (c.center, None),
    };
    let mut table = ResultTable::new(["t", "variance", "variance_exact", "max_error"]);
    for (t, row) in field.times.iter().zip(&field.values) {
        let mut err = 0.0_f64;
        for (i, u) in row.iter().enumerate() {
            err = err.max((u - kernel.value(-t, &[axis.node(i)])?).abs());
        }
        let exact = width
            .map(|w| w * w / 2.0 + 2.0 * (t - c.t_final))
            .unwrap_or(0.0);
        let var = if width.is_some() {
            variance(row, &axis, center)
        } else {
            0.0
        };
        table.push(vec![*t, var, exact, err])?;
    }
    Ok(table)
}
