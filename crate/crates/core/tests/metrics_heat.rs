use std::f64::consts::PI;

use approx::assert_relative_eq;
use ricciwave::grid::{Axis, SpatialGrid};
use ricciwave::heat::{
    centered_residual, gaussian_kernel_solution, reflect_field, solve_backward_heat,
    solve_forward_heat, variance, HeatProblem, KernelSolution,
};
use ricciwave::metrics::{laplace_beltrami, metric_at, MetricFamily};
use ricciwave::Profile;

/// Brute-force Gaussian convolution `(4πs)^{-1/2} ∫ e^{-(x-y)²/4s} h(y) dy`.
fn convolve(h: impl Fn(f64) -> f64, s: f64, x: f64) -> f64 {
    let (lo, hi, m) = (-30.0, 30.0, 60_000);
    let dy = (hi - lo) / m as f64;
    let sum: f64 = (0..=m)
        .map(|k| {
            let y = lo + k as f64 * dy;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            w * (-(x - y) * (x - y) / (4.0 * s)).exp() * h(y)
        })
        .sum();
    sum * dy / (4.0 * PI * s).sqrt()
}

#[test]
fn metric_examples() {
    let e = metric_at(MetricFamily::Euclid1, 0.3, &[0.7]).unwrap();
    assert_eq!(e.g_inv[(0, 0)], 1.0);
    assert_eq!(e.scalar_curvature, 0.0);
    assert_eq!(e.tr_gdot, 0.0);
    // twice the Gauss curvature of the unit sphere
    assert_eq!(
        metric_at(MetricFamily::Sphere2, 0.0, &[PI / 2.0])
            .unwrap()
            .scalar_curvature,
        2.0
    );
    assert_eq!(
        metric_at(MetricFamily::Sphere2, 0.25, &[1.0])
            .unwrap()
            .scalar_curvature,
        4.0
    );
}

#[test]
fn sphere_trace_identity_is_exact() {
    for i in 0..10 {
        for j in 1..=10 {
            let t = -1.0 + 0.149 * i as f64;
            let th = PI * j as f64 / 11.0;
            let m = metric_at(MetricFamily::Sphere2, t, &[th]).unwrap();
            assert_eq!(m.tr_gdot + 2.0 * m.scalar_curvature, 0.0);
        }
    }
}

#[test]
fn out_of_domain_time_is_rejected() {
    assert!(metric_at(MetricFamily::Sphere2, 0.5, &[1.0]).is_err());
    assert!(metric_at(MetricFamily::Sphere2, 0.2, &[PI]).is_err());
    assert!(metric_at(MetricFamily::Euclid2, 0.2, &[0.0]).is_err());
}

fn cos_error(cells: usize) -> f64 {
    let axis = MetricFamily::pole_margin_axis(cells).unwrap();
    let u: Vec<f64> = axis.nodes().map(f64::cos).collect();
    let lap = laplace_beltrami(MetricFamily::Sphere2, 0.0, &u, &SpatialGrid::Line(axis)).unwrap();
    axis.nodes()
        .zip(&lap)
        .map(|(th, l)| (l + 2.0 * th.cos()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn sphere_laplacian_of_first_harmonic() {
    assert!(cos_error(256) < 1e-3);
    let ratio = cos_error(128) / cos_error(256);
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn laplacian_annihilates_constants() {
    for (family, grid) in [
        (
            MetricFamily::Euclid1,
            SpatialGrid::Line(Axis::new(-1.0, 0.1, 21).unwrap()),
        ),
        (
            MetricFamily::Euclid2,
            SpatialGrid::Plane(
                Axis::new(0.0, 0.1, 8).unwrap(),
                Axis::new(0.0, 0.2, 5).unwrap(),
            ),
        ),
        (
            MetricFamily::Sphere2,
            SpatialGrid::Line(MetricFamily::pole_margin_axis(32).unwrap()),
        ),
    ] {
        let u = vec![3.5; grid.len()];
        let lap = laplace_beltrami(family, 0.1, &u, &grid).unwrap();
        assert!(lap.iter().all(|v| v.abs() < 1e-9), "{family}");
    }
}

#[test]
fn kernel_matches_brute_force_convolution() {
    let h = Profile::gaussian_1d(0.0, 1.0);
    // closed form of the Gaussian-Gaussian convolution at T - t = 0.25, x = 0
    let v = gaussian_kernel_solution(&h, 0.75, &[0.0], 1.0, 1).unwrap();
    assert_relative_eq!(v, 0.5_f64.sqrt(), max_relative = 1e-14);
    for (t, x) in [(0.75, 0.0), (0.2, 1.3), (0.5, -2.0)] {
        let oracle = convolve(|y| (-y * y).exp(), 1.0 - t, x);
        let v = gaussian_kernel_solution(&h, t, &[x], 1.0, 1).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-10);
    }
    assert_eq!(
        gaussian_kernel_solution(&h, 1.0, &[0.4], 1.0, 1).unwrap(),
        (-0.16_f64).exp()
    );
    assert_eq!(
        gaussian_kernel_solution(&Profile::Constant(1.0), 0.3, &[2.0], 1.0, 1).unwrap(),
        1.0
    );
    assert!(gaussian_kernel_solution(&Profile::CosTheta, 0.3, &[2.0], 1.0, 1).is_err());
}

#[test]
fn kernel_time_derivatives_match_finite_differences() {
    let k = KernelSolution::new(Profile::gaussian_1d(0.3, 0.8), 1.0).unwrap();
    let d = 1e-3;
    for (t, x) in [(0.4, 0.0), (0.7, 1.1)] {
        let f = |s: f64| k.value(s, &[x]).unwrap();
        // fourth-order central differences
        let ft = (f(t - 2.0 * d) - 8.0 * f(t - d) + 8.0 * f(t + d) - f(t + 2.0 * d)) / (12.0 * d);
        let ftt = (-f(t - 2.0 * d) + 16.0 * f(t - d) - 30.0 * f(t) + 16.0 * f(t + d)
            - f(t + 2.0 * d))
            / (12.0 * d * d);
        assert_relative_eq!(k.dt(t, &[x]).unwrap(), ft, max_relative = 1e-8);
        assert_relative_eq!(k.dtt(t, &[x]).unwrap(), ftt, max_relative = 1e-6);
    }
}

#[test]
fn backward_heat_matches_kernel() {
    let p = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::gaussian_1d(0.0, 1.0),
        0.5,
        1.0,
        0.02,
        1e-4,
    )
    .unwrap();
    let field = solve_backward_heat(&p).unwrap();
    let k = KernelSolution::new(p.h.clone(), 1.0).unwrap();
    let err = field.max_abs_error(0.5, 1.0, |t, x| k.value(t, x).unwrap());
    assert!(err < 1e-4, "{err}");
}

#[test]
fn backward_heat_euclid2_matches_kernel() {
    let h = Profile::Gaussian {
        center: vec![0.0, 0.0],
        width: 1.0,
    };
    let p = HeatProblem::with_default_grid(MetricFamily::Euclid2, h.clone(), 0.8, 1.0, 0.1, 0.01)
        .unwrap();
    let field = solve_backward_heat(&p).unwrap();
    let k = KernelSolution::new(h, 1.0).unwrap();
    let err = field.max_abs_error(0.8, 1.0, |t, x| k.value(t, x).unwrap());
    assert!(err < 5e-3, "{err}");
}

#[test]
fn sphere_constant_data_follows_curvature() {
    let p = HeatProblem::with_default_grid(
        MetricFamily::Sphere2,
        Profile::Constant(2.0),
        0.1,
        0.3,
        0.05,
        1e-4,
    )
    .unwrap();
    let field = solve_backward_heat(&p).unwrap();
    let err = field.max_abs_error(0.1, 0.3, |t, _| 2.0 + ((1.0 - 2.0 * t) / 0.4).ln());
    // Crank-Nicolson truncation in time only
    assert!(err < 1e-7, "{err}");
}

#[test]
fn zero_data_gives_zero_field() {
    let p = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::Constant(0.0),
        0.5,
        1.0,
        0.1,
        0.01,
    )
    .unwrap();
    assert_eq!(solve_backward_heat(&p).unwrap().max_abs(), 0.0);
}

#[test]
fn residual_is_second_order() {
    let run = |dx: f64, dt: f64| {
        let p = HeatProblem::with_default_grid(
            MetricFamily::Euclid1,
            Profile::gaussian_1d(0.0, 1.0),
            0.5,
            1.0,
            dx,
            dt,
        )
        .unwrap();
        centered_residual(&solve_backward_heat(&p).unwrap(), MetricFamily::Euclid1).unwrap()
    };
    let ratio = run(0.1, 0.01) / run(0.05, 0.005);
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn comparison_principle() {
    let solve = |h: Profile| {
        let mut p =
            HeatProblem::with_default_grid(MetricFamily::Euclid1, h, 0.5, 1.0, 0.05, 0.01).unwrap();
        p.grid = SpatialGrid::Line(Axis::spanning(-6.0, 6.0, 0.05).unwrap());
        solve_backward_heat(&p).unwrap()
    };
    let lo = solve(Profile::Bump {
        center: vec![0.0],
        radius: 1.0,
    });
    let hi = solve(Profile::Bump {
        center: vec![0.0],
        radius: 2.0,
    });
    for (a, b) in lo.values.iter().zip(&hi.values) {
        assert!(a.iter().zip(b).all(|(u, v)| *u <= v + 1e-12));
    }
}

#[test]
fn forward_heat_is_reflected_backward_solve() {
    let p = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::gaussian_1d(0.0, 1.0),
        -0.25,
        -1.0,
        0.05,
        0.01,
    )
    .unwrap();
    let forward = solve_forward_heat(&p).unwrap();
    let backward = solve_backward_heat(&p.reflected()).unwrap();
    assert_eq!(forward, reflect_field(&backward));
    let axis = forward.grid.line().unwrap();
    for (t, row) in forward.times.iter().zip(&forward.values) {
        let expected = 0.5 + 2.0 * (t + 1.0);
        assert!((variance(row, &axis, 0.0) - expected).abs() < 1e-6);
    }
}

#[test]
fn forward_heat_preserves_constants() {
    let p = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::Constant(1.0),
        -0.5,
        -1.0,
        0.1,
        0.01,
    )
    .unwrap();
    let f = solve_forward_heat(&p).unwrap();
    assert!(f.values.iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn heat_preconditions() {
    let bad = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::Constant(1.0),
        0.0,
        1.0,
        0.1,
        0.01,
    )
    .unwrap();
    assert!(solve_backward_heat(&bad).is_err());
    let coarse = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::Constant(1.0),
        0.5,
        1.0,
        0.1,
        0.1,
    )
    .unwrap();
    assert!(solve_backward_heat(&coarse).is_err());
    let forward_bad = HeatProblem::with_default_grid(
        MetricFamily::Euclid1,
        Profile::Constant(1.0),
        0.5,
        1.0,
        0.1,
        0.01,
    )
    .unwrap();
    assert!(solve_forward_heat(&forward_bad).is_err());
}
