//! Invariants checked over randomized inputs.

use proptest::prelude::*;
use ricciwave::grid::{cubic_interpolate, Axis, SpatialGrid};
use ricciwave::harness::{parse_csv, to_csv_string};
use ricciwave::heat::{gaussian_kernel_solution, KernelSolution};
use ricciwave::lift::{dy_laplacian_of_lift, symmetrize_small_n, HeatBase};
use ricciwave::metrics::{laplace_beltrami, metric_at, MetricFamily};
use ricciwave::rays::{euclid_ray_closed_form, principal_symbol, propagate, PhasePoint};
use ricciwave::{Profile, ResultTable};

fn phase_point() -> impl Strategy<Value = PhasePoint> {
    (1usize..6)
        .prop_flat_map(|n| {
            (
                0.25..2.0f64,
                -1.0..1.0f64,
                prop::collection::vec(-1.0..1.0f64, n),
                0.1..1.0f64,
                -1.0..1.0f64,
                prop::collection::vec(-1.0..1.0f64, n),
            )
        })
        .prop_filter_map("degenerate covector", |(t, x, y, tau, xi, eta)| {
            PhasePoint::new(t, vec![x], y, tau, vec![xi], eta)
                .ok()?
                .normalized(MetricFamily::Euclid1)
                .ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rays_conserve_symbol_and_ttau2(p in phase_point(), s in 0.1..3.0f64) {
        let (end, exited) = propagate(&p, MetricFamily::Euclid1, s, 1e-3).unwrap();
        prop_assert!(!exited);
        let symbol = principal_symbol(&end, MetricFamily::Euclid1).unwrap();
        prop_assert!(symbol.abs() < 1e-10);
        let inv0 = p.t * p.tau * p.tau;
        prop_assert!((end.t * end.tau * end.tau / inv0 - 1.0).abs() < 1e-10);
        let exact = euclid_ray_closed_form(&p, s).unwrap();
        prop_assert!((end.t - exact.t).abs() < 1e-9 * (1.0 + exact.t));
    }

    #[test]
    fn sphere_metric_identities(t in -2.0..0.49f64, theta in 0.01..3.13f64) {
        let m = metric_at(MetricFamily::Sphere2, t, &[theta]).unwrap();
        prop_assert!(m.g_inv[(0, 0)] > 0.0);
        prop_assert!((m.tr_gdot + 2.0 * m.scalar_curvature).abs() < 1e-12 * m.scalar_curvature);
        prop_assert!(m.vol_weight > 0.0);
    }

    #[test]
    fn lift_identity_holds(n in 1usize..200, t in 0.05..1.0f64, x in -2.0..2.0f64, width in 0.5..2.0f64) {
        let base = HeatBase::Kernel(KernelSolution::new(Profile::gaussian_1d(0.1, width), 1.0).unwrap());
        let (lhs, rhs) = dy_laplacian_of_lift(&base, n, t, &[x]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn kernel_solution_stays_between_bounds(t in 0.0..1.0f64, x in -5.0..5.0f64, width in 0.2..3.0f64) {
        let v = gaussian_kernel_solution(&Profile::gaussian_1d(0.0, width), t, &[x], 1.0, 1).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
    }

    #[test]
    fn radial_functions_are_fixed_by_symmetrization(n in 2usize..4, r in 0.0..3.0f64, k in 0.1..2.0f64) {
        let f = |y: &[f64]| (-k * y.iter().map(|v| v * v).sum::<f64>()).exp();
        let avg = symmetrize_small_n(f, n, 12, &[r]).unwrap();
        prop_assert!((avg.values[0] - (-k * r * r).exp()).abs() < 1e-13);
    }

    #[test]
    fn cubic_interpolation_reproduces_cubics(
        c in prop::array::uniform4(-2.0..2.0f64),
        s in 0.0..1.0f64,
    ) {
        let axis = Axis::new(-1.0, 0.25, 9).unwrap();
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let at = axis.start + s * (axis.end() - axis.start);
        let v = cubic_interpolate(&axis, |j| p(axis.node(j)), at);
        prop_assert!((v - p(at)).abs() < 1e-12);
    }

    #[test]
    fn laplacian_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, t in 0.0..0.4f64) {
        let axis = MetricFamily::pole_margin_axis(40).unwrap();
        let grid = SpatialGrid::Line(axis);
        let u: Vec<f64> = axis.nodes().map(f64::cos).collect();
        let w: Vec<f64> = axis.nodes().map(|th| (2.0 * th).sin()).collect();
        let mix: Vec<f64> = u.iter().zip(&w).map(|(p, q)| a * p + b * q).collect();
        let lu = laplace_beltrami(MetricFamily::Sphere2, t, &u, &grid).unwrap();
        let lw = laplace_beltrami(MetricFamily::Sphere2, t, &w, &grid).unwrap();
        let lm = laplace_beltrami(MetricFamily::Sphere2, t, &mix, &grid).unwrap();
        for i in 0..axis.len {
            prop_assert!((lm[i] - a * lu[i] - b * lw[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::array::uniform3(-1e300..1e300f64), 0..8)) {
        let mut t = ResultTable::new(["a", "b", "c"]);
        for r in &rows {
            t.push(r.to_vec()).unwrap();
        }
        let back = parse_csv(&to_csv_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back.rows, t.rows);
    }
}
