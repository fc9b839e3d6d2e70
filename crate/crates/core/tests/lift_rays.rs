use approx::assert_relative_eq;
use ricciwave::heat::KernelSolution;
use ricciwave::lift::{dy_laplacian_of_lift, symmetrize_small_n, HeatBase, LiftedField};
use ricciwave::metrics::MetricFamily;
use ricciwave::rays::{
    euclid_ray_closed_form, hamiltonian_field, integrate_ray, principal_symbol, propagate,
    PhasePoint,
};
use ricciwave::Profile;

fn kernel_base() -> HeatBase {
    HeatBase::Kernel(KernelSolution::new(Profile::gaussian_1d(0.0, 1.0), 1.0).unwrap())
}

#[test]
fn lift_identity_on_the_slice() {
    let (lhs, rhs) = dy_laplacian_of_lift(&kernel_base(), 16, 0.5, &[0.0]).unwrap();
    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    assert!(dy_laplacian_of_lift(&kernel_base(), 16, 0.0, &[0.0]).is_err());
}

#[test]
fn lift_radial_laplacian_matches_cartesian_differences() {
    // Δ_y of the lift in ℝ³ by a 7-point stencil on the lifted values themselves
    let lift = LiftedField::new(3, kernel_base()).unwrap();
    let u = |y: [f64; 3]| {
        lift.eval(&[0.3], (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt())
            .unwrap()
    };
    let y0 = [0.6, 0.4, 0.5];
    let h = 1e-3;
    let mut lap = -6.0 * u(y0);
    for k in 0..3 {
        for s in [-h, h] {
            let mut y = y0;
            y[k] += s;
            lap += u(y);
        }
    }
    lap /= h * h;
    let r = (0.36_f64 + 0.16 + 0.25).sqrt();
    assert_relative_eq!(
        lift.radial_laplacian(&[0.3], r).unwrap(),
        lap,
        max_relative = 1e-5
    );
}

#[test]
fn affine_base_is_exactly_harmonic() {
    let base = HeatBase::Affine {
        offset: 0.5,
        rate: 0.0,
        slope: vec![1.0],
    };
    for n in [1, 4, 64] {
        let (lhs, rhs) = dy_laplacian_of_lift(&base, n, 0.7, &[1.5]).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }
    let time_linear = HeatBase::Affine {
        offset: 0.0,
        rate: 1.0,
        slope: vec![0.0],
    };
    let (lhs, rhs) = dy_laplacian_of_lift(&time_linear, 7, 0.4, &[0.0]).unwrap();
    assert_relative_eq!(lhs, 1.0, max_relative = 1e-14);
    assert_eq!(rhs, 1.0);
}

#[test]
fn lift_defect_halves_when_n_doubles() {
    let defect = |n| {
        let base = kernel_base();
        let (lhs, _) = dy_laplacian_of_lift(&base, n, 0.5, &[0.0]).unwrap();
        lhs - base.dt(0.5, &[0.0]).unwrap()
    };
    for n in [8, 16, 32] {
        assert_relative_eq!(defect(n) / defect(2 * n), 2.0, max_relative = 1e-6);
    }
}

#[test]
fn symmetrization_averages_over_spheres() {
    let radii = [0.5, 1.0, 2.0];
    for n in [2, 3] {
        let radial = symmetrize_small_n(
            |y| (-y.iter().map(|v| v * v).sum::<f64>()).exp(),
            n,
            16,
            &radii,
        )
        .unwrap();
        for (r, v) in radii.iter().zip(&radial.values) {
            assert_relative_eq!(*v, (-r * r).exp(), max_relative = 1e-13);
        }
        let odd = symmetrize_small_n(|y| y[0], n, 16, &radii).unwrap();
        assert!(odd.values.iter().all(|v| v.abs() < 1e-13));
        let square = symmetrize_small_n(|y| y[0] * y[0], n, 16, &radii).unwrap();
        for (r, v) in radii.iter().zip(&square.values) {
            assert_relative_eq!(*v, r * r / n as f64, max_relative = 1e-12);
        }
    }
    assert!(symmetrize_small_n(|_| 1.0, 4, 16, &radii).is_err());
    assert!(symmetrize_small_n(|_| 1.0, 2, 4, &radii).is_err());
}

fn sample_point(n: usize) -> PhasePoint {
    let y: Vec<f64> = (0..n).map(|k| 0.1 * k as f64).collect();
    let eta: Vec<f64> = (0..n).map(|k| 0.3 - 0.2 * k as f64).collect();
    PhasePoint::new(0.2, vec![0.9], y, 0.7, vec![-0.4], eta).unwrap()
}

#[test]
fn hamiltonian_field_matches_symbol_derivatives() {
    let h = 1e-6;
    for family in [MetricFamily::Euclid1, MetricFamily::Sphere2] {
        let p = sample_point(3);
        let field = hamiltonian_field(&p, family).unwrap();
        let sym = |q: &PhasePoint| principal_symbol(q, family).unwrap();
        let diff = |f: &dyn Fn(&mut PhasePoint, f64)| {
            let (mut a, mut b) = (p.clone(), p.clone());
            f(&mut a, h);
            f(&mut b, -h);
            (sym(&a) - sym(&b)) / (2.0 * h)
        };
        let close = |a: f64, b: f64| {
            assert!(
                (a - b).abs() < 1e-7 * (1.0 + b.abs()),
                "{family}: {a} vs {b}"
            )
        };
        close(field.t, diff(&|q, s| q.tau += s));
        close(field.x[0], diff(&|q, s| q.xi[0] += s));
        close(field.tau, -diff(&|q, s| q.t += s));
        close(field.xi[0], -diff(&|q, s| q.x[0] += s));
        for k in 0..3 {
            close(field.y[k], diff(&|q, s| q.eta[k] += s));
            close(field.eta[k], -diff(&|q, s| q.y[k] += s));
        }
    }
}

#[test]
fn sphere_field_components() {
    let p = sample_point(2);
    let field = hamiltonian_field(&p, MetricFamily::Sphere2).unwrap();
    let c = 1.0 - 2.0 * p.t;
    // the θ-reduced inverse metric does not depend on θ
    assert_eq!(field.xi[0], 0.0);
    assert_relative_eq!(field.x[0], -2.0 * p.xi[0] / c, max_relative = 1e-15);
    let expected_tau = -(p.tau * p.tau - 2.0 * p.xi[0] * p.xi[0] / (c * c));
    assert_relative_eq!(field.tau, expected_tau, max_relative = 1e-14);
}

#[test]
fn rays_commute_with_fiber_rotations() {
    let family = MetricFamily::Euclid1;
    let p0 = sample_point(2).normalized(family).unwrap();
    let (c, s) = (0.6_f64, 0.8_f64);
    let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
    let mut q0 = p0.clone();
    q0.y = rot(&p0.y);
    q0.eta = rot(&p0.eta);
    let (a, _) = propagate(&p0, family, 1.5, 1e-3).unwrap();
    let (b, _) = propagate(&q0, family, 1.5, 1e-3).unwrap();
    assert!((a.t - b.t).abs() < 1e-13 && (a.tau - b.tau).abs() < 1e-13);
    for (u, v) in rot(&a.y).iter().zip(&b.y) {
        assert!((u - v).abs() < 1e-13);
    }
    for (u, v) in rot(&a.eta).iter().zip(&b.eta) {
        assert!((u - v).abs() < 1e-13);
    }
}

#[test]
fn zero_tau_keeps_time_fixed() {
    let p0 = PhasePoint::new(
        0.5,
        vec![0.0],
        vec![0.0, 0.0],
        0.0,
        vec![1.0],
        vec![0.5, 0.0],
    )
    .unwrap();
    let ray = integrate_ray(&p0, MetricFamily::Euclid1, 2.0, 1e-2).unwrap();
    assert!(!ray.exited);
    for (s, p) in &ray.samples {
        assert_eq!(p.t, 0.5);
        assert_eq!(p.tau, 0.0);
        assert!((p.x[0] + 2.0 * s).abs() < 1e-12);
    }
}

#[test]
fn euclid_ray_agrees_with_closed_form() {
    let p0 = sample_point(4).normalized(MetricFamily::Euclid1).unwrap();
    assert!(p0.on_characteristic);
    let ray = integrate_ray(&p0, MetricFamily::Euclid1, 3.0, 1e-3).unwrap();
    let (s, end) = ray.samples.last().unwrap();
    let exact = euclid_ray_closed_form(&p0, *s).unwrap();
    assert!((end.t - exact.t).abs() < 1e-10);
    assert!((end.tau - exact.tau).abs() < 1e-10);
    assert!((end.x[0] - exact.x[0]).abs() < 1e-10);
    let mut back = p0.clone();
    back.tau = -1.0;
    assert!(euclid_ray_closed_form(&back, 10.0).is_err());
}

#[test]
fn normalization_rejects_impossible_targets() {
    let p = PhasePoint::new(0.5, vec![0.0], vec![0.0], 1.0, vec![0.0], vec![0.0]).unwrap();
    assert!(p.normalized(MetricFamily::Euclid1).is_err());
    assert!(PhasePoint::new(0.5, vec![0.0], vec![], 1.0, vec![0.0], vec![]).is_err());
}
