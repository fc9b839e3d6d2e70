//! Null bicharacteristics of `p = (2t/N)τ² - g^{ij}ξᵢξⱼ - |η|²` and the
//! large-N classification of their behavior.

use crate::error::{Error, Result};
use crate::metrics::{metric_at, MetricFamily};
use crate::table::ResultTable;

/// Point `(t, x, y, τ, ξ, η)` of phase space over `(t, x, y)`, `y ∈ ℝᴺ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub n: usize,
    /// Set only by [`PhasePoint::normalized`], which guarantees `|p| < 1e-12`.
    pub on_characteristic: bool,
}

/// Tolerance behind the `on_characteristic` flag.
pub const CHARACTERISTIC_TOLERANCE: f64 = 1e-12;

impl PhasePoint {
    pub fn new(
        t: f64,
        x: Vec<f64>,
        y: Vec<f64>,
        tau: f64,
        xi: Vec<f64>,
        eta: Vec<f64>,
    ) -> Result<Self> {
        if x.len() != xi.len() || y.len() != eta.len() {
            return Err(Error::invalid("position and covector dimensions differ"));
        }
        if y.is_empty() {
            return Err(Error::invalid("fiber dimension N must be positive"));
        }
        let n = y.len();
        Ok(PhasePoint {
            t,
            x,
            y,
            tau,
            xi,
            eta,
            n,
            on_characteristic: false,
        })
    }

    fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.n)
    }

    fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * (1 + self.x.len() + self.n));
        v.push(self.t);
        v.extend(&self.x);
        v.extend(&self.y);
        v.push(self.tau);
        v.extend(&self.xi);
        v.extend(&self.eta);
        v
    }

    fn unpack(v: &[f64], d: usize, n: usize) -> Self {
        let half = 1 + d + n;
        PhasePoint {
            t: v[0],
            x: v[1..1 + d].to_vec(),
            y: v[1 + d..half].to_vec(),
            tau: v[half],
            xi: v[half + 1..half + 1 + d].to_vec(),
            eta: v[half + 1 + d..].to_vec(),
            n,
            on_characteristic: false,
        }
    }

    /// Copy with `y` and `η` zero-padded (or checked) to fiber dimension `n`.
    pub fn with_fiber_dim(&self, n: usize) -> Result<Self> {
        let extend = |v: &[f64]| -> Result<Vec<f64>> {
            if v.len() > n && v[n..].iter().any(|c| *c != 0.0) {
                return Err(Error::invalid(format!(
                    "template does not embed in fiber dimension {n}"
                )));
            }
            let mut out = v[..v.len().min(n)].to_vec();
            out.resize(n, 0.0);
            Ok(out)
        };
        PhasePoint::new(
            self.t,
            self.x.clone(),
            extend(&self.y)?,
            self.tau,
            self.xi.clone(),
            extend(&self.eta)?,
        )
    }

    /// Rescale the spatial covector `(ξ, η)` along its direction so that `p = 0`.
    pub fn normalized(&self, family: MetricFamily) -> Result<Self> {
        let m = metric_at(family, self.t, &self.x)?;
        let xi_norm2 = quad_form(&m.g_inv, &self.xi);
        let eta_norm2: f64 = self.eta.iter().map(|e| e * e).sum();
        let spatial = xi_norm2 + eta_norm2;
        let target = 2.0 * self.t / self.n as f64 * self.tau * self.tau;
        let mut out = self.clone();
        if spatial == 0.0 {
            if target != 0.0 {
                return Err(Error::invalid(
                    "zero spatial covector cannot be normalized onto p = 0 when τ ≠ 0",
                ));
            }
        } else {
            if target < 0.0 {
                return Err(Error::invalid(
                    "p = 0 has no solution along this direction (t < 0)",
                ));
            }
            let lambda = (target / spatial).sqrt();
            out.xi.iter_mut().for_each(|v| *v *= lambda);
            out.eta.iter_mut().for_each(|v| *v *= lambda);
        }
        let p = principal_symbol(&out, family)?;
        let scale = 1.0 + target.abs();
        out.on_characteristic = p.abs() < CHARACTERISTIC_TOLERANCE * scale;
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.pack().iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.pack().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn quad_form(g: &nalgebra::DMatrix<f64>, v: &[f64]) -> f64 {
    let d = v.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += g[(i, j)] * v[i] * v[j];
        }
    }
    s
}

pub fn principal_symbol(point: &PhasePoint, family: MetricFamily) -> Result<f64> {
    let m = metric_at(family, point.t, &point.x)?;
    let eta2: f64 = point.eta.iter().map(|e| e * e).sum();
    Ok(2.0 * point.t / point.n as f64 * point.tau * point.tau
        - quad_form(&m.g_inv, &point.xi)
        - eta2)
}

/// Components of the Hamiltonian vector field of `p` at a phase point.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTangent {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PhaseTangent {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.t];
        v.extend(&self.x);
        v.extend(&self.y);
        v.push(self.tau);
        v.extend(&self.xi);
        v.extend(&self.eta);
        v
    }
}

/// `H_p = (∂p/∂τ, ∂p/∂ξ, ∂p/∂η, -∂p/∂t, -∂p/∂x, -∂p/∂y)`.
pub fn hamiltonian_field(point: &PhasePoint, family: MetricFamily) -> Result<PhaseTangent> {
    let m = metric_at(family, point.t, &point.x)?;
    let n = point.n as f64;
    let d = point.x.len();
    let x_dot = (0..d)
        .map(|i| -2.0 * (0..d).map(|j| m.g_inv[(i, j)] * point.xi[j]).sum::<f64>())
        .collect();
    let tau_dot = -(2.0 * point.tau * point.tau / n - quad_form(&m.dginv_dt, &point.xi));
    let xi_dot = m
        .dginv_dx
        .iter()
        .map(|dg| quad_form(dg, &point.xi))
        .collect();
    Ok(PhaseTangent {
        t: 4.0 * point.t * point.tau / n,
        x: x_dot,
        y: point.eta.iter().map(|e| -2.0 * e).collect(),
        tau: tau_dot,
        xi: xi_dot,
        eta: vec![0.0; point.n],
    })
}

/// Sampled integral curve of the Hamiltonian field.
#[derive(Debug, Clone, PartialEq)]
pub struct RayTrajectory {
    pub samples: Vec<(f64, PhasePoint)>,
    pub step: f64,
    /// The curve left the metric domain (or stopped being finite) and was truncated.
    pub exited: bool,
}

impl RayTrajectory {
    pub fn last(&self) -> &PhasePoint {
        &self
            .samples
            .last()
            .expect("trajectory has its initial point")
            .1
    }

    /// Columns `s, t, x0.., |y|, tau, |xi|, |eta|, p`.
    pub fn to_table(&self, family: MetricFamily) -> Result<ResultTable> {
        let d = self.samples.first().map(|(_, p)| p.x.len()).unwrap_or(0);
        let mut cols = vec!["s".to_string(), "t".to_string()];
        cols.extend((0..d).map(|k| format!("x{k}")));
        cols.extend(["|y|", "tau", "|xi|", "|eta|", "p"].map(String::from));
        let mut table = ResultTable::new(cols);
        let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (s, p) in &self.samples {
            let mut row = vec![*s, p.t];
            row.extend(&p.x);
            row.extend([
                norm(&p.y),
                p.tau,
                norm(&p.xi),
                norm(&p.eta),
                principal_symbol(p, family)?,
            ]);
            table.push(row)?;
        }
        Ok(table)
    }
}

fn field_vec(v: &[f64], d: usize, n: usize, family: MetricFamily) -> Result<Vec<f64>> {
    Ok(hamiltonian_field(&PhasePoint::unpack(v, d, n), family)?.to_vec())
}

/// Classical RK4 from `point0`, calling `visit(s, state)` after every step.
/// Returns whether the curve left the domain.
fn rk4<V>(
    point0: &PhasePoint,
    family: MetricFamily,
    s_max: f64,
    step: f64,
    mut visit: V,
) -> Result<bool>
where
    V: FnMut(f64, &[f64]),
{
    if !(step > 0.0) || !(s_max >= 0.0) {
        return Err(Error::invalid(
            "ray integration needs step > 0 and s_max >= 0",
        ));
    }
    if !point0.is_finite() {
        return Err(Error::invalid("initial phase point is not finite"));
    }
    metric_at(family, point0.t, &point0.x)?;
    let (d, n) = point0.dims();
    let steps = (s_max / step - 1e-9).ceil().max(0.0) as usize;
    let mut z = point0.pack();
    let mut s = 0.0;
    let axpy = |z: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        z.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    for i in 0..steps {
        let h = if i + 1 == steps { s_max - s } else { step };
        let stage = |v: &[f64]| field_vec(v, d, n, family);
        let k1 = match stage(&z) {
            Ok(k) => k,
            Err(_) => return Ok(true),
        };
        let k2 = match stage(&axpy(&z, &k1, 0.5 * h)) {
            Ok(k) => k,
            Err(_) => return Ok(true),
        };
        let k3 = match stage(&axpy(&z, &k2, 0.5 * h)) {
            Ok(k) => k,
            Err(_) => return Ok(true),
        };
        let k4 = match stage(&axpy(&z, &k3, h)) {
            Ok(k) => k,
            Err(_) => return Ok(true),
        };
        let next: Vec<f64> = (0..z.len())
            .map(|j| z[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect();
        let p = PhasePoint::unpack(&next, d, n);
        if !next.iter().all(|v| v.is_finite()) || metric_at(family, p.t, &p.x).is_err() {
            return Ok(true);
        }
        z = next;
        s = if i + 1 == steps {
            s_max
        } else {
            (i + 1) as f64 * step
        };
        visit(s, &z);
    }
    Ok(false)
}

pub fn integrate_ray(
    point0: &PhasePoint,
    family: MetricFamily,
    s_max: f64,
    step: f64,
) -> Result<RayTrajectory> {
    let (d, n) = point0.dims();
    let mut samples = vec![(0.0, point0.clone())];
    let exited = rk4(point0, family, s_max, step, |s, z| {
        samples.push((s, PhasePoint::unpack(z, d, n)));
    })?;
    Ok(RayTrajectory {
        samples,
        step,
        exited,
    })
}

/// Endpoint of the ray at parameter `s` without storing the samples.
pub fn propagate(
    point0: &PhasePoint,
    family: MetricFamily,
    s: f64,
    step: f64,
) -> Result<(PhasePoint, bool)> {
    let (d, n) = point0.dims();
    let mut last = point0.pack();
    let exited = rk4(point0, family, s, step, |_, z| last.copy_from_slice(z))?;
    Ok((PhasePoint::unpack(&last, d, n), exited))
}

/// Exact Euclidean ray: `τ(s) = τ₀N/(2sτ₀ + N)`, `t(s) = t₀(1 + 2sτ₀/N)²`,
/// `x(s) = x₀ - 2ξs`, `y(s) = y₀ - 2ηs`.
///
/// Parameters at or past the pole `2sτ₀ + N = 0` are rejected: τ blows up there
/// and t reaches 0, so the curve does not continue.
pub fn euclid_ray_closed_form(point0: &PhasePoint, s: f64) -> Result<PhasePoint> {
    let n = point0.n as f64;
    let q = 1.0 + 2.0 * s * point0.tau / n;
    if point0.tau != 0.0 && q <= 0.0 {
        return Err(Error::invalid(format!(
            "parameter s = {s} reaches the pole 2sτ(0) + N = 0 at s = {}",
            -n / (2.0 * point0.tau)
        )));
    }
    let mut p = point0.clone();
    if point0.tau != 0.0 {
        p.tau = point0.tau / q;
        p.t = point0.t * q * q;
    }
    p.x.iter_mut()
        .zip(&point0.xi)
        .for_each(|(x, xi)| *x -= 2.0 * xi * s);
    p.y.iter_mut()
        .zip(&point0.eta)
        .for_each(|(y, e)| *y -= 2.0 * e * s);
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfClass {
    TerminalStationary,
    EscapesToInfinity,
    Regular,
    Indeterminate,
}

impl WfClass {
    pub fn name(self) -> &'static str {
        match self {
            WfClass::TerminalStationary => "terminal_stationary",
            WfClass::EscapesToInfinity => "escapes_to_infinity",
            WfClass::Regular => "regular",
            WfClass::Indeterminate => "indeterminate",
        }
    }

    pub fn code(self) -> f64 {
        match self {
            WfClass::Regular => 0.0,
            WfClass::TerminalStationary => 1.0,
            WfClass::EscapesToInfinity => 2.0,
            WfClass::Indeterminate => 3.0,
        }
    }
}

/// Relative agreement required of the cross-N displacement ratios.
pub const WF_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Norm bound playing the role of "arbitrarily large".
pub const WF_NORM_BOUND: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct WfProbe {
    pub n: usize,
    /// Curve parameter at which the probe was read, `s_probe · N`.
    pub s: f64,
    pub x_ratio: f64,
    pub total_ratio: f64,
    pub norm: f64,
    pub symbol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfReport {
    pub class: WfClass,
    pub probes: Vec<WfProbe>,
    /// Largest relative deviation of the ratios from the first N.
    pub spread: f64,
    /// Extrapolated N beyond which the phase-space norm exceeds [`WF_NORM_BOUND`].
    pub n_exceeding_bound: Option<f64>,
    pub note: String,
}

/// Classify a phase point template against the large-N limit of wavefront sets.
///
/// For each N the template's `(y, η)` is zero-padded to ℝᴺ, the spatial covector
/// `(ξ, η)` is rescaled onto `p = 0` along its direction, and the ray is read at
/// `s = s_probe · N`, the parameter at which every N reaches the same time
/// `t₀(1 + 2 s_probe τ₀)²`. Escape means `|x(s) - x(0)|²/N` and the full
/// displacement over N agree across Ns while the norm grows without bound.
pub fn classify_wf_infinity(
    template: &PhasePoint,
    family: MetricFamily,
    ns: &[usize],
    s_probe: f64,
    step: f64,
) -> Result<WfReport> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "Ns must be strictly increasing with at least two entries",
        ));
    }
    let zero_covector = template.xi.iter().chain(&template.eta).all(|v| *v == 0.0);
    let report = |class, probes, spread, note: &str| WfReport {
        class,
        probes,
        spread,
        n_exceeding_bound: None,
        note: note.to_string(),
    };

    if template.tau == 0.0 {
        if !zero_covector {
            return Ok(report(
                WfClass::Regular,
                vec![],
                0.0,
                "τ = 0 with nonzero covector: p < 0",
            ));
        }
        // fixed point of the flow: check it stays put
        let mut probes = Vec::new();
        for &n in ns {
            let p0 = template.with_fiber_dim(n)?;
            let (end, _) = propagate(&p0, family, s_probe, step)?;
            let moved = (end.t - p0.t).abs()
                + end
                    .x
                    .iter()
                    .zip(&p0.x)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
            if moved != 0.0 {
                return Ok(report(
                    WfClass::Indeterminate,
                    probes,
                    moved,
                    "zero covector point moved",
                ));
            }
            probes.push(WfProbe {
                n,
                s: s_probe,
                x_ratio: 0.0,
                total_ratio: 0.0,
                norm: end.norm(),
                symbol: principal_symbol(&end, family)?,
            });
        }
        return Ok(report(
            WfClass::TerminalStationary,
            probes,
            0.0,
            "frozen at (t(0), x(0))",
        ));
    }
    if zero_covector {
        return Ok(report(
            WfClass::Regular,
            vec![],
            0.0,
            "τ ≠ 0 with zero covector: p = 2tτ²/N ≠ 0",
        ));
    }

    let mut probes = Vec::new();
    for &n in ns {
        let p0 = template.with_fiber_dim(n)?.normalized(family)?;
        if !p0.on_characteristic {
            return Ok(report(
                WfClass::Indeterminate,
                probes,
                f64::NAN,
                "normalization failed",
            ));
        }
        let s = s_probe * n as f64;
        let (end, exited) = propagate(&p0, family, s, step)?;
        if exited {
            return Ok(report(
                WfClass::Indeterminate,
                probes,
                f64::NAN,
                "ray left the metric domain",
            ));
        }
        let dist2 =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        let dx = dist2(&end.x, &p0.x);
        let dy = dist2(&end.y, &p0.y);
        probes.push(WfProbe {
            n,
            s,
            x_ratio: dx / n as f64,
            total_ratio: (dx + dy) / n as f64,
            norm: end.norm(),
            symbol: principal_symbol(&end, family)?,
        });
    }
    let rel = |a: f64, b: f64| {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    };
    let first = &probes[0];
    let spread = probes
        .iter()
        .map(|p| rel(p.x_ratio, first.x_ratio).max(rel(p.total_ratio, first.total_ratio)))
        .fold(0.0_f64, f64::max);
    let growing = probes.windows(2).all(|w| w[1].norm > w[0].norm);
    let last = probes.last().unwrap();
    let n_bound = last.n as f64 * (WF_NORM_BOUND / last.norm).powi(2);
    let mut out = report(WfClass::Indeterminate, probes, spread, "");
    if spread <= WF_RELATIVE_TOLERANCE && growing {
        out.class = WfClass::EscapesToInfinity;
        out.n_exceeding_bound = Some(n_bound);
        out.note = "displacement² ∝ N on the characteristic".into();
    } else {
        out.note = format!("cross-N spread {spread:e}, norms growing: {growing}");
    }
    Ok(out)
}
