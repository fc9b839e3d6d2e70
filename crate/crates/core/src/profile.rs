//! Named analytic terminal-data profiles `h(x)`.

use crate::error::{Error, Result};
use crate::metrics::MetricFamily;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `exp(-|x - center|^2 / width^2)`
    Gaussian {
        center: Vec<f64>,
        width: f64,
    },
    Constant(f64),
    /// `cos(x_0)`; on `sphere2` this is the l = 1 zonal harmonic.
    CosTheta,
    /// Smooth compactly supported `exp(1 - 1 / (1 - |x - center|^2 / radius^2))`.
    Bump {
        center: Vec<f64>,
        radius: f64,
    },
}

impl Profile {
    pub fn gaussian_1d(center: f64, width: f64) -> Self {
        Profile::Gaussian {
            center: vec![center],
            width,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Gaussian { .. } => "gaussian",
            Profile::Constant(_) => "constant",
            Profile::CosTheta => "cos_theta",
            Profile::Bump { .. } => "bump",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Profile::Gaussian { center, width } => {
                if center.len() != dim {
                    return Err(Error::invalid(format!(
                        "gaussian center has {} coordinates, expected {dim}",
                        center.len()
                    )));
                }
                if !(*width > 0.0) {
                    return Err(Error::invalid("gaussian width must be positive"));
                }
            }
            Profile::Bump { center, radius } => {
                if center.len() != dim || !(*radius > 0.0) {
                    return Err(Error::invalid(
                        "bump needs a matching center and positive radius",
                    ));
                }
            }
            Profile::Constant(c) if !c.is_finite() => {
                return Err(Error::invalid("constant profile must be finite"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Gaussian { center, width } => (-dist2(x, center) / (width * width)).exp(),
            Profile::Constant(c) => *c,
            Profile::CosTheta => x[0].cos(),
            Profile::Bump { center, radius } => {
                let q = dist2(x, center) / (radius * radius);
                if q < 1.0 {
                    (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// `Δ_{g(t)} h` in closed form, when one is available.
    pub fn laplacian(&self, family: MetricFamily, t: f64, x: &[f64]) -> Option<f64> {
        match (self, family) {
            (Profile::Constant(_), _) => Some(0.0),
            (Profile::Gaussian { center, width }, MetricFamily::Sphere2) => {
                let w2 = width * width;
                let d = x[0] - center[0];
                let h = self.eval(x);
                let h1 = -2.0 * d / w2 * h;
                let h2 = (4.0 * d * d / (w2 * w2) - 2.0 / w2) * h;
                Some((h2 + h1 / x[0].tan()) / family.conformal_factor(t))
            }
            (Profile::Gaussian { center, width }, _) => {
                let w2 = width * width;
                let n = center.len() as f64;
                Some((4.0 * dist2(x, center) / (w2 * w2) - 2.0 * n / w2) * self.eval(x))
            }
            (Profile::CosTheta, MetricFamily::Sphere2) => {
                Some(-2.0 * x[0].cos() / family.conformal_factor(t))
            }
            (Profile::CosTheta, MetricFamily::Euclid1) => Some(-x[0].cos()),
            _ => None,
        }
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}
