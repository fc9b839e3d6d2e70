//! Experiment configuration: TOML file plus `key=value` overrides.
//!
//! A file holds shared keys at top level and per-experiment sections named
//! after the experiment:
//!
//! ```toml
//! family = "euclid1"
//! dx = 0.05
//!
//! [euclid-wave-sweep]
//! ns = [8, 16, 32, 64]
//! ```
//!
//! Precedence: built-in preset < top-level keys < experiment section < overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::MetricFamily;
use crate::profile::Profile;
use crate::wave::{TerminalData, VelocityMode, WaveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EuclidResidual,
    EuclidWaveSweep,
    SphereWaveSweep,
    RaysOracle,
    WfClassify,
    FMonotonicity,
    ForwardHeat,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::EuclidResidual,
        Experiment::EuclidWaveSweep,
        Experiment::SphereWaveSweep,
        Experiment::RaysOracle,
        Experiment::WfClassify,
        Experiment::FMonotonicity,
        Experiment::ForwardHeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::EuclidResidual => "euclid-residual",
            Experiment::EuclidWaveSweep => "euclid-wave-sweep",
            Experiment::SphereWaveSweep => "sphere-wave-sweep",
            Experiment::RaysOracle => "rays-oracle",
            Experiment::WfClassify => "wf-classify",
            Experiment::FMonotonicity => "f-monotonicity",
            Experiment::ForwardHeat => "forward-heat",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::EuclidResidual => {
                "lifted Laplacian residual of the heat kernel solution versus N"
            }
            Experiment::EuclidWaveSweep => {
                "wave slice versus heat kernel on euclid1 over an N-sweep"
            }
            Experiment::SphereWaveSweep => {
                "wave slice versus heat solution on the shrinking sphere over an N-sweep"
            }
            Experiment::RaysOracle => "random null bicharacteristics against their closed form",
            Experiment::WfClassify => "large-N wavefront classification of the canonical seeds",
            Experiment::FMonotonicity => {
                "F-functional along the coupled flow and its time derivative"
            }
            Experiment::ForwardHeat => {
                "forward heat equation by time reflection, spread versus closed form"
            }
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Gaussian,
    Constant,
    CosTheta,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Keys that choose where and how output goes; they do not enter the hash.
const OUTPUT_KEYS: [&str; 3] = ["out", "format", "plot"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub family: MetricFamily,
    /// Fiber dimensions of a sweep.
    pub ns: Vec<usize>,
    pub t0: f64,
    pub t_final: f64,
    pub dx: f64,
    pub dr: f64,
    pub dt_safety: f64,
    /// Time step of the parabolic solvers.
    pub dt: f64,
    pub record_levels: usize,
    pub keep_every: usize,
    pub padding_slack: f64,
    pub probe_delta: f64,
    pub profile: ProfileKind,
    pub center: f64,
    pub width: f64,
    /// Value of the constant profile.
    pub amplitude: f64,
    pub terminal_velocity_mode: VelocityMode,
    pub terminal_data: TerminalData,
    pub c_shift: f64,
    pub seed: u64,
    pub rays: usize,
    pub s_max: f64,
    pub ray_step: f64,
    pub s_probe: f64,
    /// θ-cells of the sphere grid in `f-monotonicity`.
    pub cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub plot: bool,
}

impl ExperimentConfig {
    /// Built-in defaults for `experiment`.
    pub fn preset(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            family: MetricFamily::Euclid1,
            ns: vec![8, 16, 32, 64],
            t0: 0.25,
            t_final: 1.0,
            dx: 0.05,
            dr: 0.05,
            dt_safety: 0.5,
            dt: 0.01,
            record_levels: 16,
            keep_every: 0,
            padding_slack: 0.2,
            probe_delta: 0.0,
            profile: ProfileKind::Gaussian,
            center: 0.0,
            width: 1.0,
            amplitude: 1.0,
            terminal_velocity_mode: VelocityMode::HeatCompatible,
            terminal_data: TerminalData::Uniform,
            c_shift: 0.0,
            seed: 1,
            rays: 100,
            s_max: 10.0,
            ray_step: 1e-3,
            s_probe: 1.0,
            cells: 2048,
            out: None,
            format: Format::Csv,
            plot: false,
        };
        match experiment {
            Experiment::EuclidResidual => ExperimentConfig {
                ns: (3..=10).map(|k| 1 << k).collect(),
                ..base
            },
            Experiment::EuclidWaveSweep => base,
            Experiment::SphereWaveSweep => ExperimentConfig {
                family: MetricFamily::Sphere2,
                ns: vec![8, 16, 32],
                t0: 0.1,
                t_final: 0.3,
                profile: ProfileKind::Constant,
                ..base
            },
            Experiment::RaysOracle => ExperimentConfig {
                ns: vec![2, 3, 4, 8],
                ..base
            },
            Experiment::WfClassify => ExperimentConfig {
                ns: vec![4, 8, 16, 32],
                ..base
            },
            Experiment::FMonotonicity => ExperimentConfig {
                family: MetricFamily::Sphere2,
                t0: 0.23,
                t_final: 0.25,
                dt: 1e-5,
                profile: ProfileKind::Constant,
                amplitude: 0.0,
                ..base
            },
            Experiment::ForwardHeat => ExperimentConfig {
                t0: -0.25,
                t_final: -1.0,
                ..base
            },
        }
    }

    /// Preset, overlaid with the file's top-level keys, its `[experiment]`
    /// section and finally `key=value` overrides.
    pub fn load(experiment: Experiment, file: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut merged = to_table(&Self::preset(experiment))?;
        if let Some(text) = file {
            let doc: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
            let mut section = None;
            for (key, value) in doc {
                match value {
                    toml::Value::Table(t) => {
                        let named = Experiment::from_str(&key)
                            .map_err(|_| Error::Config(format!("unknown section [{key}]")))?;
                        if named == experiment {
                            section = Some(t);
                        }
                    }
                    v => {
                        merged.insert(key, v);
                    }
                }
            }
            merged.extend(section.unwrap_or_default());
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            merged.insert(key.trim().to_string(), parse_value(raw.trim()));
        }
        match merged.get("experiment").and_then(|v| v.as_str()) {
            Some(name) if name == experiment.name() => {}
            other => {
                return Err(Error::Config(format!(
                    "config names experiment {other:?}, but `{experiment}` was requested"
                )))
            }
        }
        let config: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dx", self.dx),
            ("dr", self.dr),
            ("dt", self.dt),
            ("dt_safety", self.dt_safety),
            ("width", self.width),
            ("s_max", self.s_max),
            ("ray_step", self.ray_step),
            ("s_probe", self.s_probe),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "`{key}` must be positive, got {value}"
                )));
            }
        }
        for (key, value) in [
            ("probe_delta", self.probe_delta),
            ("c_shift", self.c_shift),
            ("padding_slack", self.padding_slack),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "`{key}` must be nonnegative, got {value}"
                )));
            }
        }
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[1] <= w[0]) || self.ns[0] < 2 {
            return Err(Error::Config(
                "`ns` must be strictly increasing with entries >= 2".into(),
            ));
        }
        if self.record_levels < 3 || self.rays == 0 || self.cells < 4 {
            return Err(Error::Config(
                "`record_levels` >= 3, `rays` >= 1 and `cells` >= 4 are required".into(),
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML form, output keys excluded.
    pub fn hash(&self) -> Result<String> {
        let mut table = to_table(self)?;
        for key in OUTPUT_KEYS {
            table.remove(key);
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn terminal_profile(&self) -> Profile {
        match self.profile {
            ProfileKind::Gaussian => Profile::Gaussian {
                center: vec![self.center; self.family.spatial_dim()],
                width: self.width,
            },
            ProfileKind::Constant => Profile::Constant(self.amplitude),
            ProfileKind::CosTheta => Profile::CosTheta,
            ProfileKind::Bump => Profile::Bump {
                center: vec![self.center; self.family.spatial_dim()],
                radius: self.width,
            },
        }
    }

    /// Wave template for a sweep; `n` is replaced per member.
    pub fn wave_spec(&self) -> WaveSpec {
        let mut spec = WaveSpec::new(
            self.family,
            self.ns[0],
            self.terminal_profile(),
            self.t0,
            self.t_final,
        );
        spec.velocity_mode = self.terminal_velocity_mode;
        spec.data = self.terminal_data;
        spec.c_shift = self.c_shift;
        spec.dx = self.dx;
        spec.dr = self.dr;
        spec.dt_safety = self.dt_safety;
        spec.record_levels = self.record_levels;
        spec.keep_every = self.keep_every;
        spec.padding_slack = self.padding_slack;
        spec
    }
}

fn to_table(config: &ExperimentConfig) -> Result<toml::Table> {
    toml::Table::try_from(config).map_err(|e| Error::Config(e.to_string()))
}

/// A TOML value, or the raw text as a string when it does not parse as one.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
