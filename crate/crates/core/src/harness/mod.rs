//! Experiment registry, configuration, rate fits and table emission.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod fit;

use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Format, ProfileKind};
pub use emit::{emit, parse_csv, plot_script, to_csv_string, to_json_string};
pub use fit::{fit_rate, RateFit};

use crate::error::{Error, Result};
use crate::table::ResultTable;

/// Metadata key holding the wall time, the only nondeterministic part of the metadata.
pub const WALL_TIME: &str = "wall_time";

/// Run one experiment; metadata records the experiment, its config hash and wall time.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let start = Instant::now();
    let annotate = |e: Error| Error::Experiment {
        experiment: config.experiment.name().to_string(),
        source: Box::new(e),
    };
    config.validate().map_err(annotate)?;
    let mut table = match config.experiment {
        Experiment::EuclidResidual => experiments::euclid_residual(config),
        Experiment::EuclidWaveSweep | Experiment::SphereWaveSweep => {
            experiments::wave_sweep(config)
        }
        Experiment::RaysOracle => experiments::rays_oracle(config),
        Experiment::WfClassify => experiments::wf_classify(config),
        Experiment::FMonotonicity => experiments::f_monotonicity(config),
        Experiment::ForwardHeat => experiments::forward_heat(config),
    }
    .map_err(annotate)?;
    table.validate().map_err(annotate)?;
    table.set_meta("experiment", config.experiment.name());
    table.set_meta("config_hash", config.hash()?);
    table.set_meta("seed", config.seed);
    table.set_meta(WALL_TIME, format!("{:.3}", start.elapsed().as_secs_f64()));
    Ok(table)
}
