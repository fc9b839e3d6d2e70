//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL with their measured
//! numbers; they only break the run if they start passing, so the list has to be
//! kept honest. Any other failure exits nonzero.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ricciwave::harness::{run_experiment, Experiment, ExperimentConfig, ProfileKind};
use ricciwave::table::ResultTable;
use ricciwave::wave::self_convergence;

/// Criteria that fail for reasons documented in the README ("Known failures").
const KNOWN_FAILURES: [(u32, &str); 2] = [
    (2, "r-independent terminal data evolves by (2t/N)u_tt = u_xx, whose slice does not approach the heat solution"),
    (4, "spatially constant data on the sphere follows (2t/N)u'' + (tR/N)u' = R, which departs from the heat solution by O(N)"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn preset(e: Experiment) -> ExperimentConfig {
    ExperimentConfig::preset(e)
}

fn run(config: &ExperimentConfig) -> Result<ResultTable, String> {
    run_experiment(config).map_err(|e| e.to_string())
}

fn col(t: &ResultTable, name: &str) -> Result<Vec<f64>, String> {
    t.column(name).map_err(|e| e.to_string())
}

fn meta(t: &ResultTable, key: &str) -> Result<f64, String> {
    t.meta
        .get(key)
        .ok_or(format!("missing meta `{key}`"))?
        .parse()
        .map_err(|e| format!("meta `{key}`: {e}"))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion_1() -> Result<Outcome, String> {
    let start = Instant::now();
    let t = run(&preset(Experiment::EuclidResidual))?;
    let elapsed = start.elapsed();
    let (slope, r2) = (meta(&t, "slope")?, meta(&t, "r_squared")?);
    let mismatch = col(&t, "mismatch")?.into_iter().fold(0.0, f64::max);
    let scale = col(&t, "predicted")?.into_iter().fold(0.0, f64::max);
    Ok(Outcome {
        pass: (slope + 1.0).abs() <= 1e-6 && r2 > 0.999999 && mismatch <= 1e-12 * scale && within(elapsed, 5.0),
        detail: format!("slope {slope:.9}, r² {r2:.12}, max |residual - (2t/N)w_tt| {mismatch:.2e}, {elapsed:.2?}"),
    })
}

fn sweep_summary(t: &ResultTable) -> Result<(Vec<f64>, Vec<f64>), String> {
    Ok((col(t, "N")?, col(t, "e")?))
}

fn criterion_2() -> Result<Outcome, String> {
    let start = Instant::now();
    let t = run(&preset(Experiment::EuclidWaveSweep))?;
    let elapsed = start.elapsed();
    let (ns, e) = sweep_summary(&t)?;
    let slope = meta(&t, "slope").unwrap_or(f64::NAN);
    let last = *e.last().unwrap();
    Ok(Outcome {
        pass: strictly_decreasing(&e)
            && (-1.5..=-0.5).contains(&slope)
            && last < 5e-3
            && within(elapsed, 600.0),
        detail: format!("N {ns:?}, e {e:.4?}, slope {slope:.3}, e(64) {last:.3e}, {elapsed:.2?}"),
    })
}

fn criterion_3() -> Result<Outcome, String> {
    let mut c = preset(Experiment::EuclidWaveSweep);
    c.profile = ProfileKind::Constant;
    c.amplitude = 1.0;
    let start = Instant::now();
    let t = run(&c)?;
    let elapsed = start.elapsed();
    let e = col(&t, "e")?;
    let worst = e.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        pass: e.iter().all(|v| *v < 1e-10) && within(elapsed, 60.0),
        detail: format!(
            "max e {worst:.2e} over N {:?}, {elapsed:.2?}",
            col(&t, "N")?
        ),
    })
}

fn criterion_4() -> Result<Outcome, String> {
    let start = Instant::now();
    let t = run(&preset(Experiment::SphereWaveSweep))?;
    let elapsed = start.elapsed();
    let (ns, e) = sweep_summary(&t)?;
    Ok(Outcome {
        pass: strictly_decreasing(&e) && within(elapsed, 600.0),
        detail: format!("N {ns:?}, e {e:.4?}, {elapsed:.2?}"),
    })
}

fn criterion_5() -> Result<Outcome, String> {
    let t = run(&preset(Experiment::RaysOracle))?;
    let max = |name| col(&t, name).map(|v| v.into_iter().fold(0.0, f64::max));
    let (err, drift, inv) = (max("max_error")?, max("symbol_drift")?, max("ttau2_drift")?);
    Ok(Outcome {
        pass: t.rows.len() == 100 && err < 1e-8 && drift < 1e-10 && inv < 1e-10,
        detail: format!(
            "{} rays, max error {err:.2e}, symbol drift {drift:.2e}, tτ² drift {inv:.2e}",
            t.rows.len()
        ),
    })
}

fn criterion_6() -> Result<Outcome, String> {
    let start = Instant::now();
    let t = run(&preset(Experiment::WfClassify))?;
    let elapsed = start.elapsed();
    let classes = col(&t, "class")?;
    let spread = col(&t, "spread")?[1];
    Ok(Outcome {
        // codes: 1 terminal_stationary, 2 escapes_to_infinity, 0 regular
        pass: classes == [1.0, 2.0, 0.0] && (0.0..=1e-6).contains(&spread) && within(elapsed, 5.0),
        detail: format!("classes {classes:?}, escape spread {spread:.2e}, {elapsed:.2?}"),
    })
}

fn criterion_7() -> Result<Outcome, String> {
    let c = preset(Experiment::FMonotonicity);
    let start = Instant::now();
    let t = run(&c)?;
    let elapsed = start.elapsed();
    let (times, f, lhs) = (col(&t, "t")?, col(&t, "F")?, col(&t, "dF_dt")?);
    let rel = times
        .iter()
        .zip(&lhs)
        .map(|(s, d)| {
            let exact = 16.0 * PI * (1.0 - 2.0 * c.t_final) / (1.0 - 2.0 * s).powi(2);
            ((d - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let nondecreasing = f.windows(2).all(|w| w[1] >= w[0]) && lhs.iter().all(|d| *d >= 0.0);
    let drift = meta(&t, "rn_drift")?;
    Ok(Outcome {
        pass: rel <= 1e-6 && nondecreasing && drift < 1e-8 && within(elapsed, 60.0),
        detail: format!(
            "{} samples, max rel dF/dt error {rel:.2e}, nondecreasing {nondecreasing}, mass drift {drift:.2e}, {elapsed:.2?}",
            times.len()
        ),
    })
}

fn criterion_8() -> Result<Outcome, String> {
    let mut ratios = Vec::new();
    for e in [Experiment::EuclidWaveSweep, Experiment::SphereWaveSweep] {
        let sc = self_convergence(&preset(e).wave_spec()).map_err(|e| e.to_string())?;
        ratios.push((e.name(), sc.coarse_diff, sc.fine_diff, sc.ratio()));
    }
    Ok(Outcome {
        pass: ratios.iter().all(|r| r.3 >= 3.5),
        detail: ratios
            .iter()
            .map(|(n, a, b, r)| format!("{n}: {a:.2e} -> {b:.2e} (x{r:.2})"))
            .collect::<Vec<_>>()
            .join(", "),
    })
}

type Check = fn() -> Result<Outcome, String>;

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 8] = [
        (1, "almost-harmonic residual scales as 1/N", criterion_1),
        (2, "euclid wave slice converges to heat kernel", criterion_2),
        (3, "constant data is exact", criterion_3),
        (
            4,
            "sphere wave slice converges to heat solution",
            criterion_4,
        ),
        (5, "ray integrator matches closed form", criterion_5),
        (
            6,
            "wavefront classification of canonical seeds",
            criterion_6,
        ),
        (7, "F-functional monotonicity on the sphere", criterion_7),
        (8, "second-order self-convergence", criterion_8),
    ];
    let mut unexpected = 0;
    for (k, name, check) in criteria {
        let known = KNOWN_FAILURES
            .iter()
            .find(|(id, _)| *id == k)
            .map(|(_, why)| *why);
        let outcome = check().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        let status = match (outcome.pass, known) {
            (true, None) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (true, Some(_)) => {
                unexpected += 1;
                "PASS (listed as known failure; update the list)"
            }
            (false, None) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {k} [{name}]: {status} | {}", outcome.detail);
        if let (false, Some(why)) = (outcome.pass, known) {
            println!("    reason: {why}");
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
