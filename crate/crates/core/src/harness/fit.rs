//! Power-law rate fits.

use crate::error::{Error, Result};
use crate::table::ResultTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `ln y` on `ln x`, skipping rows flagged as diverged.
pub fn fit_rate(table: &ResultTable, x_col: &str, y_col: &str) -> Result<RateFit> {
    let (xs, ys) = (table.column(x_col)?, table.column(y_col)?);
    let points: Vec<(f64, f64)> = xs
        .into_iter()
        .zip(ys)
        .enumerate()
        .filter(|(i, _)| !table.is_diverged(*i))
        .map(|(_, p)| p)
        .collect();
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "rate fit needs >= 3 rows, got {}",
            points.len()
        )));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::invalid(format!(
            "rate fit needs positive values, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let (mx, my) = logs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "rate fit needs at least two distinct x values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = logs.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}
