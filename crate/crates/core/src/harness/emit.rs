//! Table serialization: CSV, JSON and a point-plot script.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::Format;
use crate::error::{Error, Result};
use crate::table::ResultTable;

/// 17 significant digits, enough to round-trip any f64.
fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(table: &ResultTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| number(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(table: &ResultTable) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
}

/// Inverse of [`write_csv`]; metadata is not part of the CSV layout.
pub fn parse_csv(text: &str) -> Result<ResultTable> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut table = ResultTable::new(r.headers()?.iter());
    for record in r.records() {
        let row = record?
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad number `{f}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        table.push(row)?;
    }
    Ok(table)
}

/// JSON object with `columns`, `rows` and `meta`; NaN is written as `null`.
pub fn to_json_string(table: &ResultTable) -> Result<String> {
    let mut s = serde_json::to_string_pretty(table)?;
    s.push('\n');
    Ok(s)
}

/// Sibling plot script path: `out.csv` -> `out.plot`.
pub fn plot_script_path(path: &Path) -> PathBuf {
    path.with_extension("plot")
}

/// Gnuplot-compatible script with the data inlined, plotting every column
/// against the first.
pub fn plot_script(table: &ResultTable, title: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("set title \"{title}\"\n"));
    if let Some(x) = table.columns.first() {
        s.push_str(&format!("set xlabel \"{x}\"\n"));
    }
    s.push_str("$data << EOD\n");
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| number(*v)).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s.push_str("EOD\n");
    let series: Vec<String> = table
        .columns
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, name)| format!("$data using 1:{} with points title \"{name}\"", k + 1))
        .collect();
    if !series.is_empty() {
        s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    }
    s
}

/// Write `table` to `path`; with `plot`, also write the sibling plot script.
pub fn emit(table: &ResultTable, format: Format, path: &Path, plot: bool) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv_string(table)?,
        Format::Json => to_json_string(table)?,
    };
    fs::write(path, text)?;
    if plot {
        let title = table
            .meta
            .get("experiment")
            .map(String::as_str)
            .unwrap_or("table");
        fs::write(plot_script_path(path), plot_script(table, title))?;
    }
    Ok(())
}
