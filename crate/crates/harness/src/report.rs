//! Coverage report CSV.
//!
//! Metadata comes first as `# key: value` lines, then a header
//! `scenario,parameter_index,sample_size,coverage,mc_se,bias,rmse` and one
//! row per (parameter, sample size).

use std::collections::BTreeMap;
use std::path::Path;

use crate::coverage::{CoverageReport, CoverageRow};
use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 7] =
    ["scenario", "parameter_index", "sample_size", "coverage", "mc_se", "bias", "rmse"];

pub fn report_to_string(report: &CoverageReport) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# scenario: {}\n", report.scenario));
    out.push_str(&format!("# replications: {}\n", report.replications));
    for (k, v) in &report.metadata {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in &report.rows {
        w.write_record([
            report.scenario.clone(),
            r.parameter_index.to_string(),
            r.sample_size.to_string(),
            r.coverage.to_string(),
            r.mc_se.to_string(),
            r.bias.to_string(),
            r.rmse.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Input(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn write_report(report: &CoverageReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_to_string(report)?).map_err(|e| HarnessError::io(path, e))
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Input(format!("report column `{}` is malformed", HEADER[i])))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<CoverageReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_report(&text)
}

pub fn parse_report(text: &str) -> Result<CoverageReport> {
    let mut metadata = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once(": ") {
            metadata.insert(k.to_string(), v.to_string());
        }
    }
    let scenario = metadata.remove("scenario").unwrap_or_default();
    let replications = metadata
        .remove("replications")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| HarnessError::Input("report lacks `# replications` line".into()))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Input(format!("unexpected report header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(CoverageRow {
            parameter_index: parse_field(&rec, 1)?,
            sample_size: parse_field(&rec, 2)?,
            coverage: parse_field(&rec, 3)?,
            mc_se: parse_field(&rec, 4)?,
            bias: parse_field(&rec, 5)?,
            rmse: parse_field(&rec, 6)?,
        });
    }
    Ok(CoverageReport { scenario, replications, rows, metadata })
}

/// Fixed-width text table of a report.
pub fn format_table(report: &CoverageReport) -> String {
    let mut s = format!(
        "scenario {} ({} replications)\n{:>9} {:>6} {:>9} {:>8} {:>9} {:>8}\n",
        report.scenario, report.replications, "parameter", "n", "coverage", "mc_se", "bias", "rmse"
    );
    for r in &report.rows {
        s.push_str(&format!(
            "{:>9} {:>6} {:>9.3} {:>8.4} {:>9.4} {:>8.4}\n",
            r.parameter_index, r.sample_size, r.coverage, r.mc_se, r.bias, r.rmse
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CoverageReport {
        let mut metadata = BTreeMap::new();
        metadata.insert("seed".into(), "7".into());
        CoverageReport {
            scenario: "toy".into(),
            replications: 50,
            rows: vec![
                CoverageRow { parameter_index: 0, sample_size: 25, coverage: 0.94, mc_se: 0.0336, bias: -0.01, rmse: 0.2 },
                CoverageRow { parameter_index: 0, sample_size: 100, coverage: 1.0, mc_se: 0.0, bias: 1e-17, rmse: 0.1 },
            ],
            metadata,
        }
    }

    #[test]
    fn round_trip() {
        let r = sample();
        let text = report_to_string(&r).unwrap();
        assert!(text.starts_with("# scenario: toy\n# replications: 50\n# seed: 7\nscenario,parameter_index"));
        assert_eq!(parse_report(&text).unwrap(), r);
    }

    #[test]
    fn row_count_matches_grid() {
        let text = report_to_string(&sample()).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("toy,")).count(), 2);
    }

    #[test]
    fn table_has_one_line_per_row() {
        assert_eq!(format_table(&sample()).lines().count(), 4);
    }
}
