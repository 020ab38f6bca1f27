//! CSV readers and writers for datasets, genotypes and results.

use std::path::Path;

use simest_core::em::{EmResult, GenotypeMatrix};
use simest_core::inference::{AbcPosterior, ConfidenceResult, WeightedSummary};
use simest_core::train::TrainingTrace;
use simest_core::Matrix2;

use crate::error::{HarnessError, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn comments(lines: &[(&str, String)]) -> String {
    lines.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Datasets as CSV with a leading `dataset` index column.
pub fn datasets_to_csv(names: &[String], datasets: &[Matrix2]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (d, m) in datasets.iter().enumerate() {
        for r in 0..m.rows() {
            let mut rec = vec![d.to_string()];
            rec.extend(m.row(r).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

/// Read datasets written by [`datasets_to_csv`]; a file without the
/// `dataset` column holds a single dataset. Columns must match `names`.
pub fn read_datasets(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<Matrix2>> {
    let path = path.as_ref();
    parse_datasets(&read_text(path)?, names)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_datasets(text: &str, names: &[String]) -> Result<Vec<Matrix2>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let indexed = header.first().map(String::as_str) == Some("dataset");
    let cols = &header[usize::from(indexed)..];
    if cols != names {
        return Err(HarnessError::Input(format!("columns {cols:?}, expected {names:?}")));
    }
    let k = names.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut current: Option<String> = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = if indexed { rec.get(0).unwrap_or("").to_string() } else { String::new() };
        if current.as_ref() != Some(&id) {
            out.push(Vec::new());
            current = Some(id);
        }
        let values = out.last_mut().expect("pushed above");
        for (c, field) in rec.iter().skip(usize::from(indexed)).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                HarnessError::Input(format!("row {}: `{field}` in column {} is not a number", line + 1, names[c]))
            })?;
            values.push(v);
        }
    }
    if out.is_empty() {
        return Err(HarnessError::Input("no data rows".into()));
    }
    out.into_iter()
        .map(|v| Ok(Matrix2::new(v.len() / k, k, v)?))
        .collect()
}

/// One row per parameter vector.
pub fn params_to_csv(names: &[String], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["dataset".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn estimates_to_csv(names: &[String], est: &Matrix2) -> Result<String> {
    let rows: Vec<Vec<f64>> = (0..est.rows()).map(|r| est.row(r).to_vec()).collect();
    params_to_csv(names, &rows)
}

/// Genotype CSV with header `g1..gK` and entries in {0, 1, 2}.
pub fn read_genotypes(path: impl AsRef<Path>, loci: usize) -> Result<GenotypeMatrix> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let names: Vec<String> = (1..=loci).map(|i| format!("g{i}")).collect();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != names {
        return Err(HarnessError::Input(format!(
            "{}: genotype columns {header:?}, expected {names:?}",
            path.display()
        )));
    }
    let mut entries = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec?;
        for field in rec.iter() {
            let v: u8 = field.trim().parse().map_err(|_| {
                HarnessError::Input(format!("{}: `{field}` is not a genotype", path.display()))
            })?;
            entries.push(v);
        }
        n += 1;
    }
    Ok(GenotypeMatrix::new(n, loci, entries)?)
}

pub fn genotypes_to_csv(g: &GenotypeMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=g.loci()).map(|i| format!("g{i}")))?;
    for r in 0..g.individuals() {
        w.write_record(g.row(r).iter().map(u8::to_string))?;
    }
    finish(w)
}

/// Header `htf_0..htf_{m-1},converged,iterations` and a single row.
pub fn em_result_to_csv(res: &EmResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let m = res.htfs.values().len();
    let mut header: Vec<String> = (0..m).map(|i| format!("htf_{i}")).collect();
    header.extend(["converged".to_string(), "iterations".to_string()]);
    w.write_record(&header)?;
    let mut row: Vec<String> = res.htfs.values().iter().map(f64::to_string).collect();
    row.push(res.converged.to_string());
    row.push(res.iterations.to_string());
    w.write_record(&row)?;
    finish(w)
}

/// One row per parameter: estimate and interval bounds.
pub fn intervals_to_csv(names: &[String], res: &ConfidenceResult) -> Result<String> {
    let mut out = comments(&[
        ("level", res.level.to_string()),
        ("replicates", res.replicates.rows().to_string()),
        ("sample_size", res.sample_size.to_string()),
    ]);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter_index", "parameter", "estimate", "lower", "upper"])?;
    for (i, ((lo, hi), est)) in res.intervals.iter().zip(&res.point).enumerate() {
        w.write_record([i.to_string(), names[i].clone(), est.to_string(), lo.to_string(), hi.to_string()])?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

/// Accepted draws with their weights.
pub fn posterior_to_csv(names: &[String], post: &AbcPosterior) -> Result<String> {
    let proposal = serde_json::to_string(&post.proposal).expect("proposal serialises");
    let mut out = comments(&[
        ("epsilon", post.epsilon.to_string()),
        ("acceptance_rate", post.acceptance_rate.to_string()),
        ("proposed", post.n_proposed.to_string()),
        ("proposal", proposal),
    ]);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["draw".to_string(), "weight".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in 0..post.draws.rows() {
        let mut rec = vec![r.to_string(), post.weights[r].to_string()];
        rec.extend(post.draws.row(r).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

pub fn summary_to_csv(names: &[String], s: &WeightedSummary) -> Result<String> {
    let mut out = comments(&[("ess", s.ess.to_string())]);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["parameter".to_string(), "mean".to_string(), "sd".to_string()];
    header.extend(s.quantiles.iter().map(|(q, _)| format!("q{q}")));
    w.write_record(&header)?;
    for (i, name) in names.iter().enumerate() {
        let mut rec = vec![name.clone(), s.mean[i].to_string(), s.sd[i].to_string()];
        rec.extend(s.quantiles.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&rec)?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

/// Per-batch training losses: `epoch,batch,n,loss`.
pub fn trace_to_csv(trace: &TrainingTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "batch", "n", "loss"])?;
    for b in &trace.batches {
        w.write_record([b.epoch.to_string(), b.batch.to_string(), b.n.to_string(), b.loss.to_string()])?;
    }
    finish(w)
}
