//! Side-by-side comparison of run summaries.
//!
//! Each input is a `summary.csv` written by the runner. Rows become
//! columns labeled `run:strategy`, metrics become rows, and the merged
//! result is emitted twice: a machine-readable CSV (values copied
//! verbatim from the inputs, so merging loses no precision) and an
//! aligned plain-text table for reading.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Leading identity columns every summary starts with; everything after
/// them is a metric column.
const ID_COLUMNS: [&str; 3] = ["run", "strategy", "seeds"];

struct Summary {
    path: PathBuf,
    metric_columns: Vec<String>,
    /// (column label, metric values) per row, labels `run:strategy`.
    rows: Vec<(String, Vec<String>)>,
}

fn read_summary(path: &Path) -> Result<Summary> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("failed to read {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("failed to read {}", path.display()))?
        .clone();
    let found: Vec<&str> = headers.iter().take(ID_COLUMNS.len()).collect();
    if found != ID_COLUMNS {
        bail!(
            "{}: expected a run summary starting with columns {}, found {}",
            path.display(),
            ID_COLUMNS.join(","),
            found.join(",")
        );
    }
    let metric_columns: Vec<String> = headers
        .iter()
        .skip(ID_COLUMNS.len())
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("failed to read {}", path.display()))?;
        if record.len() != headers.len() {
            bail!(
                "{}: row has {} fields, header has {}",
                path.display(),
                record.len(),
                headers.len()
            );
        }
        let label = format!("{}:{}", &record[0], &record[1]);
        let values = record
            .iter()
            .skip(ID_COLUMNS.len())
            .map(str::to_string)
            .collect();
        rows.push((label, values));
    }
    if rows.is_empty() {
        bail!("{}: summary has no rows", path.display());
    }
    Ok(Summary {
        path: path.to_path_buf(),
        metric_columns,
        rows,
    })
}

/// Merge `summaries`, write the merged CSV to `out`, and return the
/// aligned text table. All inputs must expose the same metric columns;
/// mismatches are reported as the exact set differences.
pub fn compare(summaries: &[PathBuf], out: &Path) -> Result<String> {
    if summaries.len() < 2 {
        bail!(
            "compare needs at least two summaries (got {})",
            summaries.len()
        );
    }
    let parsed: Vec<Summary> = summaries
        .iter()
        .map(|p| read_summary(p))
        .collect::<Result<_>>()?;

    let reference = &parsed[0];
    for other in &parsed[1..] {
        let missing: Vec<&String> = reference
            .metric_columns
            .iter()
            .filter(|c| !other.metric_columns.contains(c))
            .collect();
        let extra: Vec<&String> = other
            .metric_columns
            .iter()
            .filter(|c| !reference.metric_columns.contains(c))
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            let mut diff = Vec::new();
            if !missing.is_empty() {
                diff.push(format!(
                    "only in {}: {}",
                    reference.path.display(),
                    missing
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            if !extra.is_empty() {
                diff.push(format!(
                    "only in {}: {}",
                    other.path.display(),
                    extra
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            bail!(
                "metric columns differ between {} and {}: {}",
                reference.path.display(),
                other.path.display(),
                diff.join("; ")
            );
        }
    }

    // One output column per input row, in input order; repeated labels
    // (e.g. comparing a run against itself) get a #k suffix.
    let mut labels: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<String>> = Vec::new();
    for summary in &parsed {
        let order: Vec<usize> = reference
            .metric_columns
            .iter()
            .map(|c| {
                summary
                    .metric_columns
                    .iter()
                    .position(|x| x == c)
                    .expect("column sets were checked equal")
            })
            .collect();
        for (label, values) in &summary.rows {
            let mut unique = label.clone();
            let mut k = 1;
            while labels.contains(&unique) {
                k += 1;
                unique = format!("{label}#{k}");
            }
            labels.push(unique);
            columns.push(order.iter().map(|i| values[*i].clone()).collect());
        }
    }

    write_merged_csv(out, &reference.metric_columns, &labels, &columns)?;
    Ok(render_table(&reference.metric_columns, &labels, &columns))
}

fn write_merged_csv(
    out: &Path,
    metrics: &[String],
    labels: &[String],
    columns: &[Vec<String>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(out)
        .with_context(|| format!("failed to write {}", out.display()))?;
    let mut header = vec!["metric".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (i, metric) in metrics.iter().enumerate() {
        let mut row = vec![metric.clone()];
        row.extend(columns.iter().map(|c| c[i].clone()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Pair `<base>_mean`/`<base>_std` columns into `mean ± std` cells;
/// other metrics print as-is.
fn render_table(metrics: &[String], labels: &[String], columns: &[Vec<String>]) -> String {
    struct Row {
        name: String,
        cells: Vec<String>,
    }

    let fmt = |s: &str| match s.parse::<f64>() {
        Ok(v) => format!("{v:.2}"),
        Err(_) => s.to_string(),
    };

    let mut rows: Vec<Row> = Vec::new();
    let mut consumed = vec![false; metrics.len()];
    for (i, metric) in metrics.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        if let Some(base) = metric.strip_suffix("_mean") {
            let std_name = format!("{base}_std");
            if let Some(j) = metrics.iter().position(|m| *m == std_name) {
                consumed[i] = true;
                consumed[j] = true;
                rows.push(Row {
                    name: base.to_string(),
                    cells: columns
                        .iter()
                        .map(|c| {
                            if c[i].is_empty() {
                                "-".to_string()
                            } else {
                                format!("{} ± {}", fmt(&c[i]), fmt(&c[j]))
                            }
                        })
                        .collect(),
                });
                continue;
            }
        }
        consumed[i] = true;
        rows.push(Row {
            name: metric.clone(),
            cells: columns.iter().map(|c| fmt(&c[i])).collect(),
        });
    }

    let mut widths: Vec<usize> = vec![rows.iter().map(|r| r.name.len()).max().unwrap_or(6)];
    widths[0] = widths[0].max("metric".len());
    for (k, label) in labels.iter().enumerate() {
        let w = rows
            .iter()
            .map(|r| r.cells[k].len())
            .max()
            .unwrap_or(0)
            .max(label.len());
        widths.push(w);
    }

    let mut out = String::new();
    let _ = write!(out, "{:<w$}", "metric", w = widths[0]);
    for (k, label) in labels.iter().enumerate() {
        let _ = write!(out, "  {:>w$}", label, w = widths[k + 1]);
    }
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "{:<w$}", row.name, w = widths[0]);
        for (k, cell) in row.cells.iter().enumerate() {
            let _ = write!(out, "  {:>w$}", cell, w = widths[k + 1]);
        }
        out.push('\n');
    }
    out
}
