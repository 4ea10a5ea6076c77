//! Reporter: per-key summaries and learning curves over a log stream, with
//! plain-text table and RFC-4180 CSV output.

use std::collections::BTreeMap;
use std::path::Path;

use crate::canon::fmt_f64;
use crate::error::{Error, Result};
use crate::monitoring::logger::LogRecord;

/// Per-key aggregates over a log stream.
#[derive(Debug, Clone, PartialEq)]
pub struct KeySummary {
    pub key: String,
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub last: f64,
}

/// Ordered (step, value) pairs for one key.
pub type Series = Vec<(u64, f64)>;

fn parse_lines(text: &str) -> Result<Vec<LogRecord>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Report {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Per-key count/mean/min/max/last, rows sorted by key. The aggregate for a
/// key depends only on that key's subsequence of the stream.
pub fn summarize(text: &str) -> Result<Vec<KeySummary>> {
    let records = parse_lines(text)?;
    let mut acc: BTreeMap<String, (u64, f64, f64, f64, f64)> = BTreeMap::new();
    for r in records {
        let entry = acc
            .entry(r.key.clone())
            .or_insert((0, 0.0, f64::INFINITY, f64::NEG_INFINITY, 0.0));
        entry.0 += 1;
        entry.1 += r.value;
        entry.2 = entry.2.min(r.value);
        entry.3 = entry.3.max(r.value);
        entry.4 = r.value;
    }
    Ok(acc
        .into_iter()
        .map(|(key, (count, sum, min, max, last))| KeySummary {
            key,
            count,
            mean: sum / count as f64,
            min,
            max,
            last,
        })
        .collect())
}

pub fn summarize_file(path: &Path) -> Result<Vec<KeySummary>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    summarize(&text)
}

/// Values for one key in step order, smoothed by a trailing moving average
/// over `min(window, points so far)` points. An absent key yields an empty
/// series.
pub fn learning_curve(text: &str, key: &str, window: usize) -> Result<Series> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let records = parse_lines(text)?;
    let points: Vec<(u64, f64)> = records
        .into_iter()
        .filter(|r| r.key == key)
        .map(|r| (r.global_step, r.value))
        .collect();
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, &(step, _))| {
            let lo = i + 1 - window.min(i + 1);
            let slice = &points[lo..=i];
            let mean = slice.iter().map(|&(_, v)| v).sum::<f64>() / slice.len() as f64;
            (step, mean)
        })
        .collect())
}

/// Plain-text table with aligned columns.
pub fn summary_to_table(rows: &[KeySummary]) -> String {
    let headers = ["key", "count", "mean", "min", "max", "last"];
    let mut cells: Vec<[String; 6]> = vec![headers.map(String::from)];
    for r in rows {
        cells.push([
            r.key.clone(),
            r.count.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.min),
            format!("{:.6}", r.max),
            format!("{:.6}", r.last),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    cells
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, cell)| format!("{:width$}", cell, width = widths[c]))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// CSV with header `key,count,mean,min,max,last`, RFC-4180 quoting.
pub fn summary_to_csv(rows: &[KeySummary]) -> String {
    let mut out = String::from("key,count,mean,min,max,last\r\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\r\n",
            csv_quote(&r.key),
            r.count,
            fmt_f64(r.mean),
            fmt_f64(r.min),
            fmt_f64(r.max),
            fmt_f64(r.last),
        ));
    }
    out
}
