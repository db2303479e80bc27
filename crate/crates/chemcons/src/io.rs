//! CSV trajectories, metrics sidecars, run records and edge lists.
//!
//! `states.csv` has the header `t,node_0,...,node_{M-1}`; a node that is
//! inactive at a sample is written as an empty cell. `metrics.csv` has
//! `t,nmse,deviation`. Floats use the shortest representation that parses
//! back to the same bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chemcons_core::metrics::TrajectorySample;
use chemcons_core::topology::NetworkGraph;

use crate::error::RunError;
use crate::run::{Metrics, RunRecord};

pub fn write_states_csv(path: &Path, samples: &[TrajectorySample]) -> Result<(), RunError> {
    let m = samples.first().map_or(0, |s| s.state.len());
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["t".to_string()];
    header.extend((0..m).map(|i| format!("node_{i}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(m + 1);
    for s in samples {
        row.clear();
        row.push(s.t.to_string());
        for (x, &a) in s.state.iter().zip(&s.active) {
            row.push(if a { x.to_string() } else { String::new() });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(cell: &str, line: usize) -> Result<f64, RunError> {
    cell.parse()
        .map_err(|_| RunError::Format(format!("line {line}: `{cell}` is not a number")))
}

/// Inverse of [`write_states_csv`]; empty cells become inactive nodes with
/// a NaN state.
pub fn read_states_csv(path: &Path) -> Result<Vec<TrajectorySample>, RunError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = r.headers()?.clone();
    if headers.get(0) != Some("t")
        || headers
            .iter()
            .skip(1)
            .enumerate()
            .any(|(i, h)| h != format!("node_{i}"))
    {
        return Err(RunError::Format("states header must be t,node_0,...".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = parse_f64(&rec[0], line + 2)?;
        let mut state = Vec::with_capacity(rec.len() - 1);
        let mut active = Vec::with_capacity(rec.len() - 1);
        for cell in rec.iter().skip(1) {
            if cell.is_empty() {
                state.push(f64::NAN);
                active.push(false);
            } else {
                state.push(parse_f64(cell, line + 2)?);
                active.push(true);
            }
        }
        out.push(TrajectorySample { t, state, active });
    }
    Ok(out)
}

pub fn write_metrics_csv(path: &Path, metrics: &Metrics) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["t", "nmse", "deviation"])?;
    for i in 0..metrics.t.len() {
        w.write_record([
            metrics.t[i].to_string(),
            metrics.nmse[i].to_string(),
            metrics.deviation[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, nmse, deviation)` columns.
pub type MetricColumns = (Vec<f64>, Vec<f64>, Vec<f64>);

pub fn read_metrics_csv(path: &Path) -> Result<MetricColumns, RunError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    if r.headers()?.iter().collect::<Vec<_>>() != ["t", "nmse", "deviation"] {
        return Err(RunError::Format("metrics header must be t,nmse,deviation".into()));
    }
    let (mut t, mut n, mut d) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        t.push(parse_f64(&rec[0], line + 2)?);
        n.push(parse_f64(&rec[1], line + 2)?);
        d.push(parse_f64(&rec[2], line + 2)?);
    }
    Ok((t, n, d))
}

/// Writes `states.csv`, `metrics.csv` and `record.json` into `dir`.
pub fn write_run(dir: &Path, record: &RunRecord) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    write_states_csv(&dir.join("states.csv"), &record.samples)?;
    write_metrics_csv(&dir.join("metrics.csv"), &record.metrics)?;
    let json = serde_json::to_string_pretty(&record.summary()).expect("record serializes");
    std::fs::write(dir.join("record.json"), json + "\n")?;
    Ok(())
}

/// `nodes M` on the first line, then one `i j` directed edge per line.
pub fn write_edge_list(path: &Path, g: &NetworkGraph) -> Result<(), RunError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "nodes {}", g.node_count())?;
    for (i, j) in g.edges() {
        writeln!(w, "{i} {j}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_list(path: &Path) -> Result<NetworkGraph, RunError> {
    let r = BufReader::new(File::open(path)?);
    let mut n = None;
    let mut edges = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || RunError::Format(format!("edge list line {}: `{line}`", k + 1));
        match (n, parts.as_slice()) {
            (None, ["nodes", m]) => n = Some(m.parse::<usize>().map_err(|_| bad())?),
            (Some(_), [i, j]) => edges.push((
                i.parse::<usize>().map_err(|_| bad())?,
                j.parse::<usize>().map_err(|_| bad())?,
            )),
            _ => return Err(bad()),
        }
    }
    let n = n.ok_or_else(|| RunError::Format("edge list lacks a `nodes M` line".into()))?;
    Ok(NetworkGraph::from_edges(n, &edges)?)
}
