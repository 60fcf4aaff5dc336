//! CSV persistence of a [`RunRecord`]. Column order is fixed:
//!
//! | file | columns |
//! |------|---------|
//! | `timeseries.csv` | `t,x1,x2,xbar1,xbar2,y,yhat,err[,partition]` |
//! | `weights.csv` | `t,w1,…,wN` (one row per snapshot) |
//! | `summary.csv` | `metric,scope,start,end,value` |
//! | `config_resolved.csv` | `key,value` |
//! | `control_points.csv` | `index,x1,x2,knot` (spline runs) |
//! | `store.csv` | `partition,visited,gamma1,gamma2,phi` (SMRLS runs) |
//!
//! Floats are written with 17 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{fmt_f64, resolved_csv};
use crate::experiment::RunRecord;

pub const TIMESERIES_HEADER: &str = "t,x1,x2,xbar1,xbar2,y,yhat,err";
pub const SUMMARY_HEADER: &str = "metric,scope,start,end,value";
pub const CONTROL_POINTS_HEADER: &str = "index,x1,x2,knot";

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Header of `weights.csv` for `neurons` weights.
pub fn weights_header(neurons: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=neurons {
        h.push_str(&format!(",w{i}"));
    }
    h
}

/// Header of `store.csv` for a `dimension`-dimensional input.
pub fn store_header(dimension: usize) -> String {
    let mut h = String::from("partition,visited");
    for i in 1..=dimension {
        h.push_str(&format!(",gamma{i}"));
    }
    h.push_str(",phi");
    h
}

pub fn write_timeseries(rec: &RunRecord, out: &mut impl Write) -> io::Result<()> {
    let with_partition = rec.rows.first().is_some_and(|r| r.partition.is_some());
    write!(out, "{TIMESERIES_HEADER}")?;
    if with_partition {
        write!(out, ",partition")?;
    }
    writeln!(out)?;
    for r in &rec.rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.state[0]),
            fmt_f64(r.state[1]),
            fmt_f64(r.normalized[0]),
            fmt_f64(r.normalized[1]),
            fmt_f64(r.measurement),
            fmt_f64(r.prediction),
            fmt_f64(r.error),
        )?;
        if let Some(p) = r.partition {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_weights(rec: &RunRecord, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{}", weights_header(rec.final_weights.len()))?;
    for s in &rec.snapshots {
        write!(out, "{}", fmt_f64(s.t))?;
        for w in s.weights.iter() {
            write!(out, ",{}", fmt_f64(*w))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_summary(rec: &RunRecord, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for m in &rec.metrics {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.metric,
            m.scope,
            fmt_f64(m.start),
            fmt_f64(m.end),
            fmt_f64(m.value)
        )?;
    }
    Ok(())
}

pub fn write_control_points(rec: &RunRecord, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CONTROL_POINTS_HEADER}")?;
    if let Some(spline) = &rec.spline {
        for (i, (p, k)) in spline
            .control_points()
            .iter()
            .zip(spline.knots())
            .enumerate()
        {
            writeln!(
                out,
                "{i},{},{},{}",
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(*k)
            )?;
        }
    }
    Ok(())
}

pub fn write_store(rec: &RunRecord, out: &mut impl Write) -> io::Result<()> {
    let Some(store) = &rec.store else {
        return Ok(());
    };
    writeln!(out, "{}", store_header(store.dimension()))?;
    for (index, visited, gamma, phi) in store.iter_all() {
        write!(out, "{index},{}", u8::from(visited))?;
        for g in gamma {
            write!(out, ",{}", fmt_f64(*g))?;
        }
        writeln!(out, ",{}", fmt_f64(phi))?;
    }
    Ok(())
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    let wrap = |source| OutputError {
        path: path.clone(),
        source,
    };
    let mut out = BufWriter::new(File::create(&path).map_err(wrap)?);
    body(&mut out).map_err(wrap)?;
    out.flush().map_err(wrap)?;
    Ok(path)
}

/// Writes every output file of `rec` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn write_run(rec: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![
        write_file(dir, "timeseries.csv", |o| write_timeseries(rec, o))?,
        write_file(dir, "weights.csv", |o| write_weights(rec, o))?,
        write_file(dir, "summary.csv", |o| write_summary(rec, o))?,
        write_file(dir, "config_resolved.csv", |o| {
            o.write_all(resolved_csv(&rec.config).as_bytes())
        })?,
    ];
    if rec.spline.is_some() {
        written.push(write_file(dir, "control_points.csv", |o| {
            write_control_points(rec, o)
        })?);
    }
    if rec.store.is_some() {
        written.push(write_file(dir, "store.csv", |o| write_store(rec, o))?);
    }
    Ok(written)
}
