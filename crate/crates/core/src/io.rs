//! On-disk formats of a run.
//!
//! * `records.csv`: one row per mesh level with the columns in
//!   [`RECORD_COLUMNS`]; error columns are empty without an exact solution.
//! * `trace.jsonl`: one JSON object per inner iteration.
//! * `summary.json`: final status and totals.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{IterationTrace, Observer, RefinementRecord};

pub const RECORD_COLUMNS: [&str; 14] = [
    "k",
    "dofs",
    "elements",
    "iterations",
    "exit",
    "final_r",
    "eta",
    "zeta",
    "gamma",
    "delta",
    "alpha",
    "sigma",
    "l2_err",
    "h1_err",
];

/// A row of `records.csv` as read back from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub k: usize,
    pub dofs: usize,
    pub elements: usize,
    pub iterations: usize,
    pub exit: String,
    pub final_r: f64,
    pub eta: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub l2_err: Option<f64>,
    pub h1_err: Option<f64>,
}

impl From<&RefinementRecord> for RecordRow {
    fn from(r: &RefinementRecord) -> Self {
        Self {
            k: r.k,
            dofs: r.dofs,
            elements: r.elements,
            iterations: r.iterations,
            exit: r.exit.as_str().to_string(),
            final_r: r.final_r,
            eta: r.eta,
            zeta: r.zeta,
            gamma: r.gamma,
            delta: r.delta,
            alpha: r.alpha,
            sigma: r.sigma,
            l2_err: r.l2_err,
            h1_err: r.h1_err,
        }
    }
}

/// Writes `records.csv`, flushing after every row.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(RECORD_COLUMNS)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &RefinementRecord) -> Result<()> {
        self.inner.serialize(RecordRow::from(record))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records<W: Write>(out: W, records: &[RefinementRecord]) -> Result<()> {
    let mut w = RecordWriter::new(out)?;
    records.iter().try_for_each(|r| w.write(r))
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_COLUMNS {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {header:?}"),
        });
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes iteration traces as JSON lines.
pub struct TraceWriter<W: Write> {
    out: W,
    /// Only iterations carrying an event are written.
    events_only: bool,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W, events_only: bool) -> Self {
        Self { out, events_only }
    }

    pub fn write(&mut self, t: &IterationTrace) -> Result<()> {
        let eventful = t.gamma_update.is_some()
            || t.delta_update.is_some()
            || t.exit.is_some()
            || t.step_failure.is_some()
            || !t.anomalies.is_empty();
        if self.events_only && !eventful {
            return Ok(());
        }
        serde_json::to_writer(&mut self.out, t)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.out.flush()?)
    }
}

/// Streams records and traces to files while a run progresses.
pub struct FileObserver {
    records: RecordWriter<BufWriter<File>>,
    trace: Option<TraceWriter<BufWriter<File>>>,
}

impl FileObserver {
    pub fn create(dir: &Path, trace: Option<bool>) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let records = RecordWriter::new(BufWriter::new(File::create(dir.join("records.csv"))?))?;
        let trace = match trace {
            Some(events_only) => Some(TraceWriter::new(
                BufWriter::new(File::create(dir.join("trace.jsonl"))?),
                events_only,
            )),
            None => None,
        };
        Ok(Self { records, trace })
    }
}

impl Observer for FileObserver {
    fn iteration(&mut self, t: &IterationTrace) -> Result<()> {
        match &mut self.trace {
            Some(w) => w.write(t),
            None => Ok(()),
        }
    }

    fn refinement(&mut self, record: &RefinementRecord) -> Result<()> {
        if let Some(w) = &mut self.trace {
            w.flush()?;
        }
        self.records.write(record)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Fewest rows a rate fit is computed from.
pub const MIN_FIT_ROWS: usize = 6;

/// Convergence rates against the number of dofs over the consistent tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub rows: usize,
    pub first_k: usize,
    pub last_k: usize,
    pub eta_slope: f64,
    pub l2_slope: Option<f64>,
    pub h1_slope: Option<f64>,
}

/// Fits rates over the trailing run of rows with `delta = 1`, optionally
/// restricted to the last `window` of them.
pub fn rate_fit(rows: &[RecordRow], window: Option<usize>) -> Result<RateFit> {
    let start = rows.iter().rposition(|r| r.delta != 1.0).map_or(0, |i| i + 1);
    let mut tail = &rows[start..];
    if let Some(w) = window {
        tail = &tail[tail.len().saturating_sub(w)..];
    }
    if tail.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} rows with delta = 1 at the end of the run, need {MIN_FIT_ROWS}",
            tail.len()
        )));
    }
    let n: Vec<f64> = tail.iter().map(|r| r.dofs as f64).collect();
    let eta: Vec<f64> = tail.iter().map(|r| r.eta).collect();
    let column = |get: fn(&RecordRow) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = tail.iter().map(get).collect();
        v.map(|v| loglog_slope(&n, &v))
    };
    Ok(RateFit {
        rows: tail.len(),
        first_k: tail[0].k,
        last_k: tail[tail.len() - 1].k,
        eta_slope: loglog_slope(&n, &eta),
        l2_slope: column(|r| r.l2_err),
        h1_slope: column(|r| r.h1_err),
    })
}

/// Reads `records.csv` and fits rates over its consistent tail.
pub fn emit_rate_fit(path: &Path, window: Option<usize>) -> Result<RateFit> {
    rate_fit(&read_records(path)?, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, dofs: usize, eta: f64, delta: f64) -> RecordRow {
        RecordRow {
            k,
            dofs,
            elements: 2 * dofs,
            iterations: 3,
            exit: "converged".into(),
            final_r: 1e-9,
            eta,
            zeta: eta / 2.0,
            gamma: 1.0,
            delta,
            alpha: 0.0,
            sigma: 1.0,
            l2_err: None,
            h1_err: None,
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let rows: Vec<_> = (0..10)
            .map(|k| {
                let n = 100 * (k + 1) * (k + 1);
                row(k, n, (n as f64).powf(-0.5), 1.0)
            })
            .collect();
        let fit = rate_fit(&rows, None).unwrap();
        assert!((fit.eta_slope + 0.5).abs() < 1e-12);
        assert_eq!(fit.l2_slope, None);
    }

    #[test]
    fn constant_estimator_has_zero_slope() {
        let rows: Vec<_> = (0..8).map(|k| row(k, 50 + 20 * k, 3.0, 1.0)).collect();
        assert!(rate_fit(&rows, None).unwrap().eta_slope.abs() < 1e-15);
    }

    #[test]
    fn fit_uses_trailing_consistent_rows() {
        let mut rows: Vec<_> = (0..12).map(|k| row(k, 100 << k, 1.0 / (k as f64 + 1.0), 1.0)).collect();
        rows[3].delta = 0.5;
        let fit = rate_fit(&rows, None).unwrap();
        assert_eq!((fit.first_k, fit.rows), (4, 8));
        assert!(matches!(rate_fit(&rows[..9], None), Err(Error::InsufficientData(_))));
        assert_eq!(rate_fit(&rows, Some(6)).unwrap().first_k, 6);
    }

    #[test]
    fn csv_round_trip() {
        let mut rows: Vec<_> = (0..3).map(|k| row(k, 10 + k, 0.1, 0.25)).collect();
        rows[1].l2_err = Some(1e-3);
        rows[1].h1_err = Some(2.5e-2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).unwrap();
            w.write_record(RECORD_COLUMNS).unwrap();
            for r in &rows {
                w.serialize(r).unwrap();
            }
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,dofs,elements,iterations,exit,final_r,eta,zeta,gamma,delta,alpha,sigma,l2_err,h1_err\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
        assert_eq!(read_records(&path).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "k,dofs\n1,2\n").unwrap();
        assert!(matches!(read_records(&path), Err(Error::Parse { .. })));
    }
}
