//! Run-trace CSV files and per-run summary files.
//!
//! Trace header: `t,incumbent,pred,label,sq_err,clipped_abs_err,champion,pool_size,live_size`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chacha_core::engine::StepRecord;
use thiserror::Error;

pub const TRACE_HEADER: &[&str] = &[
    "t",
    "incumbent",
    "pred",
    "label",
    "sq_err",
    "clipped_abs_err",
    "champion",
    "pool_size",
    "live_size",
];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace file {path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// One parsed trace row; config ids stay plain strings.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub incumbent: String,
    pub pred: f64,
    pub label: f64,
    pub sq_err: f64,
    pub clipped_abs_err: f64,
    pub champion: String,
    pub pool_size: usize,
    pub live_size: usize,
}

pub fn write_trace(path: &Path, steps: &[StepRecord]) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for s in steps {
        w.write_record([
            s.t.to_string(),
            s.incumbent.to_string(),
            s.prediction.to_string(),
            s.label.to_string(),
            s.sq_err.to_string(),
            s.clipped_abs_err.to_string(),
            s.champion.to_string(),
            s.pool_size.to_string(),
            s.live_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let malformed = |reason: &str| TraceError::Malformed {
        path: path.display().to_string(),
        reason: reason.to_owned(),
    };
    if rdr.headers()?.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(malformed("unexpected header"));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let r = record?;
        let field = |i: usize| r.get(i).unwrap_or("");
        let num = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|_| malformed(&format!("non-numeric field `{}`", field(i))))
        };
        out.push(TraceRow {
            t: field(0)
                .parse()
                .map_err(|_| malformed("non-integer step index"))?,
            incumbent: field(1).to_owned(),
            pred: num(2)?,
            label: num(3)?,
            sq_err: num(4)?,
            clipped_abs_err: num(5)?,
            champion: field(6).to_owned(),
            pool_size: field(7)
                .parse()
                .map_err(|_| malformed("non-integer pool size"))?,
            live_size: field(8)
                .parse()
                .map_err(|_| malformed("non-integer live size"))?,
        });
    }
    Ok(out)
}

/// Final progressive raw MSE of a trace file.
pub fn final_mse(rows: &[TraceRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    Some(rows.iter().map(|r| r.sq_err).sum::<f64>() / rows.len() as f64)
}

/// Writes the per-run key-value summary next to nothing in particular; the
/// caller picks the path.
pub fn write_summary(path: &Path, summary: &serde_json::Value) -> Result<(), TraceError> {
    let mut f = File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

impl From<serde_json::Error> for TraceError {
    fn from(e: serde_json::Error) -> Self {
        TraceError::Io(e.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chacha_core::Config;

    fn sample_steps() -> Vec<StepRecord> {
        let id = Config::plain(["a"]).id().clone();
        (1..=3)
            .map(|t| StepRecord {
                t,
                incumbent: id.clone(),
                prediction: 0.5 * t as f64,
                label: 1.0,
                sq_err: (0.5 * t as f64 - 1.0).powi(2),
                clipped_abs_err: (0.5 * t as f64 - 1.0).abs(),
                champion: id.clone(),
                pool_size: 3,
                live_size: 2,
            })
            .collect()
    }

    #[test]
    fn round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let steps = sample_steps();
        write_trace(&path, &steps).unwrap();
        let rows = read_trace(&path).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, step) in rows.iter().zip(&steps) {
            assert_eq!(row.pred, step.prediction);
            assert_eq!(row.sq_err, step.sq_err);
            assert_eq!(row.incumbent, step.incumbent.to_string());
        }
        assert!(final_mse(&rows).is_some());
    }

    #[test]
    fn rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            read_trace(&path),
            Err(TraceError::Malformed { .. })
        ));
    }
}
