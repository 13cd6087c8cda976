//! CSV field snapshots: a header record `n,length,time`, one record with those
//! values, then `n` records of `n` physical values. Record `j` holds the row
//! `y = j L/n`, column `i` the point `x = i L/n`.

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub length: f64,
    pub time: f64,
    /// Row-major, `y` slowest.
    pub values: Vec<f64>,
}

pub fn write_snapshot_csv(path: &Path, snap: &Snapshot) -> Result<()> {
    if snap.values.len() != snap.n * snap.n {
        return Err(Error::InvalidField("snapshot size does not match n".into()));
    }
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    w.write_record(["n", "length", "time"])?;
    w.write_record([snap.n.to_string(), snap.length.to_string(), snap.time.to_string()])?;
    for row in snap.values.chunks(snap.n) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot_csv(path: &Path) -> Result<Snapshot> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut records = r.records();
    let bad = |msg: &str| Error::InvalidField(format!("snapshot {}: {msg}", path.display()));
    let head = records.next().ok_or_else(|| bad("missing header values"))??;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("unparsable number"));
    let n = head.get(0).ok_or_else(|| bad("missing n"))?.trim().parse::<usize>().map_err(|_| bad("bad n"))?;
    let length = parse(head.get(1).ok_or_else(|| bad("missing length"))?)?;
    let time = parse(head.get(2).ok_or_else(|| bad("missing time"))?)?;
    let mut values = Vec::with_capacity(n * n);
    for rec in records {
        let rec = rec?;
        if rec.len() != n {
            return Err(bad("row length differs from n"));
        }
        for v in rec.iter() {
            values.push(parse(v)?);
        }
    }
    if values.len() != n * n {
        return Err(bad("wrong number of rows"));
    }
    Ok(Snapshot { n, length, time, values })
}
