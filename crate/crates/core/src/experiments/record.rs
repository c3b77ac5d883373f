//! CSV and sidecar output for [`RunRecord`]s.
//!
//! Columns are `t,mean_d2,stderr_d2` plus `mean_j2,stderr_j2,mean_combined`
//! for average-reward runs. Floats use Rust's shortest round-trip formatting,
//! so reading a file back gives the exact same values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{AverageRewardSeries, RunRecord};

const BASE: [&str; 3] = ["t", "mean_d2", "stderr_d2"];
const AVERAGE: [&str; 3] = ["mean_j2", "stderr_j2", "mean_combined"];

pub fn csv_string(record: &RunRecord) -> String {
    let mut out = String::new();
    let mut header: Vec<&str> = BASE.to_vec();
    if record.average.is_some() {
        header.extend(AVERAGE);
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..record.len() {
        out.push_str(&format!("{},{},{}", record.t[i], record.mean_d2[i], record.stderr_d2[i]));
        if let Some(a) = &record.average {
            out.push_str(&format!(",{},{},{}", a.mean_j2[i], a.stderr_j2[i], a.mean_combined[i]));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(record: &RunRecord, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::File::create(path)?.write_all(csv_string(record).as_bytes())?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`, creating it if
/// needed, and returns both paths.
pub fn write_outputs(record: &RunRecord, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let meta = dir.join(format!("{stem}.meta.json"));
    write_csv(record, &csv)?;
    let json = serde_json::to_string_pretty(&record.meta)?;
    fs::write(&meta, json + "\n")?;
    Ok((csv, meta))
}

pub fn read_csv(path: &Path) -> Result<RunRecord> {
    let file = fs::File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    parse_csv(file)
}

pub fn parse_csv<R: std::io::Read>(input: R) -> Result<RunRecord> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let average = if header == BASE {
        false
    } else if header.len() == 6 && header[..3] == BASE && header[3..] == AVERAGE {
        true
    } else {
        return Err(Error::Csv(format!("unexpected header {:?}", header.join(","))));
    };
    let mut rec = RunRecord {
        t: Vec::new(),
        mean_d2: Vec::new(),
        stderr_d2: Vec::new(),
        average: average.then(|| AverageRewardSeries {
            mean_j2: Vec::new(),
            stderr_j2: Vec::new(),
            mean_combined: Vec::new(),
        }),
        meta: None,
    };
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .trim()
                .parse()
                .map_err(|_| Error::Csv(format!("row {}: column {} is not a number: {:?}", line + 1, header[i], &row[i])))
        };
        let t: u64 = row[0]
            .trim()
            .parse()
            .map_err(|_| Error::Csv(format!("row {}: t is not an integer: {:?}", line + 1, &row[0])))?;
        if rec.t.last().is_some_and(|&prev| prev >= t) {
            return Err(Error::Csv(format!("row {}: t is not increasing", line + 1)));
        }
        rec.t.push(t);
        rec.mean_d2.push(num(1)?);
        rec.stderr_d2.push(num(2)?);
        if let Some(a) = &mut rec.average {
            a.mean_j2.push(num(3)?);
            a.stderr_j2.push(num(4)?);
            a.mean_combined.push(num(5)?);
        }
    }
    if rec.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    Ok(rec)
}
