//! Record files, report and manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use covlab_core::SequenceRecord;
use serde_json::Value;

/// Writes `N, value, normalized, exact, mesh_certificate` with 17
/// significant digits, so values round-trip.
pub fn write_records(path: &Path, records: &[SequenceRecord]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "value", "normalized", "exact", "mesh_certificate"])?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            format!("{:.16e}", r.value),
            format!("{:.16e}", r.normalized),
            r.exact.to_string(),
            format!("{:.16e}", r.mesh_certificate),
        ])?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Every file of a run, relative to the output directory.
pub struct Written {
    pub files: Vec<PathBuf>,
}

pub fn write_run(
    dir: &Path,
    records: &[SequenceRecord],
    extra: &[(String, Vec<SequenceRecord>)],
    report: &Value,
) -> io::Result<Written> {
    fs::create_dir_all(dir)?;
    let mut files = vec![PathBuf::from("records.csv")];
    write_records(&dir.join("records.csv"), records)?;
    for (stem, recs) in extra {
        let name = PathBuf::from(format!("{stem}.csv"));
        write_records(&dir.join(&name), recs)?;
        files.push(name);
    }
    write_json(&dir.join("report.json"), report)?;
    files.push(PathBuf::from("report.json"));
    Ok(Written { files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let v = 0.1 + 0.2;
        write_records(&p, &[SequenceRecord::covering(3, v, 1.0, false, 1e-3)]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1].parse::<f64>().unwrap(), v);
        assert_eq!(cols[3], "false");
    }
}
