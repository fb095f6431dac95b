use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentMatrix, ExperimentReport};
use crate::error::Result;
use crate::metrics::{write_hotspot_csv, write_speedup_csv};

/// A sweep description, read from TOML. Relative paths resolve against the
/// manifest's own directory.
///
/// ```toml
/// trace = "trace.jsonl.gz"
/// output_dir = "out"
///
/// [matrix]
/// threads = [16, 32, 64]
/// locks = ["rw", "mutex"]
/// exclusions = ["none", "top5"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub trace: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub matrix: ExperimentMatrix,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let inner = || -> Result<Self> {
            let mut m = Manifest::parse(&fs::read_to_string(path)?)?;
            let base = path.parent().unwrap_or(Path::new(""));
            m.trace = base.join(&m.trace);
            m.output_dir = base.join(&m.output_dir);
            m.matrix.validate()?;
            Ok(m)
        };
        inner().map_err(|e| e.at_path(path))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportIndexEntry {
    pub key: String,
    pub file: String,
    pub weighted_speedup: f64,
    pub weighted_conflict_rate: f64,
}

/// `index.json`: one entry per report in the same directory, sorted by key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportIndex {
    pub reports: Vec<ReportIndexEntry>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let inner = || -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    };
    inner().map_err(|e| e.at_path(path))
}

fn write_csv(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    let inner = || -> Result<()> { f(BufWriter::new(File::create(path)?)) };
    inner().map_err(|e| e.at_path(path))
}

/// Writes `<key>.json`, `<key>.speedup.csv` and `<key>.hotspots.csv` for
/// every report, plus `index.json`. Returns the index path.
pub fn write_reports(
    dir: impl AsRef<Path>,
    reports: &BTreeMap<String, ExperimentReport>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| crate::Error::from(e).at_path(dir))?;
    let mut entries = Vec::new();
    for (key, r) in reports {
        let file = format!("{key}.json");
        write_json(&dir.join(&file), r)?;
        write_csv(&dir.join(format!("{key}.speedup.csv")), |w| {
            write_speedup_csv(&r.report, w)
        })?;
        write_csv(&dir.join(format!("{key}.hotspots.csv")), |w| {
            write_hotspot_csv(&r.report, w)
        })?;
        entries.push(ReportIndexEntry {
            key: key.clone(),
            file,
            weighted_speedup: r.report.weighted_speedup,
            weighted_conflict_rate: r.report.weighted_conflict_rate,
        });
    }
    let index = dir.join("index.json");
    write_json(&index, &ReportIndex { reports: entries })?;
    Ok(index)
}
