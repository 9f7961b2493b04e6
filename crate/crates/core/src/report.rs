//! CSV and JSON artifacts written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            _ => Err(Error::Invalid(format!(
                "unknown format {s:?}, expected csv, json or both"
            ))),
        }
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Table plus machine-checkable summary of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub csv: String,
    pub summary: serde_json::Value,
}

impl Artifact {
    pub fn new(name: impl Into<String>, csv: String, summary: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            csv,
            summary,
        }
    }

    pub fn pass(&self) -> bool {
        self.summary
            .get("pass")
            .and_then(|v| v.as_bool())
            .unwrap_or(false)
    }

    /// Writes `<name>.csv` and/or `<name>.json` into `dir`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        if matches!(format, Format::Csv | Format::Both) {
            let p = dir.join(format!("{}.csv", self.name));
            write_atomic(&p, self.csv.as_bytes())?;
            out.push(p);
        }
        if matches!(format, Format::Json | Format::Both) {
            let p = dir.join(format!("{}.json", self.name));
            let mut text = serde_json::to_string_pretty(&self.summary)?;
            text.push('\n');
            write_atomic(&p, text.as_bytes())?;
            out.push(p);
        }
        Ok(out)
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.as_ref().join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("inclab-report-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn writes_both_formats() {
        let d = scratch("both");
        let a = Artifact::new(
            "x",
            csv_table(&["a", "b"], [vec!["1".to_string(), "2".to_string()]]),
            serde_json::json!({"pass": true}),
        );
        let files = a.write(&d, Format::Both).unwrap();
        assert_eq!(files.len(), 2);
        assert_eq!(fs::read_to_string(&files[0]).unwrap(), "a,b\n1,2\n");
        assert!(a.pass());
        let leftovers: Vec<_> = fs::read_dir(&d)
            .unwrap()
            .filter(|e| {
                e.as_ref()
                    .unwrap()
                    .file_name()
                    .to_string_lossy()
                    .starts_with('.')
            })
            .collect();
        assert!(leftovers.is_empty());
        fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let d = scratch("fail");
        fs::create_dir_all(d.join("y.csv")).unwrap();
        let a = Artifact::new("y", "h\n".into(), serde_json::json!({}));
        assert!(a.write(&d, Format::Csv).is_err());
        let names: Vec<String> = fs::read_dir(&d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["y.csv".to_string()]);
        fs::remove_dir_all(&d).unwrap();
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
