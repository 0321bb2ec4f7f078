//! CSV persistence. Every file opens with `#` comment lines naming the code
//! version, the experiment, the config digest and the resolved settings.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON form of a resolved config.
pub fn config_digest<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

/// Formats a float so it reads back to the same value.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Starts a table whose comment block records `config` and its digest.
    pub fn new<T: Serialize>(name: &str, experiment: &str, config: &T, header: &[&str]) -> Result<Self> {
        let comments = vec![
            format!("contamdp {VERSION}"),
            format!("experiment: {experiment}"),
            format!("config-sha256: {}", config_digest(config)?),
            format!("config: {}", serde_json::to_string(config)?),
        ];
        Ok(CsvTable {
            name: name.to_string(),
            comments,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        })
    }

    /// Adds a `key: value` line to the comment block.
    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.comments.push(format!("{key}: {value}"));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j].as_str()).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for c in &self.comments {
            for line in c.lines() {
                buf.extend_from_slice(b"# ");
                buf.extend_from_slice(line.as_bytes());
                buf.push(b'\n');
            }
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes `<dir>/<name>.csv`, creating `dir` if needed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.to_bytes()?)?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads the `n` and `epsilon_hat_q99` columns of a table1 CSV.
pub fn read_table1_epsilons(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{} has no '{name}' column", path.display())))
    };
    let (jn, je) = (col("n")?, col("epsilon_hat_q99")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let n: usize = rec[jn]
            .parse()
            .map_err(|_| Error::Config(format!("bad n value '{}'", &rec[jn])))?;
        if let Ok(e) = rec[je].parse::<f64>() {
            out.push((n, e));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comment_block_and_roundtrip() {
        #[derive(Serialize)]
        struct C {
            a: u32,
        }
        let mut t = CsvTable::new("t", "table1", &C { a: 1 }, &["n", "epsilon_hat_q99"]).unwrap();
        t.note("bounds", "[-270, 330]");
        t.push(vec!["100".into(), fmt_f64(2.5)]);
        t.push(vec!["200".into(), String::new()]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# contamdp "));
        assert!(lines[2].starts_with("# config-sha256: "));
        assert_eq!(lines[2].len(), "# config-sha256: ".len() + 64);
        assert_eq!(lines[5], "n,epsilon_hat_q99");
        let dir = tempfile::tempdir().unwrap();
        let path = t.write(dir.path()).unwrap();
        assert_eq!(read_table1_epsilons(&path).unwrap(), vec![(100, 2.5)]);
    }

    #[test]
    fn float_format_roundtrips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }
}
