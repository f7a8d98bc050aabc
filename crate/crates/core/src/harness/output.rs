//! CSV tables: `#`-prefixed metadata lines, a header row, data rows, and a
//! long-format companion (`<stem>_long.csv`) for plotting scripts.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Leading columns that identify a row in the long format.
    pub id_columns: usize,
}

impl Table {
    pub fn new(header: &[&str], id_columns: usize) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            id_columns,
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to(&self, path: &Path, long: bool) -> Result<()> {
        let mut file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        for (k, v) in &self.metadata {
            writeln!(file, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        if long {
            let mut head: Vec<&str> = self.header[..self.id_columns].iter().map(|s| s.as_str()).collect();
            head.extend(["variable", "value"]);
            w.write_record(&head).map_err(csv_err)?;
            for row in &self.rows {
                for (name, value) in self.header.iter().zip(row).skip(self.id_columns) {
                    let mut rec: Vec<&str> = row[..self.id_columns].iter().map(|s| s.as_str()).collect();
                    rec.push(name);
                    rec.push(value);
                    w.write_record(&rec).map_err(csv_err)?;
                }
            }
        } else {
            w.write_record(&self.header).map_err(csv_err)?;
            for row in &self.rows {
                w.write_record(row).map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<dir>/<stem>.csv` and `<dir>/<stem>_long.csv`; returns both paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let wide = dir.join(format!("{stem}.csv"));
        let long = dir.join(format!("{stem}_long.csv"));
        self.write_to(&wide, false)?;
        self.write_to(&long, true)?;
        Ok((wide, long))
    }
}

/// Fixed-format float for reproducible output.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.10e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

/// Seconds since the Unix epoch, for the one timestamp line of a report.
pub fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_and_long_files() {
        let dir = std::env::temp_dir().join(format!("mixfujita-table-{}", std::process::id()));
        let mut t = Table::new(&["p", "a", "x", "y"], 2);
        t.meta("note", "hello");
        t.push(vec!["1".into(), "2".into(), "3".into(), "4".into()]);
        let (wide, long) = t.write(&dir, "demo").unwrap();
        let w = std::fs::read_to_string(wide).unwrap();
        assert_eq!(w, "# note=hello\np,a,x,y\n1,2,3,4\n");
        let l = std::fs::read_to_string(long).unwrap();
        assert_eq!(l, "# note=hello\np,a,variable,value\n1,2,x,3\n1,2,y,4\n");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
