//! Diagnostics CSV.
//!
//! ```text
//! # tgv-diagnostics v1 n=64 nu=6.25e-4 dt=2e-3
//! t,energy,enstrophy,logn_0,logn_5,logn_10,lnratio_5
//! 0e0,1.25e-1,1.4804406601634037e1,...
//! ```
//!
//! The first line carries the schema version and run metadata. Values are
//! written in shortest round-trip form, so reading a file back reproduces the
//! records bit for bit. Rows are flushed as they are written.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

pub const SCHEMA: &str = "tgv-diagnostics v1";

/// Run metadata from the first line.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CsvMeta {
    pub n: Option<usize>,
    pub nu: Option<f64>,
    pub dt: Option<f64>,
}

impl CsvMeta {
    fn line(&self) -> String {
        let mut s = format!("# {SCHEMA}");
        if let Some(n) = self.n {
            s += &format!(" n={n}");
        }
        if let Some(nu) = self.nu {
            s += &format!(" nu={nu:e}");
        }
        if let Some(dt) = self.dt {
            s += &format!(" dt={dt:e}");
        }
        s
    }
}

/// Column names for a given `k_list`.
pub fn header(k_list: &[u32]) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "energy", "enstrophy"].iter().map(|s| s.to_string()).collect();
    cols.extend(
        DiagnosticsRecord::required_orders(k_list)
            .iter()
            .map(|n| format!("logn_{n}")),
    );
    cols.extend(k_list.iter().map(|k| format!("lnratio_{k}")));
    cols
}

fn row(record: &DiagnosticsRecord) -> String {
    let mut fields = vec![
        format!("{:e}", record.t),
        format!("{:e}", record.energy),
        format!("{:e}", record.enstrophy),
    ];
    fields.extend(record.log_norms.values().map(|v| format!("{v:e}")));
    fields.extend(record.log_ratios.values().map(|v| format!("{v:e}")));
    fields.join(",")
}

/// Incremental writer that owns the file handle.
#[derive(Debug)]
pub struct CsvWriter {
    path: PathBuf,
    file: File,
    columns: usize,
}

impl CsvWriter {
    /// Create or overwrite `path` and write the two header lines.
    pub fn create(path: &Path, meta: CsvMeta, k_list: &[u32]) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| Error::io(format!("cannot create {}", path.display()), e))?;
        let cols = header(k_list);
        writeln!(file, "{}\n{}", meta.line(), cols.join(","))
            .and_then(|_| file.flush())
            .map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            columns: cols.len(),
        })
    }

    /// Reopen an existing file for appending after dropping every row with
    /// `t > t_keep`. The header must match `k_list`.
    pub fn resume(path: &Path, k_list: &[u32], t_keep: f64) -> Result<Self> {
        let (_, header_cols, rows) = read_rows(path)?;
        let cols = header(k_list);
        if header_cols != cols {
            return Err(csv_err(path, 2, "header does not match the run configuration"));
        }
        let mut keep_bytes = rows.header_bytes;
        for (t, end) in &rows.ends {
            if *t > t_keep {
                break;
            }
            keep_bytes = *end;
        }
        let mut file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| Error::io(format!("cannot open {}", path.display()), e))?;
        file.set_len(keep_bytes)
            .and_then(|_| file.seek(SeekFrom::End(0)).map(|_| ()))
            .map_err(|e| Error::io(format!("cannot truncate {}", path.display()), e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            columns: cols.len(),
        })
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        let line = row(record);
        debug_assert_eq!(line.split(',').count(), self.columns);
        self.file
            .write_all(format!("{line}\n").as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(format!("cannot write {}", self.path.display()), e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn csv_err(path: &Path, row: usize, msg: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        row,
        msg: msg.into(),
    }
}

struct RowIndex {
    header_bytes: u64,
    /// `(t, byte offset after the row)` for every data row.
    ends: Vec<(f64, u64)>,
}

/// Parse the file into metadata, header columns and raw rows. Row numbers in
/// errors are 1-based file line numbers.
fn read_rows(path: &Path) -> Result<(CsvMeta, Vec<String>, RowIndex)> {
    let (meta, cols, _, index) = parse(path)?;
    Ok((meta, cols, index))
}

type Parsed = (CsvMeta, Vec<String>, Vec<(usize, Vec<f64>)>, RowIndex);

fn parse(path: &Path) -> Result<Parsed> {
    let file = File::open(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    let mut reader = BufReader::new(file);
    let mut meta = CsvMeta::default();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut index = RowIndex {
        header_bytes: 0,
        ends: Vec::new(),
    };
    let mut offset = 0u64;
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
        if read == 0 {
            break;
        }
        lineno += 1;
        offset += read as u64;
        let text = line.trim_end_matches(['\n', '\r']);
        if let Some(rest) = text.strip_prefix('#') {
            if header.is_some() {
                return Err(csv_err(path, lineno, "comment after header"));
            }
            meta = parse_meta(path, lineno, rest.trim())?;
            index.header_bytes = offset;
            continue;
        }
        if text.trim().is_empty() {
            if header.is_none() {
                index.header_bytes = offset;
            }
            continue;
        }
        match &header {
            None => {
                let cols: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
                if cols.len() < 3 || cols[0] != "t" || cols[1] != "energy" || cols[2] != "enstrophy" {
                    return Err(csv_err(path, lineno, "header must start with t,energy,enstrophy"));
                }
                header = Some(cols);
                index.header_bytes = offset;
            }
            Some(cols) => {
                let terminated = line.ends_with('\n');
                let values: Vec<&str> = text.split(',').collect();
                let complete = values.len() == cols.len() && values.iter().all(|v| v.trim().parse::<f64>().is_ok());
                if !terminated && !complete {
                    // Tail of an interrupted write.
                    break;
                }
                if values.len() != cols.len() {
                    return Err(csv_err(
                        path,
                        lineno,
                        format!("expected {} fields, found {}", cols.len(), values.len()),
                    ));
                }
                let parsed = values
                    .iter()
                    .zip(cols)
                    .map(|(v, c)| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| csv_err(path, lineno, format!("column {c}: cannot parse `{v}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if terminated {
                    index.ends.push((parsed[0], offset));
                }
                rows.push((lineno, parsed));
            }
        }
    }
    let header = header.ok_or_else(|| csv_err(path, lineno.max(1), "missing header row"))?;
    Ok((meta, header, rows, index))
}

fn parse_meta(path: &Path, lineno: usize, text: &str) -> Result<CsvMeta> {
    let rest = text.strip_prefix(SCHEMA).ok_or_else(|| {
        csv_err(
            path,
            lineno,
            format!("unsupported schema `{text}`, expected `{SCHEMA}`"),
        )
    })?;
    let mut meta = CsvMeta::default();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| csv_err(path, lineno, format!("bad metadata `{tok}`")))?;
        let bad = || csv_err(path, lineno, format!("bad metadata `{tok}`"));
        match k {
            "n" => meta.n = Some(v.parse().map_err(|_| bad())?),
            "nu" => meta.nu = Some(v.parse().map_err(|_| bad())?),
            "dt" => meta.dt = Some(v.parse().map_err(|_| bad())?),
            _ => {}
        }
    }
    Ok(meta)
}

/// Read every record. Column sets must follow the schema written by
/// [`CsvWriter`].
pub fn read_csv(path: &Path) -> Result<(CsvMeta, Vec<DiagnosticsRecord>)> {
    let (meta, cols, rows, _) = parse(path)?;
    enum Col {
        Norm(u32),
        Ratio(u32),
    }
    let mut kinds = Vec::new();
    for c in &cols[3..] {
        let kind = if let Some(n) = c.strip_prefix("logn_") {
            n.parse().ok().map(Col::Norm)
        } else if let Some(k) = c.strip_prefix("lnratio_") {
            k.parse().ok().map(Col::Ratio)
        } else {
            None
        };
        kinds.push(kind.ok_or_else(|| csv_err(path, 2, format!("unknown column `{c}`")))?);
    }
    let mut records = Vec::with_capacity(rows.len());
    let mut last_t = f64::NEG_INFINITY;
    for (lineno, vals) in rows {
        if !(vals[0] > last_t) {
            return Err(csv_err(path, lineno, "time column must be strictly increasing"));
        }
        last_t = vals[0];
        let mut log_norms = BTreeMap::new();
        let mut log_ratios = BTreeMap::new();
        for (kind, v) in kinds.iter().zip(&vals[3..]) {
            match kind {
                Col::Norm(n) => log_norms.insert(*n, *v),
                Col::Ratio(k) => log_ratios.insert(*k, *v),
            };
        }
        records.push(DiagnosticsRecord {
            t: vals[0],
            energy: vals[1],
            enstrophy: vals[2],
            log_norms,
            log_ratios,
        });
    }
    Ok((meta, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, k_list: &[u32]) -> DiagnosticsRecord {
        let orders = DiagnosticsRecord::required_orders(k_list);
        DiagnosticsRecord {
            t,
            energy: 0.125 - t / 3.0,
            enstrophy: 14.8 + t.sin(),
            log_norms: orders.iter().map(|&n| (n, n as f64 * 1.1 + t / 7.0)).collect(),
            log_ratios: k_list.iter().map(|&k| (k, -0.1 * k as f64 - t / 9.0)).collect(),
        }
    }

    #[test]
    fn header_columns() {
        assert_eq!(
            header(&[5, 10]),
            [
                "t",
                "energy",
                "enstrophy",
                "logn_0",
                "logn_5",
                "logn_10",
                "logn_20",
                "lnratio_5",
                "lnratio_10"
            ]
        );
        assert_eq!(header(&[]), ["t", "energy", "enstrophy"]);
    }

    #[test]
    fn round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let k = [5, 10];
        let meta = CsvMeta {
            n: Some(64),
            nu: Some(1.0 / 1600.0),
            dt: Some(0.002),
        };
        let mut w = CsvWriter::create(&p, meta, &k).unwrap();
        let recs: Vec<_> = (0..7).map(|i| rec(i as f64 * 0.1 + 1e-17, &k)).collect();
        for r in &recs {
            w.write(r).unwrap();
        }
        let (m, back) = read_csv(&p).unwrap();
        assert_eq!(m, meta);
        assert_eq!(back, recs);
    }

    #[test]
    fn resume_truncates_later_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let k = [5];
        let mut w = CsvWriter::create(&p, CsvMeta::default(), &k).unwrap();
        for i in 0..10 {
            w.write(&rec(i as f64, &k)).unwrap();
        }
        drop(w);
        let mut w = CsvWriter::resume(&p, &k, 4.5).unwrap();
        w.write(&rec(5.0, &k)).unwrap();
        let (_, back) = read_csv(&p).unwrap();
        assert_eq!(
            back.iter().map(|r| r.t).collect::<Vec<_>>(),
            vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
        );
        assert!(CsvWriter::resume(&p, &[5, 10], 4.5).is_err());
    }

    #[test]
    fn interrupted_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "t,energy,enstrophy\n0,1,2\n1,1,").unwrap();
        assert_eq!(read_csv(&p).unwrap().1.len(), 1);
        std::fs::write(&p, "t,energy,enstrophy\n0,1,2\n1,1,3").unwrap();
        assert_eq!(read_csv(&p).unwrap().1.len(), 2);
        let mut w = CsvWriter::resume(&p, &[], 5.0).unwrap();
        w.write(&rec(1.5, &[])).unwrap();
        let t: Vec<f64> = read_csv(&p).unwrap().1.iter().map(|r| r.t).collect();
        assert_eq!(t, vec![0.0, 1.5]);
    }

    #[test]
    fn malformed_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let cases = [
            (
                "# tgv-diagnostics v1\nt,energy,enstrophy\n0,1,2\n1,x,2\n",
                4,
                "cannot parse",
            ),
            (
                "# tgv-diagnostics v1\nt,energy,enstrophy\n0,1,2\n1,1\n",
                4,
                "expected 3 fields",
            ),
            (
                "# tgv-diagnostics v1\nt,energy,enstrophy\n1,1,2\n0,1,2\n",
                4,
                "increasing",
            ),
            ("# tgv-diagnostics v9\nt,energy,enstrophy\n", 1, "unsupported schema"),
            ("t,energy\n", 1, "header"),
            ("t,energy,enstrophy,bogus\n", 2, "unknown column"),
        ];
        for (text, line, what) in cases {
            std::fs::write(&p, text).unwrap();
            match read_csv(&p) {
                Err(Error::Csv { row, msg, .. }) => {
                    assert_eq!(row, line, "{text}");
                    assert!(msg.contains(what), "{msg}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
