//! Binary solver checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `TGVRLAB1`                          |
//! | 4     | endianness tag `0x01020304` as `u32`      |
//! | 8     | `N` as `u64`                              |
//! | 24    | `nu`, `dt`, `t` as `f64`                  |
//! | 8     | step index as `u64`                       |
//! | ...   | 3 blocks of `(re, im)` `f64` pairs        |
//!
//! Each block holds one velocity component in half-spectrum order
//! `[a][b][c]`, `a, b in 0..N`, `c in 0..=N/2`. Files are written to a
//! temporary sibling and renamed, so a reader never sees a partial file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralVectorField, WaveGrid};

pub const MAGIC: &[u8; 8] = b"TGVRLAB1";
const ENDIAN_TAG: u32 = 0x0102_0304;
const HEADER_LEN: u64 = 8 + 4 + 8 + 24 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t: f64,
    pub step_index: u64,
    pub field: SpectralVectorField,
}

fn fail(path: &Path, msg: impl Into<String>) -> Error {
    Error::Checkpoint {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Write a checkpoint for `field` at `(t, step_index)` without copying it.
pub fn write_checkpoint(
    path: &Path,
    nu: f64,
    dt: f64,
    t: f64,
    step_index: u64,
    field: &SpectralVectorField,
) -> Result<()> {
    let tmp = tmp_path(path);
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(MAGIC)?;
        w.write_all(&ENDIAN_TAG.to_le_bytes())?;
        w.write_all(&(field.grid().n() as u64).to_le_bytes())?;
        for x in [nu, dt, t] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&step_index.to_le_bytes())?;
        for c in 0..3 {
            for z in field.component(c) {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(&tmp);
        return Err(fail(path, format!("write failed: {e}")));
    }
    std::fs::rename(&tmp, path).map_err(|e| fail(path, format!("rename failed: {e}")))
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        if self.n != self.field.grid().n() {
            return Err(fail(path, "header N differs from field grid"));
        }
        write_checkpoint(path, self.nu, self.dt, self.t, self.step_index, &self.field)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| fail(path, format!("cannot open: {e}")))?;
        let len = file.metadata().map_err(|e| fail(path, e.to_string()))?.len();
        let mut r = BufReader::new(file);
        let truncated = |_| fail(path, "truncated header");

        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            if magic[..7] == MAGIC[..7] {
                return Err(fail(path, format!("unsupported format version `{}`", magic[7] as char)));
            }
            return Err(fail(path, "bad magic, not a TGVRLAB1 checkpoint"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(truncated)?;
        if u32::from_le_bytes(b4) != ENDIAN_TAG {
            return Err(fail(path, "endianness tag mismatch"));
        }
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(truncated)?;
            Ok(b8)
        };
        let n = u64::from_le_bytes(next(&mut r)?);
        let nu = f64::from_le_bytes(next(&mut r)?);
        let dt = f64::from_le_bytes(next(&mut r)?);
        let t = f64::from_le_bytes(next(&mut r)?);
        let step_index = u64::from_le_bytes(next(&mut r)?);

        let n = usize::try_from(n).map_err(|_| fail(path, "grid size out of range"))?;
        if n > 1 << 14 {
            return Err(fail(path, format!("implausible grid size {n}")));
        }
        let grid = WaveGrid::new(n).map_err(|e| fail(path, e.to_string()))?;
        if !(nu > 0.0 && dt > 0.0 && t.is_finite() && nu.is_finite() && dt.is_finite()) {
            return Err(fail(path, "invalid nu, dt or t in header"));
        }
        let count = grid.spectral_len();
        let expected = HEADER_LEN + 3 * 16 * count as u64;
        if len != expected {
            return Err(fail(path, format!("size {len} bytes, expected {expected} for N={n}")));
        }

        let mut raw = vec![0u8; 16 * count];
        let mut comps: [Vec<Complex64>; 3] = Default::default();
        for comp in &mut comps {
            r.read_exact(&mut raw).map_err(|_| fail(path, "truncated data"))?;
            *comp = raw
                .chunks_exact(16)
                .map(|b| {
                    Complex64::new(
                        f64::from_le_bytes(b[..8].try_into().unwrap()),
                        f64::from_le_bytes(b[8..].try_into().unwrap()),
                    )
                })
                .collect();
        }
        let field = SpectralVectorField::from_components(Arc::new(grid), comps)?;
        if !field.is_finite() {
            return Err(fail(path, "non-finite coefficients"));
        }
        Ok(Self {
            n,
            nu,
            dt,
            t,
            step_index,
            field,
        })
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
