//! Plain-text run manifest: configuration echo, timing and file hashes.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileEntry>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(format!("cannot hash {}", path.display()), e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| Error::io(format!("cannot hash {}", path.display()), e))?;
        if n == 0 {
            break;
        }
        total += n as u64;
        hasher.update(&buf[..n]);
    }
    let hex = hasher.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    Ok((total, hex))
}

impl RunManifest {
    pub fn new(command: &str, config: String, started_unix: f64) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            config,
            started_unix,
            finished_unix: started_unix,
            files: Vec::new(),
        }
    }

    /// Hash `names` inside `dir`; missing files are skipped.
    pub fn add_files(&mut self, dir: &Path, names: &[&str]) -> Result<()> {
        for name in names {
            let path = dir.join(name);
            if path.is_file() {
                let (bytes, sha256) = sha256_file(&path)?;
                self.files.push(FileEntry {
                    name: name.to_string(),
                    bytes,
                    sha256,
                });
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tgv run manifest");
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "started_unix = {:.3}", self.started_unix);
        let _ = writeln!(s, "finished_unix = {:.3}", self.finished_unix);
        let _ = writeln!(s, "wall_seconds = {:.3}", self.finished_unix - self.started_unix);
        let _ = writeln!(s, "\n[config]");
        s.push_str(&self.config);
        let _ = writeln!(s, "\n[files]");
        for f in &self.files {
            let _ = writeln!(s, "{}  {}  {}", f.sha256, f.bytes, f.name);
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
        Ok(path.to_path_buf())
    }
}
