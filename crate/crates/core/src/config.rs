//! Run configuration and its flat `key = value` text format.
//!
//! ```text
//! # Taylor-Green at 256^3
//! n = 256
//! nu = 1/1600
//! dt = 0.001
//! t_end = 20
//! k_list = 5,10,15
//! ```
//!
//! Blank lines and `#` comments are ignored. Real values accept a plain
//! number or a fraction `p/q`. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::spectral::{Dealias, NonlinearForm};

/// Time discretization of the viscous term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ViscousScheme {
    /// `-nu |k|^2 uhat` inside the RK4 right-hand side.
    #[default]
    Explicit,
    /// Exact exponential factor, RK4 on the nonlinear part only.
    IntegratingFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostic samples.
    pub diag_stride: u64,
    /// Orders `k` whose ratios `R^k` are recorded.
    pub k_list: Vec<u32>,
    /// Steps between checkpoints; 0 disables periodic checkpoints.
    pub checkpoint_stride: u64,
    pub dealias: Dealias,
    pub nonlinear_form: NonlinearForm,
    pub viscous: ViscousScheme,
    /// Lower bound on `T* - t` for samples entering the power-law fits.
    pub beta_min: f64,
    pub tstar_override: Option<f64>,
    pub cfl_warn: f64,
    pub viscous_warn: f64,
    /// Output directory; relative paths resolve against the config file.
    pub output_dir: PathBuf,
    /// Drops the quadratic term. Not exposed in the file format.
    pub linear_only: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 256,
            nu: 1.0 / 1600.0,
            dt: 0.001,
            t_end: 20.0,
            diag_stride: 10,
            k_list: (1..=20).map(|j| 5 * j).collect(),
            checkpoint_stride: 1000,
            dealias: Dealias::TwoThirds,
            nonlinear_form: NonlinearForm::Convection,
            viscous: ViscousScheme::Explicit,
            beta_min: 0.001,
            tstar_override: None,
            cfl_warn: 0.8,
            viscous_warn: 2.5,
            output_dir: PathBuf::from("run"),
            linear_only: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::Config(format!("n must be even and >= 4, got {}", self.n)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.diag_stride == 0 {
            return Err(Error::Config("diag_stride must be at least 1".into()));
        }
        if self.k_list.contains(&0) {
            return Err(Error::Config("k_list entries must be at least 1".into()));
        }
        if !(self.beta_min > 0.0) {
            return Err(Error::Config("beta_min must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (rounded to the nearest step).
    pub fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        let mut seen = Vec::<String>::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ConfigLine {
                path: origin.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and parse a config file; `output_dir` is resolved relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        let mut cfg = Self::parse_str(&text, path)?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "n" => self.n = parse_int(value)? as usize,
            "nu" => self.nu = parse_real(value)?,
            "dt" => self.dt = parse_real(value)?,
            "t_end" => self.t_end = parse_real(value)?,
            "diag_stride" => self.diag_stride = parse_int(value)?,
            "checkpoint_stride" => self.checkpoint_stride = parse_int(value)?,
            "k_list" => self.k_list = parse_k_list(value)?,
            "dealias" => {
                self.dealias = match value {
                    "two_thirds" => Dealias::TwoThirds,
                    "none" => Dealias::None,
                    _ => return Err(format!("dealias must be `two_thirds` or `none`, got `{value}`")),
                }
            }
            "nonlinear_form" => {
                self.nonlinear_form = match value {
                    "convection" => NonlinearForm::Convection,
                    "divergence" => NonlinearForm::Divergence,
                    _ => {
                        return Err(format!(
                            "nonlinear_form must be `convection` or `divergence`, got `{value}`"
                        ))
                    }
                }
            }
            "viscous" => {
                self.viscous = match value {
                    "explicit" => ViscousScheme::Explicit,
                    "integrating_factor" => ViscousScheme::IntegratingFactor,
                    _ => {
                        return Err(format!(
                            "viscous must be `explicit` or `integrating_factor`, got `{value}`"
                        ))
                    }
                }
            }
            "beta_min" => self.beta_min = parse_real(value)?,
            "tstar_override" => {
                self.tstar_override = if value == "none" {
                    None
                } else {
                    Some(parse_real(value)?)
                }
            }
            "cfl_warn" => self.cfl_warn = parse_real(value)?,
            "viscous_warn" => self.viscous_warn = parse_real(value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("output_dir must not be empty".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Canonical text form; parses back to the same configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let k_list = self.k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "nu = {:e}", self.nu);
        let _ = writeln!(s, "dt = {:e}", self.dt);
        let _ = writeln!(s, "t_end = {:e}", self.t_end);
        let _ = writeln!(s, "diag_stride = {}", self.diag_stride);
        let _ = writeln!(s, "k_list = {k_list}");
        let _ = writeln!(s, "checkpoint_stride = {}", self.checkpoint_stride);
        let _ = writeln!(
            s,
            "dealias = {}",
            match self.dealias {
                Dealias::TwoThirds => "two_thirds",
                Dealias::None => "none",
            }
        );
        let _ = writeln!(
            s,
            "nonlinear_form = {}",
            match self.nonlinear_form {
                NonlinearForm::Convection => "convection",
                NonlinearForm::Divergence => "divergence",
            }
        );
        let _ = writeln!(
            s,
            "viscous = {}",
            match self.viscous {
                ViscousScheme::Explicit => "explicit",
                ViscousScheme::IntegratingFactor => "integrating_factor",
            }
        );
        let _ = writeln!(s, "beta_min = {:e}", self.beta_min);
        match self.tstar_override {
            Some(t) => {
                let _ = writeln!(s, "tstar_override = {t:e}");
            }
            None => {
                let _ = writeln!(s, "tstar_override = none");
            }
        }
        let _ = writeln!(s, "cfl_warn = {:e}", self.cfl_warn);
        let _ = writeln!(s, "viscous_warn = {:e}", self.viscous_warn);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        s
    }
}

fn parse_int(v: &str) -> std::result::Result<u64, String> {
    v.parse::<u64>()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

pub(crate) fn parse_real(v: &str) -> std::result::Result<f64, String> {
    let bad = || format!("expected a real number, got `{v}`");
    let x = match v.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => v.parse().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

pub(crate) fn parse_k_list(v: &str) -> std::result::Result<Vec<u32>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let mut out: Vec<u32> = v
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<u32>()
                .map_err(|_| format!("k_list entries must be positive integers, got `{s}`"))
        })
        .collect::<std::result::Result<_, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
