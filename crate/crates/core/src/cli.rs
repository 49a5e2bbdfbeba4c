//! The `simulate`, `analyze` and `resume` commands.
//!
//! A run directory holds `config.txt` (canonical config echo with
//! `output_dir = .`), `diagnostics.csv`, `checkpoint.bin` and `manifest.txt`.
//! `analyze` adds `gamma_fit.csv`, `alpha_fit.txt`, `scale_report.csv` and
//! SVG figures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{analysis_pipeline, AnalysisReport, FitMode, PipelineOptions};
use crate::checkpoint::{write_checkpoint, Checkpoint};
use crate::config::SolverConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::integrator::{Observer, Solver, SolverState, StabilityReport};
use crate::io::csv::{read_csv, CsvMeta, CsvWriter};
use crate::io::manifest::{unix_now, RunManifest};
use crate::io::{figures, write_text};

pub const CONFIG_FILE: &str = "config.txt";
pub const CSV_FILE: &str = "diagnostics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECKPOINT: i32 = 3;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for CliError {}

/// Default code by error kind.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::ConfigLine { .. } | Error::Csv { .. } | Error::InvalidGrid(_) => EXIT_CONFIG,
        Error::Checkpoint { .. } | Error::GridMismatch { .. } => EXIT_CHECKPOINT,
        _ => EXIT_NUMERICAL,
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self {
            code: exit_code(&error),
            error,
        }
    }
}

fn with_code(code: i32) -> impl Fn(Error) -> CliError {
    move |error| CliError { code, error }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Outcome of `simulate` or `resume`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub step_index: u64,
    pub t: f64,
    pub samples_written: usize,
    /// `resume` found nothing left to do.
    pub no_op: bool,
}

struct RunSink {
    csv: CsvWriter,
    checkpoint: PathBuf,
    nu: f64,
    dt: f64,
    samples: usize,
    warned: Vec<String>,
    quiet: bool,
}

impl Observer for RunSink {
    fn on_sample(&mut self, _state: &SolverState, record: &DiagnosticsRecord) -> Result<()> {
        self.samples += 1;
        self.csv.write(record)
    }

    fn on_checkpoint(&mut self, state: &SolverState) -> Result<()> {
        write_checkpoint(
            &self.checkpoint,
            self.nu,
            self.dt,
            state.t,
            state.step_index,
            &state.field,
        )?;
        if !self.quiet {
            eprintln!("checkpoint: step {} t = {:.4}", state.step_index, state.t);
        }
        Ok(())
    }

    fn on_stability(&mut self, state: &SolverState, report: &StabilityReport) {
        for w in &report.warnings {
            let kind = w.split_whitespace().next().unwrap_or("").to_string();
            if !self.warned.contains(&kind) {
                eprintln!("warning at t = {:.4}: {w}", state.t);
                self.warned.push(kind);
            }
        }
    }
}

fn echo(cfg: &SolverConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = PathBuf::from(".");
    c.to_config_string()
}

fn write_manifest(dir: &Path, command: &str, cfg: &SolverConfig, started: f64, status: &str) -> Result<()> {
    let mut m = RunManifest::new(command, echo(cfg), started);
    m.add_files(dir, &[CONFIG_FILE, CSV_FILE, CHECKPOINT_FILE])?;
    m.finished_unix = unix_now();
    let mut text = m.render();
    let _ = writeln!(text, "\nstatus = {status}");
    write_text(&dir.join(MANIFEST_FILE), &text)?;
    Ok(())
}

/// Run a configuration into `cfg.output_dir`.
pub fn simulate_config(cfg: &SolverConfig, quiet: bool) -> CliResult<RunOutcome> {
    cfg.validate().map_err(with_code(EXIT_CONFIG))?;
    let started = unix_now();
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
    write_text(&dir.join(CONFIG_FILE), &echo(cfg))?;
    let meta = CsvMeta {
        n: Some(cfg.n),
        nu: Some(cfg.nu),
        dt: Some(cfg.dt),
    };
    let csv = CsvWriter::create(&dir.join(CSV_FILE), meta, &cfg.k_list)?;
    let solver = Solver::new(cfg.clone()).map_err(with_code(EXIT_CONFIG))?;
    let mut sink = RunSink {
        csv,
        checkpoint: dir.join(CHECKPOINT_FILE),
        nu: cfg.nu,
        dt: cfg.dt,
        samples: 0,
        warned: Vec::new(),
        quiet,
    };
    let result = solver.run(&mut sink);
    finish(&dir, "simulate", cfg, started, sink.samples, result)
}

fn finish(
    dir: &Path,
    command: &str,
    cfg: &SolverConfig,
    started: f64,
    samples: usize,
    result: Result<SolverState>,
) -> CliResult<RunOutcome> {
    match result {
        Ok(state) => {
            write_manifest(dir, command, cfg, started, "complete")?;
            Ok(RunOutcome {
                dir: dir.to_path_buf(),
                step_index: state.step_index,
                t: state.t,
                samples_written: samples,
                no_op: false,
            })
        }
        Err(e) => {
            let _ = write_manifest(dir, command, cfg, started, &format!("failed: {e}"));
            Err(e.into())
        }
    }
}

/// `simulate <config>`.
pub fn simulate(config_path: &Path, quiet: bool) -> CliResult<RunOutcome> {
    let cfg = SolverConfig::load(config_path).map_err(with_code(EXIT_CONFIG))?;
    simulate_config(&cfg, quiet)
}

/// `resume <checkpoint> [--t-end X]`. The configuration is read from the
/// `config.txt` next to the checkpoint.
pub fn resume(checkpoint: &Path, t_end: Option<f64>, quiet: bool) -> CliResult<RunOutcome> {
    let ck = Checkpoint::load(checkpoint).map_err(with_code(EXIT_CHECKPOINT))?;
    let dir = checkpoint.parent().unwrap_or(Path::new(".")).to_path_buf();
    let dir = if dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        dir
    };
    let mut cfg = SolverConfig::load(&dir.join(CONFIG_FILE)).map_err(with_code(EXIT_CONFIG))?;
    cfg.output_dir = dir.clone();
    let mismatch = |msg: String| CliError {
        code: EXIT_CHECKPOINT,
        error: Error::Checkpoint {
            path: checkpoint.to_path_buf(),
            msg,
        },
    };
    if ck.n != cfg.n {
        return Err(mismatch(format!(
            "grid mismatch: checkpoint N={}, config N={}",
            ck.n, cfg.n
        )));
    }
    if ck.nu != cfg.nu || ck.dt != cfg.dt {
        return Err(mismatch(format!(
            "parameter mismatch: checkpoint nu={:e} dt={:e}, config nu={:e} dt={:e}",
            ck.nu, ck.dt, cfg.nu, cfg.dt
        )));
    }
    if let Some(t) = t_end {
        cfg.t_end = t;
    }
    cfg.validate().map_err(with_code(EXIT_CONFIG))?;
    let started = unix_now();
    if ck.step_index >= cfg.total_steps() {
        if !quiet {
            eprintln!(
                "checkpoint at t = {} already reaches t_end = {}, nothing to do",
                ck.t, cfg.t_end
            );
        }
        return Ok(RunOutcome {
            dir,
            step_index: ck.step_index,
            t: ck.t,
            samples_written: 0,
            no_op: true,
        });
    }
    write_text(&dir.join(CONFIG_FILE), &echo(&cfg))?;
    let csv = CsvWriter::resume(&dir.join(CSV_FILE), &cfg.k_list, ck.t + 0.5 * cfg.dt)?;
    let solver = Solver::new(cfg.clone()).map_err(with_code(EXIT_CONFIG))?;
    let state = solver
        .state_at(ck.field, ck.step_index)
        .map_err(with_code(EXIT_CHECKPOINT))?;
    let mut sink = RunSink {
        csv,
        checkpoint: checkpoint.to_path_buf(),
        nu: cfg.nu,
        dt: cfg.dt,
        samples: 0,
        warned: Vec::new(),
        quiet,
    };
    let result = solver.run_from(state, &mut sink);
    finish(&dir, "resume", &cfg, started, sink.samples, result)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalyzeOptions {
    pub t_star: Option<f64>,
    pub beta_min: Option<f64>,
    pub k_set: Option<Vec<u32>>,
    pub out_dir: Option<PathBuf>,
    pub intercept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOutcome {
    pub report: AnalysisReport,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// `analyze <csv>`: fits, tables and figures. A failed exponent fit is
/// reported in `report.alpha`, the other outputs are still written.
pub fn analyze(csv: &Path, opts: &AnalyzeOptions) -> CliResult<AnalyzeOutcome> {
    let (meta, records) = read_csv(csv).map_err(with_code(EXIT_CONFIG))?;
    if records.first().is_none_or(|r| r.log_ratios.is_empty()) {
        return Err(CliError {
            code: EXIT_CONFIG,
            error: Error::Csv {
                path: csv.to_path_buf(),
                row: 2,
                msg: "k_list empty: no lnratio_<k> columns".into(),
            },
        });
    }
    let popts = PipelineOptions {
        k_set: opts.k_set.clone(),
        t_star: opts.t_star,
        beta_min: opts.beta_min,
        dt: meta.dt,
        mode: if opts.intercept {
            FitMode::Intercept
        } else {
            FitMode::NoIntercept
        },
    };
    let report = analysis_pipeline(&records, &popts)?;
    let dir = match &opts.out_dir {
        Some(d) => d.clone(),
        None => csv
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let dir = if dir.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        dir
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;

    let mut files = vec![
        write_text(&dir.join("gamma_fit.csv"), &gamma_table(&report))?,
        write_text(&dir.join("alpha_fit.txt"), &alpha_text(&report))?,
        write_text(&dir.join("scale_report.csv"), &scale_table(&report))?,
    ];
    for (name, svg) in figures(&records, &report) {
        files.push(write_text(&dir.join(name), &svg)?);
    }
    let summary = summary(&report, meta);
    Ok(AnalyzeOutcome { report, summary, files })
}

fn opt(v: Option<f64>) -> String {
    v.map(|g| format!("{g:e}")).unwrap_or_default()
}

fn gamma_table(r: &AnalysisReport) -> String {
    let mut s = String::from(
        "k,gamma,intercept,residual_norm,samples,window_start,window_end,gamma_tstar_minus_2dt,gamma_tstar_plus_2dt\n",
    );
    for (g, b) in r.gamma.iter().zip(&r.band) {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{},{:e},{:e},{},{}",
            g.k,
            g.gamma,
            g.intercept,
            g.residual_norm,
            g.samples,
            g.window.0,
            g.window.1,
            opt(b.minus),
            opt(b.plus)
        );
    }
    s
}

fn alpha_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "t_star = {:e}", r.t_star);
    let _ = writeln!(s, "beta_min = {:e}", r.beta_min);
    let _ = writeln!(s, "advisory = {}", r.advisory);
    match &r.alpha {
        Ok(a) => {
            let _ = writeln!(s, "a = {:e}", a.a);
            let _ = writeln!(s, "intercept = {:e}", a.intercept);
            let ks: Vec<String> = a.k_set.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(s, "k_set = {}", ks.join(","));
            let rs: Vec<String> = a.residuals.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(s, "residuals = {}", rs.join(","));
        }
        Err(e) => {
            let _ = writeln!(s, "error = {e}");
        }
    }
    for n in &r.notes {
        let _ = writeln!(s, "note = {n}");
    }
    s
}

fn scale_table(r: &AnalysisReport) -> String {
    let mut s = String::from("k,alpha,epsilon_2k,log_norm_2k,log_r,log_rho,dominant,reversed_regime\n");
    for x in &r.scales {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{},{}",
            x.k, x.alpha, x.epsilon_2k, x.log_norm_2k, x.log_r, x.log_rho, x.dominant, x.reversed_regime
        );
    }
    s
}

fn summary(r: &AnalysisReport, meta: CsvMeta) -> String {
    let mut s = String::new();
    if let (Some(n), Some(nu), Some(dt)) = (meta.n, meta.nu, meta.dt) {
        let _ = writeln!(s, "run: N = {n}, nu = {nu:e}, dt = {dt:e}");
    }
    match r.peak {
        Some(p) => {
            let _ = writeln!(
                s,
                "T* = {:.6} (enstrophy peak{})",
                r.t_star,
                if p.at_boundary { ", at series boundary" } else { "" }
            );
        }
        None => {
            let _ = writeln!(s, "T* = {:.6} (supplied)", r.t_star);
        }
    }
    let _ = writeln!(s, "fit window: beta in [{:e}, 1]", r.beta_min);
    let _ = writeln!(
        s,
        "{:>5} {:>12} {:>12} {:>12} {:>12}",
        "k", "gamma_k", "rms resid", "T*-2dt", "T*+2dt"
    );
    for (g, b) in r.gamma.iter().zip(&r.band) {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:>5} {:>12.6} {:>12.3e} {:>12} {:>12}",
            g.k,
            g.gamma,
            g.residual_norm,
            f(b.minus),
            f(b.plus)
        );
    }
    match &r.alpha {
        Ok(a) => {
            let _ = writeln!(s, "a = {:.6}", a.a);
            let worst = a.residuals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let _ = writeln!(s, "max |gamma_k - k^-a| = {worst:.3e}");
        }
        Err(e) => {
            let _ = writeln!(s, "a: {e}");
        }
    }
    if let Some(t) = r.scale_time {
        let dominant = r.scales.iter().filter(|x| x.dominant).count();
        let _ = writeln!(
            s,
            "scale comparison at t = {t:.6}: rho_2k > r_2k for {dominant} of {} orders",
            r.scales.len()
        );
    }
    if r.advisory {
        let _ = writeln!(s, "ADVISORY: enstrophy peak at the series boundary");
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
