//! RK4 time stepping of the projected Fourier-space Navier-Stokes system
//! `d uhat/dt = -P_k (u . grad u)^ - nu |k|^2 uhat`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{SolverConfig, ViscousScheme};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::spectral::{leray_project_in_place, taylor_green_init, Spectral, SpectralVectorField, WaveGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub field: SpectralVectorField,
    pub step_index: u64,
}

/// CFL and viscous numbers with any threshold warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub cfl: f64,
    pub viscous: f64,
    pub warnings: Vec<String>,
}

/// Receives diagnostics and checkpoint requests from [`Solver::run_from`].
pub trait Observer {
    fn on_sample(&mut self, state: &SolverState, record: &DiagnosticsRecord) -> Result<()>;

    fn on_checkpoint(&mut self, _state: &SolverState) -> Result<()> {
        Ok(())
    }

    fn on_stability(&mut self, _state: &SolverState, _report: &StabilityReport) {}
}

/// Collects every record in memory.
#[derive(Debug, Default)]
pub struct RecordCollector {
    pub records: Vec<DiagnosticsRecord>,
}

impl Observer for RecordCollector {
    fn on_sample(&mut self, _state: &SolverState, record: &DiagnosticsRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// A configured solver: planned transforms plus per-mode viscous tables.
#[derive(Debug)]
pub struct Solver {
    cfg: SolverConfig,
    spectral: Spectral,
    /// `|k|^2` per stored mode.
    lap: Vec<f64>,
    /// `exp(-nu |k|^2 dt / 2)`, integrating-factor scheme only.
    half_decay: Vec<f64>,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = WaveGrid::with_dealias(cfg.n, cfg.dealias)?;
        let spectral = Spectral::with_form(grid, cfg.nonlinear_form);
        let grid = spectral.grid().clone();
        let lap: Vec<f64> = (0..grid.spectral_len())
            .into_par_iter()
            .map(|idx| {
                let k = grid.k_phys(idx);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            })
            .collect();
        let half_decay = match cfg.viscous {
            ViscousScheme::Explicit => Vec::new(),
            ViscousScheme::IntegratingFactor => lap.par_iter().map(|k2| (-cfg.nu * k2 * cfg.dt * 0.5).exp()).collect(),
        };
        Ok(Self {
            cfg,
            spectral,
            lap,
            half_decay,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn grid(&self) -> &std::sync::Arc<WaveGrid> {
        self.spectral.grid()
    }

    /// Taylor-Green field at `t = 0`.
    pub fn initial_state(&self) -> SolverState {
        SolverState {
            t: 0.0,
            field: taylor_green_init(self.grid().clone()),
            step_index: 0,
        }
    }

    /// Wrap a field at a given step, with `t = step_index * dt`.
    pub fn state_at(&self, field: SpectralVectorField, step_index: u64) -> Result<SolverState> {
        field.ensure_same_grid(self.grid())?;
        Ok(SolverState {
            t: step_index as f64 * self.cfg.dt,
            field,
            step_index,
        })
    }

    pub fn sample(&self, state: &SolverState) -> Result<DiagnosticsRecord> {
        diagnostics::sample(&self.spectral, state.t, &state.field, &self.cfg.k_list)
    }

    /// `-P_k (u . grad u)^`, or zero when the quadratic term is disabled.
    fn advection(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        if self.cfg.linear_only {
            return Ok(self.spectral.zeros());
        }
        let mut nl = self.spectral.nonlinear_term(u)?;
        nl.scale(-1.0);
        Ok(nl)
    }

    /// Full explicit right-hand side.
    fn rhs(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        let mut out = self.advection(u)?;
        let nu = self.cfg.nu;
        for c in 0..3 {
            out.component_mut(c)
                .par_iter_mut()
                .zip(u.component(c).par_iter())
                .zip(self.lap.par_iter())
                .for_each(|((o, x), k2)| *o -= x * (nu * k2));
        }
        Ok(out)
    }

    /// One classical RK4 step.
    pub fn rk4_step(&self, state: &SolverState) -> Result<SolverState> {
        state.field.ensure_same_grid(self.grid())?;
        let mut next = match self.cfg.viscous {
            ViscousScheme::Explicit => self.explicit_step(&state.field)?,
            ViscousScheme::IntegratingFactor => self.integrating_factor_step(&state.field)?,
        };
        next.apply_dealias();
        next.enforce_hermitian();
        leray_project_in_place(&mut next);
        let step_index = state.step_index + 1;
        let t = step_index as f64 * self.cfg.dt;
        if !next.is_finite() {
            return Err(Error::BlowUp { step: step_index, t });
        }
        Ok(SolverState {
            t,
            field: next,
            step_index,
        })
    }

    fn explicit_step(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        let dt = self.cfg.dt;
        let k = self.rhs(u)?;
        let mut acc = u.clone();
        acc.axpy(dt / 6.0, &k);
        let mut stage = u.clone();
        stage.axpy(dt / 2.0, &k);

        let k = self.rhs(&stage)?;
        acc.axpy(dt / 3.0, &k);
        stage.clone_from(u);
        stage.axpy(dt / 2.0, &k);

        let k = self.rhs(&stage)?;
        acc.axpy(dt / 3.0, &k);
        stage.clone_from(u);
        stage.axpy(dt, &k);

        let k = self.rhs(&stage)?;
        acc.axpy(dt / 6.0, &k);
        Ok(acc)
    }

    /// Lawson RK4 on `v = exp(nu |k|^2 t) uhat`: viscous decay is exact,
    /// only the advection term is integrated.
    fn integrating_factor_step(&self, u: &SpectralVectorField) -> Result<SpectralVectorField> {
        let dt = self.cfg.dt;
        let e = &self.half_decay;

        let n1 = self.advection(u)?;
        let mut acc = u.clone();
        acc.axpy(dt / 6.0, &n1);
        let mut stage = u.clone();
        stage.axpy(dt / 2.0, &n1);
        scale_modes(&mut stage, e);

        let n2 = self.advection(&stage)?;
        scale_modes(&mut acc, e);
        acc.axpy(dt / 3.0, &n2);
        stage.clone_from(u);
        scale_modes(&mut stage, e);
        stage.axpy(dt / 2.0, &n2);

        let n3 = self.advection(&stage)?;
        acc.axpy(dt / 3.0, &n3);
        scale_modes(&mut acc, e);
        stage.clone_from(u);
        scale_modes(&mut stage, e);
        stage.axpy(dt, &n3);
        scale_modes(&mut stage, e);

        let n4 = self.advection(&stage)?;
        acc.axpy(dt / 6.0, &n4);
        Ok(acc)
    }

    /// Stability numbers for the current state (one inverse transform).
    pub fn stability_monitor(&self, state: &SolverState) -> Result<StabilityReport> {
        let p = self.spectral.inverse_transform(&state.field)?;
        Ok(stability_report(p.max_abs(), &self.cfg, self.grid()))
    }

    /// Run from the Taylor-Green field to `t_end`, sampling at `t = 0`.
    pub fn run(&self, observer: &mut dyn Observer) -> Result<SolverState> {
        let state = self.initial_state();
        self.emit_sample(&state, observer)?;
        self.run_from(state, observer)
    }

    /// Continue from `state` to `t_end`. Samples fall on multiples of
    /// `diag_stride`, the starting step is not re-sampled, and the last step
    /// always requests a checkpoint.
    pub fn run_from(&self, mut state: SolverState, observer: &mut dyn Observer) -> Result<SolverState> {
        state.field.ensure_same_grid(self.grid())?;
        let total = self.cfg.total_steps();
        while state.step_index < total {
            state = self.rk4_step(&state)?;
            if state.step_index.is_multiple_of(self.cfg.diag_stride) {
                self.emit_sample(&state, observer)?;
            }
            let stride = self.cfg.checkpoint_stride;
            if (stride > 0 && state.step_index.is_multiple_of(stride)) || state.step_index == total {
                observer.on_checkpoint(&state)?;
            }
        }
        Ok(state)
    }

    fn emit_sample(&self, state: &SolverState, observer: &mut dyn Observer) -> Result<()> {
        let record = self.sample(state)?;
        let max_u = match record.log_norms.get(&0) {
            Some(l) => l.exp(),
            None => self.spectral.inverse_transform(&state.field)?.max_abs(),
        };
        let report = stability_report(max_u, &self.cfg, self.grid());
        observer.on_stability(state, &report);
        observer.on_sample(state, &record)
    }
}

/// Build a solver and take one step.
pub fn rk4_step(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    Solver::new(cfg.clone())?.rk4_step(state)
}

/// Build a solver and run it from the Taylor-Green field.
pub fn run(cfg: &SolverConfig, observer: &mut dyn Observer) -> Result<SolverState> {
    Solver::new(cfg.clone())?.run(observer)
}

/// CFL number `max|u| dt N` and viscous number `nu (2 pi m_c)^2 dt`, where
/// `m_c` is the largest retained mode per axis.
pub fn stability_report(max_u: f64, cfg: &SolverConfig, grid: &WaveGrid) -> StabilityReport {
    let cfl = max_u * cfg.dt * cfg.n as f64;
    let kmax = 2.0 * std::f64::consts::PI * grid.cutoff() as f64;
    let viscous = cfg.nu * kmax * kmax * cfg.dt;
    let mut warnings = Vec::new();
    if cfl > cfg.cfl_warn {
        warnings.push(format!("CFL number {cfl:.3} exceeds {}", cfg.cfl_warn));
    }
    if viscous > cfg.viscous_warn {
        warnings.push(format!("viscous number {viscous:.3} exceeds {}", cfg.viscous_warn));
    }
    StabilityReport { cfl, viscous, warnings }
}

fn scale_modes(s: &mut SpectralVectorField, factors: &[f64]) {
    for c in 0..3 {
        s.component_mut(c)
            .par_iter_mut()
            .zip(factors.par_iter())
            .for_each(|(z, f): (&mut Complex64, &f64)| *z *= *f);
    }
}
