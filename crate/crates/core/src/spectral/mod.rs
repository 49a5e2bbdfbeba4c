//! Fourier-space representation of periodic velocity fields on the unit cube.
//!
//! Fields are expanded as `u(x) = sum_m uhat(m) exp(2 pi i m.x)` with physical
//! wavevector `k = 2 pi m`. Pressure never appears: the Leray projector
//! `P_k = I - k k^T / |k|^2` removes the gradient part of every right-hand side.
//!
//! Derivative norms `||D^n u||_inf` are realized as the isotropic multiplier
//! `(2 pi |m|)^n` applied per component, and are only ever handled through
//! their natural logarithm ([`LogNorm`]). For `n` in the hundreds the raw
//! multipliers overflow any float format.

mod fft;
mod field;
mod grid;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

pub use fft::Fft3;
pub use field::{PhysicalVectorField, SpectralVectorField};
pub use grid::{Dealias, WaveGrid};

use crate::error::{Error, Result};

/// Form of the quadratic term evaluated in physical space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonlinearForm {
    /// `(u . grad) u`
    #[default]
    Convection,
    /// `div(u u^T)`, equal to the convection form for solenoidal `u`.
    Divergence,
}

/// `ln ||D^n u||_inf` for a derivative order `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNorm {
    pub order: u32,
    pub value: f64,
}

/// Planned transforms and the operators built on them for one grid.
#[derive(Debug)]
pub struct Spectral {
    grid: Arc<WaveGrid>,
    fft: Fft3,
    form: NonlinearForm,
    log_k: OnceLock<Arc<Vec<f64>>>,
}

impl Spectral {
    pub fn new(grid: WaveGrid) -> Self {
        Self::with_form(grid, NonlinearForm::Convection)
    }

    pub fn with_form(grid: WaveGrid, form: NonlinearForm) -> Self {
        let fft = Fft3::for_grid(&grid);
        Self {
            grid: Arc::new(grid),
            fft,
            form,
            log_k: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn form(&self) -> NonlinearForm {
        self.form
    }

    pub fn zeros(&self) -> SpectralVectorField {
        SpectralVectorField::zeros(self.grid.clone())
    }

    pub fn forward_transform(&self, p: &PhysicalVectorField) -> Result<SpectralVectorField> {
        if p.n() != self.grid.n() {
            return Err(Error::GridMismatch {
                expected: self.grid.n(),
                found: p.n(),
            });
        }
        let mut out = self.zeros();
        for c in 0..3 {
            self.fft.forward(p.component(c), out.component_mut(c), None);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, s: &SpectralVectorField) -> Result<PhysicalVectorField> {
        s.ensure_same_grid(&self.grid)?;
        let mut out = PhysicalVectorField::zeros(self.grid.n());
        for c in 0..3 {
            let band = support_band(&self.grid, s.component(c));
            self.fft.inverse(s.component(c), out.component_mut(c), band);
        }
        Ok(out)
    }

    /// `P_k` applied to the transform of `(u . grad) u`, dealiased.
    pub fn nonlinear_term(&self, s: &SpectralVectorField) -> Result<SpectralVectorField> {
        s.ensure_same_grid(&self.grid)?;
        let mut out = match self.form {
            NonlinearForm::Convection => self.convection(s),
            NonlinearForm::Divergence => self.divergence(s),
        };
        out.apply_dealias();
        project_in_place(&mut out);
        Ok(out)
    }

    fn physical(&self, spec: &[Complex64], band: Option<usize>) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.physical_len()];
        self.fft.inverse(spec, &mut out, band);
        out
    }

    /// `out = i k_axis spec` over the dealias band, zero elsewhere.
    fn derivative(&self, spec: &[Complex64], axis: usize, out: &mut [Complex64]) {
        let grid = &self.grid;
        let (n, nh, cut) = (grid.n(), grid.nh(), grid.cutoff());
        out.par_chunks_mut(nh)
            .zip(spec.par_chunks(nh))
            .enumerate()
            .for_each(|(ab, (dst, src))| {
                let (a, b) = (ab / n, ab % n);
                if !(grid.axis_kept(a) && grid.axis_kept(b)) {
                    dst.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    return;
                }
                for (c, (d, s)) in dst.iter_mut().zip(src).enumerate() {
                    if c > cut {
                        *d = Complex64::new(0.0, 0.0);
                        continue;
                    }
                    let k = match axis {
                        0 => grid.wavenumber(a),
                        1 => grid.wavenumber(b),
                        _ => grid.wavenumber(c),
                    };
                    *d = Complex64::new(-k * s.im, k * s.re);
                }
            });
    }

    fn convection(&self, s: &SpectralVectorField) -> SpectralVectorField {
        let grid = &self.grid;
        let n = grid.n();
        let band = Some(grid.cutoff());
        let u: Vec<Vec<f64>> = (0..3).map(|j| self.physical(s.component(j), band)).collect();
        let mut acc = vec![0.0; grid.physical_len()];
        let mut out = self.zeros();
        for i in 0..3 {
            for (j, uj) in u.iter().enumerate() {
                let first = j == 0;
                self.fft.inverse_with(
                    s.component(i),
                    band,
                    |a, b, c, z| {
                        let k = grid.wavenumber([a, b, c][j]);
                        Complex64::new(-k * z.im, k * z.re)
                    },
                    &mut acc,
                    |r, dst, grad| {
                        let urow = &uj[r * n..(r + 1) * n];
                        if first {
                            for ((d, x), g) in dst.iter_mut().zip(urow).zip(grad) {
                                *d = x * g;
                            }
                        } else {
                            for ((d, x), g) in dst.iter_mut().zip(urow).zip(grad) {
                                *d += x * g;
                            }
                        }
                    },
                );
            }
            self.fft.forward(&acc, out.component_mut(i), band);
        }
        out
    }

    fn divergence(&self, s: &SpectralVectorField) -> SpectralVectorField {
        let grid = &self.grid;
        let band = Some(grid.cutoff());
        let u: Vec<Vec<f64>> = (0..3).map(|j| self.physical(s.component(j), band)).collect();
        let mut prod = vec![0.0; grid.physical_len()];
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
        let mut dspec = spec.clone();
        let mut out = self.zeros();
        for i in 0..3 {
            for j in i..3 {
                prod.par_iter_mut()
                    .zip(u[i].par_iter().zip(u[j].par_iter()))
                    .for_each(|(p, (a, b))| *p = a * b);
                self.fft.forward(&prod, &mut spec, band);
                // d_j (u_i u_j) feeds component i; d_i (u_i u_j) feeds component j.
                let targets: &[(usize, usize)] = if i == j { &[(i, j)] } else { &[(i, j), (j, i)] };
                for &(comp, axis) in targets {
                    self.derivative(&spec, axis, &mut dspec);
                    out.component_mut(comp)
                        .par_iter_mut()
                        .zip(dspec.par_iter())
                        .for_each(|(d, v)| *d += v);
                }
            }
        }
        out
    }

    /// `ln ||Lambda^n u||_inf` with `Lambda = sqrt(-Laplacian)`.
    pub fn log_sup_norm(&self, s: &SpectralVectorField, order: u32) -> Result<LogNorm> {
        Ok(self.log_sup_norms(s, &[order])?[0])
    }

    /// [`Self::log_sup_norm`] for several orders, sharing the per-mode setup.
    ///
    /// Each order is evaluated as `shift + ln max|F^-1[w uhat]|` where the
    /// weights `w(m) = exp(n ln(2 pi |m|) - shift)` are built in log space and
    /// `shift` is the largest `ln |uhat(m)| + n ln(2 pi |m|)` over all modes,
    /// so the largest weighted coefficient has modulus one and nothing
    /// overflows or underflows wholesale.
    pub fn log_sup_norms(&self, s: &SpectralVectorField, orders: &[u32]) -> Result<Vec<LogNorm>> {
        s.ensure_same_grid(&self.grid)?;
        let grid = &self.grid;
        let len = grid.spectral_len();

        // ln max_c |uhat_c(m)| and ln(2 pi |m|); -inf marks empty modes.
        let log_amp: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|idx| {
                let a = (0..3).map(|c| s.component(c)[idx].norm()).fold(0.0, f64::max);
                a.ln()
            })
            .collect();
        let log_k = self.log_wavenumbers();

        let mut weights = vec![0.0; len];
        let mut row_max = vec![0.0; grid.n() * grid.n()];
        let mut out = Vec::with_capacity(orders.len());
        for &order in orders {
            let n = order as f64;
            let log_mult = |idx: usize| -> f64 {
                if order == 0 {
                    0.0
                } else {
                    n * log_k[idx]
                }
            };
            let shift = (0..len)
                .into_par_iter()
                .map(|idx| log_amp[idx] + log_mult(idx))
                .filter(|v| !v.is_nan())
                .reduce(|| f64::NEG_INFINITY, f64::max);
            if !shift.is_finite() {
                return Err(Error::ZeroField);
            }
            weights.par_iter_mut().enumerate().for_each(|(idx, w)| {
                *w = if log_amp[idx].is_finite() {
                    (log_mult(idx) - shift).exp()
                } else {
                    0.0
                };
            });
            let mut sup: f64 = 0.0;
            for comp in s.components() {
                let band = support_band(grid, comp);
                if band == Some(0) && (order > 0 || comp[0] == Complex64::new(0.0, 0.0)) {
                    continue;
                }
                let (n, nh) = (grid.n(), grid.nh());
                self.fft.inverse_with(
                    comp,
                    band,
                    |a, b, c, z| {
                        let idx = (a * n + b) * nh + c;
                        let wt = weights[idx];
                        if wt.is_finite() {
                            z * wt
                        } else if z.re == 0.0 && z.im == 0.0 {
                            z
                        } else {
                            // Tiny amplitude against a huge multiplier: rescale
                            // through the log of the modulus instead.
                            let r = z.norm();
                            (z / r) * (r.ln() + log_mult(idx) - shift).exp()
                        }
                    },
                    &mut row_max,
                    |_, dst, row| {
                        dst[0] = row.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                    },
                );
                sup = sup.max(row_max.iter().copied().fold(0.0, f64::max));
            }
            if sup == 0.0 {
                return Err(Error::ZeroField);
            }
            out.push(LogNorm {
                order,
                value: shift + sup.ln(),
            });
        }
        Ok(out)
    }

    fn log_wavenumbers(&self) -> Arc<Vec<f64>> {
        self.log_k
            .get_or_init(|| {
                let grid = &self.grid;
                Arc::new(
                    (0..grid.spectral_len())
                        .into_par_iter()
                        .map(|idx| {
                            let m2 = grid.mode_norm_sq(idx);
                            if m2 == 0 {
                                f64::NEG_INFINITY
                            } else {
                                (2.0 * PI * (m2 as f64).sqrt()).ln()
                            }
                        })
                        .collect(),
                )
            })
            .clone()
    }
}

/// Smallest band `c` with all non-zero coefficients inside `|m_i| <= c`,
/// or `None` when the field reaches the Nyquist planes.
fn support_band(grid: &WaveGrid, spec: &[Complex64]) -> Option<usize> {
    let half = grid.n() / 2;
    let reach = spec
        .par_iter()
        .enumerate()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|(idx, _)| {
            let m = grid.modes_of(idx);
            m.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
        })
        .reduce(|| 0, usize::max);
    if reach >= half {
        None
    } else {
        Some(reach)
    }
}

fn project_mode(k: [f64; 3], u: [Complex64; 3]) -> Option<[Complex64; 3]> {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return None;
    }
    let div = u[0] * k[0] + u[1] * k[1] + u[2] * k[2];
    let unorm = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
    // Already solenoidal to rounding: leave untouched so projecting twice
    // reproduces the first result bit for bit.
    if div.norm() <= 16.0 * f64::EPSILON * k2.sqrt() * unorm {
        return None;
    }
    let f = div / k2;
    Some([u[0] - f * k[0], u[1] - f * k[1], u[2] - f * k[2]])
}

fn project_in_place(s: &mut SpectralVectorField) {
    let grid = s.grid().clone();
    let (n, nh) = (grid.n(), grid.nh());
    let [c0, c1, c2] = s.components_mut();
    c0.par_chunks_mut(nh)
        .zip(c1.par_chunks_mut(nh).zip(c2.par_chunks_mut(nh)))
        .enumerate()
        .for_each(|(ab, (r0, (r1, r2)))| {
            let (ka, kb) = (grid.wavenumber(ab / n), grid.wavenumber(ab % n));
            for c in 0..nh {
                let k = [ka, kb, grid.wavenumber(c)];
                if let Some(p) = project_mode(k, [r0[c], r1[c], r2[c]]) {
                    r0[c] = p[0];
                    r1[c] = p[1];
                    r2[c] = p[2];
                }
            }
        });
}

/// Leray projection onto divergence-free fields; the zero mode passes through.
pub fn leray_project(s: &SpectralVectorField) -> SpectralVectorField {
    let mut out = s.clone();
    project_in_place(&mut out);
    out
}

/// In-place form of [`leray_project`].
pub fn leray_project_in_place(s: &mut SpectralVectorField) {
    project_in_place(s);
}

/// Spectral coefficients of the Taylor-Green initial velocity
/// `(sin X cos Y cos Z, -cos X sin Y cos Z, 0)` with `X = 2 pi x1` etc.
pub fn taylor_green_init(grid: Arc<WaveGrid>) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(grid.clone());
    for s1 in [-1i64, 1] {
        for s2 in [-1i64, 1] {
            let idx = grid.index_of([s1, s2, 1]).expect("unit modes exist for N >= 4");
            out.component_mut(0)[idx] = Complex64::new(0.0, -(s1 as f64) / 8.0);
            out.component_mut(1)[idx] = Complex64::new(0.0, s2 as f64 / 8.0);
        }
    }
    out
}
