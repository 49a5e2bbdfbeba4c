use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::WaveGrid;
use crate::error::{Error, Result};

/// Three-component velocity in half-spectrum Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    grid: Arc<WaveGrid>,
    coeffs: [Vec<Complex64>; 3],
}

impl SpectralVectorField {
    pub fn zeros(grid: Arc<WaveGrid>) -> Self {
        let len = grid.spectral_len();
        let zero = Complex64::new(0.0, 0.0);
        Self {
            grid,
            coeffs: [vec![zero; len], vec![zero; len], vec![zero; len]],
        }
    }

    pub fn from_components(grid: Arc<WaveGrid>, coeffs: [Vec<Complex64>; 3]) -> Result<Self> {
        let len = grid.spectral_len();
        if coeffs.iter().any(|c| c.len() != len) {
            return Err(Error::Config(format!("spectral component length must be {len}")));
        }
        Ok(Self { grid, coeffs })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    #[inline]
    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.coeffs[i]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.coeffs[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.coeffs
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex64>; 3] {
        &mut self.coeffs
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.coeffs
    }

    pub fn ensure_same_grid(&self, other: &WaveGrid) -> Result<()> {
        if self.grid.n() != other.n() {
            return Err(Error::GridMismatch {
                expected: other.n(),
                found: self.grid.n(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.par_iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// Largest coefficient modulus over all components.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `self += alpha * other`, coefficient-wise.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralVectorField) {
        for (dst, src) in self.coeffs.iter_mut().zip(&other.coeffs) {
            dst.par_iter_mut()
                .zip(src.par_iter())
                .for_each(|(d, s)| *d += s * alpha);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.coeffs {
            c.par_iter_mut().for_each(|z| *z *= alpha);
        }
    }

    /// Zero every mode outside the dealias mask.
    pub fn apply_dealias(&mut self) {
        let grid = self.grid.clone();
        let (n, nh, cut) = (grid.n(), grid.nh(), grid.cutoff());
        let zero = Complex64::new(0.0, 0.0);
        for comp in &mut self.coeffs {
            comp.par_chunks_mut(nh).enumerate().for_each(|(ab, row)| {
                if grid.axis_kept(ab / n) && grid.axis_kept(ab % n) {
                    row[cut + 1..].iter_mut().for_each(|z| *z = zero);
                } else {
                    row.iter_mut().for_each(|z| *z = zero);
                }
            });
        }
    }

    /// Restore exact Hermitian structure on the `c = 0` and `c = N/2` planes,
    /// where both `m` and `-m` are stored.
    pub fn enforce_hermitian(&mut self) {
        let grid = self.grid.clone();
        let (n, nh) = (grid.n(), grid.nh());
        for comp in &mut self.coeffs {
            for c in [0, n / 2] {
                for a in 0..n {
                    for b in 0..n {
                        let idx = (a * n + b) * nh + c;
                        let mirror = grid.plane_mirror(idx);
                        if mirror < idx {
                            continue;
                        }
                        if mirror == idx {
                            comp[idx].im = 0.0;
                        } else {
                            let avg = (comp[idx] + comp[mirror].conj()) * 0.5;
                            comp[idx] = avg;
                            comp[mirror] = avg.conj();
                        }
                    }
                }
            }
        }
    }

    /// Largest deviation from Hermitian symmetry on the self-conjugate planes.
    pub fn hermitian_defect(&self) -> f64 {
        let grid = &self.grid;
        let (n, nh) = (grid.n(), grid.nh());
        let mut worst: f64 = 0.0;
        for comp in &self.coeffs {
            for c in [0, n / 2] {
                for ab in 0..n * n {
                    let idx = ab * nh + c;
                    let mirror = grid.plane_mirror(idx);
                    worst = worst.max((comp[idx] - comp[mirror].conj()).norm());
                }
            }
        }
        worst
    }

    /// `max_m |k_phys(m) . uhat(m)|`.
    pub fn max_divergence(&self) -> f64 {
        let grid = &self.grid;
        (0..grid.spectral_len())
            .into_par_iter()
            .map(|idx| {
                let k = grid.k_phys(idx);
                (self.coeffs[0][idx] * k[0] + self.coeffs[1][idx] * k[1] + self.coeffs[2][idx] * k[2]).norm()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Three real components sampled at `x = (i1, i2, i3) / N`, `i3` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalVectorField {
    n: usize,
    data: [Vec<f64>; 3],
}

impl PhysicalVectorField {
    pub fn zeros(n: usize) -> Self {
        let len = n * n * n;
        Self {
            n,
            data: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    pub fn from_components(n: usize, data: [Vec<f64>; 3]) -> Result<Self> {
        if data.iter().any(|c| c.len() != n * n * n) {
            return Err(Error::Config(format!(
                "physical component length must be {}",
                n * n * n
            )));
        }
        Ok(Self { n, data })
    }

    /// Sample `f(x1, x2, x3) -> [u1, u2, u3]` on the grid.
    pub fn from_fn(n: usize, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Self {
        let mut out = Self::zeros(n);
        let h = 1.0 / n as f64;
        let len = n * n * n;
        let samples: Vec<[f64; 3]> = (0..len)
            .into_par_iter()
            .map(|i| {
                let (i1, i2, i3) = (i / (n * n), (i / n) % n, i % n);
                f([i1 as f64 * h, i2 as f64 * h, i3 as f64 * h])
            })
            .collect();
        for (i, s) in samples.into_iter().enumerate() {
            for c in 0..3 {
                out.data[c][i] = s[c];
            }
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn component(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    #[inline]
    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i]
    }

    /// Grid average of `|u|^2`.
    pub fn mean_square(&self) -> f64 {
        let len = (self.n * self.n * self.n) as f64;
        self.data
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / len
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}
