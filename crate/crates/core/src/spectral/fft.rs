//! Real-to-complex 3D FFT on an `N^3` periodic grid.
//!
//! Convention: `u(x) = sum_m uhat(m) exp(2 pi i m.x)`, so the forward transform
//! carries the `1/N^3` factor and the inverse is unnormalized.
//!
//! Both directions accept an optional band `c`: the forward transform then
//! only produces modes with every `|m_i| <= c` (others are zero), and the
//! inverse treats modes outside the band as zero. Skipping the empty pencils
//! roughly halves the work for dealiased fields.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use super::grid::WaveGrid;

#[derive(Clone, Copy)]
struct SyncPtr(*mut Complex64);
unsafe impl Send for SyncPtr {}
unsafe impl Sync for SyncPtr {}

impl SyncPtr {
    #[inline]
    fn get(self) -> *mut Complex64 {
        self.0
    }
}

const TILE: usize = 16;

/// `dst[c * rows + r] = src[r * stride + c]` for `r < rows`, `c < cols`.
///
/// # Safety
/// `src` must be valid for reads at every `r * stride + c`, `dst` for
/// `cols * rows` writes, and the two regions must not overlap.
#[inline]
unsafe fn gather(src: *const Complex64, stride: usize, rows: usize, cols: usize, dst: *mut Complex64) {
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                let s = src.add(r * stride);
                for c in c0..c1 {
                    *dst.add(c * rows + r) = *s.add(c);
                }
            }
        }
    }
}

/// Inverse of [`gather`]: `dst[r * stride + c] = scale * src[c * rows + r]`.
///
/// # Safety
/// Same contract as [`gather`] with the roles of the buffers swapped.
#[inline]
unsafe fn scatter(src: *const Complex64, stride: usize, rows: usize, cols: usize, dst: *mut Complex64, scale: f64) {
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                let d = dst.add(r * stride);
                for c in c0..c1 {
                    *d.add(c) = *src.add(c * rows + r) * scale;
                }
            }
        }
    }
}

/// Planned transforms for one grid size.
pub struct Fft3 {
    n: usize,
    nh: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Reusable spectral-sized buffers for the inverse transform.
    pool: Mutex<Vec<Vec<Complex64>>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            n,
            nh: n / 2 + 1,
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: cplx.plan_fft_forward(n),
            inv: cplx.plan_fft_inverse(n),
            pool: Mutex::new(Vec::new()),
        }
    }

    pub fn for_grid(grid: &WaveGrid) -> Self {
        Self::new(grid.n())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Signed-mode band test on a full axis index.
    #[inline]
    fn in_band(&self, axis_index: usize, band: usize) -> bool {
        axis_index <= band || axis_index >= self.n - band
    }

    /// Forward transform of one real scalar field.
    pub fn forward(&self, input: &[f64], out: &mut [Complex64], band: Option<usize>) {
        let (n, nh) = (self.n, self.nh);
        assert_eq!(input.len(), n * n * n);
        assert_eq!(out.len(), n * n * nh);
        let band = band.unwrap_or(n / 2).min(n / 2);
        let cmax = band.min(nh - 1);

        // Last axis: real-to-complex on contiguous rows.
        out.par_chunks_mut(nh).zip(input.par_chunks(n)).for_each_init(
            || (vec![0.0; n], self.r2c.make_scratch_vec()),
            |(row, scratch), (dst, src)| {
                row.copy_from_slice(src);
                self.r2c.process_with_scratch(row, dst, scratch).expect("r2c length");
            },
        );

        // Middle axis, plane by plane.
        out.par_chunks_mut(n * nh).for_each_init(
            || self.line_buffers(cmax + 1),
            |(lines, scratch), plane| {
                // SAFETY: `plane` holds `n` rows of `nh >= cmax + 1` entries and
                // `lines` holds `(cmax + 1) * n`.
                unsafe { gather(plane.as_ptr(), nh, n, cmax + 1, lines.as_mut_ptr()) };
                self.fwd.process_with_scratch(lines, scratch);
                unsafe { scatter(lines.as_ptr(), nh, n, cmax + 1, plane.as_mut_ptr(), 1.0) };
                for b in 0..n {
                    let row = &mut plane[b * nh..(b + 1) * nh];
                    let from = if self.in_band(b, band) { cmax + 1 } else { 0 };
                    row[from..].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                }
            },
        );

        // First axis: pencils strided across planes, one `b` per task.
        let ptr = SyncPtr(out.as_mut_ptr());
        let scale = 1.0 / (n * n * n) as f64;
        (0..n).into_par_iter().for_each_init(
            || self.line_buffers(cmax + 1),
            |(lines, scratch), b| {
                let p = ptr.get();
                if !self.in_band(b, band) {
                    return;
                }
                // SAFETY: each task touches only entries with its own `b`.
                unsafe {
                    gather(p.add(b * nh), n * nh, n, cmax + 1, lines.as_mut_ptr());
                    self.fwd.process_with_scratch(lines, scratch);
                    scatter(lines.as_ptr(), n * nh, n, cmax + 1, p.add(b * nh), scale);
                    for a in (0..n).filter(|&a| !self.in_band(a, band)) {
                        let base = (a * n + b) * nh;
                        for c in 0..=cmax {
                            *p.add(base + c) = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            },
        );
    }

    /// Inverse transform of one spectral scalar field.
    pub fn inverse(&self, input: &[Complex64], out: &mut [f64], band: Option<usize>) {
        self.inverse_with(input, band, |_, _, _, z| z, out, |_, dst, row| dst.copy_from_slice(row));
    }

    /// Inverse transform of `map(a, b, c, input)` with a per-row sink.
    ///
    /// `map` sees full axis indices and each stored coefficient before the
    /// first pass. `out` is split into `N^2` equal chunks, one per physical
    /// row `(i1, i2)`, and `sink(row_index, chunk, values)` receives the `N`
    /// real values of that row.
    pub fn inverse_with<M, S>(&self, input: &[Complex64], band: Option<usize>, map: M, out: &mut [f64], sink: S)
    where
        M: Fn(usize, usize, usize, Complex64) -> Complex64 + Sync,
        S: Fn(usize, &mut [f64], &[f64]) + Sync,
    {
        let (n, nh) = (self.n, self.nh);
        assert_eq!(input.len(), n * n * nh);
        assert_eq!(out.len() % (n * n), 0);
        let chunk = out.len() / (n * n);
        let band = band.unwrap_or(n / 2).min(n / 2);
        let cmax = band.min(nh - 1);
        let zero = Complex64::new(0.0, 0.0);

        // Every entry with `c <= cmax` is rewritten below before it is read,
        // and entries beyond `cmax` are never read, so a recycled buffer needs
        // no clearing.
        let mut work = self
            .pool
            .lock()
            .expect("fft pool")
            .pop()
            .unwrap_or_else(|| vec![zero; n * n * nh]);

        // First axis.
        let ptr = SyncPtr(work.as_mut_ptr());
        (0..n).into_par_iter().for_each_init(
            || self.line_buffers(cmax + 1),
            |(lines, scratch), b| {
                let p = ptr.get();
                if !self.in_band(b, band) {
                    // SAFETY: each task writes only entries with its own `b`.
                    unsafe {
                        for a in 0..n {
                            let base = (a * n + b) * nh;
                            for c in 0..=cmax {
                                *p.add(base + c) = zero;
                            }
                        }
                    }
                    return;
                }
                for a in 0..n {
                    let base = (a * n + b) * nh;
                    let keep = self.in_band(a, band);
                    for c in 0..=cmax {
                        lines[c * n + a] = if keep { map(a, b, c, input[base + c]) } else { zero };
                    }
                }
                self.inv.process_with_scratch(lines, scratch);
                // SAFETY: each task writes only entries with its own `b`.
                unsafe { scatter(lines.as_ptr(), n * nh, n, cmax + 1, p.add(b * nh), 1.0) };
            },
        );

        // Middle axis.
        work.par_chunks_mut(n * nh).for_each_init(
            || self.line_buffers(cmax + 1),
            |(lines, scratch), plane| {
                // SAFETY: as in the forward middle pass.
                unsafe {
                    gather(plane.as_ptr(), nh, n, cmax + 1, lines.as_mut_ptr());
                    self.inv.process_with_scratch(lines, scratch);
                    scatter(lines.as_ptr(), nh, n, cmax + 1, plane.as_mut_ptr(), 1.0);
                }
            },
        );

        // Last axis: complex-to-real rows.
        out.par_chunks_mut(chunk)
            .zip(work.par_chunks(nh))
            .enumerate()
            .for_each_init(
                || (vec![zero; nh], vec![0.0; n], self.c2r.make_scratch_vec()),
                |(row, values, scratch), (r, (dst, src))| {
                    row[..=cmax].copy_from_slice(&src[..=cmax]);
                    row[cmax + 1..].iter_mut().for_each(|z| *z = zero);
                    row[0].im = 0.0;
                    row[nh - 1].im = 0.0;
                    self.c2r.process_with_scratch(row, values, scratch).expect("c2r length");
                    sink(r, dst, values);
                },
            );
        self.pool.lock().expect("fft pool").push(work);
    }

    fn line_buffers(&self, count: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let scratch_len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        (vec![zero; count * self.n], vec![zero; scratch_len])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_forward(n: usize, u: &[f64]) -> Vec<Complex64> {
        let nh = n / 2 + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * nh];
        let g = WaveGrid::new(n).unwrap();
        for (idx, o) in out.iter_mut().enumerate() {
            let m = g.modes_of(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        let phase =
                            -2.0 * PI * (m[0] as f64 * i1 as f64 + m[1] as f64 * i2 as f64 + m[2] as f64 * i3 as f64)
                                / n as f64;
                        acc += u[(i1 * n + i2) * n + i3] * Complex64::from_polar(1.0, phase);
                    }
                }
            }
            *o = acc / (n * n * n) as f64;
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let u: Vec<f64> = (0..n * n * n).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let fft = Fft3::new(n);
        let mut out = vec![Complex64::new(0.0, 0.0); n * n * (n / 2 + 1)];
        fft.forward(&u, &mut out, None);
        let naive = naive_forward(n, &u);
        for (a, b) in out.iter().zip(&naive) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
        let mut back = vec![0.0; n * n * n];
        fft.inverse(&out, &mut back, None);
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_inverse_agrees_on_band_limited_input() {
        let n = 12;
        let g = WaveGrid::new(n).unwrap();
        let fft = Fft3::new(n);
        let mut spec = vec![Complex64::new(0.0, 0.0); g.spectral_len()];
        for (idx, s) in spec.iter_mut().enumerate() {
            if g.keep(idx) && idx % g.nh() != 0 {
                *s = Complex64::new((idx % 7) as f64, (idx % 5) as f64 - 2.0);
            }
        }
        let mut full = vec![0.0; g.physical_len()];
        let mut banded = vec![0.0; g.physical_len()];
        fft.inverse(&spec, &mut full, None);
        fft.inverse(&spec, &mut banded, Some(g.cutoff()));
        for (a, b) in full.iter().zip(&banded) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut f1 = vec![Complex64::new(0.0, 0.0); g.spectral_len()];
        let mut f2 = f1.clone();
        fft.forward(&full, &mut f1, None);
        fft.forward(&full, &mut f2, Some(g.cutoff()));
        for (idx, (a, b)) in f1.iter().zip(&f2).enumerate() {
            if g.keep(idx) {
                assert!((a - b).norm() < 1e-12);
            } else {
                assert_eq!(*b, Complex64::new(0.0, 0.0));
            }
        }
    }
}
