//! Integer mode lattice for the periodic unit cube in half-spectrum layout.
//!
//! Spectral arrays are stored row-major as `[a][b][c]` with `a, b in 0..N`
//! and `c in 0..=N/2`. Axis index `a` maps to the signed mode
//! `a` for `a <= N/2` and `a - N` otherwise; the last axis only stores
//! non-negative modes, the negative ones being implied by Hermitian symmetry.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// How the dealias mask is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dealias {
    /// Zero every mode with some `|m_i| > (N-1)/3`.
    TwoThirds,
    /// Keep every mode except the Nyquist planes.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    n: usize,
    nh: usize,
    dealias: Dealias,
    cutoff: usize,
    /// Signed mode per full axis index.
    modes: Vec<i64>,
    /// `2 pi m` per full axis index.
    wavenumbers: Vec<f64>,
}

impl WaveGrid {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, Dealias::TwoThirds)
    }

    pub fn with_dealias(n: usize, dealias: Dealias) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let modes: Vec<i64> = (0..n)
            .map(|a| if a <= n / 2 { a as i64 } else { a as i64 - n as i64 })
            .collect();
        let wavenumbers = modes.iter().map(|&m: &i64| 2.0 * PI * m as f64).collect();
        let cutoff = match dealias {
            // Largest c with 3c < N, so products of kept modes never alias
            // back into the band (equals floor(N/3) unless 3 divides N).
            Dealias::TwoThirds => (n - 1) / 3,
            Dealias::None => n / 2 - 1,
        };
        Ok(Self {
            n,
            nh: n / 2 + 1,
            dealias,
            cutoff,
            modes,
            wavenumbers,
        })
    }

    /// Grid points per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored length of the last spectral axis, `N/2 + 1`.
    #[inline]
    pub fn nh(&self) -> usize {
        self.nh
    }

    pub fn dealias(&self) -> Dealias {
        self.dealias
    }

    /// Largest `|m_i|` kept by the dealias mask.
    #[inline]
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of stored complex coefficients per component.
    #[inline]
    pub fn spectral_len(&self) -> usize {
        self.n * self.n * self.nh
    }

    /// Number of real samples per component.
    #[inline]
    pub fn physical_len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn mode(&self, axis_index: usize) -> i64 {
        self.modes[axis_index]
    }

    /// Physical wavenumber `2 pi m` for a full axis index (first two axes,
    /// or the last axis where the index equals the mode).
    #[inline]
    pub fn wavenumber(&self, axis_index: usize) -> f64 {
        self.wavenumbers[axis_index]
    }

    /// Whether a full axis index lies inside the dealias band.
    #[inline]
    pub fn axis_kept(&self, axis_index: usize) -> bool {
        axis_index <= self.cutoff || axis_index >= self.n - self.cutoff
    }

    /// Signed modes for a flat spectral index.
    #[inline]
    pub fn modes_of(&self, idx: usize) -> [i64; 3] {
        let c = idx % self.nh;
        let ab = idx / self.nh;
        [self.modes[ab / self.n], self.modes[ab % self.n], c as i64]
    }

    /// Flat spectral index of a signed mode, if it is stored directly
    /// (i.e. `m3 >= 0`).
    pub fn index_of(&self, m: [i64; 3]) -> Option<usize> {
        let n = self.n as i64;
        let half = n / 2;
        let fits = |x: i64| x > -half && x <= half;
        if !(fits(m[0]) && fits(m[1]) && (0..=half).contains(&m[2])) {
            return None;
        }
        let a = m[0].rem_euclid(n) as usize;
        let b = m[1].rem_euclid(n) as usize;
        Some((a * self.n + b) * self.nh + m[2] as usize)
    }

    /// Physical wavevector `2 pi m`.
    #[inline]
    pub fn k_phys(&self, idx: usize) -> [f64; 3] {
        let m = self.modes_of(idx);
        [2.0 * PI * m[0] as f64, 2.0 * PI * m[1] as f64, 2.0 * PI * m[2] as f64]
    }

    #[inline]
    pub fn mode_norm_sq(&self, idx: usize) -> i64 {
        let m = self.modes_of(idx);
        m[0] * m[0] + m[1] * m[1] + m[2] * m[2]
    }

    /// Dealias mask for a flat spectral index. The Nyquist planes are
    /// always dropped since their conjugate partner is not representable.
    #[inline]
    pub fn keep(&self, idx: usize) -> bool {
        let m = self.modes_of(idx);
        let c = self.cutoff as i64;
        m[0].abs() <= c && m[1].abs() <= c && m[2] <= c
    }

    /// Largest resolved mode magnitude after dealiasing.
    pub fn m_max(&self) -> f64 {
        (3.0 * (self.cutoff * self.cutoff) as f64).sqrt()
    }

    /// Weight of a stored coefficient in sums over the full implied
    /// spectrum: interior `c` planes stand for themselves and their
    /// conjugate mirror.
    #[inline]
    pub fn hermitian_weight(&self, idx: usize) -> f64 {
        let c = idx % self.nh;
        if c == 0 || c == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Whether a stored mode is its own partner under `m -> -m` (up to aliasing),
    /// which forces its coefficient to be real.
    pub fn is_self_conjugate(&self, idx: usize) -> bool {
        let c = idx % self.nh;
        let ab = idx / self.nh;
        let (a, b) = (ab / self.n, ab % self.n);
        let half = self.n / 2;
        (c == 0 || c == half) && (a == 0 || a == half) && (b == 0 || b == half)
    }

    /// Index of the conjugate partner `-m` within a `c = 0` or `c = N/2` plane.
    pub fn plane_mirror(&self, idx: usize) -> usize {
        let c = idx % self.nh;
        let ab = idx / self.nh;
        let (a, b) = (ab / self.n, ab % self.n);
        let ma = (self.n - a) % self.n;
        let mb = (self.n - b) % self.n;
        (ma * self.n + mb) * self.nh + c
    }
}
