//! Scalar diagnostics of one velocity snapshot: energy, enstrophy and the
//! log-domain derivative ratios `ln R^k`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{Spectral, SpectralVectorField, WaveGrid};

/// One time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    /// Derivative order -> `ln ||D^n u||_inf`.
    pub log_norms: BTreeMap<u32, f64>,
    /// `k` -> `ln R^k`.
    pub log_ratios: BTreeMap<u32, f64>,
}

impl DiagnosticsRecord {
    /// Orders whose norms are needed for the ratios of `k_list`: `{0} u k u 2k`.
    pub fn required_orders(k_list: &[u32]) -> Vec<u32> {
        if k_list.is_empty() {
            return Vec::new();
        }
        let mut orders: Vec<u32> = std::iter::once(0)
            .chain(k_list.iter().copied())
            .chain(k_list.iter().map(|k| 2 * k))
            .collect();
        orders.sort_unstable();
        orders.dedup();
        orders
    }
}

/// Sum `f(idx, coefficient triple)` over the full implied spectrum. Partial
/// sums are taken per plane and combined in a fixed order so the result does
/// not depend on thread scheduling.
fn spectral_sum<F>(s: &SpectralVectorField, f: F) -> f64
where
    F: Fn(&WaveGrid, usize, [Complex64; 3]) -> f64 + Sync,
{
    let grid = s.grid();
    let plane = grid.n() * grid.nh();
    let partial: Vec<f64> = (0..grid.n())
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            for idx in a * plane..(a + 1) * plane {
                let u = [s.component(0)[idx], s.component(1)[idx], s.component(2)[idx]];
                acc += grid.hermitian_weight(idx) * f(grid, idx, u);
            }
            acc
        })
        .collect();
    partial.iter().sum()
}

/// `E = 1/2 int |u|^2`, evaluated by Parseval.
pub fn energy(s: &SpectralVectorField) -> f64 {
    0.5 * spectral_sum(s, |_, _, u| u.iter().map(|z| z.norm_sqr()).sum())
}

/// `1/2 int |curl u|^2`, evaluated by Parseval on `i k x uhat`.
pub fn enstrophy(s: &SpectralVectorField) -> f64 {
    0.5 * spectral_sum(s, |grid, idx, u| {
        let k = grid.k_phys(idx);
        let w = [
            u[2] * k[1] - u[1] * k[2],
            u[0] * k[2] - u[2] * k[0],
            u[1] * k[0] - u[0] * k[1],
        ];
        w.iter().map(|z| z.norm_sqr()).sum()
    })
}

/// `ln R^k` from the two log norms.
#[inline]
pub fn log_ratio_from_norms(k: u32, log_norm_k: f64, log_norm_2k: f64) -> f64 {
    log_norm_k / (k as f64 + 1.0) - log_norm_2k / (2.0 * k as f64 + 1.0)
}

/// `ln R^k = ln||D^k u|| / (k+1) - ln||D^2k u|| / (2k+1)`.
pub fn ratio_log(spectral: &Spectral, s: &SpectralVectorField, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("ratio order k must be at least 1".into()));
    }
    let norms = spectral.log_sup_norms(s, &[k, 2 * k])?;
    Ok(log_ratio_from_norms(k, norms[0].value, norms[1].value))
}

/// Assemble a full record at time `t`. Each distinct order is evaluated once.
pub fn sample(spectral: &Spectral, t: f64, s: &SpectralVectorField, k_list: &[u32]) -> Result<DiagnosticsRecord> {
    let orders = DiagnosticsRecord::required_orders(k_list);
    let norms = spectral.log_sup_norms(s, &orders)?;
    let log_norms: BTreeMap<u32, f64> = norms.iter().map(|n| (n.order, n.value)).collect();
    let log_ratios = k_list
        .iter()
        .map(|&k| (k, log_ratio_from_norms(k, log_norms[&k], log_norms[&(2 * k)])))
        .collect();
    Ok(DiagnosticsRecord {
        t,
        energy: energy(s),
        enstrophy: enstrophy(s),
        log_norms,
        log_ratios,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::spectral::{taylor_green_init, PhysicalVectorField};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_field_has_no_energy() {
        let g = Arc::new(WaveGrid::new(8).unwrap());
        let z = SpectralVectorField::zeros(g);
        assert_eq!(energy(&z), 0.0);
        assert_eq!(enstrophy(&z), 0.0);
    }

    #[test]
    fn taylor_green_energy_and_enstrophy() {
        for n in [8, 16, 32] {
            let g = Arc::new(WaveGrid::new(n).unwrap());
            let u = taylor_green_init(g);
            assert!(rel(energy(&u), 0.125) < 1e-14);
            assert!(rel(enstrophy(&u), 1.5 * PI * PI) < 1e-14);
        }
    }

    #[test]
    fn shear_energy_and_constant_enstrophy() {
        let sp = Spectral::new(WaveGrid::new(16).unwrap());
        let amp = 1.7;
        let p = PhysicalVectorField::from_fn(16, |x| [amp * (2.0 * PI * x[2]).sin(), 0.0, 0.0]);
        let s = sp.forward_transform(&p).unwrap();
        assert!(rel(energy(&s), amp * amp / 4.0) < 1e-13);

        let c = PhysicalVectorField::from_fn(16, |_| [0.3, -1.0, 2.0]);
        let s = sp.forward_transform(&c).unwrap();
        assert_eq!(enstrophy(&s), 0.0);
    }

    #[test]
    fn required_orders_union() {
        assert_eq!(DiagnosticsRecord::required_orders(&[5]), vec![0, 5, 10]);
        assert_eq!(DiagnosticsRecord::required_orders(&[5, 10]), vec![0, 5, 10, 20]);
        assert!(DiagnosticsRecord::required_orders(&[]).is_empty());
    }

    #[test]
    fn sample_at_t0() {
        let sp = Spectral::new(WaveGrid::new(8).unwrap());
        let u = taylor_green_init(sp.grid().clone());
        let r = sample(&sp, 0.0, &u, &[5]).unwrap();
        assert!(rel(r.energy, 0.125) < 1e-14);
        assert!(rel(r.enstrophy, 1.5 * PI * PI) < 1e-14);
        assert_eq!(r.log_norms.keys().copied().collect::<Vec<_>>(), vec![0, 5, 10]);
        let expect = log_ratio_from_norms(5, r.log_norms[&5], r.log_norms[&10]);
        assert_eq!(r.log_ratios[&5].to_bits(), expect.to_bits());

        let r = sample(&sp, 0.0, &u, &[]).unwrap();
        assert!(r.log_norms.is_empty() && r.log_ratios.is_empty());
    }

    #[test]
    fn single_mode_ratio_closed_form() {
        let n = 32;
        let sp = Spectral::new(WaveGrid::new(n).unwrap());
        for q in [1i64, 3, 7] {
            let s = crate::spectral::tests::single_mode(sp.grid(), q, 1.0);
            let q = q as f64;
            for k in [1u32, 5, 20] {
                let kf = k as f64;
                let expect = -kf * (2.0 * PI * q).ln() / ((kf + 1.0) * (2.0 * kf + 1.0));
                let got = ratio_log(&sp, &s, k).unwrap();
                assert!((got - expect).abs() < 1e-10, "q={q} k={k}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn ratio_rescaling() {
        let sp = Spectral::new(WaveGrid::new(16).unwrap());
        let u = taylor_green_init(sp.grid().clone());
        let nl = sp.nonlinear_term(&u).unwrap();
        let mut v = u.clone();
        v.axpy(0.3, &nl);
        for c in [0.01, 3.0, 1e6] {
            let mut w = v.clone();
            w.scale(c);
            for k in [1u32, 5, 10] {
                let kf = k as f64;
                let shift = (1.0 / (kf + 1.0) - 1.0 / (2.0 * kf + 1.0)) * c.ln();
                let d = ratio_log(&sp, &w, k).unwrap() - ratio_log(&sp, &v, k).unwrap();
                assert!((d - shift).abs() < 1e-12, "c={c} k={k}");
            }
        }
    }

    #[test]
    fn zero_field_ratio_errors() {
        let sp = Spectral::new(WaveGrid::new(8).unwrap());
        assert!(matches!(ratio_log(&sp, &sp.zeros(), 3), Err(Error::ZeroField)));
    }
}
