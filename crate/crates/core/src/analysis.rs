//! Scaling-law analysis of derivative ratios ahead of the enstrophy peak.
//!
//! With `beta = T* - t`, each ratio series is fitted to `R^k ~ beta^gamma_k`
//! by a no-intercept least-squares fit in log-log space, and the exponents to
//! `gamma_k ~ k^-a` the same way. The fitted `a` then feeds the comparison of
//! the sparseness scale `r_2k` with the analyticity scale `rho_2k`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

fn analysis_err(msg: impl Into<String>) -> Error {
    Error::Analysis(msg.into())
}

/// Location of the enstrophy maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEstimate {
    pub t_star: f64,
    /// Index of the discrete maximum.
    pub index: usize,
    /// The maximum sits on the first or last sample.
    pub at_boundary: bool,
}

/// Discrete argmax refined by the vertex of the parabola through it and its
/// two neighbors. At an endpoint the discrete argmax is returned as is.
pub fn detect_peak(t: &[f64], values: &[f64]) -> Result<PeakEstimate> {
    if t.len() != values.len() {
        return Err(analysis_err("time and value series differ in length"));
    }
    if t.len() < 3 {
        return Err(analysis_err(format!(
            "peak detection needs at least 3 samples, got {}",
            t.len()
        )));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(analysis_err("sample times must be strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(analysis_err("non-finite value in series"));
    }
    let mut index = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[index] {
            index = i;
        }
    }
    if values.iter().all(|v| *v == values[0]) {
        return Err(analysis_err("constant series has no peak"));
    }
    if index == 0 || index == t.len() - 1 {
        return Ok(PeakEstimate {
            t_star: t[index],
            index,
            at_boundary: true,
        });
    }
    let (t0, t1, t2) = (t[index - 1], t[index], t[index + 1]);
    let (y0, y1, y2) = (values[index - 1], values[index], values[index + 1]);
    let d0 = (y1 - y0) / (t1 - t0);
    let d1 = (y2 - y1) / (t2 - t1);
    let curv = (d1 - d0) / (t2 - t0);
    let t_star = if curv < 0.0 {
        let v = 0.5 * (t0 + t1) - d0 / (2.0 * curv);
        v.clamp(t0, t2)
    } else {
        t1
    };
    Ok(PeakEstimate {
        t_star,
        index,
        at_boundary: false,
    })
}

/// Whether a fit carries a constant term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    #[default]
    NoIntercept,
    Intercept,
}

/// Time series of `ln R^k` for several `k`, with the run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub t: Vec<f64>,
    pub log_ratios: BTreeMap<u32, Vec<f64>>,
    pub n: Option<usize>,
    pub nu: Option<f64>,
    pub dt: Option<f64>,
}

impl RatioSeries {
    pub fn from_records(records: &[DiagnosticsRecord]) -> Result<Self> {
        let t: Vec<f64> = records.iter().map(|r| r.t).collect();
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(analysis_err("sample times must be strictly increasing"));
        }
        let mut log_ratios = BTreeMap::<u32, Vec<f64>>::new();
        if let Some(first) = records.first() {
            for &k in first.log_ratios.keys() {
                let col = records
                    .iter()
                    .map(|r| {
                        r.log_ratios
                            .get(&k)
                            .copied()
                            .ok_or_else(|| analysis_err(format!("ratio k={k} missing at t={}", r.t)))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                log_ratios.insert(k, col);
            }
        }
        Ok(Self {
            t,
            log_ratios,
            n: None,
            nu: None,
            dt: None,
        })
    }

    pub fn k_values(&self) -> Vec<u32> {
        self.log_ratios.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    pub k: u32,
    pub gamma: f64,
    /// Zero unless fitted with [`FitMode::Intercept`].
    pub intercept: f64,
    /// RMS of `ln R_i - gamma ln beta_i - intercept`.
    pub residual_norm: f64,
    /// `[T* - 1, T* - beta_min]`.
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum number of samples inside the fitting window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// `sum x_i y_i / sum x_i^2`, the least-squares slope through the origin.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// Ordinary least squares `y = slope x + intercept`.
fn slope_with_intercept(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit `ln R^k = gamma_k ln beta` over samples with `beta in [beta_min, 1]`.
pub fn fit_gamma(series: &RatioSeries, k: u32, t_star: f64, beta_min: f64) -> Result<GammaFit> {
    fit_gamma_with(series, k, t_star, beta_min, FitMode::NoIntercept)
}

pub fn fit_gamma_with(series: &RatioSeries, k: u32, t_star: f64, beta_min: f64, mode: FitMode) -> Result<GammaFit> {
    if !(beta_min > 0.0 && beta_min < 1.0) {
        return Err(analysis_err(format!("beta_min must lie in (0, 1), got {beta_min}")));
    }
    if !t_star.is_finite() {
        return Err(analysis_err("T* must be finite"));
    }
    let ratios = series
        .log_ratios
        .get(&k)
        .ok_or_else(|| analysis_err(format!("no ratio series for k={k}")))?;
    let window = (t_star - 1.0, t_star - beta_min);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&t, &lr) in series.t.iter().zip(ratios) {
        let beta = t_star - t;
        if beta >= beta_min && beta <= 1.0 {
            if !lr.is_finite() {
                return Err(analysis_err(format!("non-finite ln R^{k} at t={t}")));
            }
            x.push(beta.ln());
            y.push(lr);
        }
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(analysis_err(format!(
            "window [{:.6}, {:.6}] holds {} samples for k={k}, need at least {MIN_FIT_SAMPLES}",
            window.0,
            window.1,
            x.len()
        )));
    }
    let (gamma, intercept) = match mode {
        FitMode::NoIntercept => (slope_through_origin(&x, &y), 0.0),
        FitMode::Intercept => slope_with_intercept(&x, &y),
    };
    let residual_norm = rms(x.iter().zip(&y).map(|(a, b)| b - gamma * a - intercept));
    Ok(GammaFit {
        k,
        gamma,
        intercept,
        residual_norm,
        window,
        samples: x.len(),
    })
}

fn rms(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len() as f64;
    (it.map(|r| r * r).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    pub a: f64,
    pub intercept: f64,
    /// `gamma_k - k^-a` per entry of `k_set`.
    pub residuals: Vec<f64>,
    pub k_set: Vec<u32>,
}

/// Fit `gamma_k = k^-a` by a no-intercept log-log fit. `k = 1` carries no
/// information (`ln 1 = 0`) and is dropped.
pub fn fit_alpha(gammas: &[(u32, f64)]) -> Result<AlphaFit> {
    fit_alpha_with(gammas, FitMode::NoIntercept)
}

pub fn fit_alpha_with(gammas: &[(u32, f64)], mode: FitMode) -> Result<AlphaFit> {
    if let Some((k, g)) = gammas.iter().find(|(_, g)| !(*g > 0.0) || !g.is_finite()) {
        return Err(analysis_err(format!(
            "non-power-law ratio data: gamma_{k} = {g} is not positive"
        )));
    }
    let used: Vec<(u32, f64)> = gammas.iter().copied().filter(|(k, _)| *k >= 2).collect();
    let need = match mode {
        FitMode::NoIntercept => 1,
        FitMode::Intercept => 2,
    };
    if used.len() < need {
        return Err(analysis_err(format!(
            "exponent fit needs at least {need} orders k >= 2, got {}",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|(k, _)| (*k as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|(_, g)| g.ln()).collect();
    let (slope, intercept) = match mode {
        FitMode::NoIntercept => (slope_through_origin(&x, &y), 0.0),
        FitMode::Intercept => slope_with_intercept(&x, &y),
    };
    let a = -slope;
    let residuals = used
        .iter()
        .map(|(k, g)| g - (intercept - a * (*k as f64).ln()).exp())
        .collect();
    Ok(AlphaFit {
        a,
        intercept,
        residuals,
        k_set: used.iter().map(|(k, _)| *k).collect(),
    })
}

/// `4 (k + 1) / k^alpha`.
pub fn epsilon_2k(k: u32, alpha: f64) -> f64 {
    let kf = k as f64;
    4.0 * (kf + 1.0) / kf.powf(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleReport {
    pub k: u32,
    pub alpha: f64,
    pub epsilon_2k: f64,
    pub log_norm_2k: f64,
    /// `ln r_2k = -ln||D^2k u|| / (2k + 3/2)`.
    pub log_r: f64,
    /// `ln rho_2k = -ln||D^2k u|| / ((1 + eps) (2k + 1))`.
    pub log_rho: f64,
    /// `rho_2k > r_2k`.
    pub dominant: bool,
    /// `ln||D^2k u|| <= 0`: the exponent comparison reverses, so dominance
    /// does not follow from `eps` alone.
    pub reversed_regime: bool,
}

/// Compare the two scales at level `2k` using `eps = epsilon_2k(k, alpha)`.
pub fn scale_comparison(log_norm_2k: f64, k: u32, alpha: f64) -> ScaleReport {
    scale_comparison_with_epsilon(log_norm_2k, k, alpha, epsilon_2k(k, alpha))
}

/// As [`scale_comparison`] with an explicit `eps`.
pub fn scale_comparison_with_epsilon(log_norm_2k: f64, k: u32, alpha: f64, eps: f64) -> ScaleReport {
    let two_k1 = 2.0 * k as f64 + 1.0;
    let sparse_exp = two_k1 + 0.5;
    let analytic_exp = (1.0 + eps) * two_k1;
    let log_r = -log_norm_2k / sparse_exp;
    let log_rho = -log_norm_2k / analytic_exp;
    // For L > 0, -L/p > -L/q iff p > q; the comparison flips for L < 0.
    // Comparing exponents keeps the verdict exact when L is huge or tiny.
    let wider = eps * two_k1 > 0.5;
    let narrower = eps * two_k1 < 0.5;
    let dominant = if log_norm_2k > 0.0 {
        wider
    } else if log_norm_2k < 0.0 {
        narrower
    } else {
        false
    };
    ScaleReport {
        k,
        alpha,
        epsilon_2k: eps,
        log_norm_2k,
        log_r,
        log_rho,
        dominant,
        reversed_regime: !(log_norm_2k > 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Orders to fit; all recorded orders when `None`.
    pub k_set: Option<Vec<u32>>,
    /// Skips peak detection when set.
    pub t_star: Option<f64>,
    /// Defaults to `dt`.
    pub beta_min: Option<f64>,
    /// Solver time step, used for `beta_min` and the `T* +- 2 dt` band.
    /// Falls back to the smallest sample spacing.
    pub dt: Option<f64>,
    pub mode: FitMode,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            k_set: None,
            t_star: None,
            beta_min: None,
            dt: None,
            mode: FitMode::NoIntercept,
        }
    }
}

/// `gamma_k` refitted with `T*` moved by `-2 dt` and `+2 dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBand {
    pub k: u32,
    pub minus: Option<f64>,
    pub plus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub t_star: f64,
    /// `None` when `T*` was supplied externally.
    pub peak: Option<PeakEstimate>,
    pub beta_min: f64,
    pub dt: f64,
    pub gamma: Vec<GammaFit>,
    pub band: Vec<GammaBand>,
    pub alpha: std::result::Result<AlphaFit, String>,
    /// Scale comparison at the last sample before `T*`, using the fitted `a`.
    pub scales: Vec<ScaleReport>,
    pub scale_time: Option<f64>,
    /// Results are advisory only (peak on the series boundary).
    pub advisory: bool,
    pub notes: Vec<String>,
}

/// Peak detection, `gamma_k` fits, the exponent fit and the scale comparison.
pub fn analysis_pipeline(records: &[DiagnosticsRecord], opts: &PipelineOptions) -> Result<AnalysisReport> {
    let mut series = RatioSeries::from_records(records)?;
    series.dt = opts.dt;
    let mut notes = Vec::new();

    let k_set = match &opts.k_set {
        Some(k) => k.clone(),
        None => series.k_values(),
    };
    if k_set.is_empty() {
        return Err(analysis_err("k_list empty: no ratio series to fit"));
    }
    for k in &k_set {
        if !series.log_ratios.contains_key(k) {
            return Err(analysis_err(format!("k={k} not present in the records")));
        }
    }

    let dt = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(analysis_err(format!("dt must be positive, got {dt}"))),
        None => {
            let spacing = series.t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            if !spacing.is_finite() {
                return Err(analysis_err("need at least two samples"));
            }
            notes.push(format!("dt not given, using smallest sample spacing {spacing:e}"));
            spacing
        }
    };
    let beta_min = opts.beta_min.unwrap_or(dt);

    let (t_star, peak) = match opts.t_star {
        Some(t) => {
            notes.push(format!("T* = {t} supplied externally, peak detection skipped"));
            (t, None)
        }
        None => {
            let ens: Vec<f64> = records.iter().map(|r| r.enstrophy).collect();
            let p = detect_peak(&series.t, &ens)?;
            (p.t_star, Some(p))
        }
    };
    let advisory = peak.is_some_and(|p| p.at_boundary);
    if advisory {
        notes.push("peak at boundary: enstrophy maximum on the first or last sample, results advisory".into());
    }

    let gamma = k_set
        .par_iter()
        .map(|&k| fit_gamma_with(&series, k, t_star, beta_min, opts.mode))
        .collect::<Result<Vec<_>>>()?;
    let band = k_set
        .par_iter()
        .map(|&k| {
            let shifted = |s: f64| {
                fit_gamma_with(&series, k, t_star + s * dt, beta_min, opts.mode)
                    .ok()
                    .map(|f| f.gamma)
            };
            GammaBand {
                k,
                minus: shifted(-2.0),
                plus: shifted(2.0),
            }
        })
        .collect();

    let pairs: Vec<(u32, f64)> = gamma.iter().map(|g| (g.k, g.gamma)).collect();
    let alpha = fit_alpha_with(&pairs, opts.mode).map_err(|e| e.to_string());

    let last = records.iter().rposition(|r| r.t < t_star);
    let (scales, scale_time) = match (&alpha, last) {
        (Ok(fit), Some(i)) => {
            let rec = &records[i];
            let scales = k_set
                .iter()
                .filter_map(|&k| rec.log_norms.get(&(2 * k)).map(|&l| scale_comparison(l, k, fit.a)))
                .collect::<Vec<_>>();
            if scales.len() < k_set.len() {
                notes.push("some log_norm_2k columns missing, scale table incomplete".into());
            }
            (scales, Some(rec.t))
        }
        (Err(e), _) => {
            notes.push(format!("scale comparison skipped: {e}"));
            (Vec::new(), None)
        }
        (_, None) => {
            notes.push("no sample before T*, scale comparison skipped".into());
            (Vec::new(), None)
        }
    };

    Ok(AnalysisReport {
        t_star,
        peak,
        beta_min,
        dt,
        gamma,
        band,
        alpha,
        scales,
        scale_time,
        advisory,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series_from(t: Vec<f64>, k: u32, lr: Vec<f64>) -> RatioSeries {
        RatioSeries {
            t,
            log_ratios: BTreeMap::from([(k, lr)]),
            n: None,
            nu: None,
            dt: None,
        }
    }

    #[test]
    fn symmetric_vertex() {
        let t = [4.9, 5.0, 5.1];
        let e: Vec<f64> = t.iter().map(|t| -(t - 5.0) * (t - 5.0)).collect();
        let p = detect_peak(&t, &e).unwrap();
        assert!((p.t_star - 5.0).abs() < 1e-14);
        assert!(!p.at_boundary);
    }

    #[test]
    fn parabola_vertex_between_samples() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let e: Vec<f64> = t.iter().map(|t| 3.0 - 2.0 * (t - 2.437) * (t - 2.437)).collect();
        let p = detect_peak(&t, &e).unwrap();
        assert!((p.t_star - 2.437).abs() < 1e-12, "{}", p.t_star);
    }

    #[test]
    fn monotone_series_peaks_at_boundary() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let p = detect_peak(&t, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.t_star, 3.0);
        assert!(p.at_boundary);
    }

    #[test]
    fn peak_errors() {
        assert!(detect_peak(&[], &[]).is_err());
        assert!(detect_peak(&[0.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(detect_peak(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(detect_peak(&[0.0, 2.0, 1.0], &[1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn normal_equation_hand_value() {
        let x = [-1.0, -2.0];
        let y = [-0.5, -1.0];
        assert_eq!(slope_through_origin(&x, &y), 0.5);
    }

    #[test]
    fn constant_ratio_gives_zero_gamma() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let s = series_from(t.clone(), 5, vec![0.0; t.len()]);
        let f = fit_gamma(&s, 5, 1.5, 0.01).unwrap();
        assert_eq!(f.gamma, 0.0);
        assert_eq!(f.residual_norm, 0.0);
        assert_eq!(f.window, (0.5, 1.49));
    }

    #[test]
    fn generator_recovery_log_spaced() {
        let k = 5;
        let g = 5f64.powf(-0.89);
        let t_star = 10.0;
        let betas: Vec<f64> = (0..1000).map(|i| (-6.0 + 6.0 * i as f64 / 999.0).exp()).collect();
        let mut t: Vec<f64> = betas.iter().map(|b| t_star - b).collect();
        t.reverse();
        let lr: Vec<f64> = t.iter().map(|t| g * (t_star - t).ln()).collect();
        let f = fit_gamma(&series_from(t, k, lr), k, t_star, 1e-3).unwrap();
        assert!((f.gamma - g).abs() < 1e-10);
        assert!(f.residual_norm <= 1e-12);
    }

    #[test]
    fn window_too_small() {
        let t: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let s = series_from(t.clone(), 5, vec![0.1; t.len()]);
        let err = fit_gamma(&s, 5, 3.0, 0.01).unwrap_err();
        assert!(err.to_string().contains("need at least 10"));
        assert!(fit_gamma(&s, 5, 3.0, 0.0).is_err());
        assert!(fit_gamma(&s, 7, 3.0, 0.01).is_err());
    }

    #[test]
    fn intercept_mode_recovers_offset() {
        let t: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let lr: Vec<f64> = t.iter().map(|t| 0.7 + 0.3 * (1.2 - t).ln()).collect();
        let f = fit_gamma_with(&series_from(t, 3, lr), 3, 1.2, 0.01, FitMode::Intercept).unwrap();
        assert!((f.gamma - 0.3).abs() < 1e-12);
        assert!((f.intercept - 0.7).abs() < 1e-12);
    }

    #[test]
    fn alpha_exact_models() {
        let f = fit_alpha(&[(2, 0.5), (4, 0.25), (8, 0.125)]).unwrap();
        assert!((f.a - 1.0).abs() < 1e-15);
        assert_eq!(f.residuals.len(), 3);

        let g: Vec<(u32, f64)> = (1..=20).map(|j| (5 * j, (5.0 * j as f64).powf(-0.89))).collect();
        let f = fit_alpha(&g).unwrap();
        assert!((f.a - 0.89).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));

        let f = fit_alpha(&[(10, 0.2)]).unwrap();
        assert!((f.a - (-(0.2f64.ln()) / 10f64.ln())).abs() < 1e-15);
        assert!((f.a - 0.699).abs() < 1e-3);
    }

    #[test]
    fn alpha_drops_k1_and_rejects_nonpositive() {
        let f = fit_alpha(&[(1, 0.9), (2, 0.5), (4, 0.25)]).unwrap();
        assert_eq!(f.k_set, vec![2, 4]);
        assert_eq!(f.residuals.len(), 2);
        let e = fit_alpha(&[(2, 0.5), (4, -0.1)]).unwrap_err();
        assert!(e.to_string().contains("non-power-law"));
        assert!(fit_alpha(&[(1, 0.5)]).is_err());
    }

    #[test]
    fn epsilon_values() {
        assert_eq!(epsilon_2k(1, 1.0), 8.0);
        assert!((epsilon_2k(10, 0.89) - 44.0 / 10f64.powf(0.89)).abs() < 1e-15);
        assert!((epsilon_2k(10, 0.89) - 5.669).abs() < 1e-3);
    }

    #[test]
    fn epsilon_decreasing_for_unit_alpha() {
        let mut prev = epsilon_2k(1, 1.0);
        for k in 2..=1_000_000u32 {
            let e = epsilon_2k(k, 1.0);
            assert!(e <= prev && e >= 4.0, "k={k}");
            prev = e;
        }
    }

    #[test]
    fn scale_branches() {
        let r = scale_comparison_with_epsilon(3.0, 4, 1.0, 0.0);
        assert!(r.log_rho < r.log_r && !r.dominant);
        let r = scale_comparison(3.0, 4, 1.0);
        assert!(r.epsilon_2k >= 4.0 && r.dominant && r.log_rho > r.log_r);
        assert!(!r.reversed_regime);
        let r = scale_comparison(-3.0, 4, 1.0);
        assert!(r.reversed_regime && !r.dominant);
        let r = scale_comparison(0.0, 4, 1.0);
        assert!(r.reversed_regime && !r.dominant);
    }

    #[test]
    fn pipeline_requires_ratios() {
        let recs: Vec<DiagnosticsRecord> = (0..20)
            .map(|i| DiagnosticsRecord {
                t: i as f64 * 0.1,
                energy: 1.0,
                enstrophy: -((i as f64 - 10.0).powi(2)),
                log_norms: BTreeMap::new(),
                log_ratios: BTreeMap::new(),
            })
            .collect();
        let e = analysis_pipeline(&recs, &PipelineOptions::default()).unwrap_err();
        assert!(e.to_string().contains("k_list empty"));
    }

    proptest! {
        #[test]
        fn gamma_recovery(gamma in -5.0f64..5.0, seed in 0u64..1000) {
            let t_star = 7.0;
            let n = 10 + (seed % 200) as usize;
            let mut betas: Vec<f64> = (0..n)
                .map(|i| 0.001 + 0.999 * (((i as u64 * 7919 + seed) % 1000) as f64 + 0.5) / 1000.0)
                .collect();
            betas.sort_by(|a, b| b.partial_cmp(a).unwrap());
            betas.dedup();
            prop_assume!(betas.len() >= MIN_FIT_SAMPLES);
            let t: Vec<f64> = betas.iter().map(|b| t_star - b).collect();
            let lr: Vec<f64> = t.iter().map(|t| gamma * (t_star - t).ln()).collect();
            let f = fit_gamma(&series_from(t, 2, lr), 2, t_star, 1e-4).unwrap();
            prop_assert!((f.gamma - gamma).abs() < 1e-10);
            prop_assert!(f.residual_norm <= 1e-12);
        }

        #[test]
        fn alpha_recovery(a in 0.1f64..2.0) {
            let g: Vec<(u32, f64)> = (1..=20).map(|j| (5 * j, (5.0 * j as f64).powf(-a))).collect();
            prop_assert!((fit_alpha(&g).unwrap().a - a).abs() < 1e-10);
        }

        #[test]
        fn epsilon_bounded_below(alpha in 0.0f64..=1.0, k in 1u32..1_000_000) {
            prop_assert!(epsilon_2k(k, alpha) >= 4.0);
        }

        #[test]
        fn epsilon_turns_up_past_stationary_point(alpha in 0.05f64..0.95, k in 1u32..100_000) {
            // d/dk (k+1) k^-alpha has the sign of (1 - alpha) k - alpha.
            let kf = k as f64;
            let (e0, e1) = (epsilon_2k(k, alpha), epsilon_2k(k + 1, alpha));
            if (1.0 - alpha) * kf > alpha + 1e-9 {
                prop_assert!(e1 > e0);
            } else if (1.0 - alpha) * (kf + 1.0) < alpha - 1e-9 {
                prop_assert!(e1 < e0);
            }
        }

        #[test]
        fn dominance_threshold(k in 1u32..10_000, eps in 0.0f64..10.0, l in 1e-6f64..1e6) {
            let threshold = 1.0 / (2.0 * (2.0 * k as f64 + 1.0));
            prop_assume!((eps - threshold).abs() > 1e-12 * threshold);
            let r = scale_comparison_with_epsilon(l, k, 1.0, eps);
            prop_assert_eq!(r.dominant, eps > threshold);
            prop_assert_eq!(r.dominant, r.log_rho > r.log_r);
        }
    }
}
