//! Files produced and consumed by the command-line tool.

pub mod csv;
pub mod manifest;
pub mod plot;

use std::path::{Path, PathBuf};

use crate::analysis::AnalysisReport;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use plot::{Plot, Scale, Series};

/// Orders shown in the ratio plot: at most six, spread over the recorded set.
fn ratio_orders(records: &[DiagnosticsRecord]) -> Vec<u32> {
    let all: Vec<u32> = records
        .first()
        .map(|r| r.log_ratios.keys().copied().collect())
        .unwrap_or_default();
    if all.len() <= 6 {
        return all;
    }
    let last = all.len() - 1;
    let mut picked: Vec<u32> = (0..6).map(|i| all[i * last / 5]).collect();
    picked.dedup();
    picked
}

/// Build the five analysis figures as `(file name, svg)` pairs.
pub fn figures(records: &[DiagnosticsRecord], report: &AnalysisReport) -> Vec<(&'static str, String)> {
    let marker = vec![(report.t_star, format!("T* = {:.3}", report.t_star))];
    let series_of =
        |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> Vec<(f64, f64)> { records.iter().map(|r| (r.t, f(r))).collect() };

    let mut enstrophy = Plot::new("Enstrophy vs. time", "t", "enstrophy");
    enstrophy
        .series
        .push(Series::line("enstrophy", series_of(&|r| r.enstrophy)));
    enstrophy.x_markers = marker.clone();

    let mut energy = Plot::new("Energy vs. time", "t", "energy");
    energy.series.push(Series::line("energy", series_of(&|r| r.energy)));
    energy.x_markers = marker.clone();

    let mut ratios = Plot::new("Derivative ratios vs. time", "t", "ln R^k");
    for k in ratio_orders(records) {
        ratios
            .series
            .push(Series::line(format!("k = {k}"), series_of(&|r| r.log_ratios[&k])));
    }
    ratios.x_markers = marker;

    let mut gamma = Plot::new("Least-squares estimate of gamma_k", "k", "gamma_k");
    gamma.x_scale = Scale::Log;
    gamma.y_scale = Scale::Log;
    gamma.series.push(Series::points(
        "gamma_k",
        report.gamma.iter().map(|g| (g.k as f64, g.gamma)).collect(),
    ));
    let mut residuals = Plot::new("Residuals of the power-law fit", "k", "gamma_k - k^-a");
    if let Ok(fit) = &report.alpha {
        let (k0, k1) = (fit.k_set.first().copied(), fit.k_set.last().copied());
        if let (Some(k0), Some(k1)) = (k0, k1) {
            let curve = (0..=100)
                .map(|i| {
                    let k = k0 as f64 * (k1 as f64 / k0 as f64).powf(i as f64 / 100.0);
                    (k, (fit.intercept - fit.a * k.ln()).exp())
                })
                .collect();
            gamma.series.push(Series::line(format!("k^-{:.4}", fit.a), curve));
        }
        residuals.series.push(Series::points(
            "residual",
            fit.k_set
                .iter()
                .zip(&fit.residuals)
                .map(|(k, r)| (*k as f64, *r))
                .collect(),
        ));
    }
    for (label, pick) in [("T* - 2dt", 0), ("T* + 2dt", 1)] {
        let pts = report
            .band
            .iter()
            .filter_map(|b| {
                let g = if pick == 0 { b.minus } else { b.plus };
                g.map(|g| (b.k as f64, g))
            })
            .collect();
        gamma.series.push(Series::points(label, pts));
    }

    vec![
        ("enstrophy.svg", enstrophy.render()),
        ("energy.svg", energy.render()),
        ("ratios.svg", ratios.render()),
        ("gamma_fit.svg", gamma.render()),
        ("residuals.svg", residuals.render()),
    ]
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))?;
    Ok(path.to_path_buf())
}
