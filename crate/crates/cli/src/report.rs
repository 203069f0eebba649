//! CSV records written by the experiments and the plots derived from them.
//!
//! Plots are always built from the row types, so a CSV read back from disk
//! reproduces the plot that was written next to it.

use std::fs::File;
use std::io;
use std::path::Path;

use hbf_core::harness::{ConvergenceRecord, RateRecord, SchemeKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::plot::{LinePlot, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_rf: usize,
    pub k: usize,
    pub normalized_distance: f64,
}

impl From<&ConvergenceRecord> for ConvergenceRow {
    fn from(r: &ConvergenceRecord) -> Self {
        Self { n_rf: r.n_rf, k: r.k, normalized_distance: r.normalized_distance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scheme: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub snr_db: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
}

impl From<&RateRecord> for RateRow {
    fn from(r: &RateRecord) -> Self {
        Self {
            scheme: r.scheme.name().to_string(),
            k: r.iterations,
            snr_db: r.snr_db,
            mean_rate: r.mean_rate,
            std_rate: r.std_rate,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for row in rows {
        w.serialize(row).map_err(io::Error::other)?;
    }
    w.flush()
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(io::Error::other)?;
    r.deserialize().collect::<Result<_, _>>().map_err(io::Error::other)
}

/// One log-scale series per RF-chain count, in order of first appearance.
pub fn convergence_plot(rows: &[ConvergenceRow]) -> LinePlot {
    let mut series: Vec<(usize, Series)> = Vec::new();
    for r in rows {
        let idx = match series.iter().position(|(n, _)| *n == r.n_rf) {
            Some(i) => i,
            None => {
                series.push((r.n_rf, Series::new(format!("N_RF = {}", r.n_rf), Vec::new())));
                series.len() - 1
            }
        };
        series[idx].1.points.push((r.k as f64, r.normalized_distance));
    }
    LinePlot {
        title: "Convergence of the quantization covariance".into(),
        x_label: "fixed-point iteration k".into(),
        y_label: "‖C(k) − C(k−1)‖_F / N_RF".into(),
        log_y: true,
        series: series.into_iter().map(|(_, s)| s).collect(),
    }
}

fn rate_series(rows: &[RateRow], scheme: SchemeKind, k: usize) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.scheme == scheme.name() && r.k == k)
        .map(|r| (r.snr_db, r.mean_rate))
        .collect()
}

/// Full-digital reference, fixed-RF curves for every K and RF-redesign
/// curves for K ≥ 2 (the first iteration is shared by both modes).
pub fn rates_plot(rows: &[RateRow], n_rf: usize) -> LinePlot {
    let max_k = rows.iter().map(|r| r.k).max().unwrap_or(0);
    let present = |scheme: SchemeKind| rows.iter().any(|r| r.scheme == scheme.name());
    let mut series = Vec::new();
    if present(SchemeKind::FullDigital) {
        let k = rows.iter().filter(|r| r.scheme == SchemeKind::FullDigital.name()).map(|r| r.k).min().unwrap_or(1);
        let mut s = Series::new("full-digital", rate_series(rows, SchemeKind::FullDigital, k));
        s.color = Some("#000000");
        series.push(s);
    }
    if present(SchemeKind::HybridFixedRf) {
        for k in 1..=max_k {
            let points = rate_series(rows, SchemeKind::HybridFixedRf, k);
            if !points.is_empty() {
                series.push(Series::new(format!("fixed RF, K = {k}"), points));
            }
        }
    }
    if present(SchemeKind::HybridRedesign) {
        for k in 2..=max_k {
            let points = rate_series(rows, SchemeKind::HybridRedesign, k);
            if !points.is_empty() {
                let mut s = Series::new(format!("RF redesign, K = {k}"), points);
                s.dashed = true;
                series.push(s);
            }
        }
    }
    LinePlot {
        title: format!("Achievable rate, N_RF = {n_rf}"),
        x_label: "SNR (dB)".into(),
        y_label: "rate (bit/s/Hz)".into(),
        log_y: false,
        series,
    }
}
