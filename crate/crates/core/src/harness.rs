//! Seeded Monte Carlo sweeps over SNR, iteration count and precoding scheme.
//!
//! Trial `t` draws its channel from seed `base_seed + t`, and every scheme
//! and SNR point of that trial reuses the same realization, so scheme
//! comparisons are paired. Trials run on the rayon pool and are merged back
//! in trial order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::draw_channel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precoding::{
    alternating_projection, design_hybrid, fixed_point_cov, full_digital_baseline, svd_rf_init, FixedPointParams,
    RfMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    HybridFixedRf,
    HybridRedesign,
    FullDigital,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::FullDigital, SchemeKind::HybridFixedRf, SchemeKind::HybridRedesign];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::HybridFixedRf => "hybrid_fixed_rf",
            SchemeKind::HybridRedesign => "hybrid_redesign",
            SchemeKind::FullDigital => "full_digital",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub schemes: Vec<SchemeKind>,
    pub iteration_counts: Vec<usize>,
    pub base_seed: u64,
}

impl ExperimentPlan {
    /// Every scheme, `K = 1..=iterations`, the configured SNR grid and trial count.
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            snr_grid_db: cfg.snr_grid_db(),
            n_trials: cfg.experiment.trials,
            schemes: SchemeKind::ALL.to_vec(),
            iteration_counts: (1..=cfg.algorithm.iterations).collect(),
            base_seed: cfg.experiment.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::NoSchemes);
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidParameter("n_trials must be at least 1".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("SNR grid must be nonempty and strictly increasing".into()));
        }
        if self.iteration_counts.is_empty() || self.iteration_counts.contains(&0) {
            return Err(Error::InvalidParameter("iteration counts must be nonempty and positive".into()));
        }
        Ok(())
    }

    fn max_iterations(&self) -> usize {
        self.iteration_counts.iter().copied().max().unwrap_or(1)
    }
}

/// Rate of one (trial, scheme, K, SNR) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSample {
    pub trial: usize,
    pub scheme: SchemeKind,
    pub iterations: usize,
    pub snr_db: f64,
    pub rate: f64,
    pub channel_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub trial: usize,
    pub scheme: SchemeKind,
    pub snr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub scheme: SchemeKind,
    pub iterations: usize,
    pub snr_db: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    /// Trials that contributed to the mean.
    pub n_trials: usize,
    /// Some trial of this cell failed.
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by scheme, then K, then SNR, following the plan.
    pub records: Vec<RateRecord>,
    /// Ordered by trial, then SNR, then scheme, then K.
    pub samples: Vec<TrialSample>,
    pub failures: Vec<TrialFailure>,
}

impl SweepResult {
    pub fn record(&self, scheme: SchemeKind, iterations: usize, snr_db: f64) -> Option<&RateRecord> {
        self.records
            .iter()
            .find(|r| r.scheme == scheme && r.iterations == iterations && r.snr_db == snr_db)
    }

    /// Per-trial rates of one cell, in trial order (`None` for failed trials).
    pub fn trial_rates(&self, scheme: SchemeKind, iterations: usize, snr_db: f64, n_trials: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; n_trials];
        for s in &self.samples {
            if s.scheme == scheme && s.iterations == iterations && s.snr_db == snr_db {
                out[s.trial] = Some(s.rate);
            }
        }
        out
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn scheme_rates(
    scheme: SchemeKind,
    channel: &CMatrix,
    cfg: &SystemConfig,
    plan: &ExperimentPlan,
    snr_db: f64,
) -> Result<Vec<f64>> {
    match scheme {
        SchemeKind::FullDigital => {
            let rate = full_digital_baseline(
                channel,
                cfg.streams(),
                cfg.power.p_max,
                cfg.power.p_s,
                cfg.noise_variance(snr_db),
            )?;
            Ok(vec![rate; plan.iteration_counts.len()])
        }
        SchemeKind::HybridFixedRf | SchemeKind::HybridRedesign => {
            let mode = if scheme == SchemeKind::HybridFixedRf { RfMode::Fixed } else { RfMode::Redesign };
            let mut params = cfg.design_params(snr_db, mode)?;
            // a K-iteration design is a prefix of the longest one
            params.iterations = plan.max_iterations();
            let (_, state) = design_hybrid(channel, &params)?;
            Ok(plan.iteration_counts.iter().map(|&k| state.rates_per_iteration[k - 1]).collect())
        }
    }
}

fn run_trial(trial: usize, plan: &ExperimentPlan, cfg: &SystemConfig) -> (Vec<TrialSample>, Vec<TrialFailure>) {
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    let seed = plan.base_seed.wrapping_add(trial as u64);
    let channel = match draw_channel(&cfg.channel_params(seed)) {
        Ok(c) => c,
        Err(e) => {
            for &snr_db in &plan.snr_grid_db {
                for &scheme in &plan.schemes {
                    failures.push(TrialFailure { trial, scheme, snr_db, message: e.to_string() });
                }
            }
            return (samples, failures);
        }
    };
    let fingerprint = channel.fingerprint();
    for &snr_db in &plan.snr_grid_db {
        for &scheme in &plan.schemes {
            match scheme_rates(scheme, &channel.matrix, cfg, plan, snr_db) {
                Ok(rates) => {
                    for (&iterations, rate) in plan.iteration_counts.iter().zip(rates) {
                        samples.push(TrialSample {
                            trial,
                            scheme,
                            iterations,
                            snr_db,
                            rate,
                            channel_fingerprint: fingerprint,
                        });
                    }
                }
                Err(e) => failures.push(TrialFailure { trial, scheme, snr_db, message: e.to_string() }),
            }
        }
    }
    (samples, failures)
}

/// Runs every trial of `plan` with the system parameters of `cfg`.
///
/// Failed trials are recorded in [`SweepResult::failures`] and mark their
/// cells incomplete instead of aborting the sweep.
pub fn run_sweep(plan: &ExperimentPlan, cfg: &SystemConfig) -> Result<SweepResult> {
    plan.validate()?;
    cfg.validate()?;
    let per_trial: Vec<_> = (0..plan.n_trials)
        .into_par_iter()
        .map(|t| run_trial(t, plan, cfg))
        .collect();

    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (s, f) in per_trial {
        samples.extend(s);
        failures.extend(f);
    }

    let mut records = Vec::with_capacity(plan.schemes.len() * plan.iteration_counts.len() * plan.snr_grid_db.len());
    for &scheme in &plan.schemes {
        for &iterations in &plan.iteration_counts {
            for &snr_db in &plan.snr_grid_db {
                let values: Vec<f64> = samples
                    .iter()
                    .filter(|s| s.scheme == scheme && s.iterations == iterations && s.snr_db == snr_db)
                    .map(|s| s.rate)
                    .collect();
                let (mean_rate, std_rate) = mean_std(&values);
                records.push(RateRecord {
                    scheme,
                    iterations,
                    snr_db,
                    mean_rate,
                    std_rate,
                    n_trials: values.len(),
                    incomplete: values.len() < plan.n_trials,
                });
            }
        }
    }
    Ok(SweepResult { records, samples, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub n_rf: usize,
    /// Normalized covariance distance per fixed-point step, `k = 1, 2, …`.
    pub trace: Vec<f64>,
    /// Covariance iterates `C^{(1)}, C^{(2)}, …` behind the trace.
    pub iterates: Vec<CMatrix>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub n_rf: usize,
    pub k: usize,
    pub normalized_distance: f64,
}

/// Flattens series into `(n_rf, k, distance)` rows with 1-based `k`.
pub fn convergence_records(series: &[ConvergenceSeries]) -> Vec<ConvergenceRecord> {
    series
        .iter()
        .flat_map(|s| {
            s.trace.iter().enumerate().map(move |(i, &d)| ConvergenceRecord {
                n_rf: s.n_rf,
                k: i + 1,
                normalized_distance: d,
            })
        })
        .collect()
}

/// Initial-iteration covariance fixed point on the channel drawn from
/// `experiment.seed`, once per RF-chain count.
pub fn run_convergence(cfg: &SystemConfig, n_rf_list: &[usize]) -> Result<Vec<ConvergenceSeries>> {
    run_convergence_on_seed(cfg, n_rf_list, cfg.experiment.seed)
}

pub fn run_convergence_on_seed(cfg: &SystemConfig, n_rf_list: &[usize], seed: u64) -> Result<Vec<ConvergenceSeries>> {
    if n_rf_list.is_empty() {
        return Err(Error::InvalidParameter("no RF-chain counts given".into()));
    }
    let channel = draw_channel(&cfg.channel_params(seed))?;
    let mut out = Vec::with_capacity(n_rf_list.len());
    for &n_rf in n_rf_list {
        let sub = cfg.with_rf_chains(n_rf);
        sub.validate()?;
        let params = sub.design_params(0.0, RfMode::Fixed)?;
        let rf = alternating_projection(&svd_rf_init(&channel.matrix, n_rf)?, &params.apa)?.rf;
        let fp = fixed_point_cov(
            &channel.matrix,
            &rf,
            &FixedPointParams {
                p_max: params.p_max,
                p_s: params.p_s,
                n_s: params.n_s,
                eta: params.eta,
                epsilon: params.epsilon,
                max_iters: params.fixed_point_max_iters,
            },
        )?;
        out.push(ConvergenceSeries { n_rf, trace: fp.trace, iterates: fp.iterates, converged: fp.converged });
    }
    Ok(out)
}
