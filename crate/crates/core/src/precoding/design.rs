//! The alternating-optimization loop and the full-digital reference.

use crate::error::{Error, Result};
use crate::linalg::{dominant_right_singular_vectors, scale_columns, CMatrix, C64};
use crate::quantization::{bussgang_linearize, LinearizationModel, Scheme, SignalStats};
use crate::rate::{achievable_rate, RateContext};

use super::baseband::{bb_design, bb_normalize, fixed_point_cov, power_full, power_reduced, FixedPointParams};
use super::greedy::greedy_phase_search;
use super::rf::{alternating_projection, modulus_error, snap_to_grid, svd_rf_init, ApaParams, PhaseGrid};
use super::HybridPrecoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfMode {
    /// Keep the initial RF precoder; later iterations only refresh the
    /// Bussgang model and the baseband precoder.
    Fixed,
    /// Redesign the RF precoder by greedy phase search in every later iteration.
    Redesign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub n_rf: usize,
    pub n_s: usize,
    pub p_max: f64,
    pub p_s: f64,
    /// AQNM distortion factor for the initial iteration.
    pub eta: f64,
    pub noise_variance: f64,
    pub epsilon: f64,
    pub fixed_point_max_iters: usize,
    pub apa: ApaParams,
    pub grid: PhaseGrid,
    /// Total number of iterations `K` (the initial one included).
    pub iterations: usize,
    pub rf_mode: RfMode,
}

/// Both sides of the power identity right after a baseband normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCheck {
    pub iteration: usize,
    pub scheme: Scheme,
    /// `(P_s/N_s)·‖A·F_BB‖² + tr(C_qq)`.
    pub reduced: f64,
    /// `(P_s/N_s)·‖F_RF·A·F_BB‖² + tr(F_RF·C_qq·F_RF^H)`.
    pub full: f64,
    pub p_max: f64,
}

impl PowerCheck {
    pub fn relative_error(&self) -> f64 {
        (self.reduced - self.p_max).abs() / self.p_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStats {
    pub evaluations: usize,
    pub rate_before: f64,
    pub rate_after: f64,
    /// Entries whose incoming off-grid phase beat every grid candidate.
    pub off_grid_entries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub iteration: usize,
    pub scheme: Scheme,
    pub rate: f64,
    pub apa_residual: Option<f64>,
    /// Largest deviation of an APA output entry from modulus `1/√N_t`.
    pub apa_modulus_error: Option<f64>,
    pub apa_converged: Option<bool>,
    pub greedy: Option<GreedyStats>,
}

#[derive(Debug, Clone)]
pub struct DesignState {
    /// Fixed-point iterations spent in the initial iteration (`k`).
    pub iteration_index: usize,
    /// Outer iterations completed (`i`).
    pub outer_index: usize,
    /// Model the final rate was evaluated with.
    pub linearization: LinearizationModel,
    pub cov_trace: Vec<f64>,
    pub rates_per_iteration: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub power_checks: Vec<PowerCheck>,
    pub warnings: Vec<String>,
}

impl DesignParams {
    pub fn validate(&self, channel: &CMatrix) -> Result<()> {
        let nt = channel.ncols();
        if self.n_s == 0 || self.n_s > self.n_rf || self.n_rf > nt {
            return Err(Error::InvalidParameter(format!(
                "need 1 ≤ N_s ≤ N_RF ≤ N_t, got N_s = {}, N_RF = {}, N_t = {nt}",
                self.n_s, self.n_rf
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("at least one iteration is required".into()));
        }
        if !(self.noise_variance > 0.0) || !(self.p_max > 0.0) || !(self.p_s > 0.0) {
            return Err(Error::InvalidParameter("powers and noise variance must be positive".into()));
        }
        Ok(())
    }
}

fn power_check(
    iteration: usize,
    rf: &CMatrix,
    bb: &CMatrix,
    lin: &LinearizationModel,
    params: &DesignParams,
) -> PowerCheck {
    PowerCheck {
        iteration,
        scheme: lin.scheme,
        reduced: power_reduced(bb, lin, params.p_s, params.n_s),
        full: power_full(rf, bb, lin, params.p_s, params.n_s),
        p_max: params.p_max,
    }
}

/// Runs the alternating optimization for one channel realization.
///
/// Iteration 1 initializes the RF stage from the channel SVD, makes it
/// feasible with alternating projections, and solves the AQNM fixed point
/// for the baseband precoder. Each later iteration refreshes the Bussgang
/// model from the current baseband precoder, redesigns and renormalizes the
/// baseband precoder against it and, in [`RfMode::Redesign`], re-optimizes
/// the RF phases before projecting back and snapping to the phase grid.
pub fn design_hybrid(channel: &CMatrix, params: &DesignParams) -> Result<(HybridPrecoder, DesignState)> {
    params.validate(channel)?;
    let mut warnings = Vec::new();
    let mut power_checks = Vec::new();
    let mut records = Vec::new();

    let candidate_rf = svd_rf_init(channel, params.n_rf)?;
    let apa = alternating_projection(&candidate_rf, &params.apa)?;
    if !apa.converged {
        warnings.push(format!("iteration 1: APA stopped after {} iterations", apa.iterations));
    }
    let mut rf = apa.rf;

    let fp = fixed_point_cov(
        channel,
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
    if !fp.converged {
        warnings.push(format!(
            "iteration 1: covariance fixed point not reached in {} steps",
            fp.trace.len()
        ));
    }
    power_checks.extend(fp.power_after_normalize.iter().map(|&(reduced, full)| PowerCheck {
        iteration: 1,
        scheme: Scheme::Aqnm,
        reduced,
        full,
        p_max: params.p_max,
    }));

    let mut bb = fp.bb;
    let mut lin = fp.linearization;
    let rate = achievable_rate(&rate_context(channel, &rf, &lin, params), &bb)?;
    records.push(IterationRecord {
        iteration: 1,
        scheme: Scheme::Aqnm,
        rate,
        apa_residual: Some(apa.semi_unitary_residual),
        apa_modulus_error: Some(modulus_error(&rf)),
        apa_converged: Some(apa.converged),
        greedy: None,
    });

    let mut phases = None;
    for i in 2..=params.iterations {
        lin = bussgang_linearize(&SignalStats::new(params.p_s, &bb))?;
        let effective = scale_columns(&(channel * &rf), &lin.weight);
        let candidate = bb_design(&effective, params.n_s)?;
        bb = bb_normalize(&candidate, &lin, params.p_max, params.p_s, params.n_s)?;
        power_checks.push(power_check(i, &rf, &bb, &lin, params));

        let mut record = IterationRecord {
            iteration: i,
            scheme: Scheme::Bussgang,
            rate: 0.0,
            apa_residual: None,
            apa_modulus_error: None,
            apa_converged: None,
            greedy: None,
        };
        if params.rf_mode == RfMode::Redesign {
            let greedy = greedy_phase_search(&rate_context(channel, &rf, &lin, params), &bb, &params.grid)?;
            record.greedy = Some(GreedyStats {
                evaluations: greedy.evaluations,
                rate_before: greedy.initial_rate,
                rate_after: greedy.final_rate,
                off_grid_entries: greedy.phases.iter().filter(|p| p.is_none()).count(),
            });
            let apa = alternating_projection(&greedy.rf, &params.apa)?;
            if !apa.converged {
                warnings.push(format!("iteration {i}: APA stopped after {} iterations", apa.iterations));
            }
            record.apa_residual = Some(apa.semi_unitary_residual);
            record.apa_modulus_error = Some(modulus_error(&apa.rf));
            record.apa_converged = Some(apa.converged);
            let (snapped, indices) = snap_to_grid(&apa.rf, &params.grid);
            rf = snapped;
            phases = Some(indices);
        }
        record.rate = achievable_rate(&rate_context(channel, &rf, &lin, params), &bb)?;
        records.push(record);
    }

    let state = DesignState {
        iteration_index: fp.trace.len(),
        outer_index: params.iterations,
        linearization: lin,
        cov_trace: fp.trace,
        rates_per_iteration: records.iter().map(|r| r.rate).collect(),
        iterations: records,
        power_checks,
        warnings,
    };
    Ok((HybridPrecoder { rf, bb, phases }, state))
}

fn rate_context<'a>(
    channel: &'a CMatrix,
    rf: &'a CMatrix,
    lin: &'a LinearizationModel,
    params: &DesignParams,
) -> RateContext<'a> {
    RateContext {
        channel,
        rf_precoder: rf,
        linearization: lin,
        noise_variance: params.noise_variance,
        data_power: params.p_s,
        num_streams: params.n_s,
    }
}

/// SVD precoder with infinite-resolution converters, scaled so that
/// `(P_s/N_s)·‖F_FD‖²_F = P_max`.
pub fn full_digital_precoder(channel: &CMatrix, n_s: usize, p_max: f64, p_s: f64) -> Result<CMatrix> {
    let (nr, nt) = channel.shape();
    if n_s == 0 || n_s > nr.min(nt) {
        return Err(Error::InvalidParameter(format!(
            "full-digital precoding needs 1 ≤ N_s ≤ min(N_t, N_r), got N_s = {n_s}"
        )));
    }
    let v = dominant_right_singular_vectors(channel, n_s)?;
    let scale = (p_max / (p_s / n_s as f64 * v.norm_squared())).sqrt();
    Ok(v * C64::new(scale, 0.0))
}

/// Achievable rate of [`full_digital_precoder`] (no quantization distortion).
pub fn full_digital_baseline(channel: &CMatrix, n_s: usize, p_max: f64, p_s: f64, noise_variance: f64) -> Result<f64> {
    let precoder = full_digital_precoder(channel, n_s, p_max, p_s)?;
    let nt = channel.ncols();
    let identity = CMatrix::identity(nt, nt);
    let ideal = LinearizationModel::ideal(nt, Scheme::Aqnm);
    let ctx = RateContext {
        channel,
        rf_precoder: &identity,
        linearization: &ideal,
        noise_variance,
        data_power: p_s,
        num_streams: n_s,
    };
    achievable_rate(&ctx, &precoder)
}
