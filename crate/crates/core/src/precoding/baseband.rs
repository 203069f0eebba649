use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{dominant_right_singular_vectors, scale_columns, trace_re, CMatrix, C64};
use crate::quantization::{aqnm_linearize, LinearizationModel, Scheme, SignalStats};

/// Dominant `n_s` right singular vectors of the effective channel.
pub fn bb_design(effective_channel: &CMatrix, n_s: usize) -> Result<CMatrix> {
    let n_rf = effective_channel.ncols();
    if n_s == 0 || n_s > n_rf {
        return Err(Error::InvalidParameter(format!("N_s = {n_s} must lie in 1..={n_rf}")));
    }
    dominant_right_singular_vectors(effective_channel, n_s)
}

/// `(P_s/N_s)·‖A·F_BB‖²_F + tr(C_qq)`: transmit power under a semi-unitary RF stage.
pub fn power_reduced(bb: &CMatrix, lin: &LinearizationModel, p_s: f64, n_s: usize) -> f64 {
    p_s / n_s as f64 * lin.weighted(bb).norm_squared() + lin.distortion_trace()
}

/// `(P_s/N_s)·‖F_RF·A·F_BB‖²_F + tr(F_RF·C_qq·F_RF^H)`: transmit power for an arbitrary RF stage.
pub fn power_full(rf: &CMatrix, bb: &CMatrix, lin: &LinearizationModel, p_s: f64, n_s: usize) -> f64 {
    let signal = rf * lin.weighted(bb);
    let distortion = rf * &lin.distortion_cov * rf.adjoint();
    p_s / n_s as f64 * signal.norm_squared() + trace_re(&distortion)
}

/// Scales `candidate` so the reduced power expression equals `p_max`.
pub fn bb_normalize(
    candidate: &CMatrix,
    lin: &LinearizationModel,
    p_max: f64,
    p_s: f64,
    n_s: usize,
) -> Result<CMatrix> {
    if candidate.nrows() != lin.size() {
        return Err(Error::DimensionMismatch(format!(
            "baseband precoder has {} rows, linearization has size {}",
            candidate.nrows(),
            lin.size()
        )));
    }
    let distortion_trace = lin.distortion_trace();
    if !(p_max > distortion_trace) {
        return Err(Error::PowerBudgetExceeded { distortion_trace, p_max });
    }
    let signal = p_s / n_s as f64 * lin.weighted(candidate).norm_squared();
    if !(signal > 0.0) {
        return Err(Error::InvalidParameter("baseband candidate carries no signal power".into()));
    }
    let scale = ((p_max - distortion_trace) / signal).sqrt();
    Ok(candidate * C64::new(scale, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointParams {
    pub p_max: f64,
    pub p_s: f64,
    pub n_s: usize,
    /// AQNM distortion factor.
    pub eta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone)]
pub struct FixedPointOutcome {
    pub bb: CMatrix,
    /// AQNM model holding the last covariance iterate.
    pub linearization: LinearizationModel,
    /// `‖C^{(k)} − C^{(k−1)}‖_F / N_RF` for `k = 1, 2, …`.
    pub trace: Vec<f64>,
    /// `C^{(1)}, C^{(2)}, …`; `C^{(0)} = 0` is implicit.
    pub iterates: Vec<CMatrix>,
    /// `(reduced, full)` power expressions right after each normalization,
    /// evaluated with the covariance that normalization used.
    pub power_after_normalize: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Joint fixed point of the AQNM covariance and the power-normalized
/// baseband precoder for a fixed RF stage, starting from `C_qq = 0`.
pub fn fixed_point_cov(channel: &CMatrix, rf: &CMatrix, params: &FixedPointParams) -> Result<FixedPointOutcome> {
    let n_rf = rf.ncols();
    let seed = LinearizationModel {
        scheme: Scheme::Aqnm,
        weight: DVector::from_element(n_rf, (1.0 - params.eta).sqrt()),
        distortion_cov: CMatrix::zeros(n_rf, n_rf),
    };
    let effective = scale_columns(&(channel * rf), &seed.weight);
    let candidate = bb_design(&effective, params.n_s)?;

    let mut lin = seed;
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    let mut power_after_normalize = Vec::new();
    let mut bb = candidate.clone();
    let mut converged = false;
    // evaluated after each update, so the loop body always runs at least once
    for _ in 0..params.max_iters {
        bb = bb_normalize(&candidate, &lin, params.p_max, params.p_s, params.n_s)?;
        power_after_normalize.push((
            power_reduced(&bb, &lin, params.p_s, params.n_s),
            power_full(rf, &bb, &lin, params.p_s, params.n_s),
        ));
        let next = aqnm_linearize(&SignalStats::new(params.p_s, &bb), params.eta);
        let distance = (&next.distortion_cov - &lin.distortion_cov).norm() / n_rf as f64;
        trace.push(distance);
        iterates.push(next.distortion_cov.clone());
        lin = next;
        if distance <= params.epsilon {
            converged = true;
            break;
        }
    }
    Ok(FixedPointOutcome { bb, linearization: lin, trace, iterates, power_after_normalize, converged })
}
