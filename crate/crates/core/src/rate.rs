//! Effective channel, aggregate noise covariance and the Gaussian-noise
//! lower bound on the achievable rate.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_condition_number, hermitize, scale_columns, to_row_major, whitened_log_det_flat, CMatrix, C64,
};
use crate::quantization::LinearizationModel;

#[derive(Debug, Clone, Copy)]
pub struct RateContext<'a> {
    /// `N_r × N_t`.
    pub channel: &'a CMatrix,
    /// `N_t × N_RF`.
    pub rf_precoder: &'a CMatrix,
    pub linearization: &'a LinearizationModel,
    pub noise_variance: f64,
    pub data_power: f64,
    pub num_streams: usize,
}

impl RateContext<'_> {
    fn check(&self) -> Result<()> {
        let (nr, nt) = self.channel.shape();
        let (rf_rows, n_rf) = self.rf_precoder.shape();
        if rf_rows != nt {
            return Err(Error::DimensionMismatch(format!(
                "RF precoder has {rf_rows} rows but the channel has {nt} transmit antennas"
            )));
        }
        if self.linearization.size() != n_rf || self.linearization.distortion_cov.shape() != (n_rf, n_rf) {
            return Err(Error::DimensionMismatch(format!(
                "linearization of size {} does not match {n_rf} RF chains",
                self.linearization.size()
            )));
        }
        if !(self.noise_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if self.num_streams == 0 || nr == 0 {
            return Err(Error::InvalidParameter("empty stream or receive dimension".into()));
        }
        Ok(())
    }

    fn signal_scale(&self) -> f64 {
        self.data_power / self.num_streams as f64
    }
}

/// `H_e = H·F_RF·A`.
pub fn effective_channel(ctx: &RateContext) -> Result<CMatrix> {
    ctx.check()?;
    Ok(scale_columns(&(ctx.channel * ctx.rf_precoder), &ctx.linearization.weight))
}

/// `C_ññ = H·F_RF·C_qq·F_RF^H·H^H + σ²·I`.
pub fn aggregate_noise_cov(ctx: &RateContext) -> Result<CMatrix> {
    ctx.check()?;
    let hf = ctx.channel * ctx.rf_precoder;
    Ok(noise_cov_from(&hf, &ctx.linearization.distortion_cov, ctx.noise_variance))
}

pub(crate) fn noise_cov_from(hf: &CMatrix, cqq: &CMatrix, noise_variance: f64) -> CMatrix {
    let nr = hf.nrows();
    let mut cov = hf * cqq * hf.adjoint();
    for i in 0..nr {
        cov[(i, i)] += C64::new(noise_variance, 0.0);
    }
    hermitize(&mut cov);
    cov
}

/// `log₂ det(I + (P_s/N_s)·C_ññ^{-1}·H_e·F_BB·F_BB^H·H_e^H)` in bits/s/Hz.
///
/// With `C_ññ = L·L^H`, the determinant equals `det(I + (P_s/N_s)·X·X^H)` for
/// `X = L^{-1}·H_e·F_BB`, whose Cholesky pivots are all ≥ 1.
pub fn achievable_rate(ctx: &RateContext, bb: &CMatrix) -> Result<f64> {
    ctx.check()?;
    let n_rf = ctx.rf_precoder.ncols();
    if bb.nrows() != n_rf || bb.ncols() != ctx.num_streams {
        return Err(Error::DimensionMismatch(format!(
            "baseband precoder is {}×{}, expected {n_rf}×{}",
            bb.nrows(),
            bb.ncols(),
            ctx.num_streams
        )));
    }
    let hf = ctx.channel * ctx.rf_precoder;
    let noise = noise_cov_from(&hf, &ctx.linearization.distortion_cov, ctx.noise_variance);
    let signal = scale_columns(&hf, &ctx.linearization.weight) * bb;
    whitened_log_det(&noise, &signal, ctx.signal_scale())
}

/// `log₂ det(I + scale·C^{-1}·G·G^H)` for Hermitian positive definite `C`.
pub(crate) fn whitened_log_det(noise: &CMatrix, signal: &CMatrix, scale: f64) -> Result<f64> {
    let nr = noise.nrows();
    let mut noise_buf = to_row_major(noise);
    let mut signal_buf = to_row_major(signal);
    let mut inner = vec![C64::default(); nr * nr];
    let mut pivots = vec![0.0; nr];
    whitened_log_det_flat(&mut noise_buf, &mut signal_buf, &mut inner, &mut pivots, nr, signal.ncols(), scale)
        .ok_or_else(|| Error::IllConditioned { condition_number: hermitian_condition_number(noise) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantization::Scheme;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn selection(nt: usize, n_rf: usize) -> CMatrix {
        CMatrix::identity(nt, n_rf)
    }

    #[test]
    fn effective_channel_selection_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random(3, 5, &mut rng);
        let rf = selection(5, 2);
        let ideal = LinearizationModel::ideal(2, Scheme::Aqnm);
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &ideal,
            noise_variance: 1.0,
            data_power: 1.0,
            num_streams: 2,
        };
        let he = effective_channel(&ctx).unwrap();
        assert_eq!(he, h.columns(0, 2).into_owned());

        let scaled = LinearizationModel { weight: DVector::from_element(2, 0.25), ..ideal.clone() };
        let ctx = RateContext { linearization: &scaled, ..ctx };
        let he = effective_channel(&ctx).unwrap();
        assert!((he - (&h * &rf) * C64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn noise_cov_reduces_without_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random(4, 6, &mut rng);
        let rf = selection(6, 3);
        let ideal = LinearizationModel::ideal(3, Scheme::Aqnm);
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &ideal,
            noise_variance: 0.7,
            data_power: 1.0,
            num_streams: 3,
        };
        let cov = aggregate_noise_cov(&ctx).unwrap();
        assert!((cov - CMatrix::identity(4, 4) * C64::new(0.7, 0.0)).norm() < 1e-15);

        let unit = LinearizationModel { distortion_cov: CMatrix::identity(3, 3), ..ideal.clone() };
        let ctx = RateContext { linearization: &unit, noise_variance: 1.0, ..ctx };
        let cov = aggregate_noise_cov(&ctx).unwrap();
        let hf = &h * &rf;
        let want = CMatrix::identity(4, 4) + &hf * hf.adjoint();
        assert!((cov - want).norm() < 1e-13);
    }

    #[test]
    fn identity_channel_gives_one_bit_per_antenna() {
        let nr = 3;
        let h = CMatrix::identity(nr, nr);
        let rf = CMatrix::identity(nr, nr);
        let ideal = LinearizationModel::ideal(nr, Scheme::Aqnm);
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &ideal,
            noise_variance: 1.0,
            data_power: nr as f64,
            num_streams: nr,
        };
        let rate = achievable_rate(&ctx, &CMatrix::identity(nr, nr)).unwrap();
        assert_eq!(rate, nr as f64);
        let zero = achievable_rate(&ctx, &CMatrix::zeros(nr, nr)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn shape_errors() {
        let h = CMatrix::identity(2, 3);
        let rf = CMatrix::identity(4, 2);
        let ideal = LinearizationModel::ideal(2, Scheme::Aqnm);
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &ideal,
            noise_variance: 1.0,
            data_power: 1.0,
            num_streams: 2,
        };
        assert!(matches!(effective_channel(&ctx), Err(Error::DimensionMismatch(_))));
        let rf = CMatrix::identity(3, 2);
        let ctx = RateContext { rf_precoder: &rf, ..ctx };
        assert!(matches!(achievable_rate(&ctx, &CMatrix::identity(3, 2)), Err(Error::DimensionMismatch(_))));
        let ctx = RateContext { noise_variance: 0.0, ..ctx };
        assert!(matches!(achievable_rate(&ctx, &CMatrix::identity(2, 2)), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn non_finite_reports_ill_conditioning() {
        let mut h = CMatrix::identity(2, 2);
        h[(0, 1)] = C64::new(f64::NAN, 0.0);
        let rf = CMatrix::identity(2, 2);
        let unit = LinearizationModel {
            scheme: Scheme::Aqnm,
            weight: DVector::from_element(2, 1.0),
            distortion_cov: CMatrix::identity(2, 2),
        };
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &unit,
            noise_variance: 1.0,
            data_power: 1.0,
            num_streams: 2,
        };
        let err = achievable_rate(&ctx, &CMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
        assert!(err.to_string().starts_with("ill-conditioned rate evaluation"));
    }
}
