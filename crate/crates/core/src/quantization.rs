//! One-bit complex quantizer and its two linear models.
//!
//! Both models write the quantizer output as `A·x + q` for input `x = F_BB·s`.
//! AQNM uses a scalar gain and a diagonal distortion covariance; the Bussgang
//! model uses the exact Gaussian-input gain and the full distortion covariance
//! obtained from the arcsin law. The quantizer output is normalized to unit
//! power per RF chain, so `diag(C_xqxq) = 1`.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, scale_columns, scale_rows, CMatrix, C64};

/// Distortion factor of a one-bit quantizer under Gaussian input.
pub const ONE_BIT_DISTORTION: f64 = 0.3634;

/// High-resolution approximation `η_b ≈ (π√3/2)·2^{−2b}`. Only meaningful
/// for large `b`; the one-bit value is [`ONE_BIT_DISTORTION`].
pub fn distortion_factor_approx(bits: u32) -> f64 {
    PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * bits as i32)
}

pub fn distortion_factor(bits: u32) -> f64 {
    if bits == 1 {
        ONE_BIT_DISTORTION
    } else {
        distortion_factor_approx(bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Aqnm,
    Bussgang,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationModel {
    pub scheme: Scheme,
    /// Diagonal of the weight matrix `A`.
    pub weight: DVector<f64>,
    /// Distortion covariance `C_qq`.
    pub distortion_cov: CMatrix,
}

impl LinearizationModel {
    /// `A = I`, `C_qq = 0`: an ideal (infinite resolution) converter.
    pub fn ideal(n: usize, scheme: Scheme) -> Self {
        Self {
            scheme,
            weight: DVector::from_element(n, 1.0),
            distortion_cov: CMatrix::zeros(n, n),
        }
    }

    pub fn size(&self) -> usize {
        self.weight.len()
    }

    /// `A·F_BB`.
    pub fn weighted(&self, bb: &CMatrix) -> CMatrix {
        scale_rows(bb, &self.weight)
    }

    pub fn distortion_trace(&self) -> f64 {
        crate::linalg::trace_re(&self.distortion_cov)
    }
}

/// Second-order statistics of the quantizer input `x = F_BB·s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalStats {
    pub data_power: f64,
    pub num_streams: usize,
    /// `C_xx = (P_s/N_s)·F_BB·F_BB^H`.
    pub input_cov: CMatrix,
}

impl SignalStats {
    pub fn new(data_power: f64, bb: &CMatrix) -> Self {
        let num_streams = bb.ncols();
        let mut input_cov = bb * bb.adjoint() * C64::new(data_power / num_streams as f64, 0.0);
        hermitize(&mut input_cov);
        Self { data_power, num_streams, input_cov }
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `sqrt(p/2)·(sign(Re x) + j·sign(Im x))`, with `sign(0) = +1`.
pub fn one_bit_quantize(x: &[C64], per_entry_power: f64) -> Vec<C64> {
    let amp = (per_entry_power / 2.0).sqrt();
    x.iter()
        .map(|z| C64::new(amp * sign(z.re), amp * sign(z.im)))
        .collect()
}

/// AQNM: `A_Q = sqrt(1 − η)·I`, `C_qq = η(1 − η)·diag(C_xx)`.
pub fn aqnm_linearize(stats: &SignalStats, eta: f64) -> LinearizationModel {
    let n = stats.input_cov.nrows();
    let mut cov = CMatrix::zeros(n, n);
    for i in 0..n {
        cov[(i, i)] = C64::new(eta * (1.0 - eta) * stats.input_cov[(i, i)].re, 0.0);
    }
    LinearizationModel {
        scheme: Scheme::Aqnm,
        weight: DVector::from_element(n, (1.0 - eta).sqrt()),
        distortion_cov: cov,
    }
}

/// Output covariance of a unit-power one-bit quantizer driven by a proper
/// complex Gaussian with covariance `cxx`:
/// `(2/π)·[arcsin(D^{-1/2} Re(C) D^{-1/2}) + j·arcsin(D^{-1/2} Im(C) D^{-1/2})]`.
pub fn arcsin_law(cxx: &CMatrix) -> Result<CMatrix> {
    let n = cxx.nrows();
    let d = inverse_sqrt_diagonal(cxx)?;
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                out[(i, j)] = C64::new(1.0, 0.0);
                continue;
            }
            let rho = cxx[(i, j)] * (d[i] * d[j]);
            let re = rho.re.clamp(-1.0, 1.0).asin();
            let im = rho.im.clamp(-1.0, 1.0).asin();
            out[(i, j)] = C64::new(re, im) * FRAC_2_PI;
        }
    }
    hermitize(&mut out);
    Ok(out)
}

fn inverse_sqrt_diagonal(cxx: &CMatrix) -> Result<DVector<f64>> {
    let n = cxx.nrows();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let v = cxx[(i, i)].re;
        if !(v > 0.0) {
            return Err(Error::SilentRfChain { chain: i });
        }
        d[i] = 1.0 / v.sqrt();
    }
    Ok(d)
}

/// Bussgang: `A_B = sqrt(2/π)·diag(C_xx)^{-1/2}` and
/// `C_qq = C_xqxq − A_B·C_xx·A_B` with `C_xqxq` from [`arcsin_law`].
pub fn bussgang_linearize(stats: &SignalStats) -> Result<LinearizationModel> {
    bussgang_linearize_with(stats, arcsin_law)
}

/// Same as [`bussgang_linearize`] with a caller-supplied output covariance law.
pub fn bussgang_linearize_with<F>(stats: &SignalStats, output_cov: F) -> Result<LinearizationModel>
where
    F: Fn(&CMatrix) -> Result<CMatrix>,
{
    let cxx = &stats.input_cov;
    let weight = inverse_sqrt_diagonal(cxx)? * FRAC_2_PI.sqrt();
    let cxqxq = output_cov(cxx)?;
    let linear_part = scale_columns(&scale_rows(cxx, &weight), &weight);
    let mut cov = cxqxq - linear_part;
    hermitize(&mut cov);
    Ok(LinearizationModel { scheme: Scheme::Bussgang, weight, distortion_cov: cov })
}

/// Scheme-matched linearization for the given baseband precoder.
pub fn linearize(scheme: Scheme, data_power: f64, bb: &CMatrix, eta: f64) -> Result<LinearizationModel> {
    let stats = SignalStats::new(data_power, bb);
    match scheme {
        Scheme::Aqnm => Ok(aqnm_linearize(&stats, eta)),
        Scheme::Bussgang => bussgang_linearize(&stats),
    }
}

/// Empirical second moments of the quantizer driven by `x = F_BB·s`.
#[derive(Debug, Clone)]
pub struct SampledMoments {
    /// Estimate of `E[x_q x_q^H]`.
    pub output_cov: CMatrix,
    /// Estimate of `E[x_q x^H]`.
    pub cross_cov: CMatrix,
    pub draws: usize,
}

/// Monte Carlo estimate of the unit-power quantizer moments with
/// `s ~ CN(0, (P_s/N_s)·I)`, reproducible from `seed`.
pub fn sample_quantizer_moments(data_power: f64, bb: &CMatrix, draws: usize, seed: u64) -> SampledMoments {
    let (n, ns) = bb.shape();
    let std = (data_power / ns as f64 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    let mut cross = vec![C64::new(0.0, 0.0); n * n];
    let mut s = vec![C64::new(0.0, 0.0); ns];
    let mut x = vec![C64::new(0.0, 0.0); n];
    for _ in 0..draws {
        for v in s.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v = C64::new(std * re, std * im);
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = (0..ns).map(|k| bb[(i, k)] * s[k]).sum();
        }
        let q = one_bit_quantize(&x, 1.0);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += q[i] * q[j].conj();
                cross[i * n + j] += q[i] * x[j].conj();
            }
        }
    }
    let scale = C64::new(1.0 / draws.max(1) as f64, 0.0);
    SampledMoments {
        output_cov: CMatrix::from_row_slice(n, n, &out) * scale,
        cross_cov: CMatrix::from_row_slice(n, n, &cross) * scale,
        draws,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_re;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quantizer_sign_examples() {
        let q = one_bit_quantize(&[c(1.0, 0.5), c(-0.3, -2.0), c(0.0, 0.0)], 1.0);
        assert_eq!(q[0], c(FRAC_1_SQRT_2, FRAC_1_SQRT_2));
        assert_eq!(q[1], c(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2));
        assert_eq!(q[2], c(FRAC_1_SQRT_2, FRAC_1_SQRT_2));
        for z in one_bit_quantize(&[c(3.0, -1.0)], 2.5) {
            assert_relative_eq!(z.norm_sqr(), 2.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn aqnm_weight_for_one_bit() {
        let bb = CMatrix::identity(4, 4);
        let lin = aqnm_linearize(&SignalStats::new(1.0, &bb), ONE_BIT_DISTORTION);
        for &w in lin.weight.iter() {
            assert_relative_eq!(w, 0.797_872_170_212_747_8, epsilon = 1e-12);
        }
    }

    #[test]
    fn aqnm_covariance_identity_precoder() {
        // F_BB F_BB^H = I_4, P_s = 1, N_s = 4
        let bb = CMatrix::identity(4, 4);
        let lin = aqnm_linearize(&SignalStats::new(1.0, &bb), ONE_BIT_DISTORTION);
        let expected = 0.3634 * 0.6366 / 4.0;
        assert_relative_eq!(expected, 0.057_835_11, epsilon = 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { expected } else { 0.0 };
                assert_relative_eq!(lin.distortion_cov[(i, j)].re, want, epsilon = 1e-15);
                assert_eq!(lin.distortion_cov[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn aqnm_zero_precoder() {
        let bb = CMatrix::zeros(3, 2);
        let lin = aqnm_linearize(&SignalStats::new(1.0, &bb), ONE_BIT_DISTORTION);
        assert_eq!(lin.distortion_cov, CMatrix::zeros(3, 3));
        assert!(lin.weight.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn bussgang_diagonal_input() {
        for &p in &[0.1, 1.0, 7.5] {
            let stats = SignalStats {
                data_power: 1.0,
                num_streams: 3,
                input_cov: CMatrix::identity(3, 3) * c(p, 0.0),
            };
            let lin = bussgang_linearize(&stats).unwrap();
            for i in 0..3 {
                assert_relative_eq!(lin.weight[i], (2.0 / (PI * p)).sqrt(), epsilon = 1e-14);
                for j in 0..3 {
                    let want = if i == j { 1.0 - 2.0 / PI } else { 0.0 };
                    assert!((lin.distortion_cov[(i, j)] - c(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bussgang_real_correlation_off_diagonal() {
        let cxx = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        let stats = SignalStats { data_power: 1.0, num_streams: 2, input_cov: cxx };
        let lin = bussgang_linearize(&stats).unwrap();
        // (2/π)(asin(0.5) − 0.5), confirmed by the Monte Carlo oracle in tests/
        assert!((lin.distortion_cov[(0, 1)] - c(0.015_023_447_149_542_696, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn silent_chain_rejected() {
        let mut bb = CMatrix::identity(3, 3);
        bb[(1, 1)] = c(0.0, 0.0);
        let err = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap_err();
        assert_eq!(err, Error::SilentRfChain { chain: 1 });
        assert!(err.to_string().contains("silent RF chain: Bussgang weight undefined"));
    }

    #[test]
    fn one_bit_constant_matches_arcsin_gain() {
        assert!((1.0 - 2.0 / PI - ONE_BIT_DISTORTION).abs() < 5e-5);
        assert_eq!(format!("{:.4}", 1.0 - 2.0 / PI), "0.3634");
    }

    #[test]
    fn approximation_formula() {
        assert_relative_eq!(distortion_factor_approx(3), PI * 3f64.sqrt() / 128.0, epsilon = 1e-15);
        assert_eq!(distortion_factor(1), ONE_BIT_DISTORTION);
    }

    #[test]
    fn bussgang_trace_is_fixed() {
        let bb = CMatrix::from_fn(4, 4, |i, j| c((i + 2 * j) as f64 * 0.3 - 0.7, (i * j) as f64 * 0.1 + 0.2));
        let lin = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap();
        assert!((trace_re(&lin.distortion_cov) - 4.0 * (1.0 - 2.0 / PI)).abs() < 1e-10);
    }
}
