//! Self-check suite behind the `validate` subcommand.
//!
//! Each check runs at a small size with a fixed seed and compares an
//! implementation against an independent oracle or a structural invariant.
//! Checks are grouped by module; a filter selects groups or single checks by
//! substring of `group::name`.

use std::f64::consts::FRAC_2_PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{draw_channel, ChannelParams};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::harness::{mean_std, run_sweep, ExperimentPlan, SchemeKind};
use crate::linalg::{scale_columns, semi_unitary_residual, CMatrix, C64};
use crate::precoding::{
    alternating_projection, bb_design, bb_normalize, constant_modulus_projection, design_hybrid,
    exhaustive_phase_search, greedy_phase_search, snap_to_grid, svd_rf_init, ApaParams, PhaseGrid, RfMode,
};
use crate::quantization::{
    arcsin_law, bussgang_linearize, bussgang_linearize_with, one_bit_quantize, sample_quantizer_moments,
    LinearizationModel, Scheme, SignalStats,
};
use crate::rate::{achievable_rate, aggregate_noise_cov, effective_channel, RateContext};

/// Output covariance law of the one-bit quantizer, as a function of `C_xx`.
pub type OutputCovLaw = fn(&CMatrix) -> Result<CMatrix>;

pub const GROUPS: [&str; 6] = ["channel", "quantization", "bussgang", "rate", "precoding", "harness"];

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub filter: Option<String>,
    /// Law checked against the Monte Carlo quantizer statistics.
    pub output_cov_law: OutputCovLaw,
    pub monte_carlo_draws: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { filter: None, output_cov_law: arcsin_law, monte_carlo_draws: 200_000, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub group: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    /// Fixed-width pass/fail table, one row per check.
    pub fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.group.len() + c.name.len() + 2)
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let id = format!("{}::{}", c.group, c.name);
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status}  {id:<width$}  {}", c.detail);
        }
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), self.failures());
        out
    }
}

type CheckFn = fn(&ValidateOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("channel", "shape_and_determinism", channel_shape_and_determinism),
    ("channel", "rank_bounded_by_paths", channel_rank),
    ("channel", "mean_energy", channel_energy),
    ("quantization", "output_power", quantizer_output_power),
    ("quantization", "aqnm_model", aqnm_model),
    ("bussgang", "diagonal_distortion", bussgang_diagonal),
    ("bussgang", "trace_identity", bussgang_trace_identity),
    ("bussgang", "scale_invariance", bussgang_scale_invariance),
    ("bussgang", "monte_carlo_output_cov", bussgang_monte_carlo),
    ("bussgang", "monte_carlo_cross_cov", bussgang_cross_covariance),
    ("rate", "identity_channel", rate_identity),
    ("rate", "explicit_inverse_oracle", rate_explicit_inverse),
    ("rate", "monotone_in_noise", rate_monotone_in_noise),
    ("precoding", "apa_constraints", precoding_apa),
    ("precoding", "greedy_vs_exhaustive", precoding_greedy_exhaustive),
    ("precoding", "design_invariants", precoding_design_invariants),
    ("precoding", "fixed_point_convergence", precoding_fixed_point),
    ("harness", "sweep_determinism", harness_determinism),
    ("harness", "aggregation", harness_aggregation),
];

fn selected(filter: Option<&str>, group: &str, name: &str) -> bool {
    match filter {
        None => true,
        Some(f) => format!("{group}::{name}").contains(f),
    }
}

/// Runs every check matching the filter. A filter that matches nothing is an error.
pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    let filter = opts.filter.as_deref().filter(|f| !f.is_empty());
    let mut report = ValidationReport::default();
    for &(group, name, check) in CHECKS {
        if !selected(filter, group, name) {
            continue;
        }
        let (passed, detail) = match check(opts) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        report.checks.push(CheckOutcome { group, name, passed, detail });
    }
    if report.checks.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "filter '{}' matches no check",
            filter.unwrap_or_default()
        )));
    }
    Ok(report)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn verdict(ok: bool, detail: String) -> Result<(bool, String)> {
    Ok((ok, detail))
}

fn channel_shape_and_determinism(opts: &ValidateOptions) -> Result<(bool, String)> {
    let params = ChannelParams::default().with_seed(opts.seed);
    let a = draw_channel(&params)?;
    let b = draw_channel(&params)?;
    let other = draw_channel(&params.with_seed(opts.seed + 1))?;
    let ok = a.matrix.shape() == (8, 32) && a.matrix == b.matrix && a.matrix != other.matrix;
    verdict(ok, format!("shape {:?}, fingerprint {:016x}", a.matrix.shape(), a.fingerprint()))
}

fn channel_rank(opts: &ValidateOptions) -> Result<(bool, String)> {
    let params = ChannelParams { num_rays: 3, ..ChannelParams::default() }.with_seed(opts.seed);
    let h = draw_channel(&params)?.matrix;
    let sv = h.singular_values();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let tail = sorted[3] / sorted[0];
    verdict(tail < 1e-10, format!("4th/1st singular value {tail:.1e} with 3 paths"))
}

fn channel_energy(opts: &ValidateOptions) -> Result<(bool, String)> {
    let draws = 2000;
    let base = ChannelParams::default();
    let mut total = 0.0;
    for t in 0..draws {
        total += draw_channel(&base.with_seed(opts.seed.wrapping_mul(1_000_003).wrapping_add(t)))?
            .matrix
            .norm_squared();
    }
    let mean = total / draws as f64;
    let target = (base.num_tx_antennas * base.num_rx_antennas) as f64;
    let rel = (mean - target).abs() / target;
    verdict(rel < 0.1, format!("mean ‖H‖² = {mean:.1} vs {target} ({draws} draws)"))
}

fn quantizer_output_power(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x: Vec<C64> = (0..64).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let q = one_bit_quantize(&x, 2.5);
    let worst = q.iter().map(|z| (z.norm_sqr() - 2.5).abs()).fold(0.0, f64::max);
    let signs = x
        .iter()
        .zip(&q)
        .all(|(a, b)| (a.re >= 0.0) == (b.re > 0.0) && (a.im >= 0.0) == (b.im > 0.0));
    verdict(worst < 1e-12 && signs, format!("max power error {worst:.1e}"))
}

fn aqnm_model(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bb = gaussian_matrix(&mut rng, 4, 4);
    let eta = 0.3634;
    let stats = SignalStats::new(1.0, &bb);
    let lin = crate::quantization::aqnm_linearize(&stats, eta);
    let mut err: f64 = lin.weight.iter().map(|w| (w - (1.0 - eta).sqrt()).abs()).fold(0.0, f64::max);
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j { eta * (1.0 - eta) * stats.input_cov[(i, i)].re } else { 0.0 };
            err = err.max((lin.distortion_cov[(i, j)] - C64::new(expected, 0.0)).norm());
        }
    }
    verdict(err < 1e-14, format!("max deviation {err:.1e}"))
}

fn bussgang_diagonal(opts: &ValidateOptions) -> Result<(bool, String)> {
    let bb = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 2.0),
        C64::new(0.5, -0.5),
        C64::new(3.0, 0.0),
    ]));
    let lin = bussgang_linearize_with(&SignalStats::new(1.0, &bb), opts.output_cov_law)?;
    let expected = CMatrix::identity(4, 4) * C64::new(1.0 - FRAC_2_PI, 0.0);
    let err = (&lin.distortion_cov - expected).norm();
    verdict(err < 1e-10, format!("‖C_qq − (1−2/π)I‖ = {err:.1e}"))
}

fn bussgang_trace_identity(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let bb = gaussian_matrix(&mut rng, 4, 4);
        let lin = bussgang_linearize_with(&SignalStats::new(1.0, &bb), opts.output_cov_law)?;
        worst = worst.max((lin.distortion_trace() - 4.0 * (1.0 - FRAC_2_PI)).abs());
    }
    verdict(worst < 1e-12, format!("max |tr C_qq − N(1−2/π)| = {worst:.1e}"))
}

fn bussgang_scale_invariance(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bb = gaussian_matrix(&mut rng, 4, 4);
    let base = bussgang_linearize_with(&SignalStats::new(1.0, &bb), opts.output_cov_law)?;
    let mut worst: f64 = 0.0;
    for scale in [0.01, 0.5, 3.0, 250.0] {
        let scaled = &bb * C64::new(scale, 0.0);
        let lin = bussgang_linearize_with(&SignalStats::new(1.0, &scaled), opts.output_cov_law)?;
        worst = worst.max((lin.weighted(&scaled) - base.weighted(&bb)).norm());
        worst = worst.max((&lin.distortion_cov - &base.distortion_cov).norm());
    }
    verdict(worst < 1e-10, format!("max deviation under scaling {worst:.1e}"))
}

fn bussgang_monte_carlo(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for instance in 0..3u64 {
        let bb = gaussian_matrix(&mut rng, 4, 4);
        let stats = SignalStats::new(1.0, &bb);
        let law = (opts.output_cov_law)(&stats.input_cov)?;
        let sampled = sample_quantizer_moments(1.0, &bb, opts.monte_carlo_draws, opts.seed ^ (instance + 1));
        worst = worst.max((&sampled.output_cov - &law).norm() / law.norm());
    }
    verdict(
        worst < 0.01,
        format!("max relative Frobenius error {worst:.2e} ({} draws)", opts.monte_carlo_draws),
    )
}

fn bussgang_cross_covariance(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(99));
    let bb = gaussian_matrix(&mut rng, 4, 4);
    let stats = SignalStats::new(1.0, &bb);
    let lin = bussgang_linearize(&stats)?;
    let predicted = crate::linalg::scale_rows(&stats.input_cov, &lin.weight);
    let sampled = sample_quantizer_moments(1.0, &bb, opts.monte_carlo_draws, opts.seed);
    let rel = (&sampled.cross_cov - &predicted).norm() / predicted.norm();
    verdict(rel < 0.01, format!("‖E[x_q x^H] − A_B C_xx‖ relative {rel:.2e}"))
}

fn random_context_parts(rng: &mut ChaCha8Rng, nr: usize, nt: usize, n_rf: usize) -> Result<(CMatrix, CMatrix, CMatrix, LinearizationModel)> {
    let h = gaussian_matrix(rng, nr, nt);
    let rf = constant_modulus_projection(&gaussian_matrix(rng, nt, n_rf));
    let bb = gaussian_matrix(rng, n_rf, n_rf);
    let lin = bussgang_linearize(&SignalStats::new(1.0, &bb))?;
    Ok((h, rf, bb, lin))
}

fn rate_identity(_: &ValidateOptions) -> Result<(bool, String)> {
    let n = 3;
    let id = CMatrix::identity(n, n);
    let ideal = LinearizationModel::ideal(n, Scheme::Aqnm);
    let ctx = RateContext {
        channel: &id,
        rf_precoder: &id,
        linearization: &ideal,
        noise_variance: 1.0,
        data_power: 3.0,
        num_streams: n,
    };
    let rate = achievable_rate(&ctx, &id)?;
    verdict(rate == n as f64, format!("rate {rate} for N_r = {n}"))
}

/// `log2 det(I + (P_s/N_s)·C_nn^{-1}·G·G^H)` by explicit inversion and LU.
fn explicit_inverse_rate(ctx: &RateContext, bb: &CMatrix) -> Result<f64> {
    let he = effective_channel(ctx)?;
    let g = he * bb;
    let cnn = aggregate_noise_cov(ctx)?;
    let inv = cnn
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("singular noise covariance".into()))?;
    let n = g.nrows();
    let m = CMatrix::identity(n, n) + inv * &g * g.adjoint() * C64::new(ctx.data_power / ctx.num_streams as f64, 0.0);
    Ok(m.determinant().norm().log2())
}

fn rate_explicit_inverse(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for nr in 1..=3 {
        for _ in 0..10 {
            let (h, rf, bb, lin) = random_context_parts(&mut rng, nr, 6, 2)?;
            let ctx = RateContext {
                channel: &h,
                rf_precoder: &rf,
                linearization: &lin,
                noise_variance: 0.3,
                data_power: 2.0,
                num_streams: 2,
            };
            let fast = achievable_rate(&ctx, &bb)?;
            let slow = explicit_inverse_rate(&ctx, &bb)?;
            worst = worst.max((fast - slow).abs());
        }
    }
    verdict(worst < 1e-9, format!("max |Δrate| {worst:.1e} over 30 instances"))
}

fn rate_monotone_in_noise(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (h, rf, bb, lin) = random_context_parts(&mut rng, 4, 8, 3)?;
    let mut previous = f64::INFINITY;
    let mut ok = true;
    for noise in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &lin,
            noise_variance: noise,
            data_power: 1.0,
            num_streams: 3,
        };
        let rate = achievable_rate(&ctx, &bb)?;
        ok &= rate < previous && rate >= 0.0;
        previous = rate;
    }
    verdict(ok, format!("rate at σ² = 100 is {previous:.4}"))
}

fn precoding_apa(opts: &ValidateOptions) -> Result<(bool, String)> {
    let base = ChannelParams::default();
    let mut worst_modulus: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for t in 0..10 {
        let h = draw_channel(&base.with_seed(opts.seed + t))?.matrix;
        let apa = alternating_projection(&svd_rf_init(&h, 4)?, &ApaParams::default())?;
        let target = 1.0 / (h.ncols() as f64).sqrt();
        worst_modulus = worst_modulus.max(apa.rf.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max));
        worst_residual = worst_residual.max(semi_unitary_residual(&apa.rf));
    }
    verdict(
        worst_modulus < 1e-10 && worst_residual < 1e-2,
        format!("max modulus error {worst_modulus:.1e}, max residual {worst_residual:.1e}"),
    )
}

/// Tiny greedy instance built the way the design loop builds it: baseband
/// from the effective channel, normalized against a Bussgang model taken
/// from an earlier baseband precoder.
pub fn tiny_greedy_instance(
    rng: &mut ChaCha8Rng,
    grid: &PhaseGrid,
    size: usize,
    p_max: f64,
) -> Result<(CMatrix, CMatrix, CMatrix, LinearizationModel)> {
    let h = gaussian_matrix(rng, size, size);
    let (rf, _) = snap_to_grid(&constant_modulus_projection(&gaussian_matrix(rng, size, size)), grid);
    let previous = gaussian_matrix(rng, size, size);
    let lin = bussgang_linearize(&SignalStats::new(1.0, &previous))?;
    let effective = scale_columns(&(&h * &rf), &lin.weight);
    let bb = bb_normalize(&bb_design(&effective, size)?, &lin, p_max, 1.0, size)?;
    Ok((h, rf, bb, lin))
}

fn precoding_greedy_exhaustive(opts: &ValidateOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let grid = PhaseGrid::from_degrees(120.0)?;
    let mut worst_ratio = f64::INFINITY;
    let mut never_below_start = true;
    for _ in 0..10 {
        let (h, rf, bb, lin) = tiny_greedy_instance(&mut rng, &grid, 2, 10.0)?;
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &lin,
            noise_variance: 10.0,
            data_power: 1.0,
            num_streams: 2,
        };
        let greedy = greedy_phase_search(&ctx, &bb, &grid)?;
        let (best, _) = exhaustive_phase_search(&ctx, &bb, &grid)?;
        never_below_start &= greedy.final_rate >= greedy.initial_rate;
        worst_ratio = worst_ratio.min(greedy.final_rate / best);
    }
    verdict(
        worst_ratio >= 0.9 && never_below_start,
        format!("worst greedy/optimum ratio {worst_ratio:.4}"),
    )
}

fn precoding_design_invariants(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cfg = SystemConfig::default().with_rf_chains(2);
    let h = draw_channel(&cfg.channel_params(opts.seed))?.matrix;
    let params = cfg.design_params(0.0, RfMode::Redesign)?;
    let (hp, state) = design_hybrid(&h, &params)?;
    let power = state.power_checks.iter().map(|c| c.relative_error()).fold(0.0, f64::max);
    let greedy_ok = state.iterations[1..]
        .iter()
        .filter_map(|r| r.greedy)
        .all(|g| g.rate_after >= g.rate_before && g.evaluations == params.grid.len() * h.ncols() * params.n_rf);
    let ok = hp.modulus_error() < 1e-10 && hp.phases_on_grid(&params.grid) && power < 1e-8 && greedy_ok;
    verdict(
        ok,
        format!("modulus error {:.1e}, power error {power:.1e}", hp.modulus_error()),
    )
}

fn precoding_fixed_point(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cfg = SystemConfig::default();
    let series = crate::harness::run_convergence_on_seed(&cfg, &[2, 4, 8], opts.seed)?;
    let ok = series.iter().all(|s| s.converged && s.trace.len() <= 50);
    let lengths: Vec<usize> = series.iter().map(|s| s.trace.len()).collect();
    verdict(ok, format!("steps to ε per N_RF {{2,4,8}}: {lengths:?}"))
}

fn tiny_plan(seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        snr_grid_db: vec![-5.0, 5.0],
        n_trials: 3,
        schemes: SchemeKind::ALL.to_vec(),
        iteration_counts: vec![1, 2],
        base_seed: seed,
    }
}

fn harness_determinism(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cfg = SystemConfig::default().with_rf_chains(2);
    let plan = tiny_plan(opts.seed);
    let a = run_sweep(&plan, &cfg)?;
    let b = run_sweep(&plan, &cfg)?;
    let paired = a.samples.iter().all(|s| {
        a.samples
            .iter()
            .filter(|o| o.trial == s.trial)
            .all(|o| o.channel_fingerprint == s.channel_fingerprint)
    });
    verdict(
        a == b && paired && a.failures.is_empty(),
        format!("{} samples, {} records", a.samples.len(), a.records.len()),
    )
}

fn harness_aggregation(opts: &ValidateOptions) -> Result<(bool, String)> {
    let cfg = SystemConfig::default().with_rf_chains(2);
    let plan = tiny_plan(opts.seed);
    let sweep = run_sweep(&plan, &cfg)?;
    let mut worst: f64 = 0.0;
    for r in &sweep.records {
        let values: Vec<f64> = sweep
            .trial_rates(r.scheme, r.iterations, r.snr_db, plan.n_trials)
            .into_iter()
            .flatten()
            .collect();
        // Welford's streaming update as an independent reference
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for v in &values {
            n += 1.0;
            let delta = v - mean;
            mean += delta / n;
            m2 += delta * (v - mean);
        }
        let std = (m2 / (n - 1.0)).sqrt();
        worst = worst.max((mean - r.mean_rate).abs()).max((std - r.std_rate).abs());
    }
    let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
    let ok = worst < 1e-12 && m == 2.5 && (s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15;
    verdict(ok, format!("max deviation from streaming estimate {worst:.1e}"))
}
