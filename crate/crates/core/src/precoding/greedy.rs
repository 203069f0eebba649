use crate::error::{Error, Result};
use crate::linalg::{whitened_log_det_flat, CMatrix, C64};
use crate::rate::{achievable_rate, noise_cov_from, RateContext};

use super::rf::PhaseGrid;

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub rf: CMatrix,
    /// Row-major grid index per entry; `None` where the incoming off-grid
    /// phase beat every grid candidate and was kept.
    pub phases: Vec<Option<usize>>,
    pub evaluations: usize,
    pub initial_rate: f64,
    pub final_rate: f64,
    /// Rate after visiting each entry, in visiting order.
    pub entry_rates: Vec<f64>,
}

/// Coordinate-wise phase search over the RF precoder.
///
/// Entries are visited once in row-major order. For each entry every grid
/// phase is scored with all other entries held fixed and the best one is
/// kept (lowest index on ties). A change is only committed when the full
/// re-evaluated rate does not drop, so the rate is non-decreasing across the
/// sweep.
pub fn greedy_phase_search(ctx: &RateContext, bb: &CMatrix, grid: &PhaseGrid) -> Result<GreedyOutcome> {
    let initial_rate = achievable_rate(ctx, bb)?;
    let mut rf = ctx.rf_precoder.clone();
    let (nt, n_rf) = rf.shape();

    let mut phases: Vec<Option<usize>> = Vec::with_capacity(nt * n_rf);
    for m in 0..nt {
        for n in 0..n_rf {
            let z = rf[(m, n)];
            let k = grid.snap(z.arg());
            phases.push((grid.entry(k, nt) == z).then_some(k));
        }
    }

    let mut eval = EntryEvaluator::new(ctx, bb);
    eval.refresh(&rf);
    let mut current = initial_rate;
    let mut evaluations = 0;
    let mut entry_rates = Vec::with_capacity(nt * n_rf);
    let mut scores = vec![f64::NEG_INFINITY; grid.len()];

    for m in 0..nt {
        for n in 0..n_rf {
            let idx = m * n_rf + n;
            let old = rf[(m, n)];
            for (k, score) in scores.iter_mut().enumerate() {
                *score = eval.candidate_rate(m, n, grid.entry(k, nt) - old).unwrap_or(f64::NEG_INFINITY);
                evaluations += 1;
            }
            if let Some(k) = phases[idx] {
                scores[k] = current;
            }
            let mut best = 0;
            for k in 1..scores.len() {
                if scores[k] > scores[best] {
                    best = k;
                }
            }
            if phases[idx] != Some(best) && scores[best] >= current {
                rf[(m, n)] = grid.entry(best, nt);
                let fresh = achievable_rate(&RateContext { rf_precoder: &rf, ..*ctx }, bb)?;
                if fresh >= current {
                    current = fresh;
                    phases[idx] = Some(best);
                    eval.refresh(&rf);
                } else {
                    rf[(m, n)] = old;
                }
            }
            entry_rates.push(current);
        }
    }

    Ok(GreedyOutcome { rf, phases, evaluations, initial_rate, final_rate: current, entry_rates })
}

/// Rate of the RF precoder with one entry perturbed, via low-rank updates of
/// the cached `H·F_RF` products.
pub(crate) struct EntryEvaluator<'a> {
    channel: &'a CMatrix,
    cqq: &'a CMatrix,
    weighted_bb: CMatrix,
    scale: f64,
    noise_variance: f64,
    nr: usize,
    ns: usize,
    /// `H·F_RF·C_qq`.
    hf_cqq: CMatrix,
    /// `H·F_RF·A·F_BB`, row-major.
    signal: Vec<C64>,
    /// `C_ññ`, row-major.
    noise: Vec<C64>,
    noise_buf: Vec<C64>,
    signal_buf: Vec<C64>,
    inner_buf: Vec<C64>,
    delta_col: Vec<C64>,
    pivots: Vec<f64>,
}

impl<'a> EntryEvaluator<'a> {
    pub(crate) fn new(ctx: &RateContext<'a>, bb: &CMatrix) -> Self {
        let nr = ctx.channel.nrows();
        let ns = bb.ncols();
        Self {
            channel: ctx.channel,
            cqq: &ctx.linearization.distortion_cov,
            weighted_bb: ctx.linearization.weighted(bb),
            scale: ctx.data_power / ctx.num_streams as f64,
            noise_variance: ctx.noise_variance,
            nr,
            ns,
            hf_cqq: CMatrix::zeros(nr, ctx.rf_precoder.ncols()),
            signal: vec![C64::default(); nr * ns],
            noise: vec![C64::default(); nr * nr],
            noise_buf: vec![C64::default(); nr * nr],
            signal_buf: vec![C64::default(); nr * ns],
            inner_buf: vec![C64::default(); nr * nr],
            delta_col: vec![C64::default(); nr],
            pivots: vec![0.0; nr],
        }
    }

    pub(crate) fn refresh(&mut self, rf: &CMatrix) {
        let hf = self.channel * rf;
        self.hf_cqq = &hf * self.cqq;
        let signal = &hf * &self.weighted_bb;
        let noise = noise_cov_from(&hf, self.cqq, self.noise_variance);
        for i in 0..self.nr {
            for c in 0..self.ns {
                self.signal[i * self.ns + c] = signal[(i, c)];
            }
            for j in 0..self.nr {
                self.noise[i * self.nr + j] = noise[(i, j)];
            }
        }
    }

    /// Rate with `[F_RF]_{m,n}` replaced by its current value plus `delta`.
    pub(crate) fn candidate_rate(&mut self, m: usize, n: usize, delta: C64) -> Option<f64> {
        let (nr, ns) = (self.nr, self.ns);
        for i in 0..nr {
            self.delta_col[i] = self.channel[(i, m)] * delta;
        }
        let c_nn = self.cqq[(n, n)];
        for i in 0..nr {
            let ui = self.delta_col[i];
            let wi = self.hf_cqq[(i, n)];
            for j in 0..=i {
                let uj = self.delta_col[j];
                let wj = self.hf_cqq[(j, n)];
                self.noise_buf[i * nr + j] =
                    self.noise[i * nr + j] + ui * wj.conj() + wi * uj.conj() + c_nn * ui * uj.conj();
            }
            for c in 0..ns {
                self.signal_buf[i * ns + c] = self.signal[i * ns + c] + ui * self.weighted_bb[(n, c)];
            }
        }
        whitened_log_det_flat(
            &mut self.noise_buf,
            &mut self.signal_buf,
            &mut self.inner_buf,
            &mut self.pivots,
            nr,
            ns,
            self.scale,
        )
    }
}

/// Best rate over every grid assignment of the RF precoder, with its
/// row-major phase indices. Only meant as an oracle for tiny sizes; more
/// than 2^20 combinations is rejected.
pub fn exhaustive_phase_search(ctx: &RateContext, bb: &CMatrix, grid: &PhaseGrid) -> Result<(f64, Vec<usize>)> {
    let (nt, n_rf) = ctx.rf_precoder.shape();
    let entries = nt * n_rf;
    let k = grid.len();
    let total = (k as f64).powi(entries as i32);
    if total > (1u64 << 20) as f64 {
        return Err(Error::InvalidParameter(format!("exhaustive search over {total} combinations is too large")));
    }
    let mut phases = vec![0usize; entries];
    let mut best = (f64::NEG_INFINITY, phases.clone());
    loop {
        let rf = grid.rf_from_indices(&phases, nt, n_rf);
        let rate = achievable_rate(&RateContext { rf_precoder: &rf, ..*ctx }, bb)?;
        if rate > best.0 {
            best = (rate, phases.clone());
        }
        // odometer increment, last entry fastest
        let mut e = entries;
        loop {
            if e == 0 {
                return Ok(best);
            }
            e -= 1;
            phases[e] += 1;
            if phases[e] < k {
                break;
            }
            phases[e] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::constant_modulus_projection;
    use crate::quantization::{bussgang_linearize, SignalStats};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn incremental_rate_matches_full_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let h = random(4, 6, &mut rng);
            let rf = constant_modulus_projection(&random(6, 3, &mut rng));
            let bb = random(3, 3, &mut rng);
            let lin = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap();
            let ctx = RateContext {
                channel: &h,
                rf_precoder: &rf,
                linearization: &lin,
                noise_variance: rng.random_range(0.01..2.0),
                data_power: 1.0,
                num_streams: 3,
            };
            let mut eval = EntryEvaluator::new(&ctx, &bb);
            eval.refresh(&rf);
            for _ in 0..10 {
                let (m, n) = (rng.random_range(0..6), rng.random_range(0..3));
                let new = C64::from_polar(1.0 / 6f64.sqrt(), rng.random_range(-3.0..3.0));
                let fast = eval.candidate_rate(m, n, new - rf[(m, n)]).unwrap();
                let mut perturbed = rf.clone();
                perturbed[(m, n)] = new;
                let full = achievable_rate(&RateContext { rf_precoder: &perturbed, ..ctx }, &bb).unwrap();
                assert!((fast - full).abs() < 1e-9, "{fast} vs {full}");
            }
        }
    }

    #[test]
    fn single_entry_search_is_exhaustive() {
        let grid = PhaseGrid::from_degrees(90.0).unwrap();
        let h = CMatrix::from_element(2, 1, C64::new(0.8, -0.3));
        let rf = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let bb = CMatrix::from_element(1, 1, C64::new(0.5, 0.5));
        let lin = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap();
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &lin,
            noise_variance: 0.3,
            data_power: 1.0,
            num_streams: 1,
        };
        let out = greedy_phase_search(&ctx, &bb, &grid).unwrap();
        assert_eq!(out.evaluations, 4);
        let best = (0..4)
            .map(|k| {
                let cand = CMatrix::from_element(1, 1, grid.entry(k, 1));
                achievable_rate(&RateContext { rf_precoder: &cand, ..ctx }, &bb).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((out.final_rate - best).abs() < 1e-12);
        assert!(out.phases[0].is_some());
    }

    #[test]
    fn exhaustive_search_dominates_greedy_and_reports_its_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = PhaseGrid::from_degrees(120.0).unwrap();
        let h = random(2, 2, &mut rng);
        let rf = grid.rf_from_indices(&[0, 1, 2, 0], 2, 2);
        let bb = random(2, 2, &mut rng);
        let lin = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap();
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &lin,
            noise_variance: 0.2,
            data_power: 1.0,
            num_streams: 2,
        };
        let (best, phases) = exhaustive_phase_search(&ctx, &bb, &grid).unwrap();
        let greedy = greedy_phase_search(&ctx, &bb, &grid).unwrap();
        assert!(best >= greedy.final_rate - 1e-12);
        let argmax = grid.rf_from_indices(&phases, 2, 2);
        let rate = achievable_rate(&RateContext { rf_precoder: &argmax, ..ctx }, &bb).unwrap();
        assert_eq!(rate, best);
    }

    #[test]
    fn exhaustive_search_refuses_large_problems() {
        let grid = PhaseGrid::from_degrees(5.0).unwrap();
        let h = CMatrix::identity(4, 4);
        let rf = grid.rf_from_indices(&[0; 16], 4, 4);
        let bb = CMatrix::identity(4, 4);
        let lin = bussgang_linearize(&SignalStats::new(1.0, &bb)).unwrap();
        let ctx = RateContext {
            channel: &h,
            rf_precoder: &rf,
            linearization: &lin,
            noise_variance: 1.0,
            data_power: 1.0,
            num_streams: 4,
        };
        assert!(matches!(exhaustive_phase_search(&ctx, &bb, &grid), Err(Error::InvalidParameter(_))));
    }
}
