use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{dominant_right_singular_vectors, polar_factor, semi_unitary_residual, CMatrix, C64};

/// Right singular vectors of `H` for the `n_rf` largest singular values.
pub fn svd_rf_init(channel: &CMatrix, n_rf: usize) -> Result<CMatrix> {
    if n_rf == 0 || n_rf > channel.ncols() {
        return Err(Error::InvalidParameter(format!(
            "N_RF = {n_rf} must lie in 1..={}",
            channel.ncols()
        )));
    }
    dominant_right_singular_vectors(channel, n_rf)
}

/// Entry-wise `e^{j·arg(x)} / √N_t`; zero entries get phase 0.
pub fn constant_modulus_projection(m: &CMatrix) -> CMatrix {
    let amp = 1.0 / (m.nrows() as f64).sqrt();
    m.map(|z| {
        let phase = if z.re == 0.0 && z.im == 0.0 { 0.0 } else { z.arg() };
        C64::from_polar(amp, phase)
    })
}

/// Largest deviation of an entry's modulus from `1/√N_t`.
pub fn modulus_error(rf: &CMatrix) -> f64 {
    let target = 1.0 / (rf.nrows() as f64).sqrt();
    rf.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApaParams {
    pub max_iters: usize,
    /// Stop once successive constant-modulus iterates move less than this
    /// (Frobenius norm).
    pub tol: f64,
}

impl Default for ApaParams {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct ApaOutcome {
    /// Always exactly constant modulus.
    pub rf: CMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// `‖F^H F − I‖_F` of the returned matrix.
    pub semi_unitary_residual: f64,
}

/// Alternates projections onto the constant-modulus set and the set of
/// matrices with orthonormal columns, ending on the constant-modulus side.
///
/// Without convergence, the iterate with the smallest semi-unitary residual
/// is returned and `converged` is false.
pub fn alternating_projection(candidate: &CMatrix, params: &ApaParams) -> Result<ApaOutcome> {
    if candidate.ncols() > candidate.nrows() {
        return Err(Error::InvalidParameter(format!(
            "RF precoder is {}×{}; semi-unitary projection needs N_RF ≤ N_t",
            candidate.nrows(),
            candidate.ncols()
        )));
    }
    let mut current = constant_modulus_projection(candidate);
    let mut best_residual = semi_unitary_residual(&current);
    let mut best = current.clone();
    for it in 1..=params.max_iters {
        let next = constant_modulus_projection(&polar_factor(&current)?);
        let step = (&next - &current).norm();
        current = next;
        let residual = semi_unitary_residual(&current);
        if residual < best_residual {
            best_residual = residual;
            best = current.clone();
        }
        if step < params.tol {
            return Ok(ApaOutcome { rf: current, iterations: it, converged: true, semi_unitary_residual: residual });
        }
    }
    Ok(ApaOutcome {
        rf: best,
        iterations: params.max_iters,
        converged: false,
        semi_unitary_residual: best_residual,
    })
}

/// Phase-shifter grid `{−π, −π+Δ, …}` with `⌈2π/Δ⌉` distinct points.
///
/// The endpoint `π` of the closed set aliases `−π` (index 0), so it is not
/// stored separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    resolution: f64,
    len: usize,
}

impl PhaseGrid {
    pub fn from_degrees(resolution_deg: f64) -> Result<Self> {
        if !(resolution_deg > 0.0 && resolution_deg <= 360.0) {
            return Err(Error::InvalidParameter(format!(
                "phase resolution must lie in (0, 360] degrees, got {resolution_deg}"
            )));
        }
        // counted in degrees so that 360/5 is exactly 72
        let len = (360.0 / resolution_deg - 1e-9).ceil() as usize;
        Ok(Self { resolution: resolution_deg.to_radians(), len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Resolution `Δ` in radians.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn phase(&self, index: usize) -> f64 {
        -PI + index as f64 * self.resolution
    }

    pub fn entry(&self, index: usize, num_tx: usize) -> C64 {
        C64::from_polar(1.0 / (num_tx as f64).sqrt(), self.phase(index))
    }

    /// Index of the grid point closest to `phase` on the circle; ties go to
    /// the lower index.
    pub fn snap(&self, phase: f64) -> usize {
        let wrapped = (phase + PI).rem_euclid(2.0 * PI);
        let k0 = ((wrapped / self.resolution).floor() as usize).min(self.len - 1);
        let mut candidates = [k0, (k0 + 1).min(self.len - 1), 0];
        candidates.sort_unstable();
        let distance = |k: usize| {
            let d = (wrapped - k as f64 * self.resolution).abs();
            d.min(2.0 * PI - d)
        };
        let mut best = candidates[0];
        for &k in &candidates[1..] {
            if distance(k) < distance(best) {
                best = k;
            }
        }
        best
    }

    pub fn rf_from_indices(&self, phases: &[usize], num_tx: usize, n_rf: usize) -> CMatrix {
        CMatrix::from_fn(num_tx, n_rf, |m, n| self.entry(phases[m * n_rf + n], num_tx))
    }
}

/// Snaps every entry's phase to the grid. Returns the grid matrix and its
/// row-major indices.
pub fn snap_to_grid(rf: &CMatrix, grid: &PhaseGrid) -> (CMatrix, Vec<usize>) {
    let (nt, n_rf) = rf.shape();
    let mut phases = Vec::with_capacity(nt * n_rf);
    for m in 0..nt {
        for n in 0..n_rf {
            let z = rf[(m, n)];
            let phase = if z.re == 0.0 && z.im == 0.0 { 0.0 } else { z.arg() };
            phases.push(grid.snap(phase));
        }
    }
    (grid.rf_from_indices(&phases, nt, n_rf), phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dft_columns(nt: usize, n_rf: usize) -> CMatrix {
        let amp = 1.0 / (nt as f64).sqrt();
        CMatrix::from_fn(nt, n_rf, |m, n| C64::from_polar(amp, -2.0 * PI * (m * n) as f64 / nt as f64))
    }

    #[test]
    fn svd_init_on_diagonal_channel() {
        let mut h = CMatrix::zeros(3, 5);
        h[(0, 1)] = C64::new(1.0, 0.0);
        h[(1, 0)] = C64::new(3.0, 0.0);
        h[(2, 2)] = C64::new(2.0, 0.0);
        let v = svd_rf_init(&h, 3).unwrap();
        for (col, canonical) in [0usize, 2, 1].into_iter().enumerate() {
            assert!((v[(canonical, col)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_init_rank_one() {
        let u = CMatrix::from_column_slice(2, 1, &[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let v = CMatrix::from_column_slice(
            3,
            1,
            &[C64::new(0.0, 0.6), C64::new(0.8, 0.0), C64::new(0.0, 0.0)],
        );
        let h = &u * v.adjoint() * C64::new(2.0, 0.0);
        let got = svd_rf_init(&h, 1).unwrap();
        let overlap = (v.adjoint() * &got)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_init_rejects_too_many_chains() {
        assert!(svd_rf_init(&CMatrix::identity(2, 3), 4).is_err());
    }

    #[test]
    fn dft_columns_are_a_fixed_point() {
        let f = dft_columns(32, 4);
        let out = alternating_projection(&f, &ApaParams::default()).unwrap();
        assert!(out.converged);
        assert!((out.rf - &f).norm() < 1e-12);
        assert!(out.semi_unitary_residual < 1e-12);
    }

    #[test]
    fn one_cycle_moves_semi_unitary_input_towards_constant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = CMatrix::from_fn(16, 3, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let s0 = polar_factor(&raw).unwrap();
        let dist0 = (&s0 - constant_modulus_projection(&s0)).norm();
        let s1 = polar_factor(&constant_modulus_projection(&s0)).unwrap();
        let dist1 = (&s1 - constant_modulus_projection(&s1)).norm();
        assert!(dist1 < dist0);
    }

    #[test]
    fn apa_output_is_exactly_constant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let raw = CMatrix::from_fn(32, 4, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let out = alternating_projection(&raw, &ApaParams { max_iters: 3, tol: 0.0 }).unwrap();
        assert!(!out.converged);
        let target = 1.0 / 32f64.sqrt();
        assert!(out.rf.iter().all(|z| (z.norm() - target).abs() < 1e-12));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(PhaseGrid::from_degrees(5.0).unwrap().len(), 72);
        assert_eq!(PhaseGrid::from_degrees(120.0).unwrap().len(), 3);
        assert_eq!(PhaseGrid::from_degrees(90.0).unwrap().len(), 4);
        assert_eq!(PhaseGrid::from_degrees(7.0).unwrap().len(), 52);
        assert_eq!(PhaseGrid::from_degrees(360.0).unwrap().len(), 1);
        assert!(PhaseGrid::from_degrees(0.0).is_err());
        assert!(PhaseGrid::from_degrees(400.0).is_err());
    }

    #[test]
    fn snapping_wraps_around() {
        let grid = PhaseGrid::from_degrees(90.0).unwrap();
        assert_eq!(grid.snap(PI), 0);
        assert_eq!(grid.snap(-PI), 0);
        assert_eq!(grid.snap(0.1), 2);
        assert_eq!(grid.snap(PI - 0.1), 0);
        assert_eq!(grid.snap(PI / 2.0 + 0.01), 3);
        // midway between index 0 and 1 goes to the lower index
        assert_eq!(grid.snap(-PI + PI / 4.0), 0);
        let odd = PhaseGrid::from_degrees(7.0).unwrap();
        for k in 0..odd.len() {
            assert_eq!(odd.snap(odd.phase(k)), k);
        }
    }
}
