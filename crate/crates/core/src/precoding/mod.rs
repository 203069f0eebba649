//! RF and baseband precoder design.

mod baseband;
mod design;
mod greedy;
mod rf;

pub use baseband::{bb_design, bb_normalize, fixed_point_cov, power_full, power_reduced, FixedPointOutcome, FixedPointParams};
pub use design::{
    design_hybrid, full_digital_baseline, full_digital_precoder, DesignParams, DesignState, GreedyStats,
    IterationRecord, PowerCheck, RfMode,
};
pub use greedy::{exhaustive_phase_search, greedy_phase_search, GreedyOutcome};
pub use rf::{
    alternating_projection, constant_modulus_projection, modulus_error, snap_to_grid, svd_rf_init, ApaOutcome, ApaParams,
    PhaseGrid,
};

use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    /// `N_t × N_RF` analog precoder.
    pub rf: CMatrix,
    /// `N_RF × N_s` baseband precoder.
    pub bb: CMatrix,
    /// Row-major phase-grid indices of `rf`, present once the RF stage has
    /// been snapped to the phase-shifter grid.
    pub phases: Option<Vec<usize>>,
}

impl HybridPrecoder {
    /// Largest deviation of `|[F_RF]_{m,n}|` from `1/√N_t`.
    pub fn modulus_error(&self) -> f64 {
        rf::modulus_error(&self.rf)
    }

    /// True when `phases` is present and `rf` is exactly the matrix those
    /// grid indices describe.
    pub fn phases_on_grid(&self, grid: &PhaseGrid) -> bool {
        let Some(phases) = &self.phases else {
            return false;
        };
        let (nt, n_rf) = self.rf.shape();
        if phases.len() != nt * n_rf || phases.iter().any(|&k| k >= grid.len()) {
            return false;
        }
        let rebuilt = grid.rf_from_indices(phases, nt, n_rf);
        rebuilt == self.rf
    }
}
