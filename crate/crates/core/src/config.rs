//! System configuration: the simulation parameters plus algorithm tolerances
//! and experiment settings. Stored as TOML with one table per section; all
//! angles are in degrees on disk and converted to radians when channel or
//! design parameters are derived.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ClusterAngleDistribution, RayAngleDistribution};
use crate::error::{Error, Result};
use crate::precoding::{ApaParams, DesignParams, PhaseGrid, RfMode};
use crate::quantization::ONE_BIT_DISTORTION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub rf_chains: usize,
    /// Number of data streams; defaults to the number of RF chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub streams: Option<usize>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { tx_antennas: 32, rx_antennas: 8, rf_chains: 4, streams: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Maximum transmit signal power, watts.
    pub p_max: f64,
    /// Power of the unprecoded data, watts.
    pub p_s: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { p_max: 10.0, p_s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub clusters: usize,
    pub rays: usize,
    pub ray_spread_deg: f64,
    pub cluster_distribution: ClusterAngleDistribution,
    pub ray_distribution: RayAngleDistribution,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            clusters: 1,
            rays: 5,
            ray_spread_deg: 10.0,
            cluster_distribution: ClusterAngleDistribution::Uniform,
            ray_distribution: RayAngleDistribution::Laplace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub phase_resolution_deg: f64,
    pub epsilon: f64,
    /// Number of alternating-optimization iterations `K`.
    pub iterations: usize,
    pub fixed_point_max_iters: usize,
    pub apa_max_iters: usize,
    pub apa_tol: f64,
    pub distortion_factor: f64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            phase_resolution_deg: 5.0,
            epsilon: 1e-12,
            iterations: 3,
            fixed_point_max_iters: 100,
            apa_max_iters: 500,
            apa_tol: 1e-8,
            distortion_factor: ONE_BIT_DISTORTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub snr_step_db: f64,
    pub trials: usize,
    /// RF-chain counts swept by the rate experiment.
    pub rf_chain_sweep: Vec<usize>,
    /// RF-chain counts traced by the convergence experiment.
    pub convergence_rf_chains: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            snr_min_db: -10.0,
            snr_max_db: 10.0,
            snr_step_db: 5.0,
            trials: 200,
            rf_chain_sweep: vec![4, 8],
            convergence_rf_chains: vec![2, 4, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub array: ArrayConfig,
    pub power: PowerConfig,
    pub channel: ChannelConfig,
    pub algorithm: AlgorithmConfig,
    pub experiment: ExperimentConfig,
}

fn bad(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn streams(&self) -> usize {
        self.array.streams.unwrap_or(self.array.rf_chains)
    }

    /// Copy with `rf_chains = n_rf` and streams following it.
    pub fn with_rf_chains(&self, n_rf: usize) -> Self {
        let mut cfg = self.clone();
        cfg.array.rf_chains = n_rf;
        cfg.array.streams = None;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.array;
        let n_s = self.streams();
        if a.tx_antennas == 0 || a.rx_antennas == 0 || a.rf_chains == 0 || n_s == 0 {
            return Err(bad("antenna, RF-chain and stream counts must be at least 1".into()));
        }
        if !(n_s <= a.rf_chains && a.rf_chains <= a.tx_antennas) {
            return Err(bad(format!(
                "need N_s ≤ N_RF ≤ N_t, got N_s = {n_s}, N_RF = {}, N_t = {}",
                a.rf_chains, a.tx_antennas
            )));
        }
        if n_s != a.rf_chains {
            return Err(bad(format!(
                "N_s = {n_s} differs from N_RF = {}; the quantizer models are sized by N_RF and need N_s = N_RF",
                a.rf_chains
            )));
        }
        if n_s > a.tx_antennas.min(a.rx_antennas) {
            return Err(bad(format!("N_s = {n_s} exceeds min(N_t, N_r)")));
        }
        if !(self.power.p_max > 0.0 && self.power.p_s > 0.0) {
            return Err(bad("p_max and p_s must be positive".into()));
        }
        if self.channel.clusters == 0 || self.channel.rays == 0 || !(self.channel.ray_spread_deg > 0.0) {
            return Err(bad("clusters, rays and ray spread must be positive".into()));
        }
        let alg = &self.algorithm;
        PhaseGrid::from_degrees(alg.phase_resolution_deg)?;
        if !(alg.epsilon > 0.0) || alg.iterations == 0 || alg.fixed_point_max_iters == 0 || alg.apa_max_iters == 0 {
            return Err(bad("epsilon, iterations and iteration caps must be positive".into()));
        }
        if !(alg.apa_tol >= 0.0) || !(0.0..1.0).contains(&alg.distortion_factor) {
            return Err(bad("apa_tol must be ≥ 0 and distortion_factor in [0, 1)".into()));
        }
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(bad("trials must be at least 1".into()));
        }
        if !(e.snr_step_db > 0.0) || !(e.snr_max_db >= e.snr_min_db) {
            return Err(bad("SNR grid needs step > 0 and max ≥ min".into()));
        }
        for &n in e.rf_chain_sweep.iter().chain(&e.convergence_rf_chains) {
            if n == 0 || n > a.tx_antennas {
                return Err(bad(format!("RF-chain count {n} outside 1..={}", a.tx_antennas)));
            }
        }
        Ok(())
    }

    pub fn snr_grid_db(&self) -> Vec<f64> {
        let e = &self.experiment;
        let count = ((e.snr_max_db - e.snr_min_db) / e.snr_step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| e.snr_min_db + i as f64 * e.snr_step_db).collect()
    }

    /// `σ² = P_max / 10^{SNR/10}`.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.power.p_max / 10f64.powf(snr_db / 10.0)
    }

    pub fn channel_params(&self, seed: u64) -> ChannelParams {
        ChannelParams {
            num_tx_antennas: self.array.tx_antennas,
            num_rx_antennas: self.array.rx_antennas,
            num_clusters: self.channel.clusters,
            num_rays: self.channel.rays,
            ray_angle_spread: self.channel.ray_spread_deg.to_radians(),
            cluster_angle_distribution: self.channel.cluster_distribution,
            ray_angle_distribution: self.channel.ray_distribution,
            seed,
        }
    }

    pub fn design_params(&self, snr_db: f64, rf_mode: RfMode) -> Result<DesignParams> {
        Ok(DesignParams {
            n_rf: self.array.rf_chains,
            n_s: self.streams(),
            p_max: self.power.p_max,
            p_s: self.power.p_s,
            eta: self.algorithm.distortion_factor,
            noise_variance: self.noise_variance(snr_db),
            epsilon: self.algorithm.epsilon,
            fixed_point_max_iters: self.algorithm.fixed_point_max_iters,
            apa: ApaParams { max_iters: self.algorithm.apa_max_iters, tol: self.algorithm.apa_tol },
            grid: PhaseGrid::from_degrees(self.algorithm.phase_resolution_deg)?,
            iterations: self.algorithm.iterations,
            rf_mode,
        })
    }
}
