//! Clustered (Saleh-Valenzuela style) narrowband mmWave channel.
//!
//! `H = sqrt(N_t·N_r / (N_c·N_p)) · Σ_{c,p} α_{c,p} · a_rx(θ_{c,p}) · a_tx(φ_{c,p})^H`
//! with i.i.d. `CN(0, 1)` ray gains and half-wavelength uniform linear arrays at
//! both ends. Cluster angles are uniform over `[-π/2, π/2)`; ray angles add a
//! zero-mean Laplace offset (standard deviation = configured spread) to their
//! cluster angle, independently at the transmitter and the receiver.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{self, Write};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterAngleDistribution {
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayAngleDistribution {
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub num_clusters: usize,
    pub num_rays: usize,
    /// Standard deviation of the per-ray angular offset, radians.
    pub ray_angle_spread: f64,
    pub cluster_angle_distribution: ClusterAngleDistribution,
    pub ray_angle_distribution: RayAngleDistribution,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_tx_antennas: 32,
            num_rx_antennas: 8,
            num_clusters: 1,
            num_rays: 5,
            ray_angle_spread: 10f64.to_radians(),
            cluster_angle_distribution: ClusterAngleDistribution::Uniform,
            ray_angle_distribution: RayAngleDistribution::Laplace,
            seed: 0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_tx_antennas", self.num_tx_antennas),
            ("num_rx_antennas", self.num_rx_antennas),
            ("num_clusters", self.num_clusters),
            ("num_rays", self.num_rays),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
            }
        }
        if !(self.ray_angle_spread > 0.0) || !self.ray_angle_spread.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ray angle spread must be positive, got {}",
                self.ray_angle_spread
            )));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N_r × N_t` channel matrix.
    pub matrix: CMatrix,
    pub cluster_angles_tx: Vec<f64>,
    pub cluster_angles_rx: Vec<f64>,
    /// Ray angles indexed `[cluster][ray]`.
    pub ray_angles_tx: Vec<Vec<f64>>,
    pub ray_angles_rx: Vec<Vec<f64>>,
    pub ray_gains: Vec<Vec<C64>>,
}

/// Half-wavelength ULA response, `a(θ)_k = exp(j·π·k·sin θ) / √N`.
pub fn ula_response(num_antennas: usize, angle: f64) -> DVector<C64> {
    let norm = 1.0 / (num_antennas as f64).sqrt();
    let s = angle.sin();
    DVector::from_fn(num_antennas, |k, _| {
        C64::from_polar(norm, PI * k as f64 * s)
    })
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    // difference of two unit exponentials is Laplace(0, 1), variance 2
    let scale = std_dev / std::f64::consts::SQRT_2;
    let a: f64 = rng.sample(Exp1);
    let b: f64 = rng.sample(Exp1);
    scale * (a - b)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws one realization using the caller's generator.
pub fn generate_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ChannelRealization> {
    params.validate()?;
    let mut cluster_angles_tx = Vec::with_capacity(params.num_clusters);
    let mut cluster_angles_rx = Vec::with_capacity(params.num_clusters);
    let mut ray_angles_tx = Vec::with_capacity(params.num_clusters);
    let mut ray_angles_rx = Vec::with_capacity(params.num_clusters);
    let mut ray_gains = Vec::with_capacity(params.num_clusters);

    for _ in 0..params.num_clusters {
        let tx = match params.cluster_angle_distribution {
            ClusterAngleDistribution::Uniform => rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        };
        let rx = match params.cluster_angle_distribution {
            ClusterAngleDistribution::Uniform => rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        };
        let mut rays_tx = Vec::with_capacity(params.num_rays);
        let mut rays_rx = Vec::with_capacity(params.num_rays);
        let mut gains = Vec::with_capacity(params.num_rays);
        for _ in 0..params.num_rays {
            match params.ray_angle_distribution {
                RayAngleDistribution::Laplace => {
                    rays_tx.push(tx + laplace(rng, params.ray_angle_spread));
                    rays_rx.push(rx + laplace(rng, params.ray_angle_spread));
                }
            }
            gains.push(complex_gaussian(rng));
        }
        cluster_angles_tx.push(tx);
        cluster_angles_rx.push(rx);
        ray_angles_tx.push(rays_tx);
        ray_angles_rx.push(rays_rx);
        ray_gains.push(gains);
    }

    let mut realization = ChannelRealization {
        matrix: CMatrix::zeros(params.num_rx_antennas, params.num_tx_antennas),
        cluster_angles_tx,
        cluster_angles_rx,
        ray_angles_tx,
        ray_angles_rx,
        ray_gains,
    };
    realization.matrix = realization.recombine(params.num_tx_antennas, params.num_rx_antennas);
    Ok(realization)
}

/// Draws the realization determined by `params.seed`.
pub fn draw_channel(params: &ChannelParams) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    generate_channel(params, &mut rng)
}

impl ChannelRealization {
    /// Rebuilds the channel matrix from the stored angles and gains.
    pub fn recombine(&self, num_tx: usize, num_rx: usize) -> CMatrix {
        let num_paths: usize = self.ray_gains.iter().map(Vec::len).sum();
        let scale = ((num_tx * num_rx) as f64 / num_paths as f64).sqrt();
        let mut h = CMatrix::zeros(num_rx, num_tx);
        for (c, gains) in self.ray_gains.iter().enumerate() {
            for (p, &gain) in gains.iter().enumerate() {
                let a_rx = ula_response(num_rx, self.ray_angles_rx[c][p]);
                let a_tx = ula_response(num_tx, self.ray_angles_tx[c][p]);
                h += (a_rx * a_tx.adjoint()) * (gain * scale);
            }
        }
        h
    }

    pub fn num_tx(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn num_rx(&self) -> usize {
        self.matrix.nrows()
    }

    /// FNV-1a over the bit patterns of the matrix entries.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for z in self.matrix.iter() {
            for bits in [z.re.to_bits(), z.im.to_bits()] {
                for byte in bits.to_le_bytes() {
                    hash ^= byte as u64;
                    hash = hash.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        hash
    }

    /// Row-major dump, one matrix row per line as `re,im` pairs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.matrix.row_iter() {
            let line: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sorted_svd;

    fn table_one(seed: u64) -> ChannelParams {
        ChannelParams { seed, ..ChannelParams::default() }
    }

    #[test]
    fn table_one_shape() {
        let params = ChannelParams { seed: 7, ..ChannelParams::default() };
        let ch = draw_channel(&params).unwrap();
        assert_eq!(ch.matrix.shape(), (8, 32));
        assert!(ch.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn degenerate_single_antenna() {
        let params = ChannelParams {
            num_tx_antennas: 1,
            num_rx_antennas: 1,
            num_clusters: 1,
            num_rays: 1,
            seed: 3,
            ..ChannelParams::default()
        };
        let ch = draw_channel(&params).unwrap();
        // both 1-element responses equal 1, scale factor is 1
        assert!((ch.matrix[(0, 0)] - ch.ray_gains[0][0]).norm() < 1e-15);
    }

    #[test]
    fn zero_counts_rejected() {
        for p in [
            ChannelParams { num_tx_antennas: 0, ..ChannelParams::default() },
            ChannelParams { num_rx_antennas: 0, ..ChannelParams::default() },
            ChannelParams { num_rays: 0, ..ChannelParams::default() },
            ChannelParams { num_clusters: 0, ..ChannelParams::default() },
            ChannelParams { ray_angle_spread: 0.0, ..ChannelParams::default() },
        ] {
            assert!(matches!(draw_channel(&p), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = draw_channel(&table_one(42)).unwrap();
        let b = draw_channel(&table_one(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = draw_channel(&table_one(43)).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn metadata_recombines_to_matrix() {
        let params = ChannelParams { num_clusters: 3, seed: 9, ..ChannelParams::default() };
        let ch = draw_channel(&params).unwrap();
        let rebuilt = ch.recombine(32, 8);
        assert!((rebuilt - &ch.matrix).norm() < 1e-12);
    }

    #[test]
    fn single_cluster_rank_is_bounded_by_ray_count() {
        let params = ChannelParams { num_rx_antennas: 16, num_rays: 3, seed: 1, ..ChannelParams::default() };
        let ch = draw_channel(&params).unwrap();
        let (_, s, _) = sorted_svd(&ch.matrix).unwrap();
        for &tail in &s[3..] {
            assert!(tail < 1e-9 * s[0]);
        }
    }

    #[test]
    fn ray_offsets_follow_configured_spread() {
        let spread = 10f64.to_radians();
        let mut offsets = Vec::new();
        for seed in 0..2000 {
            let ch = draw_channel(&table_one(seed)).unwrap();
            for (c, rays) in ch.ray_angles_tx.iter().enumerate() {
                offsets.extend(rays.iter().map(|a| a - ch.cluster_angles_tx[c]));
            }
        }
        let n = offsets.len() as f64;
        let mean = offsets.iter().sum::<f64>() / n;
        let std = (offsets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.01);
        assert!((std - spread).abs() / spread < 0.05, "std {std}");
        // Laplace: mean absolute deviation = std / sqrt(2)
        let mad = offsets.iter().map(|x| x.abs()).sum::<f64>() / n;
        assert!((mad - spread / 2f64.sqrt()).abs() / spread < 0.05);
    }

    #[test]
    fn csv_dump_has_one_line_per_row() {
        let ch = draw_channel(&table_one(1)).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0].split(',').count(), 64);
        let re: f64 = lines[0].split(',').next().unwrap().parse().unwrap();
        assert_eq!(re, ch.matrix[(0, 0)].re);
    }
}
