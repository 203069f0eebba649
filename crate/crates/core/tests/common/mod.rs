#![allow(dead_code)]

use hbf_core::linalg::polar_factor;
use hbf_core::{CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries i.i.d. CN(0, 1).
pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    polar_factor(&gaussian(rng, n, n)).unwrap()
}

/// Textbook triple loop, independent of the library's matrix products.
pub fn naive_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn diag_matrix(d: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(d.len(), d.len());
    for (i, v) in d.iter().enumerate() {
        m[(i, i)] = C64::new(*v, 0.0);
    }
    m
}

/// Mean and standard error of a paired difference sample.
pub fn paired_stats(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
