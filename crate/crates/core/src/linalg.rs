//! Small complex linear-algebra helpers shared by the precoding and rate code.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Thin SVD with singular triplets sorted by descending singular value.
///
/// Returns `(u, sigma, v)` where `u` is `rows × r`, `v` is `cols × r` and
/// `r = min(rows, cols)`, so that `m = u · diag(sigma) · v^H`.
pub fn sorted_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Decomposition("matrix has non-finite entries".into()));
    }
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Decomposition("left singular vectors missing".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Decomposition("right singular vectors missing".into()))?;
    let sigma = svd.singular_values;

    let r = sigma.len();
    let mut order: Vec<usize> = (0..r).collect();
    // stable: equal singular values keep the decomposition's own order
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let mut u_sorted = CMatrix::zeros(m.nrows(), r);
    let mut v_sorted = CMatrix::zeros(m.ncols(), r);
    let mut s_sorted = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v_t.row(src).adjoint());
        s_sorted.push(sigma[src]);
    }
    Ok((u_sorted, s_sorted, v_sorted))
}

/// The `k` right singular vectors of `m` with the largest singular values,
/// as the columns of a `cols × k` matrix.
///
/// `k` may exceed `min(rows, cols)` as long as `k ≤ cols`; the extra columns
/// then span (part of) the null space.
pub fn dominant_right_singular_vectors(m: &CMatrix, k: usize) -> Result<CMatrix> {
    let cols = m.ncols();
    if k == 0 || k > cols {
        return Err(Error::InvalidParameter(format!(
            "requested {k} right singular vectors of a matrix with {cols} columns"
        )));
    }
    let padded;
    let target = if k > m.nrows() {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let (_, _, v) = sorted_svd(target)?;
    Ok(v.columns(0, k).into_owned())
}

/// Closest matrix with orthonormal columns in Frobenius norm (`U·V^H` of the thin SVD).
pub fn polar_factor(m: &CMatrix) -> Result<CMatrix> {
    let (u, _, v) = sorted_svd(m)?;
    Ok(&u * v.adjoint())
}

/// `‖F^H F − I‖_F`.
pub fn semi_unitary_residual(f: &CMatrix) -> f64 {
    let gram = f.adjoint() * f;
    (gram - CMatrix::identity(f.ncols(), f.ncols())).norm()
}

/// `m · diag(d)`: scales column `j` of `m` by `d[j]`.
pub fn scale_columns(m: &CMatrix, d: &DVector<f64>) -> CMatrix {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= C64::new(d[j], 0.0);
    }
    out
}

/// `diag(d) · m`: scales row `i` of `m` by `d[i]`.
pub fn scale_rows(m: &CMatrix, d: &DVector<f64>) -> CMatrix {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= C64::new(d[i], 0.0);
    }
    out
}

/// Replaces `m` by `(m + m^H) / 2`.
pub fn hermitize(m: &mut CMatrix) {
    let h = m.adjoint();
    *m += h;
    *m *= C64::new(0.5, 0.0);
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// In-place lower Cholesky factor of a Hermitian matrix stored row-major;
/// only the lower triangle is read. `pivots[j]` receives the squared
/// diagonal `L_jj²` (the Schur complement pivot). Returns false on a
/// non-positive or non-finite pivot.
pub fn cholesky_lower(a: &mut [C64], pivots: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        pivots[j] = d;
        let l_jj = d.sqrt();
        a[j * n + j] = C64::new(l_jj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / l_jj;
        }
    }
    true
}

/// `log₂ det(I + scale·C^{-1}·G·G^H)` from row-major buffers: `noise` holds
/// `C` (`nr × nr`, lower triangle read), `signal` holds `G` (`nr × ns`).
/// All three buffers are overwritten.
///
/// With `C = L·L^H` the argument is `I + scale·X·X^H`, `X = L^{-1}·G`, whose
/// Cholesky pivots are all ≥ 1; they are clamped there.
pub fn whitened_log_det_flat(
    noise: &mut [C64],
    signal: &mut [C64],
    inner: &mut [C64],
    pivots: &mut [f64],
    nr: usize,
    ns: usize,
    scale: f64,
) -> Option<f64> {
    if !cholesky_lower(noise, pivots, nr) {
        return None;
    }
    for c in 0..ns {
        for i in 0..nr {
            let mut s = signal[i * ns + c];
            for k in 0..i {
                s -= noise[i * nr + k] * signal[k * ns + c];
            }
            signal[i * ns + c] = s / noise[i * nr + i].re;
        }
    }
    for i in 0..nr {
        for j in 0..=i {
            let mut s = C64::default();
            for c in 0..ns {
                s += signal[i * ns + c] * signal[j * ns + c].conj();
            }
            inner[i * nr + j] = s * scale;
        }
        inner[i * nr + i] += C64::new(1.0, 0.0);
    }
    if !cholesky_lower(inner, pivots, nr) {
        return None;
    }
    let rate: f64 = pivots.iter().map(|&d| d.max(1.0).log2()).sum();
    rate.is_finite().then_some(rate)
}

/// Row-major copy of a matrix.
pub fn to_row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter().copied());
    }
    out
}

/// `log₂ det(m)` for a Hermitian positive definite `m`. Returns `None` when
/// the factorization breaks down.
pub fn log2_det_hpd(m: &CMatrix) -> Option<f64> {
    let n = m.nrows();
    let mut a = to_row_major(m);
    let mut pivots = vec![0.0; n];
    cholesky_lower(&mut a, &mut pivots, n).then(|| pivots.iter().map(|d| d.log2()).sum())
}

/// Extreme eigenvalue ratio of a Hermitian matrix, for diagnostics only.
pub fn hermitian_condition_number(m: &CMatrix) -> f64 {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return f64::INFINITY;
    }
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
