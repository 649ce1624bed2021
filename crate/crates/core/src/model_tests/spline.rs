//! Penalized B-spline varying-coefficient regression.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::regression::{f_sf, ols};

pub const DEFAULT_BASIS_SIZE: usize = 6;
pub const DEFAULT_PENALTY: f64 = 1.0;

/// Clamped cubic B-spline basis with `k >= 4` functions on `[0, 1]`,
/// evaluated at `x`; rows sum to one.
pub fn bspline_basis(x: &[f64], k: usize) -> DMatrix<f64> {
    const DEG: usize = 3;
    assert!(k > DEG, "need at least {} basis functions", DEG + 1);
    let inner = k - DEG - 1;
    let mut knots = vec![0.0; DEG + 1];
    knots.extend((1..=inner).map(|i| i as f64 / (inner + 1) as f64));
    knots.extend(std::iter::repeat(1.0).take(DEG + 1));

    let mut out = DMatrix::zeros(x.len(), k);
    for (r, &xv) in x.iter().enumerate() {
        let xv = xv.clamp(0.0, 1.0);
        // Degree-zero indicators; the right end belongs to the last span.
        let spans = knots.len() - 1;
        let mut b: Vec<f64> = (0..spans)
            .map(|i| {
                let (lo, hi) = (knots[i], knots[i + 1]);
                let inside = (lo <= xv && xv < hi) || (xv == 1.0 && hi == 1.0 && lo < 1.0);
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for d in 1..=DEG {
            let next: Vec<f64> = (0..spans - d)
                .map(|i| {
                    let mut v = 0.0;
                    let l = knots[i + d] - knots[i];
                    if l > 0.0 {
                        v += (xv - knots[i]) / l * b[i];
                    }
                    let r = knots[i + d + 1] - knots[i + 1];
                    if r > 0.0 {
                        v += (knots[i + d + 1] - xv) / r * b[i + 1];
                    }
                    v
                })
                .collect();
            b = next;
        }
        for j in 0..k {
            out[(r, j)] = b[j];
        }
    }
    out
}

/// `k x (k - 1)` orthonormal columns orthogonal to the ones vector.
fn contrasts(k: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(k, k - 1);
    for m in 1..k {
        let norm = ((m * (m + 1)) as f64).sqrt();
        for i in 0..m {
            c[(i, m - 1)] = 1.0 / norm;
        }
        c[(m, m - 1)] = -(m as f64) / norm;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaryingCoefResult {
    pub f_stat: f64,
    /// `edf - s`, fractional.
    pub df1: f64,
    /// `n - edf`.
    pub df2: f64,
    pub p_value: f64,
    pub edf: f64,
    pub rss_null: f64,
    pub rss_alt: f64,
}

/// Compares `y = V b` with `y = sum_j v_j b_j(t)`, each `b_j` a cubic
/// B-spline in scaled time whose deviations from a constant carry a ridge
/// penalty. `penalty` is relative to the mean squared norm of the deviation
/// columns.
pub fn varying_coefficient_test(
    y: &DVector<f64>,
    v: &DMatrix<f64>,
    basis_size: usize,
    penalty: f64,
) -> Result<VaryingCoefResult> {
    let (n, s) = v.shape();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if basis_size < 4 {
        return Err(Error::Config("basis_size must be at least 4".into()));
    }
    if !(penalty >= 0.0) {
        return Err(Error::Config("penalty must be non-negative".into()));
    }
    let null = ols(v, y)?;
    let denom = (n.max(2) - 1) as f64;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / denom).collect();
    let shape = bspline_basis(&t, basis_size) * contrasts(basis_size);
    let q = basis_size - 1;
    let mut x = DMatrix::zeros(n, s * (1 + q));
    for j in 0..s {
        x.set_column(j, &v.column(j));
        for m in 0..q {
            let col = v.column(j).component_mul(&shape.column(m));
            x.set_column(s + j * q + m, &col);
        }
    }
    let dev_cols = s * q;
    let mean_sq = if dev_cols > 0 {
        (s..s + dev_cols).map(|c| x.column(c).norm_squared()).sum::<f64>() / dev_cols as f64
    } else {
        0.0
    };
    let lam = penalty * mean_sq;
    let p = x.ncols();
    let mut aug = DMatrix::zeros(n + dev_cols, p);
    aug.view_mut((0, 0), (n, p)).copy_from(&x);
    for c in 0..dev_cols {
        aug[(n + c, s + c)] = lam.sqrt();
    }
    let mut y_aug = DVector::zeros(n + dev_cols);
    y_aug.rows_mut(0, n).copy_from(y);
    let qr = PivotedQr::new(&aug);
    let beta = qr.solve(&y_aug)?;
    let rss_alt = (y - &x * &beta).norm_squared();
    let edf = qr.right_solve(&x)?.norm_squared();

    let df1 = edf - s as f64;
    let df2 = n as f64 - edf;
    let rss_null = null.rss;
    let (f, pv) = if df1 < 1e-8 || df2 <= 0.0 || rss_alt <= 0.0 {
        (0.0, 1.0)
    } else {
        let f = (((rss_null - rss_alt) / df1) / (rss_alt / df2)).max(0.0);
        (f, f_sf(f, df1, df2))
    };
    Ok(VaryingCoefResult {
        f_stat: f,
        df1,
        df2,
        p_value: pv,
        edf,
        rss_null,
        rss_alt,
    })
}
