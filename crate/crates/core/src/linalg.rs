//! Householder QR with column pivoting for small dense least-squares
//! problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot tolerance used for rank detection.
pub const RANK_TOL: f64 = 1e-10;

/// `X P = Q R` with `Q` stored as Householder reflectors.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Upper triangle holds `R`; below the diagonal the reflector tails.
    qr: DMatrix<f64>,
    /// Leading coefficients of each reflector.
    betas: Vec<f64>,
    /// `perm[k]` is the original column placed at position `k`.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let (n, k) = x.shape();
        let mut qr = x.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut betas = Vec::with_capacity(k.min(n));
        let max_norm = (0..k).map(|j| x.column(j).norm()).fold(0.0, f64::max);
        let tol = RANK_TOL * max_norm;
        let mut rank = 0;

        for j in 0..k.min(n) {
            // Pivot on the largest remaining trailing norm.
            let (best, best_norm) = (j..k)
                .map(|c| (c, qr.view((j, c), (n - j, 1)).norm()))
                .fold((j, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if best_norm <= tol || best_norm == 0.0 {
                break;
            }
            if best != j {
                qr.swap_columns(j, best);
                perm.swap(j, best);
            }
            let alpha = {
                let x0 = qr[(j, j)];
                if x0 >= 0.0 {
                    -best_norm
                } else {
                    best_norm
                }
            };
            // v = x - alpha e1, stored with v0 implicit via beta.
            let v0 = qr[(j, j)] - alpha;
            for i in j + 1..n {
                qr[(i, j)] /= v0;
            }
            let beta = -v0 / alpha;
            qr[(j, j)] = alpha;
            for c in j + 1..k {
                let mut s = qr[(j, c)];
                for i in j + 1..n {
                    s += qr[(i, j)] * qr[(i, c)];
                }
                s *= beta;
                qr[(j, c)] -= s;
                for i in j + 1..n {
                    let vij = qr[(i, j)];
                    qr[(i, c)] -= s * vij;
                }
            }
            betas.push(beta);
            rank += 1;
        }
        Self {
            qr,
            betas,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.qr.ncols()
    }

    /// Applies `Q^T` to a vector.
    pub fn qt_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.qr.nrows();
        let mut out = y.clone();
        for (j, &beta) in self.betas.iter().enumerate() {
            let mut s = out[j];
            for i in j + 1..n {
                s += self.qr[(i, j)] * out[i];
            }
            s *= beta;
            out[j] -= s;
            for i in j + 1..n {
                out[i] -= s * self.qr[(i, j)];
            }
        }
        out
    }

    /// Least-squares coefficients in the original column order.
    pub fn solve(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let k = self.qr.ncols();
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: k,
            });
        }
        let qty = self.qt_mul(y);
        let mut z = DVector::zeros(k);
        for i in (0..k).rev() {
            let mut s = qty[i];
            for c in i + 1..k {
                s -= self.qr[(i, c)] * z[c];
            }
            z[i] = s / self.qr[(i, i)];
        }
        let mut beta = DVector::zeros(k);
        for (pos, &orig) in self.perm.iter().enumerate() {
            beta[orig] = z[pos];
        }
        Ok(beta)
    }

    /// Upper-triangular inverse of `R` (pivoted order).
    fn r_inverse(&self) -> DMatrix<f64> {
        let k = self.qr.ncols();
        let mut inv = DMatrix::zeros(k, k);
        for col in 0..k {
            inv[(col, col)] = 1.0 / self.qr[(col, col)];
            for i in (0..col).rev() {
                let mut s = 0.0;
                for c in i + 1..=col {
                    s += self.qr[(i, c)] * inv[(c, col)];
                }
                inv[(i, col)] = -s / self.qr[(i, i)];
            }
        }
        inv
    }

    /// `(X^T X)^{-1}` in the original column order.
    pub fn xtx_inverse(&self) -> Result<DMatrix<f64>> {
        let k = self.qr.ncols();
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: k,
            });
        }
        let rinv = self.r_inverse();
        let pinv = &rinv * rinv.transpose();
        let mut out = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                out[(self.perm[a], self.perm[b])] = pinv[(a, b)];
            }
        }
        Ok(out)
    }

    /// `A P R^{-1}` for a matrix `A` with the factored column layout; the
    /// squared Frobenius norm of the result is a hat-matrix trace.
    pub fn right_solve(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let k = self.qr.ncols();
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: k,
            });
        }
        let mut permuted = DMatrix::zeros(a.nrows(), k);
        for (pos, &orig) in self.perm.iter().enumerate() {
            permuted.set_column(pos, &a.column(orig));
        }
        Ok(permuted * self.r_inverse())
    }
}

/// Least squares `min ||y - X b||`, erroring on rank deficiency.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    PivotedQr::new(x).solve(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = &x * &b;
        let got = lstsq(&x, &y).unwrap();
        assert!((got - b).amax() < 1e-12);
    }

    #[test]
    fn detects_rank_deficiency() {
        let x = DMatrix::from_row_slice(4, 3, &[
            1.0, 2.0, 3.0, //
            1.0, 0.0, 1.0, //
            1.0, 5.0, 6.0, //
            1.0, 1.0, 2.0,
        ]);
        let qr = PivotedQr::new(&x);
        assert_eq!(qr.rank(), 2);
        assert!(matches!(
            qr.solve(&DVector::zeros(4)),
            Err(Error::RankDeficient { rank: 2, cols: 3 })
        ));
    }

    #[test]
    fn inverse_gram_matches_direct() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * j as f64);
        let inv = PivotedQr::new(&x).xtx_inverse().unwrap();
        let direct = (x.transpose() * &x).try_inverse().unwrap();
        assert!((inv - direct).amax() < 1e-9);
    }
}
